use std::path::Path;
use std::process::{Command, Output};

fn petalstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_petalstar")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn runs_are_deterministic_and_write_both_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = petalstar(&["run", "--preset", "thm1", "--out", out.to_str().unwrap(), "--seed", "3"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let csv_a = std::fs::read(a.join("thm1.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("thm1.csv")).unwrap());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("thm1.json")).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["report"]["verdict"], "BoundedThm1");
    assert_eq!(doc["partial"], false);
    let header = String::from_utf8(csv_a).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("k,lambda_re,lambda_im,sigma_re"));
}

#[test]
fn divergent_preset_reports_translation_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = petalstar(&["run", "--preset", "thm2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.path().join("thm2.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let cols: Vec<&str> = last.split(',').collect();
    assert!(!cols[18].is_empty(), "translation column is filled: {last}");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("thm2.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["verdict"], "UnboundedThm2_Bp");
}

#[test]
fn documents_round_trip() {
    let cfg = petalstar_cli::config::ExperimentConfig::preset("thm1").unwrap();
    let doc = petalstar_cli::run_config(&cfg, 0).unwrap();
    let text = serde_json::to_string(&doc).unwrap();
    let back: petalstar_cli::report::RunDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(back, doc);
}

#[test]
fn non_reduced_rotation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = serde_json::to_value(petalstar_cli::config::ExperimentConfig::preset("thm1").unwrap()).unwrap();
    cfg["pq"] = "2/4".into();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let o = petalstar(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gcd"));
}

#[test]
fn probes_print_json() {
    let o = petalstar(&["probe", "--pq", "1/2", "--what", "m", "--lambda", "-0.9"]);
    assert!(o.status.success());
    let v = json(&o);
    // Strip height 2 pi |Re L| / (q |L|^2) with L = 2 log 0.9.
    let l = 2.0 * 0.9f64.ln();
    let expected = std::f64::consts::TAU * l.abs() / (2.0 * l * l);
    assert!((v["value"]["m"].as_f64().unwrap() - expected).abs() < 1e-9, "{v}");
    assert!(v["tolerances"]["solve"].is_number());

    let o = petalstar(&["probe", "--pq", "1/2", "--what", "phi", "--x", "-0.25"]);
    let v = json(&o);
    assert!((v["value"]["phi"][0].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let o = petalstar(&["probe", "--pq", "1/2", "--what", "chi", "--lambda", "-0.5", "--sigma", "0"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&o)["error"]["kind"], "NotInR");
}

fn write_job(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn renders_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(
        dir.path(),
        "basin.json",
        r#"{"kind":"ParabolicBasin","pq":"1/2","window":{"re_min":-1.2,"re_max":2.2,"im_min":-1.7,"im_max":1.7},
            "width":64,"height":64,"coloring":"bands","overlays":{"critical":true}}"#,
    );
    let mut images = Vec::new();
    for name in ["one.png", "two.png"] {
        let out = dir.path().join(name);
        let o = petalstar(&["render", "--config", &job, "--out", out.to_str().unwrap(), "--seed", "5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        images.push((std::fs::read(out.with_extension("ppm")).unwrap(), std::fs::read(&out).unwrap()));
    }
    assert_eq!(images[0], images[1]);
    assert!(images[0].0.starts_with(b"P6\n64 64\n255\n"));
}

#[test]
fn unwritable_render_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(
        dir.path(),
        "slice.json",
        r#"{"kind":"Per1Slice","pq":"1/2","lambda":[-0.5,0.0],"window":{"re_min":-5,"re_max":5,"im_min":-5,"im_max":5},
            "width":8,"height":8,"coloring":"flat","max_iter":100}"#,
    );
    let o = petalstar(&["render", "--config", &job, "--out", "/nonexistent/dir/x.ppm"]);
    assert!(!o.status.success());
}
