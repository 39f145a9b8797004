use clap::{Parser, Subcommand};
use petalstar::Rational;
use petalstar_cli::config::ExperimentConfig;
use petalstar_cli::probe::{self, ProbeArgs, ProbeWhat};
use petalstar_cli::render::{self, RasterJob};
use petalstar_cli::{exit_for_document, exit_for_error, run_config, write_artifacts, Exit};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "petalstar", version, about = "Boundary experiments for quadratic rational maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sequence and write CSV and JSON reports.
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// One of thm1, thm1-spiral, thm2, control.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the solve tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render a raster job to PPM, plus PNG when the output ends in `.png`.
    Render {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pixels cross-checked against the direct petal computation.
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate one quantity and print it as JSON.
    Probe {
        #[arg(long)]
        pq: String,
        #[arg(long, value_enum)]
        what: ProbeWhat,
        /// Complex values are written `re` or `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long)]
        horodisk: Option<f64>,
    },
}

fn fail(exit: Exit, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(exit.code() as u8)
}

fn run(config: Option<PathBuf>, preset: Option<String>, out: PathBuf, tol: Option<f64>, seed: u64) -> ExitCode {
    let loaded = match (config, preset) {
        (Some(path), _) => ExperimentConfig::load(&path),
        (None, Some(name)) => {
            ExperimentConfig::preset(&name).ok_or_else(|| petalstar_cli::config::ConfigError(format!("unknown preset {name:?}")))
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let mut cfg = match loaded {
        Ok(c) => c,
        Err(e) => return fail(Exit::ConfigError, e),
    };
    if let Some(t) = tol {
        cfg.tolerances.solve = t;
        if let Err(e) = cfg.validate() {
            return fail(Exit::ConfigError, e);
        }
    }
    let doc = match run_config(&cfg, seed) {
        Ok(d) => d,
        Err(e) => return fail(exit_for_error(&e), e),
    };
    if let Err(e) = write_artifacts(&doc, &out) {
        return fail(Exit::ConfigError, format!("{}: {e}", out.display()));
    }
    for inv in &doc.invariants {
        let status = match (inv.pass, inv.asserted) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "NOTE",
        };
        println!("{status} {}: {}", inv.name, inv.detail);
    }
    if doc.partial {
        eprintln!("warning: partial run, {} term(s) failed", doc.report.failures.len());
    }
    println!("verdict {:?}", doc.report.verdict);
    ExitCode::from(exit_for_document(&doc).code() as u8)
}

fn render_cmd(config: PathBuf, out: PathBuf, probes: usize, seed: u64) -> ExitCode {
    let job: RasterJob = match std::fs::read_to_string(&config)
        .map_err(|e| e.to_string())
        .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
    {
        Ok(j) => j,
        Err(e) => return fail(Exit::ConfigError, format!("{}: {e}", config.display())),
    };
    let rendering = match render::render(&job, probes, seed) {
        Ok(r) => r,
        Err(e) => return fail(exit_for_error(&e), e),
    };
    let png = out.extension().is_some_and(|e| e == "png");
    let ppm_path = if png { out.with_extension("ppm") } else { out.clone() };
    if let Err(e) = std::fs::write(&ppm_path, rendering.raster.to_ppm()) {
        return fail(Exit::ConfigError, format!("{}: {e}", ppm_path.display()));
    }
    if png {
        if let Err(e) = rendering.raster.write_png(&out) {
            return fail(Exit::ConfigError, format!("{}: {e}", out.display()));
        }
    }
    println!("{}", serde_json::to_string(&rendering.stats).expect("stats serialize"));
    let s = &rendering.stats;
    if s.wire_violations > 0 || s.probes_agreeing < s.probes_checked {
        return ExitCode::from(Exit::InvariantFailure.code() as u8);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, preset, out, tol, seed } => run(config, preset, out, tol, seed),
        Command::Render { config, out, probes, seed } => render_cmd(config, out, probes, seed),
        Command::Probe { pq, what, lambda, sigma, x, horodisk } => {
            let pq: Rational = match pq.parse() {
                Ok(r) => r,
                Err(e) => return fail(Exit::ConfigError, e),
            };
            let parse = |v: Option<String>| v.as_deref().map(probe::parse_complex).transpose();
            let args = match (parse(lambda), parse(sigma), parse(x)) {
                (Ok(lambda), Ok(sigma), Ok(x)) => ProbeArgs { lambda, sigma, x, horodisk },
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return fail(Exit::ConfigError, e),
            };
            let (value, ok) = probe::probe(pq, what, &args);
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(Exit::ConfigError.code() as u8)
            }
        }
    }
}
