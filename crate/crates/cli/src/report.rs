//! CSV and JSON output for sequence runs, and the invariants that decide the
//! exit status.

use petalstar::experiments::{SequenceReport, Verdict, TAIL};
use petalstar::{SectorClass, C64};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};

/// Column order of the per-step CSV.
pub const CSV_COLUMNS: [&str; 22] = [
    "k",
    "lambda_re",
    "lambda_im",
    "sigma_re",
    "sigma_im",
    "shift_re",
    "shift_im",
    "residual",
    "abs_sigma",
    "related",
    "seed_source",
    "landing_period",
    "landing_multiplier_re",
    "landing_multiplier_im",
    "r_landing",
    "r_lambda",
    "modulus_case",
    "modulus_pass",
    "translation_re",
    "translation_im",
    "rescaled_multiplier_re",
    "rescaled_multiplier_im",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariant {
    pub name: String,
    pub pass: bool,
    /// Control runs report invariants without asserting them.
    pub asserted: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub report: SequenceReport,
    pub invariants: Vec<Invariant>,
    /// Terms that failed to solve; the run is partial when non-empty.
    pub partial: bool,
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn opt_parts(v: Option<C64>) -> [String; 2] {
    match v {
        Some(c) => [fmt(c.re), fmt(c.im)],
        None => [String::new(), String::new()],
    }
}

pub fn write_csv<W: std::io::Write>(report: &SequenceReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    let translations = report.unbounded.as_ref().map(|u| &u.fit.translation_trace);
    for (i, s) in report.steps.iter().enumerate() {
        let landing = s.landing.as_ref();
        let [mre, mim] = opt_parts(landing.map(|l| l.multiplier));
        let [tre, tim] = opt_parts(translations.and_then(|t| t.get(i).copied()));
        let [rre, rim] = opt_parts(s.rescaled_multiplier);
        let record = vec![
            s.k.to_string(),
            fmt(s.lambda.re),
            fmt(s.lambda.im),
            fmt(s.sigma.re),
            fmt(s.sigma.im),
            fmt(s.shift.re),
            fmt(s.shift.im),
            fmt(s.residual),
            fmt(s.sigma.norm()),
            s.related.to_string(),
            format!("{:?}", s.seed_source),
            landing.map(|l| l.period.to_string()).unwrap_or_default(),
            mre,
            mim,
            s.modulus.map(|m| fmt(m.r_landing)).unwrap_or_default(),
            s.modulus.map(|m| fmt(m.r_lambda)).unwrap_or_default(),
            s.modulus.map(|m| format!("{:?}", m.case)).unwrap_or_default(),
            s.modulus.map(|m| m.pass.to_string()).unwrap_or_default(),
            tre,
            tim,
            rre,
            rim,
        ];
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(report: &SequenceReport) -> String {
    let mut buf = Vec::new();
    write_csv(report, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Checks the invariants that a run asserts; the run passes iff all hold.
pub fn invariants(config: &ExperimentConfig, report: &SequenceReport) -> Vec<Invariant> {
    let mut out = Vec::new();
    let asserted = !config.control;
    let mut push = |name: &str, pass: bool, detail: String| out.push(Invariant { name: name.into(), pass, asserted, detail });
    let tol = config.tolerances.solve;
    let worst = report.steps.iter().map(|s| s.residual).fold(0.0, f64::max);
    push("residuals", report.steps.iter().all(|s| s.residual < tol), format!("max residual {worst:.3e} < {tol:.1e}"));
    let unrelated = report.steps.iter().filter(|s| !s.related).count();
    push("relatedness", unrelated == 0, format!("{unrelated} step(s) outside the relatedness locus"));
    push("complete", report.failures.is_empty(), format!("{} failed term(s)", report.failures.len()));
    let expected = match report.x_sector {
        SectorClass::InBp => Some(Verdict::UnboundedThm2Bp),
        SectorClass::InSpNotBp => Some(Verdict::UnboundedThm2SpNotBp),
        SectorClass::NotInSp => Some(Verdict::BoundedThm1),
        SectorClass::OutOfScope => None,
    };
    push(
        "dichotomy",
        expected.is_none_or(|v| v == report.verdict),
        format!("verdict {:?}, sector {:?}", report.verdict, report.x_sector),
    );
    if report.steps.iter().any(|s| s.modulus.is_some()) {
        let failed = report.steps.iter().filter(|s| s.modulus.is_some_and(|m| !m.pass)).count();
        push("modulus", report.all_modulus_checks_pass(), format!("{failed} step(s) violate the modulus inequality"));
        let radii = report.landing_radii();
        let tail = &radii[radii.len().saturating_sub(TAIL)..];
        push("landing_radii", decreasing(tail), format!("tail of landing radii decreasing: {}", sci(tail)));
    }
    match report.verdict {
        Verdict::BoundedThm1 => {
            let b = report.bounded.as_ref();
            push(
                "limit_related",
                b.is_some_and(|b| b.relatedness == petalstar::Relatedness::InR),
                format!("limit {:?}", b.map(|b| b.sigma.value)),
            );
        }
        Verdict::UnboundedThm2Bp | Verdict::UnboundedThm2SpNotBp => {
            let u = report.unbounded.as_ref();
            push("rescaling_fit", u.is_some(), "rescaling limit fitted".into());
            if let Some(u) = u {
                let sup = &u.fit.sup_error_trace[u.fit.sup_error_trace.len().saturating_sub(TAIL)..];
                push("rescaling_convergence", decreasing(sup), format!("sup error tail {}", sci(sup)));
                push("translation_stability", u.fit.doubling_change < 1e-6, format!("doubling change {:.3e}", u.fit.doubling_change));
            }
        }
        Verdict::Inconclusive => push("verdict", false, "inconclusive".into()),
    }
    out
}

pub fn document(config: &ExperimentConfig, report: SequenceReport) -> RunDocument {
    let invariants = invariants(config, &report);
    RunDocument { schema_version: SCHEMA_VERSION, config: config.clone(), partial: !report.failures.is_empty(), report, invariants }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_matches_schema() {
        assert_eq!(CSV_COLUMNS.len(), 22);
        assert_eq!(CSV_COLUMNS[0], "k");
    }
}
