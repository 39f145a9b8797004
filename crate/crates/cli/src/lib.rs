//! Library side of the `petalstar` command: configs, reports, renderings and
//! probes, plus the run driver used by the binary and the tests.

pub mod config;
pub mod probe;
pub mod render;
pub mod report;

use config::{Artifact, ExperimentConfig};
use petalstar::experiments::run_sequence;
use petalstar::{Error, FatouAtlas};
use report::RunDocument;
use std::path::Path;

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    InvariantFailure = 2,
    NonConvergence = 3,
    ConfigError = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Failure kinds that map to distinct exit codes.
pub fn exit_for_error(e: &Error) -> Exit {
    match e {
        Error::InvalidRotation(_) | Error::Unsupported(_) => Exit::ConfigError,
        _ => Exit::NonConvergence,
    }
}

/// Runs a configured sequence.
pub fn run_config(config: &ExperimentConfig, seed: u64) -> Result<RunDocument, Error> {
    let atlas = FatouAtlas::polynomial(config.pq)?;
    let x = config.x.resolve(&atlas)?;
    let report = run_sequence(&atlas, x, config.schedule, config.horodisk, &config.run_options(seed))?;
    Ok(report::document(config, report))
}

/// Writes the configured artifacts as `<name>.csv` and `<name>.json` under `dir`.
pub fn write_artifacts(doc: &RunDocument, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for artifact in &doc.config.outputs {
        match artifact {
            Artifact::Csv => {
                let file = std::fs::File::create(dir.join(format!("{}.csv", doc.config.name)))?;
                report::write_csv(&doc.report, file).map_err(std::io::Error::other)?;
            }
            Artifact::Json => {
                let text = serde_json::to_string_pretty(doc).map_err(std::io::Error::other)?;
                std::fs::write(dir.join(format!("{}.json", doc.config.name)), text)?;
            }
        }
    }
    Ok(())
}

/// Exit status of a finished run.
pub fn exit_for_document(doc: &RunDocument) -> Exit {
    if doc.invariants.iter().all(|i| i.pass || !i.asserted) {
        Exit::Pass
    } else {
        Exit::InvariantFailure
    }
}
