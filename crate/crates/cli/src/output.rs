use std::fs;
use std::io::Write;
use std::path::Path;

use besselop_core::BoundReport;
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::tasks::{predicates, Predicates};

pub const REPORT_FILE: &str = "report.json";

/// Everything a run produced. Contains no timestamps, so equal inputs give equal bytes.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub task: String,
    pub pass: bool,
    pub seed: u64,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicates: Option<Predicates>,
    pub warnings: Vec<String>,
    pub reports: Vec<BoundReport>,
    pub results: Value,
    pub tables: Vec<String>,
}

impl RunReport {
    pub fn new(
        cfg: &ExperimentConfig,
        seed: u64,
        reports: Vec<BoundReport>,
        results: Value,
        warnings: Vec<String>,
        tables: &[(String, Vec<u8>)],
    ) -> Self {
        Self {
            task: cfg.task.task.name().to_string(),
            pass: reports.iter().all(|r| r.pass),
            seed,
            config: cfg.clone(),
            predicates: predicates(cfg),
            warnings,
            reports,
            results,
            tables: tables.iter().map(|(n, _)| n.clone()).collect(),
        }
    }
}

/// Writes to a hidden temporary in the same directory, then renames over `name`.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

pub fn write_all(dir: &Path, report: &RunReport, tables: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in tables {
        write_atomic(dir, name, bytes)?;
    }
    let mut json = serde_json::to_vec_pretty(report).map_err(|e| CliError::Task(e.to_string()))?;
    json.push(b'\n');
    write_atomic(dir, REPORT_FILE, &json)
}
