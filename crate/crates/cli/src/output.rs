//! Writes the experiment table and the JSON summary.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::run::{Check, Outcome};

#[derive(Serialize)]
pub struct Summary<'a> {
    pub experiment: &'static str,
    pub seed: u64,
    pub status: &'static str,
    pub checks: &'a [Check],
    pub files: Vec<&'static str>,
    pub config: &'a RunConfig,
    pub report: &'a serde_json::Value,
}

pub fn summary<'a>(cfg: &'a RunConfig, outcome: &'a Outcome) -> Summary<'a> {
    let mut files = Vec::new();
    if cfg.output.csv {
        files.push(outcome.table.file);
    }
    if cfg.output.json {
        files.push("summary.json");
    }
    Summary {
        experiment: cfg.statistic.experiment.name(),
        seed: cfg.run.seed,
        status: if outcome.passed() { "pass" } else { "fail" },
        checks: &outcome.checks,
        files,
        config: cfg,
        report: &outcome.report,
    }
}

pub fn csv_text(outcome: &Outcome) -> String {
    let mut text = String::with_capacity(64 * (outcome.table.rows.len() + 1));
    text.push_str(outcome.table.header);
    text.push('\n');
    for row in &outcome.table.rows {
        text.push_str(row);
        text.push('\n');
    }
    text
}

pub fn summary_text(cfg: &RunConfig, outcome: &Outcome) -> String {
    let mut text =
        serde_json::to_string_pretty(&summary(cfg, outcome)).expect("summary serializes");
    text.push('\n');
    text
}

/// Writes every requested file, or none: on failure the files already
/// written are removed.
pub fn write_all(cfg: &RunConfig, outcome: &Outcome) -> io::Result<Vec<PathBuf>> {
    let dir = &cfg.output.directory;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    if cfg.output.csv {
        files.push((dir.join(outcome.table.file), csv_text(outcome)));
    }
    if cfg.output.json {
        files.push((dir.join("summary.json"), summary_text(cfg, outcome)));
    }
    let created_dir = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (path, text) in files {
        if let Err(e) = fs::write(&path, text) {
            remove(&written, dir, created_dir);
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

fn remove(files: &[PathBuf], dir: &Path, created_dir: bool) {
    for f in files {
        let _ = fs::remove_file(f);
    }
    if created_dir {
        let _ = fs::remove_dir(dir);
    }
}
