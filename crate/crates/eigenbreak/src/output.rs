//! Files written by the `simulate` command.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{EpsilonRun, RejectionTable};

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct TableRecord {
    #[serde(rename = "N")]
    n: usize,
    magnitude: f64,
    rate: f64,
    se: f64,
    mean_theta_hat: f64,
    replicates: usize,
    degenerate_splits: usize,
    config_hash: String,
    seed: u64,
}

pub fn table_csv(table: &RejectionTable) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &table.rows {
        w.serialize(TableRecord {
            n: r.n,
            magnitude: r.magnitude,
            rate: r.rate,
            se: r.se,
            mean_theta_hat: r.mean_theta_hat,
            replicates: r.replicates,
            degenerate_splits: r.degenerate_splits,
            config_hash: r.config_hash.clone(),
            seed: r.seed,
        })?;
    }
    w.into_inner().map_err(|e| Error::Input(e.to_string()))
}

/// `<stem>.csv` and `<stem>.json` in `dir`.
pub fn write_table(table: &RejectionTable, dir: &Path, stem: &str) -> Result<()> {
    write(&dir.join(format!("{stem}.csv")), &table_csv(table)?)?;
    let json = serde_json::to_vec_pretty(table)?;
    write(&dir.join(format!("{stem}.json")), &json)
}

#[derive(Serialize)]
struct HistRecord {
    epsilon: f64,
    #[serde(rename = "N")]
    n: usize,
    magnitude: f64,
    bin_left: f64,
    bin_right: f64,
    count: u64,
}

/// One table per trim fraction plus a shared `<stem>_histogram.csv`.
pub fn write_sweep(runs: &[EpsilonRun], dir: &Path, stem: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for run in runs {
        write_table(&run.table, dir, &format!("{stem}_eps{}", run.epsilon))?;
        for (row, hist) in run.table.rows.iter().zip(&run.histograms) {
            for (b, &count) in hist.counts.iter().enumerate() {
                w.serialize(HistRecord {
                    epsilon: run.epsilon,
                    n: row.n,
                    magnitude: row.magnitude,
                    bin_left: hist.edges[b],
                    bin_right: hist.edges[b + 1],
                    count,
                })?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    write(&dir.join(format!("{stem}_histogram.csv")), &bytes)
}
