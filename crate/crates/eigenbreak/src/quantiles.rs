//! Pivot simulation on the thread pool and the on-disk quantile cache.
//!
//! The cache is a CSV table with columns `k,replicates,seed,p,quantile` on
//! the grid `p = i / 10000`. Reloading it gives a distribution whose
//! quantiles agree with the simulated sample at every grid point.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use eigenbreak_core::selfnorm::{pivot_replicate, NuMeasure, PivotDistribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of steps in the cached probability grid.
pub const CACHE_STEPS: usize = 10_000;

/// Default Monte-Carlo size for the pivot.
pub const DEFAULT_REPLICATES: usize = 500_000;

/// Default seed for the shipped quantile table.
pub const DEFAULT_SEED: u64 = 20_190_401;

/// Same draws as [`eigenbreak_core::simulate_pivot`], spread over the pool.
pub fn simulate_pivot_parallel(k: usize, replicates: usize, seed: u64) -> Result<PivotDistribution> {
    NuMeasure::new(k)?;
    if replicates == 0 {
        return Err(Error::Config("replicates: must be at least 1".into()));
    }
    let draws = (0..replicates as u64)
        .into_par_iter()
        .map(|r| pivot_replicate(k, seed, r))
        .collect();
    Ok(PivotDistribution::from_draws(k, seed, replicates, draws)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRow {
    k: usize,
    replicates: usize,
    seed: u64,
    p: f64,
    quantile: f64,
}

fn grid_p(i: usize) -> f64 {
    i as f64 / CACHE_STEPS as f64
}

pub fn write_cache<W: Write>(pivot: &PivotDistribution, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for i in 0..=CACHE_STEPS {
        let p = grid_p(i);
        w.serialize(CacheRow {
            k: pivot.k(),
            replicates: pivot.replicates(),
            seed: pivot.seed(),
            p,
            quantile: pivot.quantile(p),
        })?;
    }
    w.flush().map_err(|e| Error::Cache(e.to_string()))?;
    Ok(())
}

pub fn read_cache<R: Read>(reader: R) -> Result<PivotDistribution> {
    let mut rows = csv::Reader::from_reader(reader);
    let mut key = None;
    let mut values = Vec::with_capacity(CACHE_STEPS + 1);
    for (i, row) in rows.deserialize::<CacheRow>().enumerate() {
        let row = row?;
        let this = (row.k, row.replicates, row.seed);
        if *key.get_or_insert(this) != this {
            return Err(Error::Cache(format!("row {}: mixed (k, replicates, seed) keys", i + 2)));
        }
        if (row.p - grid_p(i)).abs() > 1e-12 {
            return Err(Error::Cache(format!("row {}: expected p = {}, found {}", i + 2, grid_p(i), row.p)));
        }
        if values.last().is_some_and(|&v| row.quantile < v) {
            return Err(Error::Cache(format!("row {}: quantiles decrease", i + 2)));
        }
        values.push(row.quantile);
    }
    let Some((k, replicates, seed)) = key else {
        return Err(Error::Cache("empty table".into()));
    };
    if values.len() != CACHE_STEPS + 1 {
        return Err(Error::Cache(format!("expected {} rows, found {}", CACHE_STEPS + 1, values.len())));
    }
    Ok(PivotDistribution::from_draws(k, seed, replicates, values)?)
}

pub fn save_cache(pivot: &PivotDistribution, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_cache(pivot, std::io::BufWriter::new(file))
}

pub fn load_cache(path: &Path) -> Result<PivotDistribution> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_cache(std::io::BufReader::new(file))
}

/// Loads `path` when it holds the table for `(k, replicates, seed)`,
/// otherwise simulates and (if a path is given) writes it.
pub fn load_or_simulate(path: Option<&Path>, k: usize, replicates: usize, seed: u64) -> Result<PivotDistribution> {
    if let Some(path) = path.filter(|p| p.exists()) {
        let cached = load_cache(path)?;
        if (cached.k(), cached.replicates(), cached.seed()) == (k, replicates, seed) {
            return Ok(cached);
        }
    }
    let pivot = simulate_pivot_parallel(k, replicates, seed)?;
    if let Some(path) = path {
        save_cache(&pivot, path)?;
    }
    Ok(pivot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_sequential() {
        let a = simulate_pivot_parallel(20, 3000, 5).unwrap();
        let b = eigenbreak_core::simulate_pivot(20, 3000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cache_round_trip_keeps_grid_quantiles() {
        let pivot = simulate_pivot_parallel(20, 20_000, 9).unwrap();
        let mut buf = Vec::new();
        write_cache(&pivot, &mut buf).unwrap();
        let back = read_cache(buf.as_slice()).unwrap();
        assert_eq!((back.k(), back.replicates(), back.seed()), (20, 20_000, 9));
        for p in [0.01, 0.1, 0.5, 0.9, 0.95, 0.99] {
            assert_eq!(back.quantile(p), pivot.quantile(p));
        }
        assert!((back.cdf(pivot.quantile(0.9)) - 0.9).abs() < 2e-4);
    }

    #[test]
    fn corrupt_cache_is_rejected() {
        let pivot = simulate_pivot_parallel(20, 100, 1).unwrap();
        let mut buf = Vec::new();
        write_cache(&pivot, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(50).map(|l| format!("{l}\n")).collect();
        assert!(read_cache(truncated.as_bytes()).is_err());
        assert!(read_cache("k,replicates,seed,p,quantile\n".as_bytes()).is_err());
    }
}
