//! Change-point analysis of yearly curves: relevance tables for
//! eigenfunctions over an angle grid and for eigenvalues over threshold
//! divisors.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use eigenbreak_core::changepoint::estimate_changepoint;
use eigenbreak_core::covkern::SplitSample;
use eigenbreak_core::funcspace::FourierBasis;
use eigenbreak_core::selfnorm::{
    NuMeasure, PathKind, PivotDistribution, RelevanceTest, SequentialEigen, TestMode, TestResult, Warning,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ExcludedYear, YearlyCurves, DAYS, DEFAULT_MIN_DAYS};

/// Fewest retained years the pipeline accepts.
pub const MIN_YEARS: usize = 8;

fn default_order() -> usize {
    41
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_angles() -> Vec<f64> {
    vec![PI / 16.0, PI / 8.0, PI / 4.0, 2.0 * PI / 5.0]
}
fn default_j_fun() -> Vec<usize> {
    (1..=5).collect()
}
fn default_j_val() -> Vec<usize> {
    (1..=12).collect()
}
fn default_divisors() -> Vec<f64> {
    vec![50.0, 100.0, 200.0]
}
fn default_alpha() -> f64 {
    0.10
}
fn default_k() -> usize {
    20
}
fn default_min_days() -> usize {
    DEFAULT_MIN_DAYS
}
fn default_center() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Angles `φ` in radians; each gives `Δ_v = 2 - 2cos φ`.
    #[serde(default = "default_angles")]
    pub angles: Vec<f64>,
    #[serde(default = "default_j_fun")]
    pub j_fun: Vec<usize>,
    #[serde(default = "default_j_val")]
    pub j_val: Vec<usize>,
    /// Each gives `Δ_τ = τ̂_j⁽¹⁾ / divisor`.
    #[serde(default = "default_divisors")]
    pub divisors: Vec<f64>,
    /// Level for the TRUE/FALSE entries.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_min_days")]
    pub min_days: usize,
    #[serde(default = "default_center")]
    pub center: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            order: default_order(),
            epsilon: default_epsilon(),
            angles: default_angles(),
            j_fun: default_j_fun(),
            j_val: default_j_val(),
            divisors: default_divisors(),
            alpha: default_alpha(),
            k: default_k(),
            min_days: default_min_days(),
            center: default_center(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("{field}: {why}")));
        if self.order % 2 == 0 || self.order == 0 {
            return bad("order", "must be odd");
        }
        if 2 * (self.order - 1) > DAYS {
            return bad("order", "too large for a 365-day grid");
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return bad("epsilon", "must lie in [0, 0.5)");
        }
        if self.angles.is_empty() || self.angles.iter().any(|a| !a.is_finite()) {
            return bad("angles", "must be a non-empty list of finite angles");
        }
        for (name, js) in [("j_fun", &self.j_fun), ("j_val", &self.j_val)] {
            if js.is_empty() {
                return bad(name, "must not be empty");
            }
            if js.iter().any(|&j| j == 0 || j > self.order) {
                return bad(name, "indices must lie in 1..=order");
            }
        }
        if self.divisors.is_empty() || self.divisors.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return bad("divisors", "must be a non-empty list of positive numbers");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", "must lie in (0, 1)");
        }
        if self.k < 2 {
            return bad("k", "must be at least 2");
        }
        Ok(())
    }

    fn p_max(&self) -> usize {
        self.j_fun.iter().chain(&self.j_val).copied().max().unwrap_or(1)
    }
}

/// `Δ_v` for an angle: squared distance of unit vectors `φ` apart.
pub fn angle_threshold(phi: f64) -> f64 {
    2.0 - 2.0 * phi.cos()
}

/// Superscript class of a rejection, by `P(W ≤ ratio)`.
pub fn p_class(p: f64) -> Option<&'static str> {
    if p > 0.99 {
        Some(">99%")
    } else if p > 0.95 {
        Some(">95%")
    } else if p > 0.90 {
        Some(">90%")
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub j: usize,
    pub delta: f64,
    pub statistic: f64,
    pub normalizer: f64,
    pub ratio: f64,
    pub p_value: f64,
    /// `true` when the no-relevant-change hypothesis is retained.
    pub retained: bool,
    pub class: Option<&'static str>,
    pub warnings: Vec<String>,
}

impl CellReport {
    fn new(r: &TestResult) -> Self {
        let retained = !r.rejected();
        Self {
            j: r.j,
            delta: r.delta,
            statistic: r.statistic,
            normalizer: r.normalizer,
            ratio: r.ratio,
            p_value: r.p_value,
            retained,
            class: if retained { None } else { p_class(r.p_value) },
            warnings: r.warnings.iter().map(describe).collect(),
        }
    }

    /// `TRUE`, or `FALSE` with its class, as in a printed table.
    pub fn label(&self) -> String {
        match (self.retained, self.class) {
            (true, _) => "TRUE".into(),
            (false, Some(c)) => format!("FALSE{c}"),
            (false, None) => "FALSE".into(),
        }
    }
}

fn describe(w: &Warning) -> String {
    match w {
        Warning::DegenerateNormalizer => "degenerate normalizer".into(),
        Warning::EigenGap { segment, j } => format!("eigenvalue {j} of segment {segment} is not separated"),
    }
}

/// Rows indexed by thresholds, columns by `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevanceMatrix {
    pub row_label: &'static str,
    pub rows: Vec<f64>,
    pub js: Vec<usize>,
    pub cells: Vec<Vec<CellReport>>,
}

impl RelevanceMatrix {
    pub fn all_retained(&self) -> bool {
        self.cells.iter().flatten().all(|c| c.retained)
    }

    pub fn len(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Human-readable CSV: one row per threshold, one labelled column per `j`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![self.row_label.to_string()];
        header.extend(self.js.iter().map(|j| format!("j={j}")));
        w.write_record(&header)?;
        for (r, row) in self.rows.iter().zip(&self.cells) {
            let mut rec = vec![format!("{r}")];
            rec.extend(row.iter().map(CellReport::label));
            w.write_record(&rec)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Input(e.to_string()))?)
            .map_err(|e| Error::Input(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PivotInfo {
    pub k: usize,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub config: AnalysisConfig,
    pub years: Vec<i32>,
    pub excluded_years: Vec<ExcludedYear>,
    pub k_hat: usize,
    pub theta_hat: f64,
    /// Last year of the first segment.
    pub split_year: i32,
    pub eigenvalues_pre: Vec<f64>,
    pub eigenvalues_post: Vec<f64>,
    /// Eigenfunctions as coefficient vectors, one per retained index.
    pub eigenfunctions_pre: Vec<Vec<f64>>,
    pub eigenfunctions_post: Vec<Vec<f64>>,
    pub eigenfunction_table: RelevanceMatrix,
    pub eigenvalue_table: RelevanceMatrix,
    pub pivot: PivotInfo,
}

/// Runs the full pipeline on already ingested curves.
pub fn analyze(curves: &YearlyCurves, config: &AnalysisConfig, pivot: &PivotDistribution) -> Result<AnalysisReport> {
    config.validate()?;
    if curves.series.order() != config.order {
        return Err(Error::Config(format!(
            "order: curves have order {} but the config asks for {}",
            curves.series.order(),
            config.order
        )));
    }
    if pivot.k() != config.k {
        return Err(Error::Config(format!("k: pivot simulated with K = {}, config uses {}", pivot.k(), config.k)));
    }
    let n = curves.series.len();
    if n < MIN_YEARS {
        return Err(Error::Input(format!("{n} usable years; at least {MIN_YEARS} are needed")));
    }
    let sample = curves.series.as_sample();
    let located = if config.center { sample.centered()? } else { sample.clone() };
    let cp = estimate_changepoint(&located, config.epsilon)?;
    if cp.k_hat < 2 || n - cp.k_hat < 2 {
        return Err(Error::Input(format!(
            "estimated split after year {} leaves a segment with fewer than two curves; raise epsilon",
            curves.years[cp.k_hat - 1]
        )));
    }
    let split = SplitSample::at_index(sample, cp.k_hat)?;
    let nu = NuMeasure::new(config.k)?;
    let p_max = config.p_max();
    let seq = SequentialEigen::compute(&split, &nu, p_max, config.center)?;
    let (pre, post) = seq.full();
    let (pre, post) = (
        pre.ok_or_else(|| Error::Input("first segment has a zero covariance".into()))?,
        post.ok_or_else(|| Error::Input("second segment has a zero covariance".into()))?,
    );

    let run = |j: usize, kind: PathKind, delta: f64| -> Result<CellReport> {
        let test = RelevanceTest {
            j,
            kind,
            delta,
            alpha: config.alpha,
            mode: TestMode::Relevant,
            center: config.center,
        };
        Ok(CellReport::new(&test.run_on_path(&seq.path(j, kind)?, &nu, pivot)?))
    };

    let fun_cells = config
        .angles
        .iter()
        .map(|&phi| config.j_fun.iter().map(|&j| run(j, PathKind::Eigenfunction, angle_threshold(phi))).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    let val_cells = config
        .divisors
        .iter()
        .map(|&d| {
            config
                .j_val
                .iter()
                .map(|&j| run(j, PathKind::Eigenvalue, pre.eigenvalue(j)?.max(0.0) / d))
                .collect()
        })
        .collect::<Result<Vec<Vec<_>>>>()?;

    Ok(AnalysisReport {
        config: config.clone(),
        years: curves.years.clone(),
        excluded_years: curves.excluded.clone(),
        k_hat: cp.k_hat,
        theta_hat: cp.theta_hat,
        split_year: curves.years[cp.k_hat - 1],
        eigenvalues_pre: pre.eigenvalues().to_vec(),
        eigenvalues_post: post.eigenvalues().to_vec(),
        eigenfunctions_pre: pre.eigenfunctions().to_vec(),
        eigenfunctions_post: post.eigenfunctions().to_vec(),
        eigenfunction_table: RelevanceMatrix {
            row_label: "angle",
            rows: config.angles.clone(),
            js: config.j_fun.clone(),
            cells: fun_cells,
        },
        eigenvalue_table: RelevanceMatrix {
            row_label: "divisor",
            rows: config.divisors.clone(),
            js: config.j_val.clone(),
            cells: val_cells,
        },
        pivot: PivotInfo {
            k: pivot.k(),
            replicates: pivot.replicates(),
            seed: pivot.seed(),
        },
    })
}

impl AnalysisReport {
    /// `report.json`, the two relevance tables, `eigenvalues.csv` and
    /// `eigenfunctions.csv` (each segment's eigenfunctions on the day grid).
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, text: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        put("report.json", serde_json::to_string_pretty(self)? + "\n")?;
        put("eigenfunction_table.csv", self.eigenfunction_table.to_csv()?)?;
        put("eigenvalue_table.csv", self.eigenvalue_table.to_csv()?)?;

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["j", "pre", "post"])?;
        for (j, (a, b)) in self.eigenvalues_pre.iter().zip(&self.eigenvalues_post).enumerate() {
            w.write_record([(j + 1).to_string(), a.to_string(), b.to_string()])?;
        }
        put("eigenvalues.csv", csv_text(w)?)?;

        let basis = FourierBasis::new(self.config.order, DAYS)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["segment", "j", "day", "node", "value"])?;
        for (segment, funcs) in [("pre", &self.eigenfunctions_pre), ("post", &self.eigenfunctions_post)] {
            for (j, coeffs) in funcs.iter().enumerate() {
                let curve = basis.synthesize(coeffs)?;
                for (d, v) in curve.values().iter().enumerate() {
                    let node = (d as f64 + 0.5) / DAYS as f64;
                    w.write_record([segment.to_string(), (j + 1).to_string(), (d + 1).to_string(), node.to_string(), v.to_string()])?;
                }
            }
        }
        put("eigenfunctions.csv", csv_text(w)?)
    }
}

fn csv_text(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}
