//! Monte-Carlo rejection-probability experiments.
//!
//! Every replicate draws its own generator from
//! `derive_seed(master, [N, magnitude bits, replicate])`, so a table depends
//! only on the configuration and never on scheduling or worker count.

use std::f64::consts::PI;

use eigenbreak_core::changepoint::estimate_changepoint;
use eigenbreak_core::covkern::SplitSample;
use eigenbreak_core::datagen::{generate, DgpSpec, Dependence, StructuralBreak};
use eigenbreak_core::seed::derive_seed;
use eigenbreak_core::selfnorm::{NuMeasure, PathKind, PivotDistribution, RelevanceTest, TestMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Which eigen-quantity is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Squared difference of the `j`-th eigenvalues; magnitudes are `E`.
    Eigenvalue,
    /// Squared aligned distance of the `j`-th eigenfunctions; magnitudes are
    /// rotation angles `φ` in radians.
    Eigenfunction,
}

impl TestKind {
    pub fn path_kind(self) -> PathKind {
        match self {
            TestKind::Eigenvalue => PathKind::Eigenvalue,
            TestKind::Eigenfunction => PathKind::Eigenfunction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Relevant,
    Equivalence,
}

impl From<Mode> for TestMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Relevant => TestMode::Relevant,
            Mode::Equivalence => TestMode::Equivalence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceKind {
    Iid,
    Fma1,
}

fn default_order() -> usize {
    21
}
fn default_theta0() -> f64 {
    0.5
}
fn default_replicates() -> usize {
    4000
}
fn default_alpha() -> f64 {
    0.05
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_k() -> usize {
    20
}
fn default_dependence() -> DependenceKind {
    DependenceKind::Iid
}
fn default_mode() -> Mode {
    Mode::Relevant
}
fn default_j() -> usize {
    1
}

/// A rejection-probability study over a grid of sample sizes and magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: TestKind,
    #[serde(default = "default_j")]
    pub j: usize,
    /// `Δ_τ` for eigenvalue tests, `Δ_v` for eigenfunction tests.
    pub delta: f64,
    /// Break magnitudes. Empty in a config file means "use the default grid".
    #[serde(default)]
    pub magnitudes: Option<Vec<f64>>,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    pub seed: u64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
    #[serde(default = "default_dependence")]
    pub dependence: DependenceKind,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Centre each segment before forming the sequential kernels.
    #[serde(default)]
    pub center: bool,
}

impl ExperimentConfig {
    /// Defaults for a test of `kind` at index `j` with threshold `delta`.
    pub fn new(kind: TestKind, j: usize, delta: f64, sample_sizes: Vec<usize>, seed: u64) -> Self {
        Self {
            kind,
            j,
            delta,
            magnitudes: None,
            sample_sizes,
            replicates: default_replicates(),
            alpha: default_alpha(),
            epsilon: default_epsilon(),
            k: default_k(),
            seed,
            order: default_order(),
            theta0: default_theta0(),
            dependence: default_dependence(),
            mode: default_mode(),
            center: false,
        }
    }

    pub fn with_magnitudes(mut self, magnitudes: Vec<f64>) -> Self {
        self.magnitudes = Some(magnitudes);
        self
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Magnitude at which the tested population quantity equals `delta`.
    ///
    /// Eigenvalue shifts give `E_j = E / j⁴` for `j ≤ 4`; rotations give
    /// `D_j = 2 - 2cos φ` for `j ≤ 2`. Other indices are unchanged by the
    /// break and have no boundary.
    pub fn boundary(&self) -> Option<f64> {
        match self.kind {
            TestKind::Eigenvalue if (1..=4).contains(&self.j) => {
                let e = self.delta * (self.j as f64).powi(4);
                (e <= 1.0).then_some(e)
            }
            TestKind::Eigenfunction if (1..=2).contains(&self.j) && self.delta <= 4.0 => {
                Some((1.0 - self.delta / 2.0).clamp(-1.0, 1.0).acos())
            }
            _ => None,
        }
    }

    /// The configured grid, or 9 equispaced points on `[0, 4·boundary]`
    /// (clipped to `[0, 1]` for eigenvalue shifts, `[0, π]` for angles).
    pub fn magnitude_grid(&self) -> Result<Vec<f64>> {
        if let Some(m) = &self.magnitudes {
            return Ok(m.clone());
        }
        let b = self.boundary().ok_or_else(|| {
            Error::Config(format!(
                "magnitudes: no default grid for a {:?} test at j = {} with delta = {}; list magnitudes explicitly",
                self.kind, self.j, self.delta
            ))
        })?;
        let cap = match self.kind {
            TestKind::Eigenvalue => 1.0,
            TestKind::Eigenfunction => PI,
        };
        let top = (4.0 * b).min(cap);
        Ok((0..9).map(|i| top * i as f64 / 8.0).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("{field}: {why}")));
        if self.j == 0 || self.j > self.order {
            return bad("j", "must lie in 1..=order");
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta", "must be finite and non-negative");
        }
        if self.replicates == 0 {
            return bad("replicates", "must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", "must lie in (0, 1)");
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return bad("epsilon", "must lie in [0, 0.5)");
        }
        if self.k < 2 {
            return bad("k", "must be at least 2");
        }
        if self.sample_sizes.is_empty() {
            return bad("sample_sizes", "must not be empty");
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 8) {
            return bad("sample_sizes", &format!("N = {n} is below the minimum of 8"));
        }
        if let Some(m) = &self.magnitudes {
            if m.is_empty() {
                return bad("magnitudes", "must not be empty");
            }
            if m.iter().any(|x| !x.is_finite()) {
                return bad("magnitudes", "must be finite");
            }
            if self.kind == TestKind::Eigenvalue && m.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return bad("magnitudes", "eigenvalue shifts E must lie in [0, 1]");
            }
        }
        if !(self.theta0 > 0.0 && self.theta0 < 1.0) {
            return bad("theta0", "must lie in (0, 1)");
        }
        self.magnitude_grid().map(|_| ())
    }

    /// Short hex digest of the canonical JSON form of this config.
    pub fn recipe_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn dgp(&self, n: usize, magnitude: f64, seed: u64) -> DgpSpec {
        let change = match self.kind {
            TestKind::Eigenvalue => StructuralBreak::EigenvalueShift(magnitude),
            TestKind::Eigenfunction => StructuralBreak::Rotation(magnitude),
        };
        let dependence = match self.dependence {
            DependenceKind::Iid => Dependence::Iid,
            DependenceKind::Fma1 => Dependence::Fma1,
        };
        DgpSpec::new(n, seed)
            .with_order(self.order)
            .with_theta0(self.theta0)
            .with_dependence(dependence)
            .with_break(change)
    }

    fn test(&self) -> RelevanceTest {
        RelevanceTest {
            j: self.j,
            kind: self.kind.path_kind(),
            delta: self.delta,
            alpha: self.alpha,
            mode: self.mode.into(),
            center: self.center,
        }
    }
}

/// Seed of replicate `index` in cell `(n, magnitude)`.
pub fn replicate_seed(master: u64, n: usize, magnitude: f64, index: u64) -> u64 {
    derive_seed(master, &[n as u64, magnitude.to_bits(), index])
}

/// Result of one simulated sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub theta_hat: f64,
    pub rejected: bool,
    pub ratio: f64,
    /// A segment had fewer than two curves; the test was not run and the
    /// replicate counts as a retention.
    pub degenerate_split: bool,
}

/// Runs a single replicate.
pub fn run_replicate(
    config: &ExperimentConfig,
    pivot: &PivotDistribution,
    n: usize,
    magnitude: f64,
    index: u64,
) -> Result<ReplicateOutcome> {
    let seed = replicate_seed(config.seed, n, magnitude, index);
    let wrap = |source| Error::Replicate { n, magnitude, index, seed, source };
    let series = generate(&config.dgp(n, magnitude, seed)).map_err(wrap)?;
    let cp = estimate_changepoint(series.as_sample(), config.epsilon).map_err(wrap)?;
    if cp.k_hat < 2 || n - cp.k_hat < 2 {
        return Ok(ReplicateOutcome {
            theta_hat: cp.theta_hat,
            rejected: false,
            ratio: f64::NAN,
            degenerate_split: true,
        });
    }
    let split = SplitSample::at_index(series.as_sample(), cp.k_hat).map_err(wrap)?;
    let nu = NuMeasure::new(config.k).map_err(wrap)?;
    let result = config.test().run(&split, &nu, pivot).map_err(wrap)?;
    Ok(ReplicateOutcome {
        theta_hat: cp.theta_hat,
        rejected: result.rejected(),
        ratio: result.ratio,
        degenerate_split: false,
    })
}

/// One `(N, magnitude)` cell of a rejection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub n: usize,
    pub magnitude: f64,
    pub rate: f64,
    pub se: f64,
    pub mean_theta_hat: f64,
    pub replicates: usize,
    pub degenerate_splits: usize,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionTable {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub rows: Vec<RejectionRow>,
}

impl RejectionTable {
    pub fn row(&self, n: usize, magnitude: f64) -> Option<&RejectionRow> {
        self.rows.iter().find(|r| r.n == n && r.magnitude == magnitude)
    }
}

/// A cell's outcomes in replicate order.
#[derive(Debug, Clone)]
pub struct Cell {
    pub n: usize,
    pub magnitude: f64,
    pub outcomes: Vec<ReplicateOutcome>,
}

impl Cell {
    fn summarize(&self, config: &ExperimentConfig, hash: &str) -> RejectionRow {
        let r = self.outcomes.len();
        let rejected = self.outcomes.iter().filter(|o| o.rejected).count();
        let rate = rejected as f64 / r as f64;
        RejectionRow {
            n: self.n,
            magnitude: self.magnitude,
            rate,
            se: (rate * (1.0 - rate) / r as f64).sqrt(),
            mean_theta_hat: self.outcomes.iter().map(|o| o.theta_hat).sum::<f64>() / r as f64,
            replicates: r,
            degenerate_splits: self.outcomes.iter().filter(|o| o.degenerate_split).count(),
            config_hash: hash.to_string(),
            seed: config.seed,
        }
    }
}

/// All replicates of every cell, in grid order.
pub fn run_cells(config: &ExperimentConfig, pivot: &PivotDistribution) -> Result<Vec<Cell>> {
    config.validate()?;
    if pivot.k() != config.k {
        return Err(Error::Config(format!(
            "k: config uses K = {} but the pivot table was simulated with K = {}",
            config.k,
            pivot.k()
        )));
    }
    let grid = config.magnitude_grid()?;
    let mut cells = Vec::with_capacity(config.sample_sizes.len() * grid.len());
    for &n in &config.sample_sizes {
        for &magnitude in &grid {
            let outcomes = (0..config.replicates as u64)
                .into_par_iter()
                .map(|i| run_replicate(config, pivot, n, magnitude, i))
                .collect::<Result<Vec<_>>>()?;
            cells.push(Cell { n, magnitude, outcomes });
        }
    }
    Ok(cells)
}

/// Rejection frequencies over the configured grid.
pub fn run_experiment(config: &ExperimentConfig, pivot: &PivotDistribution) -> Result<RejectionTable> {
    let hash = config.recipe_hash();
    let rows = run_cells(config, pivot)?.iter().map(|c| c.summarize(config, &hash)).collect();
    Ok(RejectionTable {
        config: config.clone(),
        config_hash: hash,
        rows,
    })
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("workers: {e}")))?;
    Ok(pool.install(f))
}

/// Equal-width histogram on `[0, 1]`; the value 1 falls in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn unit(values: impl IntoIterator<Item = f64>, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        for v in values {
            let b = ((v * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize;
            counts[b] += 1;
        }
        let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
        Self { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Share of `values` outside `[lo, 1 - lo]`.
pub fn edge_fraction(values: &[f64], lo: f64) -> f64 {
    let hits = values.iter().filter(|&&t| t < lo || t > 1.0 - lo).count();
    hits as f64 / values.len() as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonRun {
    pub epsilon: f64,
    pub table: RejectionTable,
    /// One θ̂ histogram per table row.
    pub histograms: Vec<Histogram>,
    /// Raw θ̂ values per table row, replicate order.
    #[serde(skip)]
    pub theta_hats: Vec<Vec<f64>>,
}

/// `run_experiment` for each trim fraction, with θ̂ histograms.
///
/// All trim fractions reuse the same replicate seeds.
pub fn epsilon_sweep(
    config: &ExperimentConfig,
    epsilons: &[f64],
    bins: usize,
    pivot: &PivotDistribution,
) -> Result<Vec<EpsilonRun>> {
    if epsilons.is_empty() {
        return Err(Error::Config("epsilons: must not be empty".into()));
    }
    if bins == 0 {
        return Err(Error::Config("bins: must be at least 1".into()));
    }
    epsilons
        .iter()
        .map(|&epsilon| {
            let cfg = config.clone().with_epsilon(epsilon);
            let hash = cfg.recipe_hash();
            let cells = run_cells(&cfg, pivot)?;
            let theta_hats: Vec<Vec<f64>> =
                cells.iter().map(|c| c.outcomes.iter().map(|o| o.theta_hat).collect()).collect();
            let histograms = theta_hats.iter().map(|t| Histogram::unit(t.iter().copied(), bins)).collect();
            let rows = cells.iter().map(|c| c.summarize(&cfg, &hash)).collect();
            Ok(EpsilonRun {
                epsilon,
                table: RejectionTable {
                    config: cfg,
                    config_hash: hash,
                    rows,
                },
                histograms,
                theta_hats,
            })
        })
        .collect()
}
