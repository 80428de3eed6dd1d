//! Self-normalised tests for relevant changes in eigenvalues and
//! eigenfunctions.
//!
//! For a split sample the sequential kernels `ĉ⁽¹⁾(λ)`, `ĉ⁽²⁾(λ)` are
//! decomposed on the grid `λ ∈ {1/K, …, (K-1)/K, 1}`. The difference path is
//!
//! ```text
//! Ê_j(λ) = (τ̂⁽¹⁾_{j,λ} - τ̂⁽²⁾_{j,λ})²          (eigenvalues)
//! D̂_j(λ) = min ‖v̂⁽¹⁾_{j,λ} ∓ v̂⁽²⁾_{j,λ}‖²        (eigenfunctions)
//! ```
//!
//! and the normaliser is `[∫ λ⁴ (path(λ) - path(1))² ν(dλ)]^{1/2}` with `ν`
//! uniform on `{l/K}`. The studentised ratio `(path(1) - Δ)/normaliser` is
//! compared with quantiles of the pivot
//!
//! ```text
//! W = B(1) / [∫ λ² (B(λ) - λ B(1))² ν(dλ)]^{1/2}
//! ```
//!
//! for a standard Brownian motion `B`. Since `ν` is discrete, `W` depends on
//! `B` only at `l/K`, so it is simulated exactly from `K` Gaussian increments.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::covkern::{sequential_kernels, SplitSample};
use crate::eigensys::{aligned_distance_sq, eigendecompose, EigenSystem};
use crate::error::{Error, Result};
use crate::seed::stream_rng;

/// Normalisers below this are treated as zero.
pub const DEGENERATE_NORMALIZER: f64 = 1e-12;

/// Uniform measure on `{l/K : l = 1, …, K-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NuMeasure {
    k: usize,
}

impl NuMeasure {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("K", "the measure needs K >= 2"));
        }
        Ok(Self { k })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    /// Mass of each support point.
    #[inline]
    pub fn weight(&self) -> f64 {
        1.0 / (self.k - 1) as f64
    }

    pub fn support(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (1..self.k).map(move |l| l as f64 / self.k as f64)
    }

    /// Support plus the end point `1`.
    pub fn path_grid(&self) -> Vec<f64> {
        let mut g: Vec<f64> = self.support().collect();
        g.push(1.0);
        g
    }
}

impl Default for NuMeasure {
    fn default() -> Self {
        Self { k: 20 }
    }
}

/// Which characteristic of the eigensystem is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathKind {
    Eigenvalue,
    Eigenfunction,
}

/// Diagnostics that do not stop a test but qualify its outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// The normaliser vanished; the test retained without comparing.
    DegenerateNormalizer,
    /// `τ_j` of the given segment (1 or 2) has no eigen-gap at `λ = 1`.
    EigenGap { segment: usize, j: usize },
}

/// The difference path on `supp(ν) ∪ {1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffPath {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub j: usize,
    pub kind: PathKind,
    pub warnings: Vec<Warning>,
}

impl DiffPath {
    /// `path(1)`, the test statistic.
    pub fn statistic(&self) -> f64 {
        *self.values.last().expect("path grid ends at 1")
    }
}

/// Eigensystems of both segments at every grid point, reusable across
/// indices and path kinds.
#[derive(Debug, Clone)]
pub struct SequentialEigen {
    lambdas: Vec<f64>,
    /// `None` where the sequential kernel is the zero function.
    pre: Vec<Option<EigenSystem>>,
    post: Vec<Option<EigenSystem>>,
    p_max: usize,
}

impl SequentialEigen {
    /// Decomposes `ĉ⁽ⁱ⁾(λ)` for both segments, keeping `p_max` pairs.
    pub fn compute(split: &SplitSample, nu: &NuMeasure, p_max: usize, center: bool) -> Result<Self> {
        if split.pre().len() < 2 || split.post().len() < 2 {
            return Err(Error::invalid("split", "each segment needs at least two observations"));
        }
        let dim = split.pre().dim();
        if p_max == 0 || p_max > dim {
            return Err(Error::IndexOutOfRange { index: p_max, max: dim });
        }
        let lambdas = nu.path_grid();
        let decompose = |seg| -> Result<Vec<Option<EigenSystem>>> {
            sequential_kernels(seg, &lambdas, center)?
                .iter()
                .map(|k| {
                    if k.is_zero() {
                        Ok(None)
                    } else {
                        eigendecompose(k, p_max).map(Some)
                    }
                })
                .collect()
        };
        let pre = decompose(split.pre())?;
        let post = decompose(split.post())?;
        Ok(Self {
            lambdas,
            pre,
            post,
            p_max,
        })
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    /// Full-segment eigensystems `(ĉ⁽¹⁾(1), ĉ⁽²⁾(1))`.
    pub fn full(&self) -> (Option<&EigenSystem>, Option<&EigenSystem>) {
        let last = self.lambdas.len() - 1;
        (self.pre[last].as_ref(), self.post[last].as_ref())
    }

    /// The difference path for index `j` (1-based).
    ///
    /// A zero kernel has eigenvalues `0` and is read as the zero function in
    /// the eigenfunction distance, which then equals `1` against a unit
    /// function and `0` against another zero kernel.
    pub fn path(&self, j: usize, kind: PathKind) -> Result<DiffPath> {
        if j == 0 || j > self.p_max {
            return Err(Error::IndexOutOfRange { index: j, max: self.p_max });
        }
        let mut values = Vec::with_capacity(self.lambdas.len());
        for (a, b) in self.pre.iter().zip(&self.post) {
            let v = match kind {
                PathKind::Eigenvalue => {
                    let ta = a.as_ref().map_or(Ok(0.0), |e| e.eigenvalue(j))?;
                    let tb = b.as_ref().map_or(Ok(0.0), |e| e.eigenvalue(j))?;
                    (ta - tb) * (ta - tb)
                }
                PathKind::Eigenfunction => match (a, b) {
                    (Some(a), Some(b)) => {
                        aligned_distance_sq(a.eigenfunction(j)?, b.eigenfunction(j)?, a.repr())?
                    }
                    (None, None) => 0.0,
                    _ => 1.0,
                },
            };
            values.push(v);
        }
        let mut warnings = Vec::new();
        let (pre, post) = self.full();
        for (segment, sys) in [(1, pre), (2, post)] {
            if let Some(sys) = sys {
                if sys.is_degenerate(j)? {
                    warnings.push(Warning::EigenGap { segment, j });
                }
            }
        }
        Ok(DiffPath {
            lambdas: self.lambdas.clone(),
            values,
            j,
            kind,
            warnings,
        })
    }
}

/// `Ê_j(λ)` or `D̂_j(λ)` on `supp(ν) ∪ {1}`.
pub fn diff_path(split: &SplitSample, j: usize, nu: &NuMeasure, kind: PathKind, center: bool) -> Result<DiffPath> {
    let dim = split.pre().dim();
    if j == 0 || j > dim {
        return Err(Error::IndexOutOfRange { index: j, max: dim });
    }
    SequentialEigen::compute(split, nu, j, center)?.path(j, kind)
}

/// `[∑_l ν_l λ_l⁴ (path(λ_l) - path(1))²]^{1/2}`.
pub fn self_normalizer(path: &DiffPath, nu: &NuMeasure) -> Result<f64> {
    let grid = nu.path_grid();
    if path.lambdas.len() != grid.len()
        || path.values.len() != grid.len()
        || path.lambdas.iter().zip(&grid).any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::invalid("path", "grid does not match supp(nu) plus 1"));
    }
    let end = path.statistic();
    let w = nu.weight();
    let s: f64 = grid
        .iter()
        .zip(&path.values)
        .take(grid.len() - 1)
        .map(|(&l, &v)| {
            let l2 = l * l;
            w * l2 * l2 * (v - end) * (v - end)
        })
        .sum();
    Ok(libm::sqrt(s))
}

/// Sorted Monte-Carlo sample of the pivot `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotDistribution {
    k: usize,
    seed: u64,
    replicates: usize,
    sorted: Vec<f64>,
}

impl PivotDistribution {
    /// Builds the distribution from raw draws (any order).
    ///
    /// `replicates` records how many simulations the draws summarise; it may
    /// exceed `draws.len()` when the draws are a quantile table.
    pub fn from_draws(k: usize, seed: u64, replicates: usize, mut draws: Vec<f64>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::invalid("replicates", "the pivot sample is empty"));
        }
        if draws.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite);
        }
        draws.sort_by(f64::total_cmp);
        Ok(Self {
            k,
            seed,
            replicates,
            sorted: draws,
        })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn replicates(&self) -> usize {
        self.replicates
    }

    #[inline]
    pub fn sample(&self) -> &[f64] {
        &self.sorted
    }

    /// Empirical `p`-quantile, linear interpolation between order statistics.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
        let lo = libm::floor(h) as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = h - lo as f64;
        self.sorted[lo] + frac * (self.sorted[hi] - self.sorted[lo])
    }

    /// Empirical `P(W ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        self.sorted.partition_point(|&w| w <= x) as f64 / self.sorted.len() as f64
    }
}

/// One draw of `W` from `B` sampled at `1/K, …, 1`.
pub fn pivot_draw<R: Rng + ?Sized>(k: usize, rng: &mut R) -> f64 {
    let sd = libm::sqrt(1.0 / k as f64);
    let mut path = Vec::with_capacity(k);
    let mut b = 0.0;
    for _ in 0..k {
        let z: f64 = StandardNormal.sample(rng);
        b += sd * z;
        path.push(b);
    }
    let b1 = path[k - 1];
    let mut s = 0.0;
    for (l, &bl) in path.iter().take(k - 1).enumerate() {
        let lam = (l + 1) as f64 / k as f64;
        let d = bl - lam * b1;
        s += lam * lam * d * d;
    }
    b1 / libm::sqrt(s / (k - 1) as f64)
}

/// Draw number `index` under `seed`; independent of any other draw.
pub fn pivot_replicate(k: usize, seed: u64, index: u64) -> f64 {
    pivot_draw(k, &mut stream_rng(seed, index))
}

/// `R` draws of `W`, replicate `r` using stream `r` of `seed`.
pub fn simulate_pivot(k: usize, replicates: usize, seed: u64) -> Result<PivotDistribution> {
    NuMeasure::new(k)?;
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    let draws = (0..replicates as u64).map(|r| pivot_replicate(k, seed, r)).collect();
    PivotDistribution::from_draws(k, seed, replicates, draws)
}

/// Direction of the hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestMode {
    /// `H0: change ≤ Δ`, reject when the ratio exceeds `q_{1-α}`.
    Relevant,
    /// `H0: change > Δ`, reject when the ratio falls below `q_α`.
    Equivalence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    Retain,
}

/// Outcome of one self-normalised test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub j: usize,
    pub kind: PathKind,
    pub mode: TestMode,
    pub statistic: f64,
    pub normalizer: f64,
    pub delta: f64,
    pub ratio: f64,
    pub quantile: f64,
    pub alpha: f64,
    pub decision: Decision,
    /// `P(W ≤ ratio)` under the simulated pivot.
    pub p_value: f64,
    pub warnings: Vec<Warning>,
}

impl TestResult {
    #[inline]
    pub fn rejected(&self) -> bool {
        self.decision == Decision::Reject
    }
}

/// Applies the decision rule of `mode` at level `alpha`.
pub fn decide(
    path: &DiffPath,
    normalizer: f64,
    delta: f64,
    pivot: &PivotDistribution,
    alpha: f64,
    mode: TestMode,
) -> Result<TestResult> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid("delta", "threshold must be finite and non-negative"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", "must lie in (0, 1)"));
    }
    if !(normalizer >= 0.0) {
        return Err(Error::invalid("normalizer", "must be non-negative"));
    }
    let statistic = path.statistic();
    let mut ratio = (statistic - delta) / normalizer;
    if ratio.is_nan() {
        ratio = 0.0;
    }
    let quantile = match mode {
        TestMode::Relevant => pivot.quantile(1.0 - alpha),
        TestMode::Equivalence => pivot.quantile(alpha),
    };
    let mut warnings = path.warnings.clone();
    let decision = if normalizer < DEGENERATE_NORMALIZER {
        warnings.push(Warning::DegenerateNormalizer);
        Decision::Retain
    } else {
        let reject = match mode {
            TestMode::Relevant => ratio > quantile,
            TestMode::Equivalence => ratio < quantile,
        };
        if reject {
            Decision::Reject
        } else {
            Decision::Retain
        }
    };
    Ok(TestResult {
        j: path.j,
        kind: path.kind,
        mode,
        statistic,
        normalizer,
        delta,
        ratio,
        quantile,
        alpha,
        decision,
        p_value: pivot.cdf(ratio),
        warnings,
    })
}

/// Parameters of one test on a split sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceTest {
    pub j: usize,
    pub kind: PathKind,
    pub delta: f64,
    pub alpha: f64,
    pub mode: TestMode,
    pub center: bool,
}

impl RelevanceTest {
    /// Path, normaliser and decision in one go.
    pub fn run(&self, split: &SplitSample, nu: &NuMeasure, pivot: &PivotDistribution) -> Result<TestResult> {
        let path = diff_path(split, self.j, nu, self.kind, self.center)?;
        self.run_on_path(&path, nu, pivot)
    }

    pub fn run_on_path(&self, path: &DiffPath, nu: &NuMeasure, pivot: &PivotDistribution) -> Result<TestResult> {
        let normalizer = self_normalizer(path, nu)?;
        decide(path, normalizer, self.delta, pivot, self.alpha, self.mode)
    }
}
