//! CUSUM change-point estimation for the second-moment kernel.
//!
//! `f(k) = k(N-k)/N² ∫∫ [Ŝ_k/k - (Ŝ_N - Ŝ_k)/(N-k)]²` where `Ŝ_k` is the
//! running sum of outer products `X_n ⊗ X_n`. The whole profile is computed in
//! one pass over the sample.

use alloc::vec::Vec;

use crate::covkern::OuterSum;
use crate::error::{Error, Result};
use crate::funcspace::FunctionalSample;

/// Outcome of the restricted argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointEstimate {
    /// Last index of the first segment (1-based count of pre-break rows).
    pub k_hat: usize,
    /// `k_hat / N`.
    pub theta_hat: f64,
    /// Smallest admissible `k`.
    pub k_min: usize,
    /// `f(k)` for `k = k_min, k_min + 1, …`.
    pub objective: Vec<f64>,
    pub epsilon: f64,
    pub n: usize,
}

impl ChangePointEstimate {
    pub fn k_max(&self) -> usize {
        self.k_min + self.objective.len() - 1
    }

    /// `f(k_hat)`.
    pub fn max_objective(&self) -> f64 {
        self.objective[self.k_hat - self.k_min]
    }
}

/// `f(k)` for every `k = 1, …, N-1`.
pub fn cusum_profile(sample: &FunctionalSample) -> Result<Vec<f64>> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::invalid("sample", "CUSUM needs at least two observations"));
    }
    let dim = sample.dim();
    let w = sample.repr().weight();
    let mut total = OuterSum::new(dim);
    for row in sample.rows() {
        total.add(row);
    }
    let total = total.packed().to_vec();
    let nf = n as f64;

    let mut prefix = OuterSum::new(dim);
    let mut profile = Vec::with_capacity(n - 1);
    for k in 1..n {
        prefix.add(sample.row(k - 1));
        let kf = k as f64;
        let rest = nf - kf;
        let mut s = 0.0;
        let mut p = 0;
        for i in 0..dim {
            for j in i..dim {
                let head = prefix.packed()[p];
                let diff = head / kf - (total[p] - head) / rest;
                let sq = diff * diff;
                s += if i == j { sq } else { 2.0 * sq };
                p += 1;
            }
        }
        profile.push(kf * rest / (nf * nf) * w * w * s);
    }
    Ok(profile)
}

/// `f(k)` for a single split, `1 ≤ k ≤ N-1`.
pub fn cusum_objective(sample: &FunctionalSample, k: usize) -> Result<f64> {
    let n = sample.len();
    if k == 0 || k >= n {
        return Err(Error::IndexOutOfRange { index: k, max: n.saturating_sub(1) });
    }
    let dim = sample.dim();
    let w = sample.repr().weight();
    let mut head = OuterSum::new(dim);
    let mut tail = OuterSum::new(dim);
    for (i, row) in sample.rows().enumerate() {
        if i < k {
            head.add(row);
        } else {
            tail.add(row);
        }
    }
    let (kf, rest, nf) = (k as f64, (n - k) as f64, n as f64);
    let mut s = 0.0;
    let mut p = 0;
    for i in 0..dim {
        for j in i..dim {
            let diff = head.packed()[p] / kf - tail.packed()[p] / rest;
            s += if i == j { diff * diff } else { 2.0 * diff * diff };
            p += 1;
        }
    }
    Ok(kf * rest / (nf * nf) * w * w * s)
}

/// Admissible range `⌈Nε⌉ ≤ k ≤ ⌊N(1-ε)⌋`, intersected with `1..=N-1`.
pub fn search_range(n: usize, epsilon: f64) -> Result<(usize, usize)> {
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::invalid("epsilon", "must lie in [0, 0.5)"));
    }
    if n < 4 {
        return Err(Error::invalid("sample", "change-point estimation needs N >= 4"));
    }
    let nf = n as f64;
    let lo = libm::ceil(nf * epsilon - 1e-9).max(1.0) as usize;
    let hi = (libm::floor(nf * (1.0 - epsilon) + 1e-9) as usize).min(n - 1);
    if lo > hi {
        return Err(Error::invalid("epsilon", "leaves no admissible split"));
    }
    Ok((lo, hi))
}

/// Restricted CUSUM argmax; ties resolve to the smallest `k`.
pub fn estimate_changepoint(sample: &FunctionalSample, epsilon: f64) -> Result<ChangePointEstimate> {
    let n = sample.len();
    let (lo, hi) = search_range(n, epsilon)?;
    let profile = cusum_profile(sample)?;
    let objective = profile[lo - 1..hi].to_vec();
    let mut best = 0;
    for (i, &v) in objective.iter().enumerate() {
        if v > objective[best] {
            best = i;
        }
    }
    let k_hat = lo + best;
    Ok(ChangePointEstimate {
        k_hat,
        theta_hat: k_hat as f64 / n as f64,
        k_min: lo,
        objective,
        epsilon,
        n,
    })
}
