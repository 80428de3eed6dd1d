//! Empirical covariance kernels.
//!
//! A kernel is stored as its matrix in the sample's representation: values
//! `c(t_i, t_j)` on the grid, or coefficients `C_kl` with
//! `c(s,t) = ∑ C_kl f_k(s) f_l(t)` in an orthonormal basis. In both cases
//! `∫∫ c² = w² ∑ C_ij²` with `w` the representation's quadrature weight.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::funcspace::{FunctionalSample, Representation};
use crate::linalg::Matrix;

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric second-moment kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct CovKernel {
    repr: Representation,
    matrix: Matrix,
}

impl CovKernel {
    pub fn zeros(repr: Representation) -> Self {
        Self {
            repr,
            matrix: Matrix::zeros(repr.dim(), repr.dim()),
        }
    }

    /// Wraps a matrix, checking shape, finiteness and symmetry.
    pub fn from_matrix(repr: Representation, matrix: Matrix) -> Result<Self> {
        let dim = repr.dim();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: matrix.rows().max(matrix.cols()),
            });
        }
        if matrix.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = matrix.asymmetry().unwrap_or(f64::INFINITY);
        if asym > SYMMETRY_TOL * matrix.max_abs().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self { repr, matrix })
    }

    /// `∑ τ_k v_k ⊗ v_k` for functions given in `repr`.
    pub fn from_expansion<V: AsRef<[f64]>>(
        repr: Representation,
        eigenvalues: &[f64],
        functions: &[V],
    ) -> Result<Self> {
        if eigenvalues.len() != functions.len() {
            return Err(Error::Dimension {
                expected: eigenvalues.len(),
                found: functions.len(),
            });
        }
        let dim = repr.dim();
        let mut m = Matrix::zeros(dim, dim);
        for (&tau, v) in eigenvalues.iter().zip(functions) {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(Error::Dimension { expected: dim, found: v.len() });
            }
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] += tau * v[i] * v[j];
                }
            }
        }
        Self::from_matrix(repr, m)
    }

    #[inline]
    pub fn repr(&self) -> Representation {
        self.repr
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.repr.dim()
    }

    #[inline]
    pub fn weight(&self) -> f64 {
        self.repr.weight()
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.as_slice().iter().all(|&v| v == 0.0)
    }

    /// Quadrature trace `w ∑ C_ii`, the sum of the operator's eigenvalues.
    pub fn trace(&self) -> f64 {
        self.weight() * (0..self.dim()).map(|i| self.matrix[(i, i)]).sum::<f64>()
    }

    /// `∫∫ c²`.
    pub fn norm_sq(&self) -> f64 {
        let w = self.weight();
        w * w * self.matrix.as_slice().iter().map(|v| v * v).sum::<f64>()
    }
}

/// `∫∫ (c1 - c2)²`.
pub fn kernel_distance_sq(c1: &CovKernel, c2: &CovKernel) -> Result<f64> {
    if c1.repr != c2.repr {
        return Err(Error::RepresentationMismatch);
    }
    let w = c1.weight();
    let s: f64 = c1
        .matrix
        .as_slice()
        .iter()
        .zip(c2.matrix.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(w * w * s)
}

/// `⌊n λ⌋`, guarded so that `λ = l/K` with `K | n` never loses a sample to
/// rounding.
pub fn prefix_count(n: usize, lambda: f64) -> usize {
    let c = libm::floor(n as f64 * lambda + 1e-9);
    if c <= 0.0 {
        0
    } else {
        (c as usize).min(n)
    }
}

/// Upper-triangle accumulator of `∑ x xᵀ`.
#[derive(Debug, Clone)]
pub(crate) struct OuterSum {
    dim: usize,
    packed: Vec<f64>,
}

impl OuterSum {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, x: &[f64]) {
        let mut p = 0;
        for i in 0..self.dim {
            let xi = x[i];
            for xj in &x[i..] {
                self.packed[p] += xi * xj;
                p += 1;
            }
        }
    }

    #[inline]
    pub(crate) fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub(crate) fn to_matrix(&self, count: f64) -> Matrix {
        let d = self.dim;
        let mut m = Matrix::zeros(d, d);
        let mut p = 0;
        for i in 0..d {
            for j in i..d {
                let v = self.packed[p] / count;
                m[(i, j)] = v;
                m[(j, i)] = v;
                p += 1;
            }
        }
        m
    }
}

/// Kernels `ĉ(λ)` for every `λ` in `lambdas`, built in one pass over the
/// segment.
///
/// `ĉ(λ)` averages the outer products of the first `⌊n λ⌋` observations; a
/// zero count gives the zero kernel. With `center` each observation first has
/// the mean of the *whole* segment subtracted, independently of `λ`.
pub fn sequential_kernels(
    segment: &FunctionalSample,
    lambdas: &[f64],
    center: bool,
) -> Result<Vec<CovKernel>> {
    if segment.is_empty() {
        return Err(Error::EmptySegment);
    }
    if let Some(&bad) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::invalid(
            "lambda",
            alloc::format!("{bad} is outside [0, 1]"),
        ));
    }
    let n = segment.len();
    let repr = segment.repr();
    let mean = if center { Some(segment.mean()?) } else { None };

    let counts: Vec<usize> = lambdas.iter().map(|&l| prefix_count(n, l)).collect();
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by_key(|&i| counts[i]);

    let mut out: Vec<Option<CovKernel>> = vec![None; lambdas.len()];
    let mut acc = OuterSum::new(repr.dim());
    let mut buf = vec![0.0; repr.dim()];
    let mut seen = 0;
    for &idx in &order {
        let target = counts[idx];
        while seen < target {
            let row = segment.row(seen);
            match &mean {
                Some(mu) => {
                    for ((b, x), m) in buf.iter_mut().zip(row).zip(mu) {
                        *b = x - m;
                    }
                    acc.add(&buf);
                }
                None => acc.add(row),
            }
            seen += 1;
        }
        out[idx] = Some(if target == 0 {
            CovKernel::zeros(repr)
        } else {
            CovKernel {
                repr,
                matrix: acc.to_matrix(target as f64),
            }
        });
    }
    Ok(out.into_iter().map(|k| k.expect("every lambda visited")).collect())
}

/// Single kernel `ĉ(λ)`; see [`sequential_kernels`].
pub fn sequential_kernel(segment: &FunctionalSample, lambda: f64, center: bool) -> Result<CovKernel> {
    Ok(sequential_kernels(segment, &[lambda], center)?.remove(0))
}

/// The two sub-samples on either side of an estimated change point.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSample {
    pre: FunctionalSample,
    post: FunctionalSample,
    theta_hat: f64,
}

impl SplitSample {
    /// Observations `1..=k` go to `pre`, the rest to `post`.
    pub fn at_index(sample: &FunctionalSample, k: usize) -> Result<Self> {
        let n = sample.len();
        if k == 0 || k >= n {
            return Err(Error::invalid(
                "k",
                alloc::format!("split index {k} must leave both sides nonempty (N = {n})"),
            ));
        }
        Ok(Self {
            pre: sample.slice(0..k),
            post: sample.slice(k..n),
            theta_hat: k as f64 / n as f64,
        })
    }

    /// Splits after `⌊N θ⌋` observations.
    pub fn at_fraction(sample: &FunctionalSample, theta: f64) -> Result<Self> {
        Self::at_index(sample, prefix_count(sample.len(), theta))
    }

    #[inline]
    pub fn pre(&self) -> &FunctionalSample {
        &self.pre
    }

    #[inline]
    pub fn post(&self) -> &FunctionalSample {
        &self.post
    }

    #[inline]
    pub fn theta_hat(&self) -> f64 {
        self.theta_hat
    }

    pub fn len(&self) -> usize {
        self.pre.len() + self.post.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeff_sample(rows: &[[f64; 3]]) -> FunctionalSample {
        FunctionalSample::from_rows(Representation::Coefficients(3), rows).unwrap()
    }

    #[test]
    fn single_function_rank_one() {
        let s = coeff_sample(&[[1.0, -2.0, 0.5]]);
        let k = sequential_kernel(&s, 1.0, false).unwrap();
        let x = [1.0, -2.0, 0.5];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k.matrix()[(i, j)], x[i] * x[j]);
            }
        }
    }

    #[test]
    fn small_lambda_gives_zero_kernel() {
        let s = coeff_sample(&[[1.0, 2.0, 3.0], [0.0, 1.0, 0.0], [4.0, 4.0, 4.0]]);
        assert!(sequential_kernel(&s, 0.3, false).unwrap().is_zero());
        assert!(sequential_kernel(&s, 0.0, true).unwrap().is_zero());
        assert!(!sequential_kernel(&s, 1.0 / 3.0, false).unwrap().is_zero());
    }

    #[test]
    fn prefix_count_guard() {
        // 0.35 * 20 = 7.000000000000001 and 0.7 * 10 = 6.999999999999999.
        assert_eq!(prefix_count(10, 0.7), 7);
        assert_eq!(prefix_count(20, 0.35), 7);
        for k in 1..20 {
            assert_eq!(prefix_count(60, k as f64 / 20.0), 3 * k);
        }
        assert_eq!(prefix_count(5, 1.0), 5);
    }

    #[test]
    fn errors() {
        let empty = FunctionalSample::new(Representation::Coefficients(3), Vec::new()).unwrap();
        assert_eq!(sequential_kernel(&empty, 1.0, false), Err(Error::EmptySegment));
        let s = coeff_sample(&[[1.0, 2.0, 3.0]]);
        assert!(sequential_kernel(&s, 1.5, false).is_err());
        let a = CovKernel::zeros(Representation::Coefficients(3));
        let b = CovKernel::zeros(Representation::Grid(3));
        assert_eq!(kernel_distance_sq(&a, &b), Err(Error::RepresentationMismatch));
        let mut m = Matrix::identity(3);
        m[(0, 1)] = 1e-3;
        assert!(matches!(
            CovKernel::from_matrix(Representation::Coefficients(3), m),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn lambdas_in_any_order() {
        let s = coeff_sample(&[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0], [1.0, 1.0, 1.0]]);
        let ks = sequential_kernels(&s, &[1.0, 0.25, 0.5], false).unwrap();
        assert_eq!(ks[0], sequential_kernel(&s, 1.0, false).unwrap());
        assert_eq!(ks[1].matrix()[(0, 0)], 1.0);
        assert_eq!(ks[2].matrix()[(1, 1)], 2.0);
    }

    #[test]
    fn split_sample() {
        let s = coeff_sample(&[[0.0; 3], [1.0; 3], [2.0; 3], [3.0; 3]]);
        let sp = SplitSample::at_index(&s, 1).unwrap();
        assert_eq!(sp.pre().len(), 1);
        assert_eq!(sp.post().len(), 3);
        assert_eq!(sp.theta_hat(), 0.25);
        assert!(SplitSample::at_index(&s, 0).is_err());
        assert!(SplitSample::at_index(&s, 4).is_err());
        assert_eq!(SplitSample::at_fraction(&s, 0.5).unwrap().pre().len(), 2);
    }
}
