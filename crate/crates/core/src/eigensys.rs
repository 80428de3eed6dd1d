//! Eigensystems of covariance operators.
//!
//! The integral operator `f ↦ ∫ c(·,t) f(t) dt` is discretised as `w C`, so
//! operator eigenvalues are the matrix eigenvalues times `w`, and unit
//! eigenvectors are rescaled by `1/√w` to have unit quadrature norm.

use alloc::vec::Vec;

use crate::covkern::CovKernel;
use crate::error::{Error, Result};
use crate::funcspace::Representation;
use crate::linalg;

const NORM_TOL: f64 = 1e-6;
const GAP_TOL: f64 = 1e-10;

/// Leading eigenpairs, eigenvalues non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    repr: Representation,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    /// Largest eigenvalue of the full decomposition, kept for gap checks.
    leading: f64,
    /// Eigenvalue `p_max + 1` when it exists.
    next: Option<f64>,
}

impl EigenSystem {
    #[inline]
    pub fn repr(&self) -> Representation {
        self.repr
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    #[inline]
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `τ_j`, 1-based.
    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        self.check(j)?;
        Ok(self.eigenvalues[j - 1])
    }

    /// `v_j`, 1-based, unit quadrature norm.
    pub fn eigenfunction(&self, j: usize) -> Result<&[f64]> {
        self.check(j)?;
        Ok(&self.eigenfunctions[j - 1])
    }

    pub fn eigenfunctions(&self) -> &[Vec<f64>] {
        &self.eigenfunctions
    }

    fn check(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.len() {
            Err(Error::IndexOutOfRange { index: j, max: self.len() })
        } else {
            Ok(())
        }
    }

    /// True when `τ_j` is within `1e-10 τ_1` of a neighbour, so `v_j` is not
    /// identified.
    pub fn is_degenerate(&self, j: usize) -> Result<bool> {
        self.check(j)?;
        let tol = GAP_TOL * self.leading.abs();
        let tau = self.eigenvalues[j - 1];
        let prev = (j > 1).then(|| self.eigenvalues[j - 2]);
        let next = if j < self.len() {
            Some(self.eigenvalues[j])
        } else {
            self.next
        };
        Ok(prev.is_some_and(|p| p - tau < tol) || next.is_some_and(|n| tau - n < tol))
    }

    /// Flips eigenfunctions so each has a non-negative inner product with
    /// the matching eigenfunction of `reference`.
    pub fn align_to(&mut self, reference: &EigenSystem) -> Result<()> {
        if self.repr != reference.repr {
            return Err(Error::RepresentationMismatch);
        }
        for (v, r) in self.eigenfunctions.iter_mut().zip(&reference.eigenfunctions) {
            if self.repr.inner(v, r) < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        Ok(())
    }
}

/// The `p_max` leading eigenpairs of the kernel's integral operator.
///
/// Each eigenfunction is signed so that its first non-negligible coordinate
/// is positive.
pub fn eigendecompose(kernel: &CovKernel, p_max: usize) -> Result<EigenSystem> {
    let dim = kernel.dim();
    if p_max == 0 || p_max > dim {
        return Err(Error::IndexOutOfRange { index: p_max, max: dim });
    }
    let m = kernel.matrix();
    let asym = m.asymmetry().unwrap_or(f64::INFINITY);
    if asym > 1e-12 * m.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let w = kernel.weight();
    let scale = 1.0 / libm::sqrt(w);
    let eig = linalg::symmetric_eigen(m)?;

    let eigenvalues: Vec<f64> = eig.values.iter().take(p_max).map(|v| v * w).collect();
    let eigenfunctions = (0..p_max)
        .map(|c| {
            let mut v: Vec<f64> = eig.vectors.column(c).into_iter().map(|x| x * scale).collect();
            orient(&mut v);
            v
        })
        .collect();
    Ok(EigenSystem {
        repr: kernel.repr(),
        eigenvalues,
        eigenfunctions,
        leading: eig.values.first().copied().unwrap_or(0.0) * w,
        next: eig.values.get(p_max).map(|v| v * w),
    })
}

fn orient(v: &mut [f64]) {
    let biggest = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * biggest) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// `min(‖v - u‖², ‖v + u‖²) = 2 - 2|⟨v, u⟩|`.
pub fn aligned_distance_sq(v: &[f64], u: &[f64], repr: Representation) -> Result<f64> {
    let dim = repr.dim();
    for f in [v, u] {
        if f.len() != dim {
            return Err(Error::Dimension { expected: dim, found: f.len() });
        }
        let norm = libm::sqrt(repr.inner(f, f));
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
    }
    let ip = repr.inner(v, u).abs();
    Ok((2.0 - 2.0 * ip).max(0.0))
}

/// `min(‖v - u‖, ‖v + u‖)` for unit functions.
pub fn aligned_distance(v: &[f64], u: &[f64], repr: Representation) -> Result<f64> {
    aligned_distance_sq(v, u, repr).map(libm::sqrt)
}
