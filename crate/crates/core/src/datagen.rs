//! Simulation designs on Fourier coefficients.
//!
//! Innovations `ε_n ~ N(0, diag(τ))` feed either an i.i.d. sequence or an
//! fMA(1) process `a_n = (ε_n + Ψ ε_{n-1}) / √(1 + ψ)` whose matrix `Ψ` has
//! i.i.d. `N(0, ψ)` entries, redrawn for every sample. After row `⌊Nθ₀⌋`
//! either the first four coordinates are shrunk (eigenvalue shift) or the
//! first two are rotated (eigenfunction rotation).
//!
//! `ψ` is calibrated so that the expected entrywise ℓ¹ norm of `Ψ` is one:
//! `T² √(2ψ/π) = 1`, i.e. `ψ = π / (2 T⁴)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::covkern::{prefix_count, CovKernel};
use crate::error::{Error, Result};
use crate::funcspace::{CoeffSeries, Representation};
use crate::linalg::Matrix;

/// Number of leading coordinates shrunk by the eigenvalue-shift break.
pub const SHIFTED_COMPONENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dependence {
    #[default]
    Iid,
    Fma1,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StructuralBreak {
    #[default]
    None,
    /// Squared eigenvalue gap `E ∈ [0, 1]` of the first eigenvalue.
    EigenvalueShift(f64),
    /// Rotation angle of the first two eigenfunctions.
    Rotation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Innovation {
    #[default]
    Gaussian,
    /// Student-t scaled to unit variance; `dof > 2`.
    StudentT(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub n: usize,
    pub order: usize,
    pub theta0: f64,
    pub tau: Vec<f64>,
    pub dependence: Dependence,
    pub change: StructuralBreak,
    pub innovation: Innovation,
    pub seed: u64,
}

/// `τ_k = 1/k²`, `k = 1..=order`.
pub fn default_tau(order: usize) -> Vec<f64> {
    (1..=order).map(|k| 1.0 / (k * k) as f64).collect()
}

/// `ψ = π / (2 T⁴)`.
pub fn fma_psi(order: usize) -> f64 {
    let t = order as f64;
    PI / (2.0 * t * t * t * t)
}

impl DgpSpec {
    /// `N` curves, order 21, break half-way, `τ_k = 1/k²`, i.i.d., no break.
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            order: 21,
            theta0: 0.5,
            tau: default_tau(21),
            dependence: Dependence::Iid,
            change: StructuralBreak::None,
            innovation: Innovation::Gaussian,
            seed,
        }
    }

    /// Changes the basis order and resets `τ` to the default decay.
    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self.tau = default_tau(order);
        self
    }

    pub fn with_break(mut self, change: StructuralBreak) -> Self {
        self.change = change;
        self
    }

    pub fn with_dependence(mut self, dependence: Dependence) -> Self {
        self.dependence = dependence;
        self
    }

    pub fn with_theta0(mut self, theta0: f64) -> Self {
        self.theta0 = theta0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::invalid("n", "need at least 4 observations"));
        }
        if self.order < 3 || self.order % 2 == 0 {
            return Err(Error::InvalidOrder(self.order));
        }
        if self.tau.len() != self.order {
            return Err(Error::Dimension {
                expected: self.order,
                found: self.tau.len(),
            });
        }
        if self.tau.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::invalid("tau", "eigenvalues must be positive"));
        }
        if self.tau.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("tau", "eigenvalues must be non-increasing"));
        }
        if !(self.theta0 > 0.0 && self.theta0 < 1.0) {
            return Err(Error::invalid("theta0", "must lie in (0, 1)"));
        }
        match self.change {
            StructuralBreak::EigenvalueShift(e) if !(0.0..=1.0).contains(&e) => {
                return Err(Error::invalid("E", "must lie in [0, 1]"));
            }
            StructuralBreak::Rotation(phi) if !phi.is_finite() => {
                return Err(Error::invalid("phi", "must be finite"));
            }
            _ => {}
        }
        if let Innovation::StudentT(dof) = self.innovation {
            if !(dof > 2.0) {
                return Err(Error::invalid("dof", "Student-t innovations need dof > 2"));
            }
        }
        Ok(())
    }
}

fn draw_innovation<R: Rng + ?Sized>(tau: &[f64], kind: Innovation, rng: &mut R, out: &mut [f64]) {
    match kind {
        Innovation::Gaussian => {
            for (o, t) in out.iter_mut().zip(tau) {
                let z: f64 = StandardNormal.sample(rng);
                *o = libm::sqrt(*t) * z;
            }
        }
        Innovation::StudentT(dof) => {
            let dist = StudentT::new(dof).expect("validated dof");
            let unit = libm::sqrt((dof - 2.0) / dof);
            for (o, t) in out.iter_mut().zip(tau) {
                *o = libm::sqrt(*t) * unit * dist.sample(rng);
            }
        }
    }
}

/// A fresh `T × T` matrix with i.i.d. `N(0, ψ)` entries.
pub fn draw_psi<R: Rng + ?Sized>(order: usize, psi: f64, rng: &mut R) -> Matrix {
    let sd = libm::sqrt(psi);
    Matrix::from_fn(order, order, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        sd * z
    })
}

/// `a_n = (ε_n + Ψ ε_{n-1}) / √(1 + ψ)` for `n = 1..=N`.
///
/// With a zero `psi_matrix` and `psi = 0` this is an i.i.d. sequence.
pub fn moving_average<R: Rng + ?Sized>(
    n: usize,
    tau: &[f64],
    psi_matrix: Option<(&Matrix, f64)>,
    innovation: Innovation,
    rng: &mut R,
) -> Result<CoeffSeries> {
    let order = tau.len();
    let mut prev = vec![0.0; order];
    let mut cur = vec![0.0; order];
    draw_innovation(tau, innovation, rng, &mut prev);
    let mut data = Vec::with_capacity(n * order);
    for _ in 0..n {
        draw_innovation(tau, innovation, rng, &mut cur);
        match psi_matrix {
            Some((psi_m, psi)) => {
                let lagged = psi_m.mul_vec(&prev)?;
                let norm = 1.0 / libm::sqrt(1.0 + psi);
                data.extend(cur.iter().zip(&lagged).map(|(e, l)| (e + l) * norm));
            }
            None => data.extend_from_slice(&cur),
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    CoeffSeries::new(order, data)
}

/// Draws a sample according to `spec` from the given generator.
pub fn generate_with_rng<R: Rng + ?Sized>(spec: &DgpSpec, rng: &mut R) -> Result<CoeffSeries> {
    spec.validate()?;
    let series = match spec.dependence {
        Dependence::Iid => moving_average(spec.n, &spec.tau, None, spec.innovation, rng)?,
        Dependence::Fma1 => {
            let psi = fma_psi(spec.order);
            let psi_m = draw_psi(spec.order, psi, rng);
            moving_average(spec.n, &spec.tau, Some((&psi_m, psi)), spec.innovation, rng)?
        }
    };
    match spec.change {
        StructuralBreak::None => Ok(series),
        StructuralBreak::EigenvalueShift(e) => apply_eigenvalue_break(series, e, spec.theta0),
        StructuralBreak::Rotation(phi) => Ok(apply_rotation_break(series, phi, spec.theta0)),
    }
}

/// Draws a sample according to `spec`, seeded by `spec.seed`.
pub fn generate(spec: &DgpSpec) -> Result<CoeffSeries> {
    generate_with_rng(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

fn break_index(n: usize, theta0: f64) -> usize {
    prefix_count(n, theta0)
}

/// Scales coordinates 1–4 of rows after `⌊Nθ₀⌋` by `√(1 - √E)`.
pub fn apply_eigenvalue_break(mut series: CoeffSeries, e: f64, theta0: f64) -> Result<CoeffSeries> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::invalid("E", "must lie in [0, 1]"));
    }
    let factor = libm::sqrt(1.0 - libm::sqrt(e));
    let start = break_index(series.len(), theta0);
    let comps = SHIFTED_COMPONENTS.min(series.order());
    for n in start..series.len() {
        series.row_mut(n)[..comps].iter_mut().for_each(|x| *x *= factor);
    }
    Ok(series)
}

/// Rotates coordinates 1 and 2 of rows after `⌊Nθ₀⌋` by `phi`.
pub fn apply_rotation_break(mut series: CoeffSeries, phi: f64, theta0: f64) -> CoeffSeries {
    let (s, c) = (libm::sin(phi), libm::cos(phi));
    let start = break_index(series.len(), theta0);
    for n in start..series.len() {
        let row = series.row_mut(n);
        let (a1, a2) = (row[0], row[1]);
        row[0] = c * a1 - s * a2;
        row[1] = s * a1 + c * a2;
    }
    series
}

/// Coefficient-space covariance kernel of the rows before (`post = false`)
/// or after the break.
pub fn population_kernel(tau: &[f64], change: StructuralBreak, post: bool) -> Result<CovKernel> {
    let order = tau.len();
    let repr = Representation::Coefficients(order);
    let mut m = Matrix::from_fn(order, order, |i, j| if i == j { tau[i] } else { 0.0 });
    if post {
        match change {
            StructuralBreak::None => {}
            StructuralBreak::EigenvalueShift(e) => {
                let f = 1.0 - libm::sqrt(e);
                for i in 0..SHIFTED_COMPONENTS.min(order) {
                    m[(i, i)] *= f;
                }
            }
            StructuralBreak::Rotation(phi) => {
                let (s, c) = (libm::sin(phi), libm::cos(phi));
                let (t1, t2) = (tau[0], tau[1]);
                // R diag(t1, t2) Rᵀ on the leading 2×2 block.
                m[(0, 0)] = c * c * t1 + s * s * t2;
                m[(1, 1)] = s * s * t1 + c * c * t2;
                let off = c * s * (t1 - t2);
                m[(0, 1)] = off;
                m[(1, 0)] = off;
            }
        }
    }
    CovKernel::from_matrix(repr, m)
}
