//! Relevant-change tests for the eigensystem of the covariance operator of a
//! functional time series.
//!
//! The pipeline is: estimate a change point in the second-moment kernel with
//! a CUSUM statistic ([`changepoint`]), split the sample there, build the
//! sequential kernels of both halves ([`covkern`]), decompose them
//! ([`eigensys`]) and compare the `j`-th eigenvalues or eigenfunctions with a
//! self-normalised statistic whose limit is a known pivot ([`selfnorm`]).
//! [`datagen`] reproduces the standard simulation designs.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod changepoint;
pub mod covkern;
pub mod datagen;
pub mod eigensys;
mod error;
pub mod funcspace;
pub mod linalg;
pub mod seed;
pub mod selfnorm;

pub use changepoint::{cusum_objective, cusum_profile, estimate_changepoint, ChangePointEstimate};
pub use covkern::{kernel_distance_sq, sequential_kernel, sequential_kernels, CovKernel, SplitSample};
pub use datagen::{generate, DgpSpec, Dependence, Innovation, StructuralBreak};
pub use eigensys::{aligned_distance, aligned_distance_sq, eigendecompose, EigenSystem};
pub use error::{Error, Result};
pub use funcspace::{
    fourier_basis, inner_product, CoeffSeries, FourierBasis, FunctionalSample, GridFunction, Representation,
};
pub use selfnorm::{
    decide, diff_path, self_normalizer, simulate_pivot, Decision, DiffPath, NuMeasure, PathKind,
    PivotDistribution, RelevanceTest, SequentialEigen, TestMode, TestResult, Warning,
};
