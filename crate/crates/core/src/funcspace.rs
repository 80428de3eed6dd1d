//! Discretised `L²[0,1]`.
//!
//! Functions are either sampled at the `M` midpoint nodes `t_m = (m - ½)/M`
//! (grid representation) or stored as coefficients in the real Fourier basis
//! (coefficient representation). Integrals use the midpoint rule, which is
//! exact for products of basis functions as long as `M ≥ 2(T - 1)`.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use core::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// How the rows of a sample or the axes of a kernel are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Values at `M` midpoint nodes; quadrature weight `1/M`.
    Grid(usize),
    /// Coefficients in an orthonormal basis of `T` functions; weight `1`.
    Coefficients(usize),
}

impl Representation {
    #[inline]
    pub fn dim(self) -> usize {
        match self {
            Representation::Grid(m) | Representation::Coefficients(m) => m,
        }
    }

    /// Quadrature weight attached to a single coordinate.
    #[inline]
    pub fn weight(self) -> f64 {
        match self {
            Representation::Grid(m) => 1.0 / m as f64,
            Representation::Coefficients(_) => 1.0,
        }
    }

    /// `∫ f g` for two vectors in this representation.
    #[inline]
    pub fn inner(self, f: &[f64], g: &[f64]) -> f64 {
        self.weight() * linalg::dot(f, g)
    }
}

/// Midpoint nodes `(m - ½)/M`, `m = 1..=M`.
pub fn midpoint_nodes(m: usize) -> Vec<f64> {
    (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect()
}

/// A function sampled at the midpoint nodes of a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("values", "a grid function needs at least 2 nodes"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values })
    }

    /// Samples `f` at the `m` midpoint nodes.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(midpoint_nodes(m).into_iter().map(f).collect())
    }

    #[inline]
    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(Representation::Grid(self.grid_size()).inner(&self.values, &self.values))
    }
}

/// Midpoint-rule `∫₀¹ f g`.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if f.grid_size() != g.grid_size() {
        return Err(Error::Dimension {
            expected: f.grid_size(),
            found: g.grid_size(),
        });
    }
    Ok(Representation::Grid(f.grid_size()).inner(&f.values, &g.values))
}

/// Value of the `index`-th (0-based) real Fourier basis function of odd
/// order `order` at `x`.
///
/// Ordering: the constant, then `√2 sin(2πhx)` for `h = 1..=(T-1)/2`, then
/// `√2 cos(2πhx)` for the same frequencies.
pub fn fourier_value(index: usize, order: usize, x: f64) -> f64 {
    let half = (order - 1) / 2;
    if index == 0 {
        1.0
    } else if index <= half {
        SQRT_2 * libm::sin(2.0 * PI * index as f64 * x)
    } else {
        SQRT_2 * libm::cos(2.0 * PI * (index - half) as f64 * x)
    }
}

/// The real Fourier basis of odd order `T`, evaluated on an `M`-point
/// midpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierBasis {
    order: usize,
    eval: Matrix,
}

impl FourierBasis {
    pub fn new(order: usize, grid: usize) -> Result<Self> {
        if order == 0 || order % 2 == 0 {
            return Err(Error::InvalidOrder(order));
        }
        let needed = (2 * (order - 1)).max(2);
        if grid < needed {
            return Err(Error::Resolution { order, grid, needed });
        }
        let nodes = midpoint_nodes(grid);
        let eval = Matrix::from_fn(grid, order, |m, k| fourier_value(k, order, nodes[m]));
        Ok(Self { order, eval })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn grid_size(&self) -> usize {
        self.eval.rows()
    }

    /// `M × T` matrix of basis values `f_k(t_m)`.
    #[inline]
    pub fn eval(&self) -> &Matrix {
        &self.eval
    }

    /// Basis function `k` (1-based, as in the usual `f_1, …, f_T` labelling).
    pub fn function(&self, k: usize) -> Result<GridFunction> {
        if k == 0 || k > self.order {
            return Err(Error::IndexOutOfRange { index: k, max: self.order });
        }
        GridFunction::new(self.eval.column(k - 1))
    }

    /// `∑_k a_k f_k` on the grid.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<GridFunction> {
        GridFunction::new(self.eval.mul_vec(coeffs)?)
    }

    /// Least-squares coefficients of `samples` taken at `nodes ⊂ [0,1]`.
    pub fn project(&self, samples: &[f64], nodes: &[f64]) -> Result<Vec<f64>> {
        project(samples, nodes, self.order)
    }
}

/// Shorthand for [`FourierBasis::new`].
pub fn fourier_basis(order: usize, grid: usize) -> Result<FourierBasis> {
    FourierBasis::new(order, grid)
}

/// Least-squares fit of `samples` at `nodes` onto the order-`order` basis.
pub fn project(samples: &[f64], nodes: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 || order % 2 == 0 {
        return Err(Error::InvalidOrder(order));
    }
    if samples.len() != nodes.len() {
        return Err(Error::Dimension {
            expected: nodes.len(),
            found: samples.len(),
        });
    }
    if nodes.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::Projection("node outside [0, 1]"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if samples.len() < order {
        return Err(Error::Projection("fewer samples than basis functions"));
    }
    let design = Matrix::from_fn(nodes.len(), order, |d, k| fourier_value(k, order, nodes[d]));
    linalg::least_squares(&design, samples)
}

/// An ordered sample of `N` functions stored row-wise in one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    repr: Representation,
    len: usize,
    data: Vec<f64>,
}

impl FunctionalSample {
    pub fn new(repr: Representation, data: Vec<f64>) -> Result<Self> {
        let dim = repr.dim();
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::Dimension {
                expected: dim,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            repr,
            len: data.len() / dim,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(repr: Representation, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * repr.dim());
        for r in rows {
            let r = r.as_ref();
            if r.len() != repr.dim() {
                return Err(Error::Dimension {
                    expected: repr.dim(),
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(repr, data)
    }

    pub fn from_grid_functions(functions: &[GridFunction]) -> Result<Self> {
        let m = functions.first().ok_or(Error::EmptySegment)?.grid_size();
        let rows: Vec<&[f64]> = functions.iter().map(|f| f.values()).collect();
        Self::from_rows(Representation::Grid(m), &rows)
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
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[f64] {
        let d = self.dim();
        &self.data[n * d..(n + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim())
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows `range` as a new sample.
    pub fn slice(&self, range: Range<usize>) -> Self {
        let d = self.dim();
        Self {
            repr: self.repr,
            len: range.len(),
            data: self.data[range.start * d..range.end * d].to_vec(),
        }
    }

    /// Pointwise mean function.
    pub fn mean(&self) -> Result<Vec<f64>> {
        if self.len == 0 {
            return Err(Error::EmptySegment);
        }
        let mut mean = alloc::vec![0.0; self.dim()];
        for row in self.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.len as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(mean)
    }

    /// Subtracts `mean` from every row.
    pub fn centered_by(&self, mean: &[f64]) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: mean.len(),
            });
        }
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.repr.dim()) {
            for (x, m) in row.iter_mut().zip(mean) {
                *x -= m;
            }
        }
        Ok(out)
    }

    /// Subtracts the sample mean from every row.
    pub fn centered(&self) -> Result<Self> {
        self.centered_by(&self.mean()?)
    }

    /// Every observation multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= factor);
        out
    }

    /// Adds `offset` to every observation.
    pub fn shifted(&self, offset: &[f64]) -> Result<Self> {
        let neg: Vec<f64> = offset.iter().map(|x| -x).collect();
        self.centered_by(&neg)
    }
}

/// `N × T` Fourier coefficients, row `n` holding `(a_{n,1}, …, a_{n,T})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeries {
    sample: FunctionalSample,
}

impl CoeffSeries {
    pub fn new(order: usize, coeffs: Vec<f64>) -> Result<Self> {
        if order == 0 || order % 2 == 0 {
            return Err(Error::InvalidOrder(order));
        }
        let sample = FunctionalSample::new(Representation::Coefficients(order), coeffs)?;
        if sample.is_empty() {
            return Err(Error::EmptySegment);
        }
        Ok(Self { sample })
    }

    pub fn from_rows<R: AsRef<[f64]>>(order: usize, rows: &[R]) -> Result<Self> {
        if order == 0 || order % 2 == 0 {
            return Err(Error::InvalidOrder(order));
        }
        if rows.is_empty() {
            return Err(Error::EmptySegment);
        }
        Ok(Self {
            sample: FunctionalSample::from_rows(Representation::Coefficients(order), rows)?,
        })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.sample.dim()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.sample.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[f64] {
        self.sample.row(n)
    }

    pub(crate) fn row_mut(&mut self, n: usize) -> &mut [f64] {
        let d = self.order();
        &mut self.sample.data[n * d..(n + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.sample.rows()
    }

    /// The series as a coefficient-space sample.
    #[inline]
    pub fn as_sample(&self) -> &FunctionalSample {
        &self.sample
    }

    pub fn into_sample(self) -> FunctionalSample {
        self.sample
    }

    /// Evaluates every curve on the grid of `basis`.
    pub fn to_grid(&self, basis: &FourierBasis) -> Result<FunctionalSample> {
        if basis.order() != self.order() {
            return Err(Error::Dimension {
                expected: self.order(),
                found: basis.order(),
            });
        }
        let mut data = Vec::with_capacity(self.len() * basis.grid_size());
        for row in self.rows() {
            data.extend(basis.eval().mul_vec(row)?);
        }
        FunctionalSample::new(Representation::Grid(basis.grid_size()), data)
    }
}

impl From<CoeffSeries> for FunctionalSample {
    fn from(series: CoeffSeries) -> Self {
        series.sample
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn order_one_is_constant() {
        let b = FourierBasis::new(1, 8).unwrap();
        assert!(b.eval().as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn second_function_at_quarter() {
        // M = 16 puts no node at 0.25 exactly; evaluate directly.
        assert!((fourier_value(1, 3, 0.25) - SQRT_2).abs() < 1e-15);
        let b = FourierBasis::new(3, 16).unwrap();
        let f2 = b.function(2).unwrap();
        let nodes = midpoint_nodes(16);
        for (v, x) in f2.values().iter().zip(nodes) {
            assert!((v - SQRT_2 * libm::sin(2.0 * PI * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn ordering_sines_then_cosines() {
        let x = 0.13;
        assert!((fourier_value(2, 5, x) - SQRT_2 * libm::sin(4.0 * PI * x)).abs() < 1e-15);
        assert!((fourier_value(3, 5, x) - SQRT_2 * libm::cos(2.0 * PI * x)).abs() < 1e-15);
        assert!((fourier_value(4, 5, x) - SQRT_2 * libm::cos(4.0 * PI * x)).abs() < 1e-15);
    }

    #[test]
    fn invalid_order_and_resolution() {
        assert_eq!(FourierBasis::new(4, 100), Err(Error::InvalidOrder(4)));
        assert_eq!(FourierBasis::new(0, 100), Err(Error::InvalidOrder(0)));
        assert_eq!(
            FourierBasis::new(21, 39),
            Err(Error::Resolution { order: 21, grid: 39, needed: 40 })
        );
        assert!(FourierBasis::new(21, 40).is_ok());
    }

    #[test]
    fn inner_product_basics() {
        let one = GridFunction::from_fn(10, |_| 1.0).unwrap();
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-15);
        let other = GridFunction::from_fn(12, |_| 1.0).unwrap();
        assert!(matches!(inner_product(&one, &other), Err(Error::Dimension { .. })));

        let b = FourierBasis::new(21, 200).unwrap();
        let f2 = b.function(2).unwrap();
        let f3 = b.function(3).unwrap();
        assert!((inner_product(&f2, &f2).unwrap() - 1.0).abs() < 1e-10);
        assert!(inner_product(&f2, &f3).unwrap().abs() < 1e-10);
    }

    #[test]
    fn synthesize_unit_and_zero() {
        let b = FourierBasis::new(5, 20).unwrap();
        let one = b.synthesize(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(one.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
        let zero = b.synthesize(&[0.0; 5]).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        assert!(matches!(b.synthesize(&[1.0; 4]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn project_recovers_basis_function() {
        let nodes: Vec<f64> = (0..365).map(|d| (d as f64 + 0.5) / 365.0).collect();
        let samples: Vec<f64> = nodes.iter().map(|&x| fourier_value(2, 41, x)).collect();
        let a = project(&samples, &nodes, 41).unwrap();
        for (k, v) in a.iter().enumerate() {
            let want = if k == 2 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-8, "k={k} v={v}");
        }
    }

    #[test]
    fn project_constant_and_underdetermined() {
        let nodes = midpoint_nodes(30);
        let a = project(&vec![2.5; 30], &nodes, 5).unwrap();
        assert!((a[0] - 2.5).abs() < 1e-12);
        assert!(a[1..].iter().all(|v| v.abs() < 1e-12));

        let nodes = midpoint_nodes(4);
        assert!(matches!(project(&[1.0; 4], &nodes, 5), Err(Error::Projection(_))));
    }

    #[test]
    fn sample_helpers() {
        let s = FunctionalSample::from_rows(
            Representation::Coefficients(3),
            &[[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]],
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.mean().unwrap(), vec![2.0, 2.0, 2.0]);
        let c = s.centered().unwrap();
        assert_eq!(c.row(0), &[-1.0, 0.0, 1.0]);
        assert_eq!(s.slice(1..2).row(0), &[3.0, 2.0, 1.0]);
        assert!(FunctionalSample::new(Representation::Grid(3), vec![0.0; 4]).is_err());
    }

    #[test]
    fn coeff_series_to_grid() {
        let b = FourierBasis::new(3, 10).unwrap();
        let s = CoeffSeries::from_rows(3, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let g = s.to_grid(&b).unwrap();
        assert_eq!(g.repr(), Representation::Grid(10));
        assert_eq!(g.row(1), b.function(2).unwrap().values());
    }
}
