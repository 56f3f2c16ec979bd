//! Periodic grids on the flat torus ℂⁿ/(ℤ+iℤ)ⁿ and the fields living on
//! them. The 2n real axes are ordered (x¹, y¹, ..., xⁿ, yⁿ) with
//! z^j = x^j + i y^j; flat indices are row-major with x¹ fastest.

mod hermitian;
mod io;
mod spectral;

pub use hermitian::{eigh, largest_eigenvalue_symmetric, EigenField};
pub use io::{
    dump_mask_csv, dump_scalar_bin, dump_scalar_csv, load_scalar_bin, load_scalar_csv,
};
pub use spectral::{Norms, SpectralOps};

use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A uniform periodic grid: n complex dimensions, N points per real axis,
/// spacing 1/N, N^{2n} points in total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n: usize,
    points_per_axis: usize,
}

impl PeriodicGrid {
    /// N must be even and at least 8 so the wavenumber set is symmetric.
    pub fn new(n: usize, points_per_axis: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("grid needs complex dimension n >= 1".into()));
        }
        if points_per_axis < 8 || points_per_axis % 2 != 0 {
            return Err(Error::Domain(format!(
                "points per axis must be even and >= 8, got {points_per_axis}"
            )));
        }
        let total = (points_per_axis as u128).pow(2 * n as u32);
        if total > (1 << 28) {
            return Err(Error::Domain(format!(
                "grid with {total} points is beyond desk scale"
            )));
        }
        Ok(Self { n, points_per_axis })
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points_per_axis as f64
    }

    pub fn total_points(&self) -> usize {
        self.points_per_axis.pow(2 * self.n as u32)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow(axis as u32)
    }

    /// Integer coordinate of a flat index along one axis.
    pub fn coord(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.points_per_axis
    }

    pub fn coords(&self, flat: usize) -> Vec<usize> {
        (0..self.axes()).map(|a| self.coord(flat, a)).collect()
    }

    pub fn flat(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .enumerate()
            .map(|(a, &c)| (c % self.points_per_axis) * self.stride(a))
            .sum()
    }

    /// Physical coordinate in [0,1) along one axis.
    pub fn position(&self, flat: usize, axis: usize) -> f64 {
        self.coord(flat, axis) as f64 * self.spacing()
    }
}

/// Periodic real-valued grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self { grid, values: vec![0.0; grid.total_points()] }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.total_points()] }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&PeriodicGrid, usize) -> f64) -> Self {
        let values = (0..grid.total_points()).map(|p| f(&grid, p)).collect();
        Self { grid, values }
    }

    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.total_points()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("scalar field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn mean(&self) -> f64 {
        crate::torus_field::chunked_sum(&self.values) / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// sup |self − other|.
    pub fn sup_diff(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("scalar fields on different grids".into()));
        }
        Ok(())
    }

    /// self + s·other.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Result<ScalarField> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(ScalarField { grid: self.grid, values })
    }

    pub fn shifted(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Shift so that sup = −1 exactly: computed pointwise as (v − max) − 1,
    /// which is −1 with no rounding at the maximizer.
    pub fn normalized_sup_minus_one(&self) -> ScalarField {
        let m = self.max();
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| (v - m) - 1.0).collect(),
        }
    }

    pub fn recentered(&self) -> ScalarField {
        self.shifted(-self.mean())
    }
}

/// Grid of n×n Hermitian matrices (row-major per point).
#[derive(Debug, Clone)]
pub struct HermitianFormField {
    pub grid: PeriodicGrid,
    pub data: Vec<Complex64>,
}

impl HermitianFormField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        let n = grid.complex_dim();
        Self { grid, data: vec![Complex64::new(0.0, 0.0); grid.total_points() * n * n] }
    }

    /// s times the identity form at every point.
    pub fn identity_times(grid: PeriodicGrid, s: f64) -> Self {
        let n = grid.complex_dim();
        let mut field = Self::zeros(grid);
        for p in 0..grid.total_points() {
            for j in 0..n {
                field.data[p * n * n + j * n + j] = Complex64::new(s, 0.0);
            }
        }
        field
    }

    /// The same constant matrix at every point; must be Hermitian to 1e−12.
    pub fn from_constant_matrix(grid: PeriodicGrid, matrix: &[Complex64]) -> Result<Self> {
        let n = grid.complex_dim();
        if matrix.len() != n * n {
            return Err(Error::Data(format!(
                "constant form must be {n}x{n}, got {} entries",
                matrix.len()
            )));
        }
        for j in 0..n {
            for k in 0..n {
                let defect = (matrix[j * n + k] - matrix[k * n + j].conj()).norm();
                if defect > 1e-12 {
                    return Err(Error::Data(format!(
                        "constant form is not Hermitian: defect {defect:.3e} at ({j},{k})"
                    )));
                }
            }
        }
        let mut field = Self::zeros(grid);
        for p in 0..grid.total_points() {
            field.data[p * n * n..(p + 1) * n * n].copy_from_slice(matrix);
        }
        Ok(field)
    }

    pub fn matrix_dim(&self) -> usize {
        self.grid.complex_dim()
    }

    pub fn at(&self, point: usize) -> &[Complex64] {
        let nn = self.matrix_dim() * self.matrix_dim();
        &self.data[point * nn..(point + 1) * nn]
    }

    pub fn entry(&self, point: usize, j: usize, k: usize) -> Complex64 {
        let n = self.matrix_dim();
        self.data[point * n * n + j * n + k]
    }

    pub fn check_same_grid(&self, other: &HermitianFormField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("form fields on different grids".into()));
        }
        Ok(())
    }

    /// self + s·other.
    pub fn axpy(&self, s: f64, other: &HermitianFormField) -> Result<HermitianFormField> {
        self.check_same_grid(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(HermitianFormField { grid: self.grid, data })
    }

    /// Real trace at a point.
    pub fn trace_re(&self, point: usize) -> f64 {
        let n = self.matrix_dim();
        (0..n).map(|j| self.entry(point, j, j).re).sum()
    }

    /// Largest Hermitian defect max |χ_jk − conj(χ_kj)| over the grid.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.matrix_dim();
        let mut worst: f64 = 0.0;
        for p in 0..self.grid.total_points() {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.entry(p, j, k) - self.entry(p, k, j).conj()).norm());
                }
            }
        }
        worst
    }

    /// Pointwise Frobenius norm, maximized over the grid.
    pub fn sup_frobenius(&self) -> f64 {
        let nn = self.matrix_dim() * self.matrix_dim();
        let mut worst: f64 = 0.0;
        for p in 0..self.grid.total_points() {
            let f2: f64 = self.data[p * nn..(p + 1) * nn].iter().map(|z| z.norm_sqr()).sum();
            worst = worst.max(f2);
        }
        worst.sqrt()
    }
}

/// Grid of 2n×2n real symmetric matrices (the real Hessian ∇²u).
#[derive(Debug, Clone)]
pub struct RealHessianField {
    pub grid: PeriodicGrid,
    pub data: Vec<f64>,
}

impl RealHessianField {
    pub fn matrix_dim(&self) -> usize {
        self.grid.axes()
    }

    pub fn at(&self, point: usize) -> &[f64] {
        let dd = self.matrix_dim() * self.matrix_dim();
        &self.data[point * dd..(point + 1) * dd]
    }

    pub fn trace(&self, point: usize) -> f64 {
        let d = self.matrix_dim();
        (0..d).map(|a| self.at(point)[a * d + a]).sum()
    }

    pub fn frobenius(&self, point: usize) -> f64 {
        self.at(point).iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Deterministic sum: fixed-size chunk partials combined in order, so the
/// result does not depend on the worker count.
pub(crate) fn chunked_sum(values: &[f64]) -> f64 {
    const CHUNK: usize = 4096;
    values
        .chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        assert!(PeriodicGrid::new(1, 6).is_err());
        assert!(PeriodicGrid::new(1, 9).is_err());
        assert!(PeriodicGrid::new(0, 16).is_err());
        let g = PeriodicGrid::new(2, 8).unwrap();
        assert_eq!(g.axes(), 4);
        assert_eq!(g.total_points(), 8usize.pow(4));
        assert_eq!(g.spacing(), 0.125);
    }

    #[test]
    fn flat_round_trip() {
        let g = PeriodicGrid::new(2, 8).unwrap();
        for flat in [0, 1, 7, 8, 63, 512, 4095] {
            let c = g.coords(flat);
            assert_eq!(g.flat(&c), flat);
        }
        // x^1 is the fastest axis
        assert_eq!(g.coord(1, 0), 1);
        assert_eq!(g.coord(8, 1), 1);
    }

    #[test]
    fn field_arithmetic() {
        let g = PeriodicGrid::new(1, 8).unwrap();
        let a = ScalarField::constant(g, 2.0);
        let b = ScalarField::from_fn(g, |g, p| g.position(p, 0));
        let c = a.axpy(-1.0, &b).unwrap();
        assert!((c.mean() - (2.0 - b.mean())).abs() < 1e-14);
        let other = PeriodicGrid::new(1, 16).unwrap();
        assert!(a.axpy(1.0, &ScalarField::zeros(other)).is_err());
    }

    #[test]
    fn sup_normalization_is_exact() {
        let g = PeriodicGrid::new(1, 8).unwrap();
        let u = ScalarField::from_fn(g, |g, p| 0.3 * (2.0 * std::f64::consts::PI * g.position(p, 0)).cos());
        let v = u.normalized_sup_minus_one();
        assert_eq!(v.max(), -1.0);
    }

    #[test]
    fn hermitian_field_constructors() {
        let g = PeriodicGrid::new(2, 8).unwrap();
        let id = HermitianFormField::identity_times(g, 2.5);
        assert_eq!(id.trace_re(17), 5.0);
        assert_eq!(id.hermitian_defect(), 0.0);

        let bad = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.3),
            Complex64::new(0.5, 0.3),
            Complex64::new(2.0, 0.0),
        ];
        assert!(HermitianFormField::from_constant_matrix(g, &bad).is_err());
        let good = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.3),
            Complex64::new(0.5, -0.3),
            Complex64::new(2.0, 0.0),
        ];
        let f = HermitianFormField::from_constant_matrix(g, &good).unwrap();
        assert_eq!(f.entry(11, 0, 1), Complex64::new(0.5, 0.3));
    }
}
