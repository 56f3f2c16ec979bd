//! Spectral differentiation on the periodic grid: full-dimension FFTs,
//! the complex Hessian i∂∂̄u, the real Hessian ∇²u, gradients, and the
//! discrete norms used by the estimates.
//!
//! Derivatives act on the trigonometric interpolant with the Nyquist
//! mode dropped, so every differential identity (Hermitian symmetry,
//! trace relations, linearity) holds to rounding error.

use super::{HermitianFormField, PeriodicGrid, RealHessianField, ScalarField};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// FFT plans and wavenumbers for one grid.
pub struct SpectralOps {
    grid: PeriodicGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Integer wavenumber per axis index, with the Nyquist mode zeroed.
    wavenumbers: Vec<f64>,
}

impl SpectralOps {
    pub fn new(grid: PeriodicGrid) -> Self {
        let n_axis = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_axis);
        let inverse = planner.plan_fft_inverse(n_axis);
        let wavenumbers = (0..n_axis)
            .map(|i| {
                if i < n_axis / 2 {
                    i as f64
                } else if i == n_axis / 2 {
                    0.0
                } else {
                    i as f64 - n_axis as f64
                }
            })
            .collect();
        Self { grid, forward, inverse, wavenumbers }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    fn check_grid(&self, field: &ScalarField) -> Result<()> {
        if field.grid != self.grid {
            return Err(Error::GridMismatch("field grid does not match spectral plan".into()));
        }
        Ok(())
    }

    /// In-place FFT along every axis. Forward normalizes by the total
    /// point count, so forward output holds Fourier coefficients.
    fn transform(&self, data: &mut [Complex64], forward: bool) {
        let n_axis = self.grid.points_per_axis();
        let total = self.grid.total_points();
        let fft = if forward { &self.forward } else { &self.inverse };
        for axis in 0..self.grid.axes() {
            let stride = self.grid.stride(axis);
            if stride == 1 {
                // contiguous lines: rustfft processes consecutive chunks
                data.par_chunks_mut(n_axis.max(1) * 1024.min(total / n_axis).max(1))
                    .for_each(|chunk| {
                        let mut scratch =
                            vec![Complex64::default(); fft.get_inplace_scratch_len()];
                        for line in chunk.chunks_exact_mut(n_axis) {
                            fft.process_with_scratch(line, &mut scratch);
                        }
                    });
            } else {
                let lines = total / n_axis;
                // gather strided lines into scratch buffers per worker
                let line_starts: Vec<usize> = (0..lines)
                    .map(|l| {
                        let block = l / stride;
                        let offset = l % stride;
                        block * stride * n_axis + offset
                    })
                    .collect();
                let data_ptr = SendPtr(data.as_mut_ptr());
                line_starts.par_iter().for_each(|&start| {
                    let data = data_ptr;
                    let mut buf = vec![Complex64::default(); n_axis];
                    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                    unsafe {
                        for (i, slot) in buf.iter_mut().enumerate() {
                            *slot = *data.0.add(start + i * stride);
                        }
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    unsafe {
                        for (i, v) in buf.iter().enumerate() {
                            *data.0.add(start + i * stride) = *v;
                        }
                    }
                });
            }
        }
        if forward {
            let scale = 1.0 / total as f64;
            data.iter_mut().for_each(|z| *z *= scale);
        }
    }

    /// Fourier coefficients of a real field.
    pub fn coefficients(&self, u: &ScalarField) -> Result<Vec<Complex64>> {
        self.check_grid(u)?;
        let mut data: Vec<Complex64> =
            u.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, true);
        Ok(data)
    }

    /// Synthesis: inverse transform, real part.
    fn synthesize(&self, mut coeffs: Vec<Complex64>) -> ScalarField {
        self.transform(&mut coeffs, false);
        ScalarField {
            grid: self.grid,
            values: coeffs.iter().map(|z| z.re).collect(),
        }
    }

    fn wavenumber(&self, flat: usize, axis: usize) -> f64 {
        self.wavenumbers[self.grid.coord(flat, axis)]
    }

    /// The complex Hessian field χ_{jk̄} = ∂²u/∂z^j∂z̄^k, computed by
    /// forward transform, wavenumber multiplication, inverse transform.
    /// Each entry has zero mean and the output is Hermitian at every
    /// point (the diagonal is realified; its imaginary part is rounding
    /// noise by construction).
    pub fn ddbar(&self, u: &ScalarField) -> Result<HermitianFormField> {
        self.check_grid(u)?;
        let hat = self.coefficients(u)?;
        let n = self.grid.complex_dim();
        let total = self.grid.total_points();
        let mut out = HermitianFormField::zeros(self.grid);
        for j in 0..n {
            for k in j..n {
                let mut entry = vec![Complex64::default(); total];
                for (p, e) in entry.iter_mut().enumerate() {
                    let kxj = self.wavenumber(p, 2 * j);
                    let kyj = self.wavenumber(p, 2 * j + 1);
                    let kxk = self.wavenumber(p, 2 * k);
                    let kyk = self.wavenumber(p, 2 * k + 1);
                    let mult = Complex64::new(kxj * kxk + kyj * kyk, kxj * kyk - kyj * kxk)
                        * (-PI * PI);
                    *e = mult * hat[p];
                }
                self.transform(&mut entry, false);
                for p in 0..total {
                    let v = if j == k {
                        Complex64::new(entry[p].re, 0.0)
                    } else {
                        entry[p]
                    };
                    out.data[p * n * n + j * n + k] = v;
                    out.data[p * n * n + k * n + j] = v.conj();
                }
            }
        }
        Ok(out)
    }

    /// Δ_ℂ u = Σ_j ∂²u/∂z^j∂z̄^j = ¼ Δ_{2n} u.
    pub fn complex_laplacian(&self, u: &ScalarField) -> Result<ScalarField> {
        let mut hat = self.coefficients(u)?;
        for (p, z) in hat.iter_mut().enumerate() {
            *z *= self.laplacian_symbol(p);
        }
        Ok(self.synthesize(hat))
    }

    /// Symbol of Δ_ℂ at a flat spectral index: −π² Σ_a k_a².
    pub fn laplacian_symbol(&self, flat: usize) -> f64 {
        let mut s = 0.0;
        for a in 0..self.grid.axes() {
            let k = self.wavenumber(flat, a);
            s += k * k;
        }
        -PI * PI * s
    }

    /// Solve (c·Δ_ℂ + shift) x = rhs spectrally. With shift = 0 the mean
    /// mode is passed through unchanged (Δ_ℂ is singular on constants).
    pub fn invert_shifted_laplacian(
        &self,
        rhs: &ScalarField,
        c: f64,
        shift: f64,
    ) -> Result<ScalarField> {
        let mut hat = self.coefficients(rhs)?;
        for (p, z) in hat.iter_mut().enumerate() {
            let denom = c * self.laplacian_symbol(p) + shift;
            if denom != 0.0 {
                *z /= denom;
            }
        }
        Ok(self.synthesize(hat))
    }

    /// All 2n first derivatives ∂u/∂x^a.
    pub fn gradient(&self, u: &ScalarField) -> Result<Vec<ScalarField>> {
        let hat = self.coefficients(u)?;
        let mut out = Vec::with_capacity(self.grid.axes());
        for a in 0..self.grid.axes() {
            let mut d = hat.clone();
            for (p, z) in d.iter_mut().enumerate() {
                *z *= Complex64::new(0.0, 2.0 * PI * self.wavenumber(p, a));
            }
            out.push(self.synthesize(d));
        }
        Ok(out)
    }

    /// The full real Hessian ∇²u (2n×2n symmetric per point, plain
    /// second partials on the flat torus).
    pub fn real_hessian(&self, u: &ScalarField) -> Result<RealHessianField> {
        let hat = self.coefficients(u)?;
        let d = self.grid.axes();
        let total = self.grid.total_points();
        let mut data = vec![0.0; total * d * d];
        for a in 0..d {
            for b in a..d {
                let mut entry = hat.clone();
                for (p, z) in entry.iter_mut().enumerate() {
                    let mult =
                        -4.0 * PI * PI * self.wavenumber(p, a) * self.wavenumber(p, b);
                    *z *= mult;
                }
                self.transform(&mut entry, false);
                for p in 0..total {
                    data[p * d * d + a * d + b] = entry[p].re;
                    data[p * d * d + b * d + a] = entry[p].re;
                }
            }
        }
        Ok(RealHessianField { grid: self.grid, data })
    }

    /// Discrete norms of a field and the largest real-Hessian eigenvalue.
    pub fn norms(&self, u: &ScalarField) -> Result<Norms> {
        let sup_abs = u.sup_abs();
        let grads = self.gradient(u)?;
        let total = self.grid.total_points();
        let mut sup_grad2: f64 = 0.0;
        for p in 0..total {
            let g2: f64 = grads.iter().map(|g| g.values[p] * g.values[p]).sum();
            sup_grad2 = sup_grad2.max(g2);
        }
        let dd = self.ddbar(u)?;
        let sup_ddbar = dd.sup_frobenius();
        let hess = self.real_hessian(u)?;
        let mut sup_hess: f64 = 0.0;
        let mut lambda1_max = f64::NEG_INFINITY;
        for p in 0..total {
            sup_hess = sup_hess.max(hess.frobenius(p));
            lambda1_max = lambda1_max.max(super::largest_eigenvalue_symmetric(
                hess.at(p),
                self.grid.axes(),
            ));
        }
        Ok(Norms { sup_abs, sup_grad: sup_grad2.sqrt(), sup_ddbar, sup_hess, lambda1_max })
    }
}

/// sup-norms of u and its derivatives; `lambda1_max` is sup_X λ₁(∇²u).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Norms {
    pub sup_abs: f64,
    /// sup of the Euclidean norm of the real gradient.
    pub sup_grad: f64,
    /// sup of the pointwise Frobenius norm of i∂∂̄u.
    pub sup_ddbar: f64,
    /// sup of the pointwise Frobenius norm of ∇²u.
    pub sup_hess: f64,
    /// sup of the largest eigenvalue of ∇²u.
    pub lambda1_max: f64,
}

struct SendPtr(*mut Complex64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}
impl Clone for SendPtr {
    fn clone(&self) -> Self {
        SendPtr(self.0)
    }
}
impl Copy for SendPtr {}
