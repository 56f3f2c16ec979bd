//! Independent reference implementations used to check the fast paths:
//! subset-sum symmetric functions, finite-difference gradients, the
//! exact spectral solve of the linear σ₁ equation, and a projected-SOR
//! complementarity solver for the m = 1 envelope.
//!
//! Everything here deliberately avoids the code paths it is checking.

use crate::eigen_ops::EigenOperator;
use crate::torus_field::{HermitianFormField, ScalarField, SpectralOps};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tunables for the oracle solvers.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Projected-SOR relaxation factor, in (0, 2).
    pub psor_relaxation: f64,
    /// Complementarity residual tolerance.
    pub psor_tol: f64,
    pub psor_max_sweeps: usize,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            psor_relaxation: 1.8,
            psor_tol: 1e-10,
            psor_max_sweeps: 100_000,
            fd_step: 1e-5,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.psor_relaxation > 0.0 && self.psor_relaxation < 2.0) {
            return Err(Error::Domain("psor relaxation must lie in (0,2)".into()));
        }
        if self.psor_tol <= 0.0 || self.fd_step <= 0.0 {
            return Err(Error::Domain("oracle tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// σ_m by explicit enumeration of all m-subsets. Exponential; refuses
/// n > 20.
pub fn sigma_bruteforce(lambda: &[f64], m: usize) -> Result<f64> {
    let n = lambda.len();
    if n > 20 {
        return Err(Error::Domain(format!("brute-force sigma refuses n = {n} > 20")));
    }
    if m < 1 || m > n {
        return Err(Error::Domain(format!("sigma_bruteforce: m = {m} out of range")));
    }
    let mut total = 0.0;
    for bits in 0u32..(1 << n) {
        if bits.count_ones() as usize != m {
            continue;
        }
        let mut prod = 1.0;
        for (i, &x) in lambda.iter().enumerate() {
            if bits & (1 << i) != 0 {
                prod *= x;
            }
        }
        total += prod;
    }
    Ok(total)
}

/// Max relative error between the analytic gradient and central finite
/// differences. Refuses points whose cone margin is below 10 fd steps.
pub fn fd_check(op: &EigenOperator, lambda: &[f64]) -> Result<f64> {
    fd_check_with(op, lambda, OracleConfig::default().fd_step)
}

pub fn fd_check_with(op: &EigenOperator, lambda: &[f64], fd_step: f64) -> Result<f64> {
    let (_, margin, _) = op.cone().membership(lambda);
    let scale = 1.0 + lambda.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let step = fd_step * scale;
    if margin <= 10.0 * step {
        return Err(Error::Domain(format!(
            "fd_check: cone margin {margin:.3e} too small for step {step:.3e}"
        )));
    }
    let grad = op.grad(lambda)?;
    let mut worst = 0.0_f64;
    for i in 0..lambda.len() {
        let mut plus = lambda.to_vec();
        plus[i] += step;
        let mut minus = lambda.to_vec();
        minus[i] -= step;
        let fd = (op.eval(&plus)? - op.eval(&minus)?) / (2.0 * step);
        worst = worst.max((grad[i] - fd).abs() / (1.0 + fd.abs()));
    }
    Ok(worst)
}

/// Exact spectral solution of the linear σ₁ equation
/// trace θ + Δ_ℂ u = s·e^h, with the compatibility constant s fixed by
/// the mean. Returns the mean-zero u and log s, which together solve
/// log σ₁(θ + i∂∂̄u) = h + log s.
pub fn linear_solve_sigma1(
    theta: &HermitianFormField,
    h: &ScalarField,
) -> Result<(ScalarField, f64)> {
    if theta.grid != h.grid {
        return Err(Error::GridMismatch("theta and h on different grids".into()));
    }
    let grid = h.grid;
    let ops = SpectralOps::new(grid);
    let trace = ScalarField::from_fn(grid, |_, p| theta.trace_re(p));
    let eh = ScalarField {
        grid,
        values: h.values.iter().map(|v| v.exp()).collect(),
    };
    let s = trace.mean() / eh.mean();
    // Delta_C u = s e^h - trace theta, zero mean by construction of s
    let rhs = ScalarField {
        grid,
        values: eh
            .values
            .iter()
            .zip(&trace.values)
            .map(|(e, t)| s * e - t)
            .collect(),
    };
    let u = ops.invert_shifted_laplacian(&rhs, 1.0, 0.0)?;
    Ok((u.recentered(), s.ln()))
}

/// Projected-SOR solve of the m = 1 envelope complementarity system
///
///   u ≤ h,   trace θ + Δ_ℂ u ≥ 0,   (trace θ + Δ_ℂ u)·(h − u) = 0,
///
/// with the 5-point-per-complex-variable finite-difference Laplacian.
/// Returns the solution and the binding set {u = h}.
pub fn psor_obstacle(
    theta: &HermitianFormField,
    h: &ScalarField,
    cfg: &OracleConfig,
) -> Result<(ScalarField, Vec<bool>)> {
    cfg.validate()?;
    if theta.grid != h.grid {
        return Err(Error::GridMismatch("theta and h on different grids".into()));
    }
    let grid = h.grid;
    let total = grid.total_points();
    let axes = grid.axes();
    let dx2 = grid.spacing() * grid.spacing();
    let trace: Vec<f64> = (0..total).map(|p| theta.trace_re(p)).collect();

    // neighbor table: 2 per axis
    let mut neighbors = vec![0usize; total * 2 * axes];
    for p in 0..total {
        for a in 0..axes {
            let n_axis = grid.points_per_axis();
            let c = grid.coord(p, a);
            let stride = grid.stride(a);
            let up = if c + 1 == n_axis { p + stride - n_axis * stride } else { p + stride };
            let down = if c == 0 { p + (n_axis - 1) * stride } else { p - stride };
            neighbors[p * 2 * axes + 2 * a] = up;
            neighbors[p * 2 * axes + 2 * a + 1] = down;
        }
    }

    let diag = 2.0 * axes as f64 / (4.0 * dx2);
    let mut u = h.values.clone(); // start on the obstacle
    let omega = cfg.psor_relaxation;
    let mut sweeps = 0;
    loop {
        // lexicographic Gauss-Seidel sweep with projection onto u <= h
        for p in 0..total {
            let mut nb_sum = 0.0;
            for s in 0..2 * axes {
                nb_sum += u[neighbors[p * 2 * axes + s]];
            }
            // trace + (nb_sum - 2*axes*u_p)/(4 dx^2) = 0
            let gs = (trace[p] + nb_sum / (4.0 * dx2)) / diag;
            let relaxed = (1.0 - omega) * u[p] + omega * gs;
            u[p] = relaxed.min(h.values[p]);
        }
        sweeps += 1;
        // complementarity residual: sup |min(trace + lap u, h - u)|
        let mut res = 0.0_f64;
        for p in 0..total {
            let mut nb_sum = 0.0;
            for s in 0..2 * axes {
                nb_sum += u[neighbors[p * 2 * axes + s]];
            }
            let lap = (nb_sum - 2.0 * axes as f64 * u[p]) / (4.0 * dx2);
            let operator = trace[p] + lap;
            let slack = h.values[p] - u[p];
            res = res.max(operator.min(slack).abs());
        }
        if res <= cfg.psor_tol {
            break;
        }
        if sweeps >= cfg.psor_max_sweeps {
            return Err(Error::Domain(format!(
                "projected SOR did not reach tol {:.1e} in {sweeps} sweeps (residual {res:.3e})",
                cfg.psor_tol
            )));
        }
    }
    let binding: Vec<bool> = (0..total)
        .map(|p| h.values[p] - u[p] <= cfg.psor_tol.sqrt())
        .collect();
    Ok((ScalarField { grid, values: u }, binding))
}

/// Real roots (descending) of the characteristic polynomial of a 3×3
/// Hermitian matrix, via the trigonometric form of the cubic. Used as an
/// oracle for the Jacobi eigensolver.
pub fn hermitian3_charpoly_roots(m: &[Complex64]) -> [f64; 3] {
    assert_eq!(m.len(), 9);
    let tr: f64 = m[0].re + m[4].re + m[8].re;
    // sum of principal 2x2 minors
    let minor = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        (m[a] * m[d] - m[b] * m[c]).re
    };
    let s2 = minor(0, 1, 3, 4) + minor(0, 2, 6, 8) + minor(4, 5, 7, 8);
    let det = (m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
        + m[2] * (m[3] * m[7] - m[4] * m[6]))
        .re;
    // x^3 - tr x^2 + s2 x - det = 0; shift x = y + tr/3
    let p = s2 - tr * tr / 3.0;
    let q = -2.0 * tr * tr * tr / 27.0 + tr * s2 / 3.0 - det;
    let shift = tr / 3.0;
    if p.abs() < 1e-14 {
        let y = -(q.cbrt());
        let mut roots = [y + shift, y + shift, y + shift];
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        return roots;
    }
    let r = (-p / 3.0).sqrt();
    let arg = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let mut roots = [0.0; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        *root = 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift;
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    roots
}
