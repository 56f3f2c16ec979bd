//! Damped Newton–Krylov solution of f(λ(θ + i∂∂̄u)) = h + b with the
//! additive constant b as a bordered unknown, and the degenerate
//! eigenvalue pair (u, c) obtained by continuation in the regularized
//! right-hand side h + ε.

mod gmres;

pub use gmres::{gmres, GmresResult};

use crate::eigen_ops::EigenOperator;
use crate::torus_field::{EigenField, HermitianFormField, ScalarField, SpectralOps};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Solver tunables. Every tolerance is positive; the damping factor
/// lies in (0,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_newton_iters: usize,
    /// Convergence threshold for the discrete sup-norm residual.
    pub residual_tol: f64,
    /// Accepted iterates must keep at least this cone margin pointwise.
    pub cone_margin: f64,
    /// Backtracking factor for damping.
    pub damping: f64,
    /// Relative tolerance of the inner Krylov solves.
    pub krylov_tol: f64,
    pub krylov_restart: usize,
    pub krylov_max_iters: usize,
    pub max_backtracks: usize,
    /// ε schedule for degenerate (eigenpair) runs.
    pub eps_reg_schedule: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_newton_iters: 50,
            residual_tol: 1e-10,
            cone_margin: 1e-8,
            damping: 0.5,
            krylov_tol: 1e-3,
            krylov_restart: 60,
            krylov_max_iters: 400,
            max_backtracks: 40,
            eps_reg_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.residual_tol <= 0.0 || self.cone_margin <= 0.0 || self.krylov_tol <= 0.0 {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::Config("damping factor must lie in (0,1)".into()));
        }
        if self.eps_reg_schedule.iter().any(|&e| e <= 0.0) {
            return Err(Error::Config("eps schedule entries must be positive".into()));
        }
        Ok(())
    }
}

/// Convergence record of one Newton solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    /// The additive constant: b for the non-degenerate equation, log c
    /// for an eigenpair rung.
    pub constant: f64,
    /// Sup-norm residual before each Newton step plus the final value.
    pub residual_history: Vec<f64>,
    /// Minimum pointwise cone margin of each accepted iterate.
    pub cone_margin_history: Vec<f64>,
    pub krylov_iterations: usize,
    pub wall_time_s: f64,
}

/// Eigenpair continuation record: the c value per rung and the rung
/// solve reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenpairReport {
    pub c: f64,
    pub c_sequence: Vec<f64>,
    pub eps_schedule: Vec<f64>,
    pub rungs: Vec<SolveReport>,
    pub wall_time_s: f64,
}

/// Pointwise data of the current iterate: eigenvalues, frames, margins.
pub(crate) struct IterateData {
    pub eig: EigenField,
    /// Minimum cone margin over the grid and its witness point.
    pub margin: f64,
    pub witness: usize,
}

pub(crate) fn analyze_iterate(op: &EigenOperator, chi: &HermitianFormField) -> Result<IterateData> {
    let eig = EigenField::decompose(chi)?;
    let cone = op.cone();
    let total = chi.grid.total_points();
    let mut margin = f64::INFINITY;
    let mut witness = 0;
    for p in 0..total {
        let m = cone.margin(eig.values_at(p));
        if m < margin {
            margin = m;
            witness = p;
        }
    }
    Ok(IterateData { eig, margin, witness })
}

/// f(λ(χ)) evaluated pointwise; caller guarantees the margins are positive.
pub(crate) fn eval_field(op: &EigenOperator, data: &IterateData, grid_total: usize) -> Vec<f64> {
    (0..grid_total)
        .map(|p| op.eval_unchecked(data.eig.values_at(p)))
        .collect()
}

/// The eigenframe-weighted derivative matrices W(x) = V diag(f_i) V* used
/// by the linearization, plus the average diagonal weight for the
/// Laplacian preconditioner.
pub(crate) struct Linearization {
    pub w: Vec<Complex64>,
    pub n: usize,
    pub avg_weight: f64,
}

pub(crate) fn assemble_linearization(
    op: &EigenOperator,
    data: &IterateData,
    total: usize,
) -> Linearization {
    let n = op.n;
    let mut w = vec![Complex64::new(0.0, 0.0); total * n * n];
    let mut trace_sum = 0.0;
    for p in 0..total {
        let grad = op.grad_unchecked(data.eig.values_at(p));
        let v = data.eig.vectors_at(p);
        for j in 0..n {
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, &gi) in grad.iter().enumerate() {
                    acc += v[j * n + i] * gi * v[k * n + i].conj();
                }
                w[p * n * n + j * n + k] = acc;
            }
        }
        trace_sum += grad.iter().sum::<f64>();
    }
    Linearization { w, n, avg_weight: trace_sum / (total as f64 * n as f64) }
}

/// Re Σ_{jk} W_{jk} D_{kj} at one point (both matrices Hermitian).
pub(crate) fn contract(w: &[Complex64], d: &[Complex64], n: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += w[j * n + k] * d[k * n + j];
        }
    }
    acc.re
}

/// Apply the linearization of u ↦ f(λ(χ + i∂∂̄u)) at χ to a direction:
/// pointwise F^{jk̄}(χ)·(i∂∂̄ δu)_{jk̄}, assembled in the eigenframe and
/// rotated back.
pub fn apply_linearization(
    op: &EigenOperator,
    chi: &HermitianFormField,
    delta_u: &ScalarField,
) -> Result<ScalarField> {
    if chi.grid != delta_u.grid {
        return Err(Error::GridMismatch("chi and delta_u on different grids".into()));
    }
    let data = analyze_iterate(op, chi)?;
    if data.margin <= 0.0 {
        let detail = op.cone().membership(data.eig.values_at(data.witness)).2;
        return Err(Error::ConeViolation { witness: Some(data.witness), detail });
    }
    let spectral = SpectralOps::new(chi.grid);
    let total = chi.grid.total_points();
    let lin = assemble_linearization(op, &data, total);
    let dd = spectral.ddbar(delta_u)?;
    let n = lin.n;
    let values = (0..total)
        .map(|p| contract(&lin.w[p * n * n..(p + 1) * n * n], dd.at(p), n))
        .collect();
    Ok(ScalarField { grid: chi.grid, values })
}

/// Solve f(λ(θ + i∂∂̄u)) = h + b for (u, b), with u normalized to
/// sup u = −1 on return. θ must be strictly inside the cone pointwise so
/// u = 0 is an admissible initial iterate.
pub fn solve_nondegenerate(
    op: &EigenOperator,
    theta: &HermitianFormField,
    h: &ScalarField,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    solve_nondegenerate_warm(op, theta, h, cfg, None)
}

pub fn solve_nondegenerate_warm(
    op: &EigenOperator,
    theta: &HermitianFormField,
    h: &ScalarField,
    cfg: &SolverConfig,
    warm: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    cfg.validate()?;
    if theta.grid != h.grid {
        return Err(Error::GridMismatch("theta and h on different grids".into()));
    }
    if theta.matrix_dim() != op.n {
        return Err(Error::GridMismatch(format!(
            "operator has n = {}, field carries {}x{} matrices",
            op.n,
            theta.matrix_dim(),
            theta.matrix_dim()
        )));
    }
    let start = Instant::now();
    let grid = h.grid;
    let total = grid.total_points();
    let spectral = SpectralOps::new(grid);

    let mut u = match warm {
        Some(w) => {
            w.check_same_grid(h)?;
            w.recentered()
        }
        None => ScalarField::zeros(grid),
    };
    let chi0 = theta.axpy(1.0, &spectral.ddbar(&u)?)?;
    let data0 = analyze_iterate(op, &chi0)?;
    if data0.margin < cfg.cone_margin {
        let detail = op.cone().membership(data0.eig.values_at(data0.witness)).2;
        return Err(Error::ConeViolation { witness: Some(data0.witness), detail });
    }
    let f0 = eval_field(op, &data0, total);
    let mut b = {
        let diff: Vec<f64> = f0.iter().zip(&h.values).map(|(f, hv)| f - hv).collect();
        crate::torus_field::chunked_sum(&diff) / total as f64
    };

    let mut report = SolveReport {
        iterations: 0,
        final_residual: f64::INFINITY,
        constant: b,
        residual_history: Vec::new(),
        cone_margin_history: Vec::new(),
        krylov_iterations: 0,
        wall_time_s: 0.0,
    };

    let mut data = data0;
    let mut fvals = f0;
    loop {
        let residual: Vec<f64> = fvals
            .iter()
            .zip(&h.values)
            .map(|(f, hv)| f - hv - b)
            .collect();
        let res_sup = residual.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        report.residual_history.push(res_sup);
        report.cone_margin_history.push(data.margin);
        report.final_residual = res_sup;

        if res_sup <= cfg.residual_tol {
            report.constant = b;
            report.wall_time_s = start.elapsed().as_secs_f64();
            let out = u.normalized_sup_minus_one();
            return Ok((out, report));
        }
        if report.iterations >= cfg.max_newton_iters {
            report.wall_time_s = start.elapsed().as_secs_f64();
            return Err(Error::NonConvergence { report: Box::new(report) });
        }
        report.iterations += 1;

        let lin = assemble_linearization(op, &data, total);
        // bordered system: [L, -1; mean, 0] (du, db) = (-G, 0)
        let apply = |v: &[f64]| -> Vec<f64> {
            let field = ScalarField { grid, values: v[..total].to_vec() };
            let beta = v[total];
            let dd = spectral.ddbar(&field).expect("grid matches by construction");
            let mut out = Vec::with_capacity(total + 1);
            for p in 0..total {
                out.push(contract(&lin.w[p * lin.n * lin.n..(p + 1) * lin.n * lin.n], dd.at(p), lin.n) - beta);
            }
            out.push(crate::torus_field::chunked_sum(&v[..total]) / total as f64);
            out
        };
        let c_avg = lin.avg_weight;
        let precond = |v: &[f64]| -> Vec<f64> {
            let field = ScalarField { grid, values: v[..total].to_vec() };
            let inv = spectral
                .invert_shifted_laplacian(&field, c_avg, 0.0)
                .expect("grid matches by construction");
            let mut out = inv.values;
            out.push(v[total]);
            out
        };
        let mut rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        rhs.push(0.0);
        let sol = gmres(
            &apply,
            &precond,
            &rhs,
            cfg.krylov_tol,
            cfg.krylov_restart,
            cfg.krylov_max_iters,
        );
        report.krylov_iterations += sol.iterations;
        let delta_u = ScalarField { grid, values: sol.solution[..total].to_vec() };
        let delta_b = sol.solution[total];

        // backtracking: cone margin must hold and the residual must drop
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut last_witness = data.witness;
        for _ in 0..cfg.max_backtracks {
            let u_try = u.axpy(alpha, &delta_u)?.recentered();
            let b_try = b + alpha * delta_b;
            let chi_try = theta.axpy(1.0, &spectral.ddbar(&u_try)?)?;
            let data_try = analyze_iterate(op, &chi_try)?;
            if data_try.margin >= cfg.cone_margin {
                let f_try = eval_field(op, &data_try, total);
                let res_try = f_try
                    .iter()
                    .zip(&h.values)
                    .map(|(f, hv)| (f - hv - b_try).abs())
                    .fold(0.0_f64, f64::max);
                if res_try < res_sup {
                    u = u_try;
                    b = b_try;
                    data = data_try;
                    fvals = f_try;
                    accepted = true;
                    break;
                }
            } else {
                last_witness = data_try.witness;
            }
            alpha *= cfg.damping;
        }
        if !accepted {
            report.wall_time_s = start.elapsed().as_secs_f64();
            return Err(Error::Divergence {
                witness: last_witness,
                detail: format!(
                    "damping exhausted at residual {res_sup:.3e} (alpha down to {alpha:.3e})"
                ),
                report: Box::new(report),
            });
        }
    }
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, m: usize) -> f64 {
    let m = m.min(n - m);
    let mut c = 1.0;
    for i in 0..m {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Degenerate eigenvalue pair for the complex Hessian: solve
/// σ_m(λ(θ + i∂∂̄u)) = c·C(n,m)·(h + ε) along the ε schedule with warm
/// starts, driving ε → 0. h must be non-negative with positive mean; the
/// log-σ_m form is used internally with log c as the additive constant.
pub fn solve_eigenpair(
    op: &EigenOperator,
    theta: &HermitianFormField,
    h: &ScalarField,
    cfg: &SolverConfig,
) -> Result<(ScalarField, f64, EigenpairReport)> {
    use crate::eigen_ops::OperatorKind;
    match op.kind {
        OperatorKind::HessianLogSigmaM | OperatorKind::HessianRootSigmaM => {}
        _ => {
            return Err(Error::Domain(
                "eigenpair solve is defined for the complex Hessian operators".into(),
            ))
        }
    }
    if h.values.iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("eigenpair right-hand side must be non-negative".into()));
    }
    if h.mean() <= 0.0 {
        return Err(Error::Domain(
            "eigenpair right-hand side must have positive integral".into(),
        ));
    }
    cfg.validate()?;
    let start = Instant::now();
    let log_op = EigenOperator::hessian_log(op.n, op.m)?;
    let cnm = binomial(op.n, op.m);
    let grid = h.grid;

    let mut warm: Option<ScalarField> = None;
    let mut rungs = Vec::new();
    let mut c_sequence = Vec::new();
    let mut last: Option<(ScalarField, f64)> = None;
    for &eps in &cfg.eps_reg_schedule {
        let rhs = ScalarField {
            grid,
            values: h.values.iter().map(|&v| (cnm * (v + eps)).ln()).collect(),
        };
        let (u, rep) = solve_nondegenerate_warm(&log_op, theta, &rhs, cfg, warm.as_ref())?;
        let c = rep.constant.exp();
        c_sequence.push(c);
        rungs.push(rep);
        warm = Some(u.clone());
        last = Some((u, c));
    }
    let (u, c) = last.ok_or_else(|| Error::Config("empty eps schedule".into()))?;
    let report = EigenpairReport {
        c,
        c_sequence,
        eps_schedule: cfg.eps_reg_schedule.clone(),
        rungs,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((u, c, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_field::PeriodicGrid;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn linearization_at_identity_is_laplacian() {
        let grid = PeriodicGrid::new(1, 16).unwrap();
        let ops = SpectralOps::new(grid);
        let op = EigenOperator::monge_ampere(1).unwrap();
        let chi = HermitianFormField::identity_times(grid, 1.0);
        let du = ScalarField::from_fn(grid, |g, p| {
            0.3 * (TAU * g.position(p, 0)).cos() + (TAU * g.position(p, 1)).sin()
        });
        let lin = apply_linearization(&op, &chi, &du).unwrap();
        let lap = ops.complex_laplacian(&du).unwrap();
        assert!(lin.sup_diff(&lap).unwrap() < 1e-11);
    }

    #[test]
    fn linearization_of_sigma1_scales_by_inverse_trace() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let ops = SpectralOps::new(grid);
        let op = EigenOperator::hessian_log(2, 1).unwrap();
        let base = ScalarField::from_fn(grid, |g, p| {
            0.1 * (TAU * g.position(p, 0)).cos() * (TAU * g.position(p, 3)).cos()
        });
        let chi = HermitianFormField::identity_times(grid, 1.5)
            .axpy(1.0, &ops.ddbar(&base).unwrap())
            .unwrap();
        let du = ScalarField::from_fn(grid, |g, p| 0.2 * (TAU * g.position(p, 2)).sin());
        let lin = apply_linearization(&op, &chi, &du).unwrap();
        let lap = ops.complex_laplacian(&du).unwrap();
        for p in (0..grid.total_points()).step_by(53) {
            let sigma1 = chi.trace_re(p);
            assert!((lin.values[p] - lap.values[p] / sigma1).abs() < 1e-10);
        }
    }

    #[test]
    fn linearization_matches_directional_difference() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let ops = SpectralOps::new(grid);
        let op = EigenOperator::hessian_log(2, 2).unwrap();
        let base = ScalarField::from_fn(grid, |g, p| {
            0.08 * (TAU * g.position(p, 0)).cos() + 0.05 * (TAU * g.position(p, 3)).sin()
        });
        let chi = HermitianFormField::identity_times(grid, 1.0)
            .axpy(1.0, &ops.ddbar(&base).unwrap())
            .unwrap();
        let du = ScalarField::from_fn(grid, |g, p| {
            0.5 * (TAU * g.position(p, 1)).cos() * (TAU * g.position(p, 2)).sin()
        });
        let lin = apply_linearization(&op, &chi, &du).unwrap();
        let s = 1e-6;
        let dd = ops.ddbar(&du).unwrap();
        let chi_p = chi.axpy(s, &dd).unwrap();
        let chi_m = chi.axpy(-s, &dd).unwrap();
        let ep = EigenField::decompose(&chi_p).unwrap();
        let em = EigenField::decompose(&chi_m).unwrap();
        for p in (0..grid.total_points()).step_by(97) {
            let fd =
                (op.eval_unchecked(ep.values_at(p)) - op.eval_unchecked(em.values_at(p))) / (2.0 * s);
            assert!(
                (lin.values[p] - fd).abs() < 1e-6 * (1.0 + fd.abs()),
                "at {p}: lin {} vs fd {fd}",
                lin.values[p]
            );
        }
    }

    #[test]
    fn linearization_rejects_cone_violation() {
        let grid = PeriodicGrid::new(1, 8).unwrap();
        let op = EigenOperator::monge_ampere(1).unwrap();
        let chi = HermitianFormField::identity_times(grid, -1.0);
        let du = ScalarField::zeros(grid);
        match apply_linearization(&op, &chi, &du) {
            Err(Error::ConeViolation { witness: Some(_), .. }) => {}
            other => panic!("expected cone violation, got {other:?}"),
        }
    }

    #[test]
    fn constant_solution_monge_ampere() {
        let grid = PeriodicGrid::new(1, 16).unwrap();
        let op = EigenOperator::monge_ampere(1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let h = ScalarField::zeros(grid);
        let (u, rep) = solve_nondegenerate(&op, &theta, &h, &SolverConfig::default()).unwrap();
        assert!(u.sup_diff(&ScalarField::constant(grid, -1.0)).unwrap() < 1e-12);
        assert!(rep.constant.abs() < 1e-12);
        assert!(rep.final_residual <= 1e-10);
    }

    #[test]
    fn manufactured_solution_1d_monge_ampere() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let op = EigenOperator::monge_ampere(1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let amp = 0.05;
        let ustar = ScalarField::from_fn(grid, |g, p| amp * (TAU * g.position(p, 0)).cos());
        let h = ScalarField::from_fn(grid, |g, p| {
            (1.0 - amp * PI * PI * (TAU * g.position(p, 0)).cos()).ln()
        });
        let cfg = SolverConfig::default();
        let (u, rep) = solve_nondegenerate(&op, &theta, &h, &cfg).unwrap();
        // u and u* agree up to an additive constant
        let diff = u.axpy(-1.0, &ustar).unwrap();
        let spread = diff.max() - diff.min();
        assert!(spread < 1e-8, "recovered field differs by {spread:.3e}");
        assert!(rep.constant.abs() < 1e-8);
        // residuals decrease monotonically
        for w in rep.residual_history.windows(2) {
            assert!(w[1] < w[0]);
        }
        // accepted iterates stay strictly inside the cone
        assert!(rep.cone_margin_history.iter().all(|&m| m >= cfg.cone_margin));
    }

    #[test]
    fn sigma1_solve_matches_linear_oracle() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let op = EigenOperator::hessian_log(2, 1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let h = ScalarField::from_fn(grid, |g, p| {
            0.2 * (TAU * g.position(p, 0)).cos() + 0.1 * (TAU * g.position(p, 3)).sin()
        });
        let (u, rep) = solve_nondegenerate(&op, &theta, &h, &SolverConfig::default()).unwrap();
        let (v, log_s) = crate::oracles::linear_solve_sigma1(&theta, &h).unwrap();
        let aligned = u.recentered();
        assert!(aligned.sup_diff(&v.recentered()).unwrap() < 1e-10);
        assert!((rep.constant - log_s).abs() < 1e-10);
    }

    #[test]
    fn translation_covariance() {
        let grid = PeriodicGrid::new(1, 16).unwrap();
        let op = EigenOperator::monge_ampere(1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let h = ScalarField::from_fn(grid, |g, p| 0.1 * (TAU * g.position(p, 0)).cos());
        let cfg = SolverConfig::default();
        let (u1, r1) = solve_nondegenerate(&op, &theta, &h, &cfg).unwrap();
        let (u2, r2) = solve_nondegenerate(&op, &theta, &h.shifted(0.7), &cfg).unwrap();
        assert!(u1.sup_diff(&u2).unwrap() < 10.0 * cfg.residual_tol);
        assert!((r2.constant - (r1.constant - 0.7)).abs() < 10.0 * cfg.residual_tol);
    }

    #[test]
    fn non_convergence_reports_history() {
        let grid = PeriodicGrid::new(1, 16).unwrap();
        let op = EigenOperator::monge_ampere(1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let h = ScalarField::from_fn(grid, |g, p| 0.4 * (TAU * g.position(p, 0)).cos());
        let cfg = SolverConfig { max_newton_iters: 1, ..Default::default() };
        match solve_nondegenerate(&op, &theta, &h, &cfg) {
            Err(Error::NonConvergence { report }) => {
                assert_eq!(report.iterations, 1);
                assert!(!report.residual_history.is_empty());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn eigenpair_constant_data() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let op = EigenOperator::hessian_log(2, 1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let cfg = SolverConfig { eps_reg_schedule: vec![1e-1, 1e-2], ..Default::default() };

        let h1 = ScalarField::constant(grid, 1.0);
        let (u, c, rep) = solve_eigenpair(&op, &theta, &h1, &cfg).unwrap();
        // sigma_1(identity) = 2 = c * C(2,1) * (1 + eps)
        let expect = 2.0 / (2.0 * (1.0 + 1e-2));
        assert!((c - expect).abs() < 1e-9, "c = {c}, expected {expect}");
        assert_eq!(u.max(), -1.0);
        assert_eq!(rep.c_sequence.len(), 2);

        let h2 = ScalarField::constant(grid, 2.0);
        let (_, c2, _) = solve_eigenpair(&op, &theta, &h2, &cfg).unwrap();
        let expect2 = 2.0 / (2.0 * (2.0 + 1e-2));
        assert!((c2 - expect2).abs() < 1e-9);
    }

    #[test]
    fn eigenpair_rejects_bad_rhs() {
        let grid = PeriodicGrid::new(1, 8).unwrap();
        let op = EigenOperator::hessian_log(1, 1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let negative = ScalarField::constant(grid, -1.0);
        assert!(solve_eigenpair(&op, &theta, &negative, &SolverConfig::default()).is_err());
        let zero = ScalarField::zeros(grid);
        assert!(solve_eigenpair(&op, &theta, &zero, &SolverConfig::default()).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(3, 2), 3.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(4, 4), 1.0);
    }
}
