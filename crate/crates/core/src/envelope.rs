//! The penalization scheme for envelopes of (θ,m)-subharmonic functions:
//! solve log σ_m(θ + i∂∂̄u_ε) = (u_ε − h)/ε along a decreasing ε
//! schedule, read off the envelope P as the last rung, extract the
//! contact set K, and measure the free-boundary equation residuals
//! off and on K.

use crate::eigen_ops::{sigma_all, EigenOperator, OperatorKind};
use crate::newton_solver::{
    analyze_iterate, assemble_linearization, contract, eval_field, gmres, SolveReport,
    SolverConfig,
};
use crate::torus_field::{HermitianFormField, ScalarField, SpectralOps};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Contact band width in units of the measured overshoot scale C·ε.
const CONTACT_BAND: f64 = 10.0;

/// One rung of the ε-continuation.
#[derive(Debug, Clone)]
pub struct PenalizationState {
    pub eps: f64,
    pub m: usize,
    pub u: ScalarField,
    /// The numerical contact set K.
    pub contact_mask: Vec<bool>,
    /// L¹ (uniform grid measure) of σ_m(θ + i∂∂̄u_ε) off K.
    pub residual_off_k: f64,
    /// L¹ of |σ_m(θ + i∂∂̄u_ε) − σ_m(θ + i∂∂̄h)| on K.
    pub residual_on_k: f64,
    /// max(0, sup(u_ε − h)).
    pub sup_overshoot: f64,
    /// sup_overshoot / ε, the measured penalization constant.
    pub overshoot_ratio: f64,
    pub solve: SolveReport,
}

/// Envelope computation output: P, the final contact set, and all rungs.
#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub p: ScalarField,
    pub contact_mask: Vec<bool>,
    pub states: Vec<PenalizationState>,
    /// sup|u_{ε_k} − u_{ε_{k−1}}| between consecutive rungs.
    pub rung_distances: Vec<f64>,
    /// Set when a rung diverged; earlier rungs are still returned.
    pub failed_rung: Option<(f64, String)>,
}

/// Solve the penalized equation at one ε. The zeroth-order term u/ε
/// fixes the additive constant, so there is no bordered unknown; the
/// linearization gains the diagonal shift −δu/ε.
pub fn solve_penalized(
    op: &EigenOperator,
    theta: &HermitianFormField,
    h: &ScalarField,
    eps: f64,
    warm: Option<&ScalarField>,
    cfg: &SolverConfig,
) -> Result<PenalizationState> {
    if op.kind != OperatorKind::HessianLogSigmaM {
        return Err(Error::Domain(
            "the penalized equation is posed for the log sigma_m operator".into(),
        ));
    }
    if eps <= 0.0 {
        return Err(Error::Domain(format!("penalization eps must be positive, got {eps}")));
    }
    cfg.validate()?;
    if theta.grid != h.grid {
        return Err(Error::GridMismatch("theta and h on different grids".into()));
    }
    let start = Instant::now();
    let grid = h.grid;
    let total = grid.total_points();
    let spectral = SpectralOps::new(grid);

    let mut u = match warm {
        Some(w) => {
            w.check_same_grid(h)?;
            w.clone()
        }
        None => ScalarField::zeros(grid),
    };

    let mut report = SolveReport {
        iterations: 0,
        final_residual: f64::INFINITY,
        constant: 0.0,
        residual_history: Vec::new(),
        cone_margin_history: Vec::new(),
        krylov_iterations: 0,
        wall_time_s: 0.0,
    };

    let mut chi = theta.axpy(1.0, &spectral.ddbar(&u)?)?;
    let mut data = analyze_iterate(op, &chi)?;
    if data.margin < cfg.cone_margin {
        let detail = op.cone().membership(data.eig.values_at(data.witness)).2;
        return Err(Error::ConeViolation { witness: Some(data.witness), detail });
    }
    let mut fvals = eval_field(op, &data, total);

    loop {
        let residual: Vec<f64> = (0..total)
            .map(|p| fvals[p] - (u.values[p] - h.values[p]) / eps)
            .collect();
        let res_sup = residual.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        report.residual_history.push(res_sup);
        report.cone_margin_history.push(data.margin);
        report.final_residual = res_sup;

        if res_sup <= cfg.residual_tol {
            break;
        }
        if report.iterations >= cfg.max_newton_iters {
            report.wall_time_s = start.elapsed().as_secs_f64();
            return Err(Error::NonConvergence { report: Box::new(report) });
        }
        report.iterations += 1;

        let lin = assemble_linearization(op, &data, total);
        let apply = |v: &[f64]| -> Vec<f64> {
            let field = ScalarField { grid, values: v.to_vec() };
            let dd = spectral.ddbar(&field).expect("grid matches by construction");
            (0..total)
                .map(|p| {
                    contract(&lin.w[p * lin.n * lin.n..(p + 1) * lin.n * lin.n], dd.at(p), lin.n)
                        - v[p] / eps
                })
                .collect()
        };
        let c_avg = lin.avg_weight;
        let precond = |v: &[f64]| -> Vec<f64> {
            let field = ScalarField { grid, values: v.to_vec() };
            spectral
                .invert_shifted_laplacian(&field, c_avg, -1.0 / eps)
                .expect("grid matches by construction")
                .values
        };
        let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        let sol = gmres(
            &apply,
            &precond,
            &rhs,
            cfg.krylov_tol,
            cfg.krylov_restart,
            cfg.krylov_max_iters,
        );
        report.krylov_iterations += sol.iterations;
        let delta_u = ScalarField { grid, values: sol.solution };

        let mut alpha = 1.0;
        let mut accepted = false;
        let mut last_witness = data.witness;
        for _ in 0..cfg.max_backtracks {
            let u_try = u.axpy(alpha, &delta_u)?;
            let chi_try = theta.axpy(1.0, &spectral.ddbar(&u_try)?)?;
            let data_try = analyze_iterate(op, &chi_try)?;
            if data_try.margin >= cfg.cone_margin {
                let f_try = eval_field(op, &data_try, total);
                let res_try = (0..total)
                    .map(|p| (f_try[p] - (u_try.values[p] - h.values[p]) / eps).abs())
                    .fold(0.0_f64, f64::max);
                if res_try < res_sup {
                    u = u_try;
                    chi = chi_try;
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
                    "penalized solve at eps = {eps:.3e}: damping exhausted at residual {res_sup:.3e}"
                ),
                report: Box::new(report),
            });
        }
    }

    report.wall_time_s = start.elapsed().as_secs_f64();
    let sup_overshoot = (u.values.iter().zip(&h.values))
        .map(|(a, b)| a - b)
        .fold(0.0_f64, f64::max);
    let contact_mask = contact_set(&u, h, eps)?;
    let (residual_off_k, residual_on_k) =
        residuals_for(op.m, &chi, theta, h, &contact_mask, &spectral)?;
    Ok(PenalizationState {
        eps,
        m: op.m,
        u,
        contact_mask,
        residual_off_k,
        residual_on_k,
        sup_overshoot,
        overshoot_ratio: sup_overshoot / eps,
        solve: report,
    })
}

/// The numerical contact set {h − u_ε ≤ contact_tol(ε)} with
/// contact_tol(ε) = 10·C·ε, C the measured overshoot ratio of this
/// state (floored at 1 so a strictly-below solution still reports the
/// band at scale ε).
pub fn contact_set(u_eps: &ScalarField, h: &ScalarField, eps: f64) -> Result<Vec<bool>> {
    u_eps.check_same_grid(h)?;
    if eps <= 0.0 {
        return Err(Error::Domain("contact_set needs eps > 0".into()));
    }
    let overshoot = (u_eps.values.iter().zip(&h.values))
        .map(|(a, b)| a - b)
        .fold(0.0_f64, f64::max);
    let c_ratio = (overshoot / eps).max(1.0);
    let tol = CONTACT_BAND * c_ratio * eps;
    Ok(u_eps
        .values
        .iter()
        .zip(&h.values)
        .map(|(u, hv)| hv - u <= tol)
        .collect())
}

/// Free-boundary residuals of a converged state: the σ_m mass off K and
/// the deviation from the obstacle's σ_m on K, both as uniform-measure
/// L¹ norms.
pub fn envelope_residual(
    state: &PenalizationState,
    theta: &HermitianFormField,
    h: &ScalarField,
) -> Result<(f64, f64)> {
    let spectral = SpectralOps::new(h.grid);
    let chi = theta.axpy(1.0, &spectral.ddbar(&state.u)?)?;
    residuals_for(state.m, &chi, theta, h, &state.contact_mask, &spectral)
}

fn residuals_for(
    m: usize,
    chi_u: &HermitianFormField,
    theta: &HermitianFormField,
    h: &ScalarField,
    mask: &[bool],
    spectral: &SpectralOps,
) -> Result<(f64, f64)> {
    let grid = h.grid;
    let total = grid.total_points();
    let chi_h = theta.axpy(1.0, &spectral.ddbar(h)?)?;
    let eig_u = crate::torus_field::EigenField::decompose(chi_u)?;
    let eig_h = crate::torus_field::EigenField::decompose(&chi_h)?;
    let mut off = 0.0;
    let mut on = 0.0;
    for p in 0..total {
        let su = sigma_all(eig_u.values_at(p), m)[m];
        if mask[p] {
            let sh = sigma_all(eig_h.values_at(p), m)[m];
            on += (su - sh).abs();
        } else {
            off += su.abs();
        }
    }
    Ok((off / total as f64, on / total as f64))
}

/// Run the ε schedule with warm starts and return the envelope P as the
/// final rung, all rung states, and the rung-to-rung distances. A rung
/// failure annotates the result instead of discarding earlier rungs.
pub fn compute_envelope(
    theta: &HermitianFormField,
    h: &ScalarField,
    m: usize,
    schedule: &[f64],
    cfg: &SolverConfig,
) -> Result<EnvelopeResult> {
    if schedule.is_empty() {
        return Err(Error::Config("envelope schedule is empty".into()));
    }
    for w in schedule.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Config("envelope schedule must be strictly decreasing".into()));
        }
    }
    let n = theta.matrix_dim();
    let op = EigenOperator::hessian_log(n, m)?;
    let mut states: Vec<PenalizationState> = Vec::new();
    let mut rung_distances = Vec::new();
    let mut failed = None;
    for &eps in schedule {
        let warm = states.last().map(|s| &s.u);
        match solve_penalized(&op, theta, h, eps, warm, cfg) {
            Ok(state) => {
                if let Some(prev) = states.last() {
                    rung_distances.push(state.u.sup_diff(&prev.u)?);
                }
                states.push(state);
            }
            Err(e) => {
                failed = Some((eps, e.to_string()));
                break;
            }
        }
    }
    let last = states
        .last()
        .ok_or_else(|| match failed.clone() {
            Some((eps, msg)) => Error::Divergence {
                witness: 0,
                detail: format!("first envelope rung (eps = {eps:.3e}) failed: {msg}"),
                report: Box::new(SolveReport {
                    iterations: 0,
                    final_residual: f64::INFINITY,
                    constant: 0.0,
                    residual_history: vec![],
                    cone_margin_history: vec![],
                    krylov_iterations: 0,
                    wall_time_s: 0.0,
                }),
            },
            None => Error::Config("empty envelope schedule".into()),
        })?;
    Ok(EnvelopeResult {
        p: last.u.clone(),
        contact_mask: last.contact_mask.clone(),
        states,
        rung_distances,
        failed_rung: failed,
    })
}

/// Per-rung scalar summary for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RungSummary {
    pub eps: f64,
    pub sup_overshoot: f64,
    pub overshoot_ratio: f64,
    pub residual_off_k: f64,
    pub residual_on_k: f64,
    pub contact_fraction: f64,
    pub newton_iterations: usize,
    pub final_residual: f64,
    pub wall_time_s: f64,
}

impl RungSummary {
    pub fn from_state(s: &PenalizationState) -> Self {
        let contact = s.contact_mask.iter().filter(|&&b| b).count();
        Self {
            eps: s.eps,
            sup_overshoot: s.sup_overshoot,
            overshoot_ratio: s.overshoot_ratio,
            residual_off_k: s.residual_off_k,
            residual_on_k: s.residual_on_k,
            contact_fraction: contact as f64 / s.contact_mask.len() as f64,
            newton_iterations: s.solve.iterations,
            final_residual: s.solve.final_residual,
            wall_time_s: s.solve.wall_time_s,
        }
    }
}
