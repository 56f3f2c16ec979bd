//! Monitors for the quantities the a priori estimates bound: the norm
//! record, λ₁(∇²u), L = sup|∇²u|+1, ρ = ∇²u + L·g, the barrier functions
//! ξ and η with their derivative bounds, the maximum-principle quantity
//! Q = log λ₁(∇²u) + ξ(|ρ|²) + η(|∂u|²) + e^{−Au}, the derivative range
//! of F, and ε-trend fits across penalization rungs.

use crate::eigen_ops::{matrix_derivatives, EigenOperator};
use crate::envelope::PenalizationState;
use crate::torus_field::{eigh, EigenField, HermitianFormField, Norms, ScalarField, SpectralOps};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Snapshot of the monitored estimate quantities for one field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub norms: Norms,
    pub lambda1_max: f64,
    /// L = sup|∇²u| + 1.
    pub l_value: f64,
    /// sup over the grid of |ρ|² (Frobenius), ρ = ∇²u + L·g.
    pub rho_norm_max: f64,
    /// ρ is positive definite at every grid point.
    pub rho_positive: bool,
    /// Whether the bound |ρ|² ≤ 4L² held over the grid.
    pub rho_bound_ok: bool,
    /// ξ, η and their derivatives at the grid maximizer of Q.
    pub xi_at_max: f64,
    pub eta_at_max: f64,
    pub xi_prime_at_max: f64,
    pub eta_prime_at_max: f64,
    /// max over the grid of Q; absent when λ₁(∇²u) ≤ 0 everywhere.
    pub q_max: Option<f64>,
    /// Sentinel for the constant-field case: λ₁ ≤ 0 at every point.
    pub degenerate: bool,
    /// The wider-barrier variant of Q (ξ with 100n²L², η widened by
    /// 4·sup|∂h|², exponent A(u−B) with sup(u−B) = −1), recorded
    /// alongside the primary form.
    pub q_wide_max: Option<f64>,
    /// (min over grid of min_i F^{iī}, max over grid of Σ_i F^{iī}).
    pub f_diag_range: Option<(f64, f64)>,
    /// Pointwise check that sorted eigenvalues give sorted diagonal
    /// derivatives (F^{1̄1} ≤ ... ≤ F^{n̄n}).
    pub f_ordering_ok: bool,
    /// Witness of a cone violation; the F-dependent fields are skipped
    /// when set and the report is partial.
    pub cone_violation: Option<usize>,
}

/// Evaluate the monitored quantities for u against the background form.
/// `a_const` is the exponent constant A; `h` widens the η barrier of the
/// recorded variant when present.
pub fn estimate_monitor(
    u: &ScalarField,
    theta: &HermitianFormField,
    op: &EigenOperator,
    a_const: f64,
    h: Option<&ScalarField>,
) -> Result<EstimateReport> {
    if theta.grid != u.grid {
        return Err(Error::GridMismatch("u and theta on different grids".into()));
    }
    let grid = u.grid;
    let total = grid.total_points();
    let d = grid.axes();
    let spectral = SpectralOps::new(grid);
    let norms = spectral.norms(u)?;
    let l_value = norms.sup_hess + 1.0;

    // real-Hessian eigenvalues per point drive lambda1, rho, and Q
    let hess = spectral.real_hessian(u)?;
    let mut lambda1 = vec![0.0; total];
    let mut rho_norm2 = vec![0.0; total];
    let mut rho_positive = true;
    for p in 0..total {
        let complex: Vec<Complex64> =
            hess.at(p).iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let (evals, _) = eigh(&complex, d);
        lambda1[p] = evals[0];
        let mut r2 = 0.0;
        for &ev in &evals {
            let shifted = ev + l_value;
            if shifted <= 0.0 {
                rho_positive = false;
            }
            r2 += shifted * shifted;
        }
        rho_norm2[p] = r2;
    }
    let lambda1_max = lambda1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rho_norm_max = rho_norm2.iter().cloned().fold(0.0, f64::max);
    let rho_bound_ok = rho_norm_max <= 4.0 * l_value * l_value + 1e-9;

    // gradient in the complex norm |∂u|² = Σ_j |∂u/∂z^j|² = ¼|∇u|²
    let grads = spectral.gradient(u)?;
    let grad2: Vec<f64> = (0..total)
        .map(|p| 0.25 * grads.iter().map(|g| g.values[p] * g.values[p]).sum::<f64>())
        .collect();
    let sup_grad2 = grad2.iter().cloned().fold(0.0, f64::max);

    let xi = |s: f64| -> f64 {
        let arg = 5.0 * l_value * l_value - s;
        if arg <= 0.0 {
            f64::INFINITY
        } else {
            -arg.ln() / 3.0
        }
    };
    let eta = |s: f64| -> f64 { -((1.0 + sup_grad2 - s).max(1e-300)).ln() / 3.0 };

    let mut q_max = f64::NEG_INFINITY;
    let mut q_argmax = None;
    for p in 0..total {
        if lambda1[p] <= 0.0 {
            continue;
        }
        let x = xi(rho_norm2[p]);
        if !x.is_finite() {
            continue;
        }
        let q = lambda1[p].ln() + x + eta(grad2[p]) + (-a_const * u.values[p]).exp();
        if q > q_max {
            q_max = q;
            q_argmax = Some(p);
        }
    }
    let degenerate = q_argmax.is_none();

    // wide-barrier variant
    let sup_dh2 = match h {
        Some(hf) => {
            let hg = spectral.gradient(hf)?;
            (0..total)
                .map(|p| 0.25 * hg.iter().map(|g| g.values[p] * g.values[p]).sum::<f64>())
                .fold(0.0, f64::max)
        }
        None => 0.0,
    };
    let n = grid.complex_dim() as f64;
    let b_shift = u.max() + 1.0;
    let mut q_wide_max = f64::NEG_INFINITY;
    for p in 0..total {
        if lambda1[p] <= 0.0 {
            continue;
        }
        let arg = 100.0 * n * n * l_value * l_value - rho_norm2[p];
        if arg <= 0.0 {
            continue;
        }
        let xiw = -arg.ln() / 3.0;
        let etaw = -((1.0 + 4.0 * sup_dh2 + sup_grad2 - grad2[p]).max(1e-300)).ln() / 3.0;
        let q = lambda1[p].ln() + xiw + etaw + (-a_const * (u.values[p] - b_shift)).exp();
        q_wide_max = q_wide_max.max(q);
    }

    let (xi_at_max, eta_at_max, xi_prime_at_max, eta_prime_at_max) = match q_argmax {
        Some(p) => (
            xi(rho_norm2[p]),
            eta(grad2[p]),
            1.0 / (3.0 * (5.0 * l_value * l_value - rho_norm2[p])),
            1.0 / (3.0 * (1.0 + sup_grad2 - grad2[p])),
        ),
        None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    };

    // derivative range of F over the grid
    let chi = theta.axpy(1.0, &spectral.ddbar(u)?)?;
    let eig = EigenField::decompose(&chi)?;
    let cone = op.cone();
    let mut cone_violation = None;
    for p in 0..total {
        if !cone.contains(eig.values_at(p)) {
            cone_violation = Some(p);
            break;
        }
    }
    let (f_diag_range, f_ordering_ok) = if cone_violation.is_none() {
        let mut min_fi = f64::INFINITY;
        let mut max_sum = f64::NEG_INFINITY;
        let mut ordering_ok = true;
        for p in 0..total {
            let md = matrix_derivatives(op, eig.values_at(p))?;
            let mut prev = f64::NEG_INFINITY;
            for &fi in &md.first {
                min_fi = min_fi.min(fi);
                if fi + 1e-12 * (1.0 + fi.abs()) < prev {
                    ordering_ok = false;
                }
                prev = fi;
            }
            max_sum = max_sum.max(md.first.iter().sum::<f64>());
        }
        (Some((min_fi, max_sum)), ordering_ok)
    } else {
        (None, false)
    };

    Ok(EstimateReport {
        norms,
        lambda1_max,
        l_value,
        rho_norm_max,
        rho_positive,
        rho_bound_ok,
        xi_at_max,
        eta_at_max,
        xi_prime_at_max,
        eta_prime_at_max,
        q_max: if degenerate { None } else { Some(q_max) },
        degenerate,
        q_wide_max: if q_wide_max.is_finite() { Some(q_wide_max) } else { None },
        f_diag_range,
        f_ordering_ok,
        cone_violation,
    })
}

/// ε-trend fit across penalization rungs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendRecord {
    /// [min, max] over rungs of sup_overshoot/ε.
    pub overshoot_ratio_range: (f64, f64),
    /// max over rungs of sup|∇²u_ε| divided by the min — the numerical
    /// reflection of the ε-independent Hessian bound.
    pub hessian_variation_factor: f64,
    /// Least-squares log-log slopes against ε (positive values mean the
    /// quantity shrinks with ε).
    pub overshoot_slope: Option<f64>,
    pub off_k_slope: Option<f64>,
    pub on_k_slope: Option<f64>,
}

fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let clean: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if clean.len() < 2 {
        return None;
    }
    let n = clean.len() as f64;
    let sx: f64 = clean.iter().map(|p| p.0).sum();
    let sy: f64 = clean.iter().map(|p| p.1).sum();
    let sxx: f64 = clean.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = clean.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Fit the ε trends of a schedule. Needs at least 3 rungs with matching
/// estimate reports.
pub fn epsilon_trend(
    states: &[PenalizationState],
    reports: &[EstimateReport],
) -> Result<TrendRecord> {
    if states.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "epsilon trend needs at least 3 rungs, got {}",
            states.len()
        )));
    }
    if states.len() != reports.len() {
        return Err(Error::InsufficientData(
            "one estimate report per rung is required".into(),
        ));
    }
    let ratios: Vec<f64> = states.iter().map(|s| s.overshoot_ratio).collect();
    let range = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let sups: Vec<f64> = reports.iter().map(|r| r.norms.sup_hess).collect();
    let hi = sups.iter().cloned().fold(0.0, f64::max);
    let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
    let factor = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(TrendRecord {
        overshoot_ratio_range: range,
        hessian_variation_factor: factor,
        overshoot_slope: loglog_slope(
            &states.iter().map(|s| (s.eps, s.sup_overshoot)).collect::<Vec<_>>(),
        ),
        off_k_slope: loglog_slope(
            &states.iter().map(|s| (s.eps, s.residual_off_k)).collect::<Vec<_>>(),
        ),
        on_k_slope: loglog_slope(
            &states.iter().map(|s| (s.eps, s.residual_on_k)).collect::<Vec<_>>(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_field::PeriodicGrid;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn constant_field_is_degenerate() {
        let grid = PeriodicGrid::new(1, 8).unwrap();
        let u = ScalarField::constant(grid, -1.0);
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let op = EigenOperator::monge_ampere(1).unwrap();
        let rep = estimate_monitor(&u, &theta, &op, 1.0, None).unwrap();
        assert!(rep.degenerate);
        assert!(rep.q_max.is_none());
        assert!((rep.lambda1_max - 0.0).abs() < 1e-12);
        assert_eq!(rep.l_value, 1.0);
        // rho = L g: |rho|^2 = 2n L^2 = 2
        assert!((rep.rho_norm_max - 2.0).abs() < 1e-12);
        assert!(rep.rho_positive);
        assert!(rep.rho_bound_ok);
        assert!(rep.cone_violation.is_none());
    }

    #[test]
    fn cosine_field_closed_forms() {
        let grid = PeriodicGrid::new(1, 32).unwrap();
        let a = 0.02;
        let u = ScalarField::from_fn(grid, |g, p| a * (TAU * g.position(p, 0)).cos());
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let op = EigenOperator::monge_ampere(1).unwrap();
        let rep = estimate_monitor(&u, &theta, &op, 1.0, None).unwrap();
        let peak = 4.0 * PI * PI * a;
        assert!((rep.lambda1_max - peak).abs() < 1e-9);
        assert!((rep.l_value - (peak + 1.0)).abs() < 1e-9);
        assert!(!rep.degenerate);
        // xi' bounds at the maximizer
        let l2 = rep.l_value * rep.l_value;
        assert!(rep.xi_prime_at_max >= 1.0 / (18.0 * l2) - 1e-15);
        assert!(rep.xi_prime_at_max <= 1.0 / (3.0 * l2) + 1e-15);
        // monge-ampere at 1x1 forms: F^{11} = 1/lambda
        let (min_fi, max_sum) = rep.f_diag_range.unwrap();
        assert!(min_fi > 0.0 && max_sum >= min_fi);
        assert!(rep.f_ordering_ok);
        assert!(rep.q_wide_max.is_some());
    }

    #[test]
    fn lambda1_consistent_with_norms() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let u = ScalarField::from_fn(grid, |g, p| {
            0.05 * (TAU * g.position(p, 0)).cos() * (TAU * g.position(p, 3)).sin()
        });
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let op = EigenOperator::hessian_log(2, 1).unwrap();
        let rep = estimate_monitor(&u, &theta, &op, 1.0, None).unwrap();
        // lambda1 <= |hess|_F always; and |hess|_F <= C lambda1 + C with
        // C = 2n and the measured trace lower bound
        assert!(rep.lambda1_max <= rep.norms.sup_hess + 1e-12);
        let c = 2.0 * grid.axes() as f64;
        assert!(rep.norms.sup_hess <= c * rep.lambda1_max + c + 1e-9);
    }

    #[test]
    fn monitor_flags_cone_violation() {
        let grid = PeriodicGrid::new(1, 8).unwrap();
        let u = ScalarField::zeros(grid);
        let theta = HermitianFormField::identity_times(grid, -2.0);
        let op = EigenOperator::monge_ampere(1).unwrap();
        let rep = estimate_monitor(&u, &theta, &op, 1.0, None).unwrap();
        assert!(rep.cone_violation.is_some());
        assert!(rep.f_diag_range.is_none());
    }

    #[test]
    fn trend_requires_three_rungs() {
        let err = epsilon_trend(&[], &[]).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn loglog_slope_recovers_power() {
        let pts: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&e: &f64| (e, 3.0 * e.powf(1.5)))
            .collect();
        let s = loglog_slope(&pts).unwrap();
        assert!((s - 1.5).abs() < 1e-12);
    }
}
