//! Cone membership (Γ_n, Γ_m, operator domains), the Trudinger cone Γ̃,
//! and C-subsolution certification with the margin σ₀.

use crate::eigen_ops::{sigma_all, EigenOperator};
use crate::torus_field::{EigenField, HermitianFormField, ScalarField, SpectralOps};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// An open, symmetric, convex cone containing the positive orthant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeSpec {
    /// Γ_n: all eigenvalues positive.
    GammaN { n: usize },
    /// Γ_m: σ_1, ..., σ_m all positive.
    GammaM { n: usize, m: usize },
    /// The (n−1) Monge-Ampère domain: every complementary average
    /// μ_i = (Σ_{j≠i} λ_j)/(n−1) positive.
    ComplementTrace { n: usize },
}

impl ConeSpec {
    pub fn gamma_n(n: usize) -> Self {
        ConeSpec::GammaN { n }
    }

    pub fn gamma_m(n: usize, m: usize) -> Self {
        if m == n {
            ConeSpec::GammaN { n }
        } else {
            ConeSpec::GammaM { n, m }
        }
    }

    pub fn complement_trace(n: usize) -> Self {
        ConeSpec::ComplementTrace { n }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ConeSpec::GammaN { n } | ConeSpec::GammaM { n, .. } | ConeSpec::ComplementTrace { n } => n,
        }
    }

    /// Membership with the minimum over the defining inequalities and,
    /// on failure, the inequality that failed. The margin is positive
    /// exactly on the open cone.
    pub fn membership(&self, lambda: &[f64]) -> (bool, f64, String) {
        match *self {
            ConeSpec::GammaN { n } => {
                debug_assert_eq!(lambda.len(), n);
                let mut worst = f64::INFINITY;
                let mut idx = 0;
                for (i, &x) in lambda.iter().enumerate() {
                    if x < worst {
                        worst = x;
                        idx = i;
                    }
                }
                (worst > 0.0, worst, format!("lambda_{idx} = {worst:.6e} must be positive"))
            }
            ConeSpec::GammaM { n, m } => {
                debug_assert_eq!(lambda.len(), n);
                let e = sigma_all(lambda, m);
                let mut worst = f64::INFINITY;
                let mut level = 1;
                for (l, &s) in e.iter().enumerate().skip(1) {
                    if s < worst {
                        worst = s;
                        level = l;
                    }
                }
                (
                    worst > 0.0,
                    worst,
                    format!("sigma_{level} = {worst:.6e} must be positive"),
                )
            }
            ConeSpec::ComplementTrace { n } => {
                debug_assert_eq!(lambda.len(), n);
                let s: f64 = lambda.iter().sum();
                let w = 1.0 / (n as f64 - 1.0);
                let mut worst = f64::INFINITY;
                let mut idx = 0;
                for (i, &x) in lambda.iter().enumerate() {
                    let mu = (s - x) * w;
                    if mu < worst {
                        worst = mu;
                        idx = i;
                    }
                }
                (
                    worst > 0.0,
                    worst,
                    format!("complementary average mu_{idx} = {worst:.6e} must be positive"),
                )
            }
        }
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        self.membership(lambda).0
    }

    pub fn margin(&self, lambda: &[f64]) -> f64 {
        self.membership(lambda).1
    }
}

/// Single-axis reach cap for the Trudinger cone test.
fn t_max(mu: &[f64]) -> f64 {
    let norm = mu.iter().map(|x| x * x).sum::<f64>().sqrt();
    1e6 * (1.0 + norm)
}

/// Membership of μ in the Trudinger cone Γ̃ of the operator: a single
/// t > 0 must put μ + t e_i inside Γ for every axis i. Because Γ is an
/// open convex cone containing Γ_n, membership of μ + t e_i is monotone
/// in t, so testing the capped endpoint t_max = 10⁶(1+|μ|) per axis is
/// exact up to the cap; points needing a larger t are reported outside.
pub fn in_trudinger_cone(op: &EigenOperator, mu: &[f64]) -> bool {
    let cone = op.cone();
    let cap = t_max(mu);
    let mut bumped = mu.to_vec();
    for i in 0..mu.len() {
        bumped.copy_from_slice(mu);
        bumped[i] += cap;
        if !cone.contains(&bumped) {
            return false;
        }
    }
    true
}

/// C-subsolution certificate for u̲ against a right-hand side h: at every
/// grid point the eigenvalues μ(x) of θ + i∂∂̄u̲ must lie in Γ̃ with
/// f_{∞,min}(μ(x)) > h(x).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsolutionCertificate {
    pub accepted: bool,
    /// Certified margin: half the worst margin when f_{∞,min} is finite,
    /// exactly 1 when f_{∞,min} ≡ +∞, and 0 on rejection.
    pub sigma_0: f64,
    /// True when the operator has f_{∞,min} ≡ +∞ on Γ̃.
    pub f_inf_unbounded: bool,
    /// Grid index attaining the minimum margin (or witnessing the Γ̃
    /// failure on rejection); absent for unbounded accepted certificates.
    pub worst_point: Option<usize>,
    /// min over the grid of f_{∞,min}(μ(x)) − h(x); absent when
    /// f_{∞,min} ≡ +∞.
    pub worst_margin: Option<f64>,
    /// Human-readable reason when rejected.
    pub reason: Option<String>,
}

/// Evaluate μ(x) = λ(θ + i∂∂̄u̲) pointwise and certify the subsolution
/// condition. Fields must share one grid.
pub fn certify_subsolution(
    op: &EigenOperator,
    theta: &HermitianFormField,
    u_sub: &ScalarField,
    h: &ScalarField,
) -> Result<SubsolutionCertificate> {
    if theta.grid != u_sub.grid {
        return Err(Error::GridMismatch("theta and u on different grids".into()));
    }
    u_sub.check_same_grid(h)?;
    if theta.matrix_dim() != op.n {
        return Err(Error::GridMismatch(format!(
            "operator dimension {} does not match field dimension {}",
            op.n,
            theta.matrix_dim()
        )));
    }
    let spectral = SpectralOps::new(u_sub.grid);
    let chi = theta.axpy(1.0, &spectral.ddbar(u_sub)?)?;
    let eig = EigenField::decompose(&chi)?;
    let total = u_sub.grid.total_points();
    let unbounded = op.axis_limit_unbounded();

    for p in 0..total {
        if !in_trudinger_cone(op, eig.values_at(p)) {
            return Ok(SubsolutionCertificate {
                accepted: false,
                sigma_0: 0.0,
                f_inf_unbounded: unbounded,
                worst_point: Some(p),
                worst_margin: None,
                reason: Some(format!(
                    "mu at grid point {p} lies outside the Trudinger cone: {:?}",
                    eig.values_at(p)
                )),
            });
        }
    }

    if unbounded {
        return Ok(SubsolutionCertificate {
            accepted: true,
            sigma_0: 1.0,
            f_inf_unbounded: true,
            worst_point: None,
            worst_margin: None,
            reason: None,
        });
    }

    let mut worst = f64::INFINITY;
    let mut worst_point = 0;
    for p in 0..total {
        let mut f_min = f64::INFINITY;
        for i in 0..op.n {
            f_min = f_min.min(op.axis_limit_unchecked(eig.values_at(p), i));
        }
        let margin = f_min - h.values[p];
        if margin < worst {
            worst = margin;
            worst_point = p;
        }
    }
    let accepted = worst > 0.0;
    Ok(SubsolutionCertificate {
        accepted,
        sigma_0: if accepted { 0.5 * worst } else { 0.0 },
        f_inf_unbounded: false,
        worst_point: Some(worst_point),
        worst_margin: Some(worst),
        reason: if accepted {
            None
        } else {
            Some(format!(
                "f_inf_min - h = {worst:.6e} at grid point {worst_point} is not positive"
            ))
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_field::PeriodicGrid;

    #[test]
    fn gamma_n_membership() {
        let c = ConeSpec::gamma_n(3);
        assert!(c.contains(&[1.0, 1.0, 1.0]));
        assert!(!c.contains(&[1.0, 0.0, 1.0]));
        assert!(c.margin(&[2.0, 0.5, 3.0]) == 0.5);
    }

    #[test]
    fn gamma_m_membership() {
        // sigma_2 of (2,2,-1) is exactly 0: boundary, not inside
        let c = ConeSpec::gamma_m(3, 2);
        let (inside, margin, detail) = c.membership(&[2.0, 2.0, -1.0]);
        assert!(!inside);
        assert_eq!(margin, 0.0);
        assert!(detail.contains("sigma_2"));

        let c1 = ConeSpec::gamma_m(3, 1);
        assert!(c1.contains(&[-1.0, -1.0, 3.0]));
    }

    #[test]
    fn cone_is_convex_symmetric_and_contains_orthant() {
        let cones = [
            ConeSpec::gamma_n(3),
            ConeSpec::gamma_m(3, 2),
            ConeSpec::complement_trace(3),
        ];
        let inside = [[3.0, 1.0, 0.5], [2.0, 0.3, 0.9]];
        for c in &cones {
            for v in &inside {
                assert!(c.contains(v));
                // permutation invariance
                assert!(c.contains(&[v[2], v[0], v[1]]));
            }
            // midpoint of two members
            let mid: Vec<f64> = inside[0].iter().zip(&inside[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            assert!(c.contains(&mid));
            // membership implies positive trace (Gamma inside Gamma_1)
            let (_, _, _) = c.membership(&inside[0]);
            assert!(inside[0].iter().sum::<f64>() > 0.0);
        }
    }

    #[test]
    fn trudinger_examples() {
        let ma = EigenOperator::monge_ampere(3).unwrap();
        // bumping one coordinate never fixes another negative coordinate
        assert!(!in_trudinger_cone(&ma, &[1.0, 1.0, -0.5]));
        assert!(in_trudinger_cone(&ma, &[1.0, 1.0, 0.5]));

        let h1 = EigenOperator::hessian_log(3, 1).unwrap();
        assert!(in_trudinger_cone(&h1, &[-5.0, -5.0, -5.0]));

        let h2 = EigenOperator::hessian_log(3, 2).unwrap();
        let mu = [1.0, 1.0, -0.9];
        // dense t-grid scan oracle
        let cone = h2.cone();
        let mut reachable = vec![false; 3];
        for i in 0..3 {
            for k in 0..40 {
                let mut v = mu;
                v[i] += (2.0_f64).powi(k);
                if cone.contains(&v) {
                    reachable[i] = true;
                    break;
                }
            }
        }
        let scan_says = reachable.iter().all(|&r| r);
        assert_eq!(in_trudinger_cone(&h2, &mu), scan_says);
        assert!(scan_says, "expected (1,1,-0.9) inside the Trudinger cone of sigma_2");
    }

    #[test]
    fn trudinger_cone_scaling_and_inclusion() {
        let ops = [
            EigenOperator::hessian_log(3, 2).unwrap(),
            EigenOperator::hessian_quotient(3, 2, 1).unwrap(),
            EigenOperator::monge_ampere(3).unwrap(),
        ];
        let samples = [[1.0, 1.0, -0.5], [0.5, 2.0, 1.0], [3.0, -0.2, 0.4]];
        for op in &ops {
            for mu in &samples {
                // Gamma inside Gamma-tilde
                if op.cone().contains(mu) {
                    assert!(in_trudinger_cone(op, mu));
                }
                // Gamma-tilde is a cone
                if in_trudinger_cone(op, mu) {
                    for t in [0.5, 2.0, 7.0] {
                        let scaled: Vec<f64> = mu.iter().map(|x| x * t).collect();
                        assert!(in_trudinger_cone(op, &scaled), "{op:?} {mu:?} t={t}");
                    }
                }
            }
        }
    }

    fn grid_setup() -> (PeriodicGrid, ScalarField) {
        let grid = PeriodicGrid::new(1, 8).unwrap();
        (grid, ScalarField::zeros(grid))
    }

    #[test]
    fn certificate_hessian_identity_accepts_with_sigma_one() {
        // m-positive theta, zero subsolution, bounded h: sigma_0 = 1
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let op = EigenOperator::hessian_log(2, 1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let zero = ScalarField::zeros(grid);
        let h = ScalarField::constant(grid, 5.0);
        let cert = certify_subsolution(&op, &theta, &zero, &h).unwrap();
        assert!(cert.accepted);
        assert_eq!(cert.sigma_0, 1.0);
        assert!(cert.f_inf_unbounded);
    }

    #[test]
    fn certificate_monge_ampere_identity() {
        let (grid, zero) = grid_setup();
        let op = EigenOperator::monge_ampere(1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let h = ScalarField::zeros(grid);
        let cert = certify_subsolution(&op, &theta, &zero, &h).unwrap();
        assert!(cert.accepted);
        assert_eq!(cert.sigma_0, 1.0);
    }

    #[test]
    fn certificate_quotient_rejects_large_h() {
        // mu = (1,1,1): f_inf = sigma_1(mu|i)/sigma_0 = 2; h = 3 -> margin -1
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let op = EigenOperator::hessian_quotient(3, 2, 1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let zero = ScalarField::zeros(grid);
        let h = ScalarField::constant(grid, 3.0);
        let cert = certify_subsolution(&op, &theta, &zero, &h).unwrap();
        assert!(!cert.accepted);
        assert_eq!(cert.worst_margin, Some(-1.0));
        assert!(!cert.f_inf_unbounded);
        assert!(cert.reason.is_some());
    }

    #[test]
    fn certificate_margin_monotone_in_h_and_stable_under_sigma0_shift() {
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let op = EigenOperator::hessian_quotient(3, 2, 1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let zero = ScalarField::zeros(grid);
        let h = ScalarField::constant(grid, 1.0);
        let cert = certify_subsolution(&op, &theta, &zero, &h).unwrap();
        assert!(cert.accepted);
        let margin = cert.worst_margin.unwrap();
        assert!((margin - 1.0).abs() < 1e-9);
        assert!((cert.sigma_0 - 0.5).abs() < 1e-9);

        // raising h lowers the margin
        let higher = certify_subsolution(&op, &theta, &zero, &h.shifted(0.25)).unwrap();
        assert!(higher.worst_margin.unwrap() <= margin);

        // h + sigma_0 is still accepted
        let shifted = certify_subsolution(&op, &theta, &zero, &h.shifted(cert.sigma_0)).unwrap();
        assert!(shifted.accepted);
    }

    #[test]
    fn certificate_rejects_grid_mismatch() {
        let (grid, zero) = grid_setup();
        let other = PeriodicGrid::new(1, 16).unwrap();
        let op = EigenOperator::monge_ampere(1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let h = ScalarField::zeros(other);
        assert!(certify_subsolution(&op, &theta, &zero, &h).is_err());
    }
}
