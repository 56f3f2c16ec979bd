//! Executable property suites behind `verify`: the module invariants run
//! with fixed seeds, deterministically, with the failing case serialized
//! into the check detail.

use crate::cones::{certify_subsolution, in_trudinger_cone};
use crate::eigen_ops::{sigma_m, EigenOperator};
use crate::envelope::compute_envelope;
use crate::newton_solver::{solve_nondegenerate, solve_nondegenerate_warm, SolverConfig};
use crate::oracles;
use crate::torus_field::{HermitianFormField, PeriodicGrid, ScalarField, SpectralOps};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Eigenops,
    Cones,
    Fields,
    Solver,
    Envelope,
}

impl SuiteKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "eigenops" => Some(Self::Eigenops),
            "cones" => Some(Self::Cones),
            "fields" => Some(Self::Fields),
            "solver" => Some(Self::Solver),
            "envelope" => Some(Self::Envelope),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteKind,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub wall_time_s: f64,
}

struct Recorder {
    checks: Vec<CheckResult>,
}

impl Recorder {
    fn new() -> Self {
        Self { checks: vec![] }
    }

    fn run(&mut self, name: &str, samples: usize, body: impl FnOnce() -> Option<String>) {
        let failure = body();
        self.checks.push(CheckResult {
            name: name.into(),
            samples,
            passed: failure.is_none(),
            detail: failure,
        });
    }
}

fn catalog() -> Vec<EigenOperator> {
    vec![
        EigenOperator::monge_ampere(3).unwrap(),
        EigenOperator::hessian_log(3, 2).unwrap(),
        EigenOperator::hessian_root(3, 2).unwrap(),
        EigenOperator::hessian_quotient(3, 2, 1).unwrap(),
        EigenOperator::n_minus_one_ma(3).unwrap(),
    ]
}

/// Rejection-sample a point of the operator cone with margin above the
/// floor.
fn cone_point(op: &EigenOperator, rng: &mut ChaCha8Rng, margin_floor: f64) -> Vec<f64> {
    let cone = op.cone();
    loop {
        let v: Vec<f64> = (0..op.n).map(|_| rng.gen_range(-1.0..3.0)).collect();
        if cone.margin(&v) > margin_floor {
            return v;
        }
    }
}

pub fn run_suite(suite: SuiteKind, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut rec = Recorder::new();
    match suite {
        SuiteKind::Eigenops => suite_eigenops(&mut rec, seed),
        SuiteKind::Cones => suite_cones(&mut rec, seed),
        SuiteKind::Fields => suite_fields(&mut rec, seed),
        SuiteKind::Solver => suite_solver(&mut rec, seed),
        SuiteKind::Envelope => suite_envelope(&mut rec, seed),
    }
    let passed = rec.checks.iter().all(|c| c.passed);
    SuiteReport {
        suite,
        passed,
        checks: rec.checks,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Run a suite and turn any failure into an error carrying the failing
/// case.
pub fn run_suite_strict(suite: SuiteKind, seed: u64) -> Result<SuiteReport> {
    let report = run_suite(suite, seed);
    if report.passed {
        Ok(report)
    } else {
        let failing: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail.clone().unwrap_or_default()))
            .collect();
        Err(crate::Error::PropertyFailed(failing.join("; ")))
    }
}

fn suite_eigenops(rec: &mut Recorder, seed: u64) {
    let ops = catalog();
    let n_samples = 1000;

    rec.run("monotonicity", n_samples, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..n_samples {
            let op = &ops[k % ops.len()];
            let lambda = cone_point(op, &mut rng, 0.05);
            let i = rng.gen_range(0..op.n);
            let t = rng.gen_range(0.01..1.0);
            let mut bumped = lambda.clone();
            bumped[i] += t;
            let f0 = op.eval(&lambda).unwrap();
            let f1 = op.eval(&bumped).unwrap();
            if f1 <= f0 {
                return Some(format!("{op:?} at {lambda:?}, bump {i} by {t}: {f1} <= {f0}"));
            }
        }
        None
    });

    rec.run("concavity", n_samples, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
        for k in 0..n_samples {
            let op = &ops[k % ops.len()];
            let a = cone_point(op, &mut rng, 0.05);
            let b = cone_point(op, &mut rng, 0.05);
            let s: f64 = rng.gen_range(0.0..1.0);
            let mid: Vec<f64> =
                a.iter().zip(&b).map(|(x, y)| s * x + (1.0 - s) * y).collect();
            let lhs = op.eval(&mid).unwrap();
            let rhs = s * op.eval(&a).unwrap() + (1.0 - s) * op.eval(&b).unwrap();
            if lhs < rhs - 1e-10 {
                return Some(format!("{op:?}: f(mix) = {lhs} < {rhs} for {a:?}/{b:?} s={s}"));
            }
        }
        None
    });

    rec.run("gradient_fd", 200, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x22);
        for k in 0..200 {
            let op = &ops[k % ops.len()];
            let lambda = cone_point(op, &mut rng, 0.1);
            match oracles::fd_check(op, &lambda) {
                Ok(err) if err <= 1e-6 => {}
                Ok(err) => return Some(format!("{op:?} at {lambda:?}: fd error {err:.3e}")),
                Err(_) => continue,
            }
        }
        None
    });

    rec.run("symmetry", n_samples, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x33);
        for k in 0..n_samples {
            let op = &ops[k % ops.len()];
            let lambda = cone_point(op, &mut rng, 0.05);
            let mut perm = lambda.clone();
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let a = op.eval(&lambda).unwrap();
            let b = op.eval(&perm).unwrap();
            if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Some(format!("{op:?}: f{lambda:?} = {a} but f{perm:?} = {b}"));
            }
        }
        None
    });

    rec.run("sigma_homogeneity", n_samples, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x44);
        for _ in 0..n_samples {
            let n = rng.gen_range(2..=5);
            let m = rng.gen_range(1..=n);
            let lambda: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let t: f64 = rng.gen_range(0.1..10.0);
            let scaled: Vec<f64> = lambda.iter().map(|x| t * x).collect();
            let lhs = sigma_m(&scaled, m).unwrap();
            let rhs = t.powi(m as i32) * sigma_m(&lambda, m).unwrap();
            if (lhs - rhs).abs() > 1e-12 * (1.0 + rhs.abs()) {
                return Some(format!("sigma_{m}({t}*{lambda:?}) = {lhs} vs {rhs}"));
            }
        }
        None
    });

    rec.run("ray_growth", n_samples, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
        for k in 0..n_samples {
            let op = &ops[k % ops.len()];
            let lambda = cone_point(op, &mut rng, 0.05);
            let sigma = op.eval(&lambda).unwrap() + rng.gen_range(0.0..5.0);
            let scaled: Vec<f64> = lambda.iter().map(|x| 1e6 * x).collect();
            let f_far = op.eval(&scaled).unwrap();
            if f_far <= sigma {
                return Some(format!("{op:?}: f(1e6 l) = {f_far} <= {sigma}"));
            }
        }
        None
    });
}

fn suite_cones(rec: &mut Recorder, seed: u64) {
    let ops = catalog();

    rec.run("gamma_subset_of_trudinger", 1000, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..1000 {
            let op = &ops[k % ops.len()];
            let lambda = cone_point(op, &mut rng, 0.01);
            if !in_trudinger_cone(op, &lambda) {
                return Some(format!("{op:?}: cone point {lambda:?} not in Trudinger cone"));
            }
        }
        None
    });

    rec.run("trudinger_is_a_cone", 1000, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x66);
        let mut tested = 0;
        while tested < 1000 {
            let op = &ops[tested % ops.len()];
            let mu: Vec<f64> = (0..op.n).map(|_| rng.gen_range(-2.0..3.0)).collect();
            if !in_trudinger_cone(op, &mu) {
                tested += 1;
                continue;
            }
            for t in [0.25, 2.0, 9.0] {
                let scaled: Vec<f64> = mu.iter().map(|x| t * x).collect();
                if !in_trudinger_cone(op, &scaled) {
                    return Some(format!("{op:?}: {mu:?} in but {t}x out"));
                }
            }
            tested += 1;
        }
        None
    });

    rec.run("trudinger_matches_scan", 200, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77);
        for k in 0..200 {
            let op = &ops[k % ops.len()];
            let mu: Vec<f64> = (0..op.n).map(|_| rng.gen_range(-2.0..3.0)).collect();
            let cone = op.cone();
            let mut scan = true;
            for i in 0..op.n {
                let mut ok = false;
                for e in 0..45 {
                    let mut v = mu.clone();
                    v[i] += (2.0_f64).powi(e);
                    if cone.contains(&v) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    scan = false;
                    break;
                }
            }
            if in_trudinger_cone(op, &mu) != scan {
                return Some(format!("{op:?}: scan says {scan} for {mu:?}"));
            }
        }
        None
    });

    rec.run("certificate_monotone_and_stable", 8, || {
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let op = EigenOperator::hessian_quotient(3, 2, 1).unwrap();
        let theta = HermitianFormField::identity_times(grid, 1.0);
        let zero = ScalarField::zeros(grid);
        let mut prev_margin = f64::INFINITY;
        for level in [0.0, 0.5, 1.0, 1.5] {
            let h = ScalarField::constant(grid, level);
            let cert = certify_subsolution(&op, &theta, &zero, &h).unwrap();
            let margin = cert.worst_margin.unwrap();
            if margin > prev_margin + 1e-12 {
                return Some(format!("margin grew when h rose to {level}"));
            }
            prev_margin = margin;
            if cert.accepted {
                let again =
                    certify_subsolution(&op, &theta, &zero, &h.shifted(cert.sigma_0)).unwrap();
                if !again.accepted {
                    return Some(format!(
                        "accepted at h = {level} but rejected after the sigma_0 shift"
                    ));
                }
            }
        }
        None
    });
}

fn band_limited_field(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> ScalarField {
    let limit = (grid.points_per_axis() / 4) as i64;
    let mut modes = Vec::new();
    for _ in 0..4 {
        let wavevector: Vec<i64> =
            (0..grid.axes()).map(|_| rng.gen_range(-limit..=limit)).collect();
        modes.push(crate::config::TrigMode {
            wavevector,
            amplitude: rng.gen_range(-0.5..0.5),
            phase: rng.gen_range(0.0..TAU),
        });
    }
    crate::config::TrigPoly { constant: rng.gen_range(-1.0..1.0), modes }
        .evaluate(grid)
        .unwrap()
}

fn suite_fields(rec: &mut Recorder, seed: u64) {
    let grid = PeriodicGrid::new(2, 16).unwrap();
    let ops = SpectralOps::new(grid);

    rec.run("spectral_round_trip", 20, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let u = band_limited_field(grid, &mut rng);
            // (0*lap + 1)^{-1} is forward transform followed by inverse
            let back = ops.invert_shifted_laplacian(&u, 0.0, 1.0).unwrap();
            let diff = back.sup_diff(&u).unwrap();
            if diff > 1e-12 {
                return Some(format!("round trip error {diff:.3e}"));
            }
        }
        None
    });

    rec.run("ddbar_linearity", 20, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x88);
        for _ in 0..20 {
            let a = band_limited_field(grid, &mut rng);
            let b = band_limited_field(grid, &mut rng);
            let s: f64 = rng.gen_range(-2.0..2.0);
            let dd_sum = ops.ddbar(&a.axpy(s, &b).unwrap()).unwrap();
            let dd_parts = ops.ddbar(&a).unwrap().axpy(s, &ops.ddbar(&b).unwrap()).unwrap();
            for (x, y) in dd_sum.data.iter().zip(&dd_parts.data) {
                if (x - y).norm() > 1e-11 {
                    return Some(format!("linearity defect {:.3e}", (x - y).norm()));
                }
            }
        }
        None
    });

    rec.run("ddbar_hermitian", 20, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x99);
        for _ in 0..20 {
            let u = band_limited_field(grid, &mut rng);
            let defect = ops.ddbar(&u).unwrap().hermitian_defect();
            if defect > 1e-12 {
                return Some(format!("hermitian defect {defect:.3e}"));
            }
        }
        None
    });

    rec.run("hessian_trace_identity", 20, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xaa);
        for _ in 0..20 {
            let u = band_limited_field(grid, &mut rng);
            let hess = ops.real_hessian(&u).unwrap();
            let dd = ops.ddbar(&u).unwrap();
            for p in (0..grid.total_points()).step_by(61) {
                let gap = (hess.trace(p) - 4.0 * dd.trace_re(p)).abs();
                if gap > 1e-10 {
                    return Some(format!("trace identity off by {gap:.3e} at {p}"));
                }
            }
        }
        None
    });
}

fn suite_solver(rec: &mut Recorder, seed: u64) {
    let grid = PeriodicGrid::new(1, 64).unwrap();
    let op = EigenOperator::monge_ampere(1).unwrap();
    let theta = HermitianFormField::identity_times(grid, 1.0);
    let amp = 0.05;
    let h = ScalarField::from_fn(grid, |g, p| {
        (1.0 - amp * std::f64::consts::PI.powi(2) * (TAU * g.position(p, 0)).cos()).ln()
    });
    let cfg = SolverConfig::default();

    rec.run("residual_monotone_and_cone_invariant", 1, || {
        match solve_nondegenerate(&op, &theta, &h, &cfg) {
            Ok((_, rep)) => {
                for w in rep.residual_history.windows(2) {
                    if w[1] >= w[0] {
                        return Some(format!("residuals not decreasing: {:?}", rep.residual_history));
                    }
                }
                if rep.cone_margin_history.iter().any(|&m| m < cfg.cone_margin) {
                    return Some("an accepted iterate violated the cone margin".into());
                }
                None
            }
            Err(e) => Some(format!("solve failed: {e}")),
        }
    });

    rec.run("quadratic_tail", 1, || match solve_nondegenerate(&op, &theta, &h, &cfg) {
        Ok((_, rep)) => {
            let hist = &rep.residual_history;
            for w in hist.windows(2) {
                if w[0] < 1e-3 && w[0] > 1e-14 && w[1] > 10.0 * w[0] * w[0] {
                    return Some(format!("tail not quadratic: {} -> {}", w[0], w[1]));
                }
            }
            None
        }
        Err(e) => Some(format!("solve failed: {e}")),
    });

    rec.run("uniqueness_surrogate", 2, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut solutions = Vec::new();
        for _ in 0..2 {
            let shift = rng.gen_range(0.0..TAU);
            let perturb = ScalarField::from_fn(grid, |g, p| {
                0.002 * (TAU * g.position(p, 0) + shift).cos()
            });
            match solve_nondegenerate_warm(&op, &theta, &h, &cfg, Some(&perturb)) {
                Ok((u, _)) => solutions.push(u),
                Err(e) => return Some(format!("perturbed solve failed: {e}")),
            }
        }
        let gap = solutions[0].sup_diff(&solutions[1]).unwrap();
        if gap > 10.0 * cfg.residual_tol {
            return Some(format!("two starts disagree by {gap:.3e}"));
        }
        None
    });

    rec.run("translation_covariance", 1, || {
        let (u1, r1) = match solve_nondegenerate(&op, &theta, &h, &cfg) {
            Ok(v) => v,
            Err(e) => return Some(format!("{e}")),
        };
        let (u2, r2) = match solve_nondegenerate(&op, &theta, &h.shifted(0.3), &cfg) {
            Ok(v) => v,
            Err(e) => return Some(format!("{e}")),
        };
        if u1.sup_diff(&u2).unwrap() > 10.0 * cfg.residual_tol {
            return Some("u changed under a constant shift of h".into());
        }
        if ((r1.constant - 0.3) - r2.constant).abs() > 10.0 * cfg.residual_tol {
            return Some("b did not absorb the constant shift".into());
        }
        None
    });
}

fn suite_envelope(rec: &mut Recorder, _seed: u64) {
    // the bundled 1D case: n = 1, m = 1, N = 64, h = 0.3 cos(2pi x)
    let grid = PeriodicGrid::new(1, 64).unwrap();
    let theta = HermitianFormField::identity_times(grid, 1.0);
    let h = ScalarField::from_fn(grid, |g, p| 0.3 * (TAU * g.position(p, 0)).cos());
    let schedule = [1e-1, 1e-2, 1e-3];
    let cfg = SolverConfig::default();
    let base = match compute_envelope(&theta, &h, 1, &schedule, &cfg) {
        Ok(r) => r,
        Err(e) => {
            rec.run("envelope_solve", 1, || Some(format!("bundled case failed: {e}")));
            return;
        }
    };

    rec.run("below_obstacle", 1, || {
        let worst = base
            .p
            .values
            .iter()
            .zip(&h.values)
            .map(|(p, hv)| p - hv)
            .fold(f64::NEG_INFINITY, f64::max);
        let allowed = base.states.last().unwrap().sup_overshoot + 10.0 * cfg.residual_tol;
        if worst > allowed {
            return Some(format!("P exceeds h by {worst:.3e} (allowed {allowed:.3e})"));
        }
        None
    });

    rec.run("offset_equivariance", 1, || {
        let shifted = match compute_envelope(&theta, &h.shifted(0.2), 1, &schedule, &cfg) {
            Ok(r) => r,
            Err(e) => return Some(format!("{e}")),
        };
        let diff = shifted.p.axpy(-1.0, &base.p).unwrap();
        let spread = (diff.max() - 0.2).abs().max((diff.min() - 0.2).abs());
        if spread > 10.0 * cfg.residual_tol {
            return Some(format!("offset equivariance off by {spread:.3e}"));
        }
        None
    });

    rec.run("monotone_in_obstacle", 1, || {
        let smaller = match compute_envelope(
            &theta,
            &h.shifted(-0.05),
            1,
            &schedule,
            &cfg,
        ) {
            Ok(r) => r,
            Err(e) => return Some(format!("{e}")),
        };
        for (a, b) in smaller.p.values.iter().zip(&base.p.values) {
            if *a > b + 10.0 * cfg.residual_tol {
                return Some("lower obstacle produced a higher envelope".into());
            }
        }
        None
    });

    rec.run("barrier_sandwich", 1, || {
        let c_meas = base
            .states
            .iter()
            .map(|s| s.overshoot_ratio)
            .fold(0.0_f64, f64::max)
            .max(1.0);
        // u_eps - C eps <= P for every rung
        for s in &base.states {
            let worst = s
                .u
                .values
                .iter()
                .zip(&base.p.values)
                .map(|(u, p)| u - c_meas * s.eps - p)
                .fold(f64::NEG_INFINITY, f64::max);
            if worst > 5e-3 {
                return Some(format!(
                    "lower barrier violated by {worst:.3e} at eps {:.1e}",
                    s.eps
                ));
            }
        }
        // P_{(1-d) theta} - d <= u_eps at the final rung
        let delta = 0.05;
        let theta_d = HermitianFormField::identity_times(grid, 1.0 - delta);
        let shrunk = match compute_envelope(&theta_d, &h, 1, &schedule, &cfg) {
            Ok(r) => r,
            Err(e) => return Some(format!("{e}")),
        };
        let last = &base.states.last().unwrap().u;
        let worst = shrunk
            .p
            .values
            .iter()
            .zip(&last.values)
            .map(|(pd, u)| pd - delta - u)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > 5e-3 {
            return Some(format!("upper barrier violated by {worst:.3e}"));
        }
        None
    });

    rec.run("uniform_hessian_factor", 1, || {
        let spectral = SpectralOps::new(grid);
        let mut sups = Vec::new();
        for s in &base.states {
            sups.push(spectral.norms(&s.u).unwrap().sup_hess);
        }
        let hi = sups.iter().cloned().fold(0.0, f64::max);
        let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi / lo > 2.0 {
            return Some(format!("hessian sup varied by factor {:.3} ({sups:?})", hi / lo));
        }
        None
    });

    rec.run("psor_match", 1, || {
        let (psor, _binding) =
            match oracles::psor_obstacle(&theta, &h, &oracles::OracleConfig::default()) {
                Ok(v) => v,
                Err(e) => return Some(format!("{e}")),
            };
        let gap = base.p.sup_diff(&psor).unwrap();
        if gap > 5e-3 {
            return Some(format!("sup|P - P_psor| = {gap:.3e} > 5e-3"));
        }
        None
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenops_suite_passes_and_is_deterministic() {
        let a = run_suite(SuiteKind::Eigenops, 1234);
        assert!(a.passed, "failures: {:?}", a.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        assert_eq!(a.checks.len(), 6);
        assert!(a.checks.iter().all(|c| c.samples >= 200));
        let b = run_suite(SuiteKind::Eigenops, 1234);
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(x.passed, y.passed);
            assert_eq!(x.detail, y.detail);
        }
    }

    #[test]
    fn cones_suite_passes() {
        let r = run_suite(SuiteKind::Cones, 99);
        assert!(r.passed, "failures: {:?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    }

    #[test]
    fn fields_suite_passes() {
        let r = run_suite(SuiteKind::Fields, 7);
        assert!(r.passed, "failures: {:?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    }

    #[test]
    fn suite_parse_names() {
        assert_eq!(SuiteKind::parse("eigenops"), Some(SuiteKind::Eigenops));
        assert_eq!(SuiteKind::parse("bogus"), None);
    }
}
