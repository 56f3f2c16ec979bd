//! The operator catalog: concave symmetric functions f(λ) of Hermitian
//! eigenvalues, their cones, analytic first/second derivatives, ray
//! limits at infinity, and the divided-difference data used by the
//! linearized solver.

use crate::cones::ConeSpec;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative tie threshold for divided differences: below it the pair
/// term switches to the symmetrized second-derivative limit.
const TIE_REL: f64 = 1e-8;

/// m-th elementary symmetric polynomial e_m(λ), by the prefix
/// recurrence e[k] ← e[k] + λ_j e[k−1] (O(n·m), no subset enumeration).
pub fn sigma_m(lambda: &[f64], m: usize) -> Result<f64> {
    let n = lambda.len();
    if m < 1 || m > n {
        return Err(Error::Domain(format!(
            "sigma_m: m = {m} out of range 1..={n}"
        )));
    }
    Ok(sigma_all(lambda, m)[m])
}

/// All of e_0, ..., e_up_to in one pass.
pub fn sigma_all(lambda: &[f64], up_to: usize) -> Vec<f64> {
    let mut e = vec![0.0; up_to + 1];
    e[0] = 1.0;
    for (j, &x) in lambda.iter().enumerate() {
        let top = up_to.min(j + 1);
        for k in (1..=top).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

/// ∂σ_m/∂λ_i = σ_{m−1} of λ with entry i deleted.
pub fn sigma_m_partial(lambda: &[f64], m: usize, i: usize) -> Result<f64> {
    let n = lambda.len();
    if m < 1 || m > n {
        return Err(Error::Domain(format!(
            "sigma_m_partial: m = {m} out of range 1..={n}"
        )));
    }
    if i >= n {
        return Err(Error::Domain(format!(
            "sigma_m_partial: index {i} out of range for length {n}"
        )));
    }
    Ok(sigma_deleted(lambda, &[i], m as isize - 1))
}

/// σ_k of λ with the listed entries removed (σ_0 ≡ 1, σ_{<0} ≡ 0).
fn sigma_deleted(lambda: &[f64], skip: &[usize], k: isize) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k = k as usize;
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (j, &x) in lambda.iter().enumerate() {
        if skip.contains(&j) {
            continue;
        }
        for t in (1..=k).rev() {
            e[t] += x * e[t - 1];
        }
    }
    e[k]
}

// sigma_deleted takes isize so callers can write σ_{ℓ−2} etc. without
// underflow gymnastics.
fn sdel(lambda: &[f64], skip: &[usize], k: isize) -> f64 {
    sigma_deleted(lambda, skip, k)
}

/// Which symmetric function the operator evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// f = Σ log λ_i on the positive orthant.
    MongeAmpere,
    /// f = log σ_m on the Gårding cone Γ_m.
    HessianLogSigmaM,
    /// f = σ_m^{1/m} on Γ_m.
    HessianRootSigmaM,
    /// f = (σ_m/σ_ℓ)^{1/(m−ℓ)} on Γ_m.
    HessianQuotient,
    /// f = Σ log μ_i with μ_i = (Σ_{j≠i} λ_j)/(n−1); the form argument
    /// carries any constant reference shift.
    NMinusOneMa,
}

/// A cataloged operator instance: the symmetric function f, its cone Γ,
/// and the parameters (n, m, ℓ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOperator {
    pub kind: OperatorKind,
    /// Complex dimension.
    pub n: usize,
    /// Hessian order; unused for MongeAmpere and NMinusOneMa.
    pub m: usize,
    /// Quotient denominator order (ℓ < m); 0 reduces to σ_m^{1/m}.
    pub ell: usize,
}

impl EigenOperator {
    pub fn monge_ampere(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("operator needs n >= 1".into()));
        }
        Ok(Self { kind: OperatorKind::MongeAmpere, n, m: n, ell: 0 })
    }

    pub fn hessian_log(n: usize, m: usize) -> Result<Self> {
        Self::check_m(n, m)?;
        Ok(Self { kind: OperatorKind::HessianLogSigmaM, n, m, ell: 0 })
    }

    pub fn hessian_root(n: usize, m: usize) -> Result<Self> {
        Self::check_m(n, m)?;
        Ok(Self { kind: OperatorKind::HessianRootSigmaM, n, m, ell: 0 })
    }

    pub fn hessian_quotient(n: usize, m: usize, ell: usize) -> Result<Self> {
        Self::check_m(n, m)?;
        if ell >= m {
            return Err(Error::Domain(format!(
                "hessian_quotient needs ell < m, got ell = {ell}, m = {m}"
            )));
        }
        Ok(Self { kind: OperatorKind::HessianQuotient, n, m, ell })
    }

    pub fn n_minus_one_ma(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("the (n-1) Monge-Ampere operator needs n >= 2".into()));
        }
        Ok(Self { kind: OperatorKind::NMinusOneMa, n, m: n, ell: 0 })
    }

    fn check_m(n: usize, m: usize) -> Result<()> {
        if n == 0 || m < 1 || m > n {
            return Err(Error::Domain(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
        }
        Ok(())
    }

    /// The domain cone Γ of this operator.
    pub fn cone(&self) -> ConeSpec {
        match self.kind {
            OperatorKind::MongeAmpere => ConeSpec::gamma_n(self.n),
            OperatorKind::HessianLogSigmaM
            | OperatorKind::HessianRootSigmaM
            | OperatorKind::HessianQuotient => ConeSpec::gamma_m(self.n, self.m),
            OperatorKind::NMinusOneMa => ConeSpec::complement_trace(self.n),
        }
    }

    /// sup of f over the boundary ∂Γ (upper semi-continuous extension).
    pub fn sup_boundary_f(&self) -> f64 {
        match self.kind {
            OperatorKind::MongeAmpere
            | OperatorKind::HessianLogSigmaM
            | OperatorKind::NMinusOneMa => f64::NEG_INFINITY,
            OperatorKind::HessianRootSigmaM | OperatorKind::HessianQuotient => 0.0,
        }
    }

    /// sup of f over Γ; +∞ for every cataloged operator.
    pub fn sup_f(&self) -> f64 {
        f64::INFINITY
    }

    fn check_lambda(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.n {
            return Err(Error::Domain(format!(
                "eigenvalue vector has length {}, operator has n = {}",
                lambda.len(),
                self.n
            )));
        }
        let (inside, margin, detail) = self.cone().membership(lambda);
        if !inside {
            return Err(Error::ConeViolation {
                witness: None,
                detail: format!("{detail} (margin {margin:.3e})"),
            });
        }
        Ok(())
    }

    /// Evaluate f(λ). λ must lie in the open cone (checked).
    pub fn eval(&self, lambda: &[f64]) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(self.eval_unchecked(lambda))
    }

    pub(crate) fn eval_unchecked(&self, lambda: &[f64]) -> f64 {
        match self.kind {
            OperatorKind::MongeAmpere => lambda.iter().map(|&x| x.ln()).sum(),
            OperatorKind::HessianLogSigmaM => sigma_all(lambda, self.m)[self.m].ln(),
            OperatorKind::HessianRootSigmaM => {
                sigma_all(lambda, self.m)[self.m].powf(1.0 / self.m as f64)
            }
            OperatorKind::HessianQuotient => {
                let e = sigma_all(lambda, self.m);
                let p = 1.0 / (self.m - self.ell) as f64;
                (e[self.m] / e[self.ell]).powf(p)
            }
            OperatorKind::NMinusOneMa => {
                self.transformed(lambda).iter().map(|&x| x.ln()).sum()
            }
        }
    }

    /// μ_i = (Σ_{j≠i} λ_j)/(n−1), the eigenvalue transform behind the
    /// (n−1) Monge-Ampère operator.
    pub fn transformed(&self, lambda: &[f64]) -> Vec<f64> {
        let s: f64 = lambda.iter().sum();
        let w = 1.0 / (self.n as f64 - 1.0);
        lambda.iter().map(|&x| (s - x) * w).collect()
    }

    /// Gradient (f_1, ..., f_n); strictly positive on the cone.
    pub fn grad(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.check_lambda(lambda)?;
        Ok(self.grad_unchecked(lambda))
    }

    pub(crate) fn grad_unchecked(&self, lambda: &[f64]) -> Vec<f64> {
        let n = self.n;
        match self.kind {
            OperatorKind::MongeAmpere => lambda.iter().map(|&x| 1.0 / x).collect(),
            OperatorKind::HessianLogSigmaM => {
                let sm = sigma_all(lambda, self.m)[self.m];
                (0..n)
                    .map(|i| sdel(lambda, &[i], self.m as isize - 1) / sm)
                    .collect()
            }
            OperatorKind::HessianRootSigmaM => {
                let m = self.m as f64;
                let sm = sigma_all(lambda, self.m)[self.m];
                let scale = sm.powf(1.0 / m - 1.0) / m;
                (0..n)
                    .map(|i| scale * sdel(lambda, &[i], self.m as isize - 1))
                    .collect()
            }
            OperatorKind::HessianQuotient => {
                let (m, l) = (self.m as isize, self.ell as isize);
                let e = sigma_all(lambda, self.m);
                let (a, b) = (e[self.m], e[self.ell]);
                let r = a / b;
                let p = 1.0 / (m - l) as f64;
                let scale = p * r.powf(p - 1.0);
                (0..n)
                    .map(|i| {
                        let ai = sdel(lambda, &[i], m - 1);
                        let bi = sdel(lambda, &[i], l - 1);
                        scale * (ai * b - a * bi) / (b * b)
                    })
                    .collect()
            }
            OperatorKind::NMinusOneMa => {
                let mu = self.transformed(lambda);
                let w = 1.0 / (n as f64 - 1.0);
                (0..n)
                    .map(|i| w * (0..n).filter(|&k| k != i).map(|k| 1.0 / mu[k]).sum::<f64>())
                    .collect()
            }
        }
    }

    /// Second derivatives f_ij (the Hessian of f in eigenvalue
    /// coordinates); negative semi-definite on the cone by concavity.
    pub fn hess(&self, lambda: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_lambda(lambda)?;
        Ok(self.hess_unchecked(lambda))
    }

    fn hess_unchecked(&self, lambda: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut h = vec![vec![0.0; n]; n];
        match self.kind {
            OperatorKind::MongeAmpere => {
                for i in 0..n {
                    h[i][i] = -1.0 / (lambda[i] * lambda[i]);
                }
            }
            OperatorKind::HessianLogSigmaM => {
                let m = self.m as isize;
                let sm = sigma_all(lambda, self.m)[self.m];
                let g: Vec<f64> = (0..n).map(|i| sdel(lambda, &[i], m - 1) / sm).collect();
                for i in 0..n {
                    for j in 0..n {
                        let cross = if i == j {
                            0.0
                        } else {
                            sdel(lambda, &[i, j], m - 2) / sm
                        };
                        h[i][j] = cross - g[i] * g[j];
                    }
                }
            }
            OperatorKind::HessianRootSigmaM => {
                let m = self.m as f64;
                let mi = self.m as isize;
                let sm = sigma_all(lambda, self.m)[self.m];
                let s1 = sm.powf(1.0 / m - 1.0) / m;
                let s2 = (1.0 / m) * (1.0 / m - 1.0) * sm.powf(1.0 / m - 2.0);
                for i in 0..n {
                    let ai = sdel(lambda, &[i], mi - 1);
                    for j in 0..n {
                        let aj = sdel(lambda, &[j], mi - 1);
                        let aij = if i == j { 0.0 } else { sdel(lambda, &[i, j], mi - 2) };
                        h[i][j] = s2 * ai * aj + s1 * aij;
                    }
                }
            }
            OperatorKind::HessianQuotient => {
                let (mi, li) = (self.m as isize, self.ell as isize);
                let e = sigma_all(lambda, self.m);
                let (a, b) = (e[self.m], e[self.ell]);
                let r = a / b;
                let p = 1.0 / (mi - li) as f64;
                let ri: Vec<f64> = (0..n)
                    .map(|i| {
                        let ai = sdel(lambda, &[i], mi - 1);
                        let bi = sdel(lambda, &[i], li - 1);
                        (ai * b - a * bi) / (b * b)
                    })
                    .collect();
                for i in 0..n {
                    let ai = sdel(lambda, &[i], mi - 1);
                    let bi = sdel(lambda, &[i], li - 1);
                    for j in 0..n {
                        let aj = sdel(lambda, &[j], mi - 1);
                        let bj = sdel(lambda, &[j], li - 1);
                        let (aij, bij) = if i == j {
                            (0.0, 0.0)
                        } else {
                            (sdel(lambda, &[i, j], mi - 2), sdel(lambda, &[i, j], li - 2))
                        };
                        let rij = (aij * b + ai * bj - aj * bi - a * bij) / (b * b)
                            - 2.0 * (ai * b - a * bi) * bj / (b * b * b);
                        h[i][j] =
                            p * (p - 1.0) * r.powf(p - 2.0) * ri[i] * ri[j]
                                + p * r.powf(p - 1.0) * rij;
                    }
                }
            }
            OperatorKind::NMinusOneMa => {
                let mu = self.transformed(lambda);
                let w2 = 1.0 / ((n as f64 - 1.0) * (n as f64 - 1.0));
                for i in 0..n {
                    for j in 0..n {
                        h[i][j] = -w2
                            * (0..n)
                                .filter(|&k| k != i && k != j)
                                .map(|k| 1.0 / (mu[k] * mu[k]))
                                .sum::<f64>();
                    }
                }
            }
        }
        h
    }

    /// The ray limit f_{∞,i}(μ) = lim_{t→∞} f(μ + t e_i). +∞ for every
    /// cataloged operator except the quotient with ℓ ≥ 1, which has the
    /// closed form (σ_{m−1}(μ|i)/σ_{ℓ−1}(μ|i))^{1/(m−ℓ)}.
    ///
    /// μ must lie in the Trudinger cone Γ̃ of the operator (checked).
    pub fn axis_limit(&self, mu: &[f64], i: usize) -> Result<f64> {
        if mu.len() != self.n {
            return Err(Error::Domain(format!(
                "vector has length {}, operator has n = {}",
                mu.len(),
                self.n
            )));
        }
        if i >= self.n {
            return Err(Error::Domain(format!("axis index {i} out of range")));
        }
        if !crate::cones::in_trudinger_cone(self, mu) {
            return Err(Error::Domain(format!(
                "axis_limit: {mu:?} is outside the Trudinger cone of the operator"
            )));
        }
        Ok(self.axis_limit_unchecked(mu, i))
    }

    pub(crate) fn axis_limit_unchecked(&self, mu: &[f64], i: usize) -> f64 {
        match self.kind {
            OperatorKind::HessianQuotient if self.ell >= 1 => {
                let (mi, li) = (self.m as isize, self.ell as isize);
                let num = sdel(mu, &[i], mi - 1);
                let den = sdel(mu, &[i], li - 1);
                if den <= 0.0 {
                    f64::INFINITY
                } else {
                    let p = 1.0 / (mi - li) as f64;
                    (num / den).powf(p)
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// f_{∞,min}(μ) = min_i f_{∞,i}(μ).
    pub fn axis_limit_min(&self, mu: &[f64]) -> Result<f64> {
        (0..self.n)
            .map(|i| self.axis_limit(mu, i))
            .try_fold(f64::INFINITY, |acc, v| Ok(acc.min(v?)))
    }

    /// True when f_{∞,min} ≡ +∞ on Γ̃ (Monge-Ampère, Hessian, and
    /// (n−1)-Monge-Ampère operators); the certified margin σ₀ can then
    /// be taken to be 1.
    pub fn axis_limit_unbounded(&self) -> bool {
        !(self.kind == OperatorKind::HessianQuotient && self.ell >= 1)
    }
}

/// First derivatives and divided differences of F at a sorted eigenvalue
/// vector: `first[i]` is f_i, `pair[i][j]` (i≠j) is (f_i−f_j)/(λ_i−λ_j),
/// replaced by the symmetrized limit ½(f_ii+f_jj)−f_ij at ties.
#[derive(Debug, Clone)]
pub struct MatrixDerivatives {
    pub first: Vec<f64>,
    pub pair: Vec<Vec<f64>>,
}

/// Derivative data of F(A) = f(λ(A)) at a point with eigenvalues
/// `lambda` sorted in descending order. The returned diagonal satisfies
/// first[0] ≤ first[1] ≤ ... ≤ first[n−1].
pub fn matrix_derivatives(op: &EigenOperator, lambda: &[f64]) -> Result<MatrixDerivatives> {
    for w in lambda.windows(2) {
        if w[0] < w[1] {
            return Err(Error::Domain(
                "matrix_derivatives expects eigenvalues sorted descending".into(),
            ));
        }
    }
    op.check_lambda(lambda)?;
    let n = op.n;
    let first = op.grad_unchecked(lambda);
    let hess = op.hess_unchecked(lambda);
    let mut pair = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let gap = lambda[i] - lambda[j];
            let tie = TIE_REL * (1.0 + lambda[i].abs() + lambda[j].abs());
            pair[i][j] = if gap.abs() < tie {
                0.5 * (hess[i][i] + hess[j][j]) - hess[i][j]
            } else {
                (first[i] - first[j]) / gap
            };
        }
    }
    Ok(MatrixDerivatives { first, pair })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    #[test]
    fn sigma_m_basics() {
        assert_close(sigma_m(&[1.0, 1.0, 1.0], 2).unwrap(), 3.0, 0.0);
        // brute-force subset sum over (1,2,3): 1*2 + 1*3 + 2*3 = 11
        assert_close(sigma_m(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0, 0.0);
        assert_close(sigma_m(&[0.0, 5.0, 7.0], 3).unwrap(), 0.0, 0.0);
        assert!(sigma_m(&[1.0, 2.0], 3).is_err());
        assert!(sigma_m(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn sigma_m_matches_bruteforce_sample() {
        let lambda = [0.3, -1.2, 2.5, 0.7];
        for m in 1..=4 {
            let fast = sigma_m(&lambda, m).unwrap();
            let brute = oracles::sigma_bruteforce(&lambda, m).unwrap();
            assert_close(fast, brute, 1e-12 * (1.0 + brute.abs()));
        }
    }

    #[test]
    fn sigma_partial_basics() {
        assert_close(sigma_m_partial(&[1.0, 2.0, 3.0], 2, 0).unwrap(), 5.0, 0.0);
        assert_close(sigma_m_partial(&[1.0, 1.0, 1.0], 1, 1).unwrap(), 1.0, 0.0);
        assert_close(sigma_m_partial(&[4.0, 9.0], 2, 0).unwrap(), 9.0, 0.0);
        assert!(sigma_m_partial(&[1.0, 2.0], 1, 5).is_err());
    }

    #[test]
    fn eval_catalog() {
        let ma = EigenOperator::monge_ampere(3).unwrap();
        assert_close(ma.eval(&[1.0, 1.0, 1.0]).unwrap(), 0.0, 1e-15);

        let hl = EigenOperator::hessian_log(3, 2).unwrap();
        assert_close(hl.eval(&[1.0, 1.0, 1.0]).unwrap(), 3.0_f64.ln(), 1e-15);

        // sigma_2/sigma_1 of (1,2,3) = 11/6, frozen from the subset oracle
        let q = EigenOperator::hessian_quotient(3, 2, 1).unwrap();
        let brute = oracles::sigma_bruteforce(&[1.0, 2.0, 3.0], 2).unwrap()
            / oracles::sigma_bruteforce(&[1.0, 2.0, 3.0], 1).unwrap();
        assert_close(brute, 11.0 / 6.0, 1e-15);
        assert_close(q.eval(&[1.0, 2.0, 3.0]).unwrap(), 11.0 / 6.0, 1e-14);
    }

    #[test]
    fn eval_rejects_cone_violation() {
        let ma = EigenOperator::monge_ampere(2).unwrap();
        match ma.eval(&[1.0, -0.5]) {
            Err(Error::ConeViolation { .. }) => {}
            other => panic!("expected cone violation, got {other:?}"),
        }
    }

    #[test]
    fn grad_catalog() {
        let ma = EigenOperator::monge_ampere(2).unwrap();
        let g = ma.grad(&[2.0, 4.0]).unwrap();
        assert_close(g[0], 0.5, 1e-15);
        assert_close(g[1], 0.25, 1e-15);

        let h1 = EigenOperator::hessian_log(2, 1).unwrap();
        let g = h1.grad(&[3.0, 5.0]).unwrap();
        assert_close(g[0], 1.0 / 8.0, 1e-15);
        assert_close(g[1], 1.0 / 8.0, 1e-15);

        let q = EigenOperator::hessian_quotient(3, 2, 1).unwrap();
        let err = oracles::fd_check(&q, &[1.0, 2.0, 3.0]).unwrap();
        assert!(err < 1e-6, "quotient gradient vs finite differences: {err:.3e}");
    }

    #[test]
    fn grad_all_positive_on_samples() {
        let ops = [
            EigenOperator::monge_ampere(3).unwrap(),
            EigenOperator::hessian_log(3, 2).unwrap(),
            EigenOperator::hessian_root(3, 2).unwrap(),
            EigenOperator::hessian_quotient(3, 2, 1).unwrap(),
            EigenOperator::n_minus_one_ma(3).unwrap(),
        ];
        for op in &ops {
            for lambda in [[1.0, 1.0, 1.0], [3.0, 2.0, 0.5], [5.0, 1.0, 0.1]] {
                let g = op.grad(&lambda).unwrap();
                assert!(g.iter().all(|&x| x > 0.0), "{op:?} at {lambda:?}: {g:?}");
            }
        }
    }

    #[test]
    fn hess_matches_finite_differences() {
        let ops = [
            EigenOperator::monge_ampere(3).unwrap(),
            EigenOperator::hessian_log(3, 2).unwrap(),
            EigenOperator::hessian_root(3, 3).unwrap(),
            EigenOperator::hessian_quotient(3, 3, 1).unwrap(),
            EigenOperator::n_minus_one_ma(3).unwrap(),
        ];
        let lambda = [2.0, 1.5, 0.8];
        let s = 1e-5;
        for op in &ops {
            let h = op.hess(&lambda).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let mut lpp = lambda;
                    lpp[i] += s;
                    lpp[j] += s;
                    let mut lpm = lambda;
                    lpm[i] += s;
                    lpm[j] -= s;
                    let mut lmp = lambda;
                    lmp[i] -= s;
                    lmp[j] += s;
                    let mut lmm = lambda;
                    lmm[i] -= s;
                    lmm[j] -= s;
                    let fd = (op.eval(&lpp).unwrap() - op.eval(&lpm).unwrap()
                        - op.eval(&lmp).unwrap()
                        + op.eval(&lmm).unwrap())
                        / (4.0 * s * s);
                    assert!(
                        (h[i][j] - fd).abs() <= 1e-4 * (1.0 + fd.abs()),
                        "{op:?} f_{{{i}{j}}}: analytic {} vs fd {fd}",
                        h[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn axis_limits() {
        let ma = EigenOperator::monge_ampere(3).unwrap();
        assert!(ma.axis_limit(&[1.0, 1.0, 1.0], 0).unwrap().is_infinite());
        assert!(ma.axis_limit_unbounded());

        // numeric limit oracle: f(mu + t e_i) over increasing t
        let q22 = EigenOperator::hessian_quotient(2, 2, 1).unwrap();
        let closed = q22.axis_limit(&[2.0, 2.0], 0).unwrap();
        assert_close(closed, 2.0, 1e-14);
        let numeric = q22.eval(&[2.0 + 1e6, 2.0]).unwrap();
        assert_close(closed, numeric, 1e-4);

        let q32 = EigenOperator::hessian_quotient(3, 2, 1).unwrap();
        let closed = q32.axis_limit(&[1.0, 1.0, 1.0], 2).unwrap();
        assert_close(closed, 2.0, 1e-14);
        for t in [1e2, 1e4, 1e6] {
            let numeric = q32.eval(&[1.0, 1.0, 1.0 + t]).unwrap();
            assert!((numeric - closed).abs() < 10.0 / t.sqrt() + 1e-3);
        }
        assert!(!q32.axis_limit_unbounded());
    }

    #[test]
    fn axis_limit_rejects_outside_trudinger_cone() {
        let ma = EigenOperator::monge_ampere(3).unwrap();
        assert!(ma.axis_limit(&[1.0, 1.0, -0.5], 0).is_err());
    }

    #[test]
    fn matrix_derivatives_catalog() {
        let h1 = EigenOperator::hessian_log(2, 1).unwrap();
        let d = matrix_derivatives(&h1, &[3.0, 1.0]).unwrap();
        assert_close(d.first[0], 0.25, 1e-15);
        assert_close(d.first[1], 0.25, 1e-15);
        assert_close(d.pair[0][1], 0.0, 1e-15);

        let ma = EigenOperator::monge_ampere(2).unwrap();
        let d = matrix_derivatives(&ma, &[3.0, 1.0]).unwrap();
        assert_close(d.first[0], 1.0 / 3.0, 1e-15);
        assert_close(d.first[1], 1.0, 1e-15);
        assert_close(d.pair[0][1], (1.0 / 3.0 - 1.0) / 2.0, 1e-15);

        // tie: limit along (2+d, 2-d) of (f_1-f_2)/(l_1-l_2) = -1/(l_1 l_2) -> -1/4
        let d = matrix_derivatives(&ma, &[2.0, 2.0]).unwrap();
        assert_close(d.pair[0][1], -0.25, 1e-12);
        let dd = 1e-6;
        let fd = matrix_derivatives(&ma, &[2.0 + dd, 2.0 - dd]).unwrap();
        assert_close(fd.pair[0][1], -0.25, 1e-6);
    }

    #[test]
    fn matrix_derivatives_diagonal_ordering() {
        // descending eigenvalues give ascending diagonal derivatives
        let ops = [
            EigenOperator::monge_ampere(3).unwrap(),
            EigenOperator::hessian_log(3, 2).unwrap(),
            EigenOperator::hessian_quotient(3, 2, 1).unwrap(),
        ];
        for op in &ops {
            let d = matrix_derivatives(op, &[3.0, 2.0, 0.5]).unwrap();
            assert!(d.first[0] <= d.first[1] + 1e-14 && d.first[1] <= d.first[2] + 1e-14);
        }
    }

    #[test]
    fn matrix_derivatives_rejects_unsorted() {
        let ma = EigenOperator::monge_ampere(2).unwrap();
        assert!(matrix_derivatives(&ma, &[1.0, 3.0]).is_err());
    }

    #[test]
    fn pair_term_matches_full_matrix_perturbation() {
        // second derivative of f(eigenvalues of diag(l) + s E_sym) in s is
        // twice the divided difference
        let ma = EigenOperator::monge_ampere(2).unwrap();
        let (l1, l2) = (3.0, 1.0);
        let d = matrix_derivatives(&ma, &[l1, l2]).unwrap();
        let f = |s: f64| {
            let mid = 0.5 * (l1 + l2);
            let rad = (0.25 * (l1 - l2) * (l1 - l2) + s * s).sqrt();
            ma.eval(&[mid + rad, mid - rad]).unwrap()
        };
        let s = 1e-4;
        let second = (f(s) - 2.0 * f(0.0) + f(-s)) / (s * s);
        assert_close(0.5 * second, d.pair[0][1], 1e-6);
    }
}
