//! Batched eigendecomposition of the small Hermitian matrices carried by
//! a form field, via cyclic complex Jacobi rotations. Matrix sizes here
//! are the complex dimension (2, 3, 4 in practice), so quadratically
//! convergent Jacobi sweeps beat anything fancier.

use super::{HermitianFormField, PeriodicGrid};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

/// Eigen-decomposition of one Hermitian matrix (row-major, length d²).
/// Returns eigenvalues sorted descending and the matching eigenvectors
/// as columns of a row-major unitary.
pub fn eigh(matrix: &[Complex64], d: usize) -> (Vec<f64>, Vec<Complex64>) {
    debug_assert_eq!(matrix.len(), d * d);
    if d == 1 {
        return (vec![matrix[0].re], vec![Complex64::new(1.0, 0.0)]);
    }
    let mut a = matrix.to_vec();
    let mut v = vec![Complex64::new(0.0, 0.0); d * d];
    for j in 0..d {
        v[j * d + j] = Complex64::new(1.0, 0.0);
    }
    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-15 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0_f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p * d + q].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..d - 1 {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                let gamma = apq.norm();
                if gamma <= tol * 1e-2 {
                    continue;
                }
                let alpha = a[p * d + p].re;
                let beta = a[q * d + q].re;
                let phase = apq / gamma;
                let tau = (alpha - beta) / (2.0 * gamma);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * (t * c);
                // A <- U* A U with U = [[c, s],[-conj(s), c]] in rows/cols (p,q)
                for k in 0..d {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = akp * c - akq * s.conj();
                    a[k * d + q] = akp * s + akq * c;
                    a[p * d + k] = a[k * d + p].conj();
                    a[q * d + k] = a[k * d + q].conj();
                }
                let sig = t * c * gamma;
                let app = c * c * alpha - 2.0 * c * sig + (t * c) * (t * c) * beta;
                let aqq = (t * c) * (t * c) * alpha + 2.0 * c * sig + c * c * beta;
                a[p * d + p] = Complex64::new(app, 0.0);
                a[q * d + q] = Complex64::new(aqq, 0.0);
                a[p * d + q] = Complex64::new(0.0, 0.0);
                a[q * d + p] = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = vkp * c - vkq * s.conj();
                    v[k * d + q] = vkp * s + vkq * c;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j * d + j].re.partial_cmp(&a[i * d + i].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i * d + i].re).collect();
    let mut vectors = vec![Complex64::new(0.0, 0.0); d * d];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..d {
            vectors[k * d + col] = v[k * d + src];
        }
    }
    (values, vectors)
}

/// Largest eigenvalue of a real symmetric matrix (row-major, length d²).
pub fn largest_eigenvalue_symmetric(matrix: &[f64], d: usize) -> f64 {
    let complex: Vec<Complex64> = matrix.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let (values, _) = eigh(&complex, d);
    values[0]
}

/// Pointwise eigen-decomposition of a Hermitian form field: sorted
/// descending eigenvalues and unitary eigenvector frames per point.
pub struct EigenField {
    pub grid: PeriodicGrid,
    pub n: usize,
    /// n eigenvalues per point, descending.
    pub values: Vec<f64>,
    /// n×n row-major unitary per point (columns are eigenvectors).
    pub vectors: Vec<Complex64>,
}

impl EigenField {
    /// Decompose every point of the field. Rejects inputs whose
    /// Hermitian defect exceeds 1e−10·(1 + |χ|_F), pointing at the
    /// offending point.
    pub fn decompose(chi: &HermitianFormField) -> Result<Self> {
        let grid = chi.grid;
        let n = chi.matrix_dim();
        let total = grid.total_points();
        for p in 0..total {
            let m = chi.at(p);
            let frob: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for j in 0..n {
                for k in 0..n {
                    if (m[j * n + k] - m[k * n + j].conj()).norm() > 1e-10 * (1.0 + frob) {
                        return Err(Error::Data(format!(
                            "matrix at grid point {p} is not Hermitian"
                        )));
                    }
                }
            }
        }
        let mut values = vec![0.0; total * n];
        let mut vectors = vec![Complex64::new(0.0, 0.0); total * n * n];
        values
            .par_chunks_mut(n * 1024)
            .zip(vectors.par_chunks_mut(n * n * 1024))
            .enumerate()
            .for_each(|(chunk_idx, (vals, vecs))| {
                let base = chunk_idx * 1024;
                for i in 0..vals.len() / n {
                    let p = base + i;
                    let (w, u) = eigh(chi.at(p), n);
                    vals[i * n..(i + 1) * n].copy_from_slice(&w);
                    vecs[i * n * n..(i + 1) * n * n].copy_from_slice(&u);
                }
            });
        Ok(Self { grid, n, values, vectors })
    }

    pub fn values_at(&self, point: usize) -> &[f64] {
        &self.values[point * self.n..(point + 1) * self.n]
    }

    pub fn vectors_at(&self, point: usize) -> &[Complex64] {
        &self.vectors[point * self.n * self.n..(point + 1) * self.n * self.n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_field::ScalarField;

    fn reconstruct(values: &[f64], vectors: &[Complex64], d: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for j in 0..d {
            for k in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    acc += vectors[j * d + i] * values[i] * vectors[k * d + i].conj();
                }
                out[j * d + k] = acc;
            }
        }
        out
    }

    #[test]
    fn eigh_diagonal() {
        let m = [
            Complex64::new(3.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let (w, _) = eigh(&m, 2);
        assert_eq!(w, vec![3.0, 1.0]);
    }

    #[test]
    fn eigh_2x2_complex() {
        let m = [
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, -1.5),
            Complex64::new(1.0, 1.5),
            Complex64::new(-1.0, 0.0),
        ];
        let (w, v) = eigh(&m, 2);
        // closed form: (a+c)/2 +- sqrt(((a-c)/2)^2 + |b|^2)
        let mid = 0.5;
        let rad = (1.5_f64 * 1.5 + 1.0 + 1.5 * 1.5).sqrt();
        assert!((w[0] - (mid + rad)).abs() < 1e-12);
        assert!((w[1] - (mid - rad)).abs() < 1e-12);
        let rec = reconstruct(&w, &v, 2);
        for (a, b) in rec.iter().zip(m.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn eigh_3x3_matches_charpoly_roots() {
        let m = [
            Complex64::new(2.0, 0.0),
            Complex64::new(0.3, -0.4),
            Complex64::new(-0.1, 0.2),
            Complex64::new(0.3, 0.4),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.1),
            Complex64::new(-0.1, -0.2),
            Complex64::new(0.5, -0.1),
            Complex64::new(-0.7, 0.0),
        ];
        let (w, v) = eigh(&m, 3);
        let roots = crate::oracles::hermitian3_charpoly_roots(&m);
        for (a, b) in w.iter().zip(roots.iter()) {
            assert!((a - b).abs() < 1e-9, "jacobi {a} vs charpoly {b}");
        }
        let rec = reconstruct(&w, &v, 3);
        let defect: f64 = rec.iter().zip(m.iter()).map(|(a, b)| (a - b).norm()).sum();
        assert!(defect < 1e-10);
    }

    #[test]
    fn decompose_identity_field() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let chi = HermitianFormField::identity_times(grid, 1.0);
        let eig = EigenField::decompose(&chi).unwrap();
        for p in (0..grid.total_points()).step_by(37) {
            assert_eq!(eig.values_at(p), &[1.0, 1.0]);
        }
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let mut chi = HermitianFormField::identity_times(grid, 1.0);
        chi.data[5 * 4 + 1] = Complex64::new(0.3, 0.7); // entry (0,1) at point 5
        match EigenField::decompose(&chi) {
            Err(Error::Data(msg)) => assert!(msg.contains("grid point 5")),
            Err(other) => panic!("expected data error, got {other:?}"),
            Ok(_) => panic!("expected data error, got a decomposition"),
        }
    }

    #[test]
    fn decompose_ddbar_field_sorted_and_consistent() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let ops = crate::torus_field::SpectralOps::new(grid);
        let u = ScalarField::from_fn(grid, |g, p| {
            let tau = std::f64::consts::TAU;
            0.3 * (tau * g.position(p, 0)).cos() * (tau * g.position(p, 2)).sin()
                + 0.1 * (tau * g.position(p, 1)).sin()
        });
        let chi = crate::torus_field::HermitianFormField::identity_times(grid, 1.0)
            .axpy(1.0, &ops.ddbar(&u).unwrap())
            .unwrap();
        let eig = EigenField::decompose(&chi).unwrap();
        for p in (0..grid.total_points()).step_by(101) {
            let w = eig.values_at(p);
            assert!(w[0] >= w[1]);
            let rec = reconstruct(w, eig.vectors_at(p), 2);
            for (a, b) in rec.iter().zip(chi.at(p).iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
