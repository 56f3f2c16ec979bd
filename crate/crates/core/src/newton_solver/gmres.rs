//! Restarted GMRES with right preconditioning, on flat `Vec<f64>` state.

/// Outcome of a linear solve: approximate solution plus the relative
/// residual actually reached.
pub struct GmresResult {
    pub solution: Vec<f64>,
    pub relative_residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // fixed-order chunked accumulation keeps runs bit-reproducible
    const CHUNK: usize = 4096;
    a.chunks(CHUNK)
        .zip(b.chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve A x = b for the matrix-free operator `apply`, preconditioned on
/// the right by `precond` (an approximate inverse of A). Stops when the
/// estimated residual falls below `tol`·|b| or the budget runs out.
pub fn gmres(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iters: usize,
) -> GmresResult {
    let m = b.len();
    let bnorm = norm(b).max(1e-300);
    let mut x = vec![0.0; m];
    let mut total_iters = 0;

    loop {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta / bnorm <= tol || total_iters >= max_iters {
            return GmresResult {
                solution: x,
                relative_residual: beta / bnorm,
                iterations: total_iters,
            };
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // upper-triangular factor after rotations, column-major per column j
        let mut h = vec![vec![0.0f64; restart + 1]; restart];
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![0.0f64; restart];
        let mut g = vec![0.0f64; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        let mut stagnated = false;

        for j in 0..restart {
            if total_iters >= max_iters {
                break;
            }
            total_iters += 1;
            let z = precond(&basis[j]);
            let mut w = apply(&z);
            for (i, v) in basis.iter().enumerate() {
                h[j][i] = dot(&w, v);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= h[j][i] * vi;
                }
            }
            let h_next = norm(&w);
            if j + 1 <= restart && h_next > 1e-300 {
                basis.push(w.iter().map(|v| v / h_next).collect());
            }
            // previously accumulated rotations
            for i in 0..j {
                let t = cs[i] * h[j][i] + sn[i] * h[j][i + 1];
                h[j][i + 1] = -sn[i] * h[j][i] + cs[i] * h[j][i + 1];
                h[j][i] = t;
            }
            // eliminate h_next with a fresh rotation
            let denom = (h[j][j] * h[j][j] + h_next * h_next).sqrt();
            if denom < 1e-300 {
                k_used = j;
                stagnated = true;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h_next / denom;
            h[j][j] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k_used = j + 1;
            if g[j + 1].abs() / bnorm <= tol || h_next <= 1e-300 {
                break;
            }
        }

        if k_used == 0 {
            return GmresResult {
                solution: x,
                relative_residual: beta / bnorm,
                iterations: total_iters,
            };
        }

        let mut y = vec![0.0f64; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in (i + 1)..k_used {
                s -= h[l][i] * y[l];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0f64; m];
        for (i, yi) in y.iter().enumerate() {
            for (ui, vi) in update.iter_mut().zip(&basis[i]) {
                *ui += yi * vi;
            }
        }
        let pu = precond(&update);
        for (xi, ui) in x.iter_mut().zip(&pu) {
            *xi += ui;
        }
        if stagnated {
            let ax = apply(&x);
            let rv: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            return GmresResult {
                solution: x,
                relative_residual: norm(&rv) / bnorm,
                iterations: total_iters,
            };
        }
    }
}
