//! Restarted GMRES with right preconditioning, matrix-free.
//!
//! Vectors are plain `Vec<f64>`; the operator and preconditioner are closures
//! `&[f64] -> Vec<f64>`. The Arnoldi basis uses modified Gram–Schmidt and the
//! least-squares problem is updated with Givens rotations.

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    /// Stop once `‖b - A x‖ ≤ rel_tol ‖b‖`.
    pub rel_tol: f64,
    /// Krylov dimension before restart.
    pub restart: usize,
    pub max_restarts: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            restart: 60,
            max_restarts: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `‖b - A x‖ / ‖b‖`.
    pub rel_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Solves `A x = b` starting from `x = 0`, with `A M⁻¹ y = b`, `x = M⁻¹ y`.
pub fn gmres<A, P>(apply: A, precond: P, b: &[f64], opts: &GmresOptions) -> GmresOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let m = opts.restart.max(1);
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return GmresOutcome {
            x,
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let target = opts.rel_tol * b_norm;
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut beta = b_norm;

    for _ in 0..opts.max_restarts.max(1) {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // h[j] holds column j of the Hessenberg matrix (length j + 2)
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;

        while k < m {
            let z = precond(&basis[k]);
            let mut w = apply(&z);
            iterations += 1;
            let mut col = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= hij * vi);
            }
            let w_norm = norm(&w);
            col[k + 1] = w_norm;
            for i in 0..k {
                let (c, s) = (cs[i], sn[i]);
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c * a + s * bb;
                col[i + 1] = -s * a + c * bb;
            }
            let (c, s) = givens(col[k], col[k + 1]);
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g[k + 1] = -s * g[k];
            g[k] *= c;
            h.push(col);
            k += 1;
            if g[k].abs() <= target || w_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / w_norm).collect());
        }

        // back substitution on the k×k triangular system
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[j][i] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            update.iter_mut().zip(v).for_each(|(u, vi)| *u += yi * vi);
        }
        let dx = precond(&update);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);

        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        beta = norm(&r);
        if beta <= target {
            return GmresOutcome {
                x,
                iterations,
                rel_residual: beta / b_norm,
                converged: true,
            };
        }
    }
    GmresOutcome {
        x,
        iterations,
        rel_residual: beta / b_norm,
        converged: false,
    }
}
