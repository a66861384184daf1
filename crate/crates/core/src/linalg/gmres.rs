//! Restarted GMRES with right preconditioning.

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOptions {
    /// Krylov dimension between restarts.
    pub restart: usize,
    pub max_iterations: usize,
    /// Target `‖b − Ax‖ / ‖b‖`.
    pub tolerance: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 40,
            max_iterations: 400,
            tolerance: 1e-13,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Solves `A x = b` as `A M⁻¹ u = b`, `x = M⁻¹ u`.
///
/// `apply(x, y)` writes `A x` into `y`; `precond(r)` returns `M⁻¹ r`.
pub fn gmres<A, P>(apply: A, precond: P, b: &[C64], opts: GmresOptions) -> Result<(Vec<C64>, GmresStats)>
where
    A: Fn(&[C64], &mut [C64]),
    P: Fn(&[C64]) -> Result<Vec<C64>>,
{
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if b_norm == 0.0 {
        return Ok((
            x,
            GmresStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let mut residual = b.to_vec();
    let mut rel = 1.0;
    let mut scratch = vec![C64::new(0.0, 0.0); n];

    while iterations < opts.max_iterations {
        let beta = norm(&residual);
        rel = beta / b_norm;
        if rel <= opts.tolerance {
            break;
        }
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        basis.push(residual.iter().map(|z| z / beta).collect());
        let mut hess = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;

        for k in 0..m {
            let z = precond(&basis[k])?;
            apply(&z, &mut scratch);
            let mut w = scratch.clone();
            for (i, v) in basis.iter().enumerate() {
                let h = dot(v, &w);
                hess[i][k] = h;
                axpy(&mut w, -h, v);
            }
            // one reorthogonalization pass keeps the basis orthonormal
            for (i, v) in basis.iter().enumerate() {
                let h = dot(v, &w);
                hess[i][k] += h;
                axpy(&mut w, -h, v);
            }
            let h_next = norm(&w);
            hess[k + 1][k] = C64::new(h_next, 0.0);

            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i].conj() * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if r == 0.0 {
                cs[k] = 1.0;
                sn[k] = C64::new(0.0, 0.0);
            } else if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = bb.conj() / r;
            } else {
                cs[k] = a.norm() / r;
                sn[k] = (a / a.norm()) * bb.conj() / r;
            }
            hess[k][k] = cs[k] * a + sn[k] * bb;
            hess[k + 1][k] = C64::new(0.0, 0.0);
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];

            iterations += 1;
            k_used = k + 1;
            rel = g[k + 1].norm() / b_norm;
            if rel <= opts.tolerance || h_next == 0.0 || iterations >= opts.max_iterations {
                break;
            }
            basis.push(w.iter().map(|z| z / h_next).collect());
        }

        let mut yv = vec![C64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * yv[j];
            }
            yv[i] = s / hess[i][i];
        }
        let mut update = vec![C64::new(0.0, 0.0); n];
        for (j, coef) in yv.iter().enumerate() {
            axpy(&mut update, *coef, &basis[j]);
        }
        let dx = precond(&update)?;
        axpy(&mut x, C64::new(1.0, 0.0), &dx);

        apply(&x, &mut scratch);
        for i in 0..n {
            residual[i] = b[i] - scratch[i];
        }
        rel = norm(&residual) / b_norm;
        if rel <= opts.tolerance {
            break;
        }
    }

    if rel > opts.tolerance {
        return Err(Error::NoConvergence {
            iterations,
            residual: rel,
        });
    }
    Ok((
        x,
        GmresStats {
            iterations,
            relative_residual: rel,
        },
    ))
}
