//! Jacobi-preconditioned conjugate gradients for the symmetric positive
//! definite systems of the implicit sub-steps.

use crate::error::{Error, Result};
use crate::fields::ordered_sum;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    ordered_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Solves the rows of `A x = b` where `free` is set. Entries of `x` outside
/// `free` are held at their incoming values (Dirichlet data) and enter the
/// free rows through `apply`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    diagonal: &[f64],
    b: &[f64],
    x: &mut [f64],
    free: &[bool],
    rel_tol: f64,
) -> Result<usize> {
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = (0..n).map(|i| if free[i] { b[i] - ax[i] } else { 0.0 }).collect();
    let inv: Vec<f64> = diagonal.iter().zip(free).map(|(d, &f)| if f && *d > 0.0 { 1.0 / d } else { 0.0 }).collect();
    let scale = dot(
        &b.iter().zip(free).map(|(v, &f)| if f { *v } else { 0.0 }).collect::<Vec<_>>(),
        &b.iter().zip(&inv).map(|(v, w)| v * w).collect::<Vec<_>>(),
    )
    .sqrt();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, w)| a * w).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let target = rel_tol * scale.max(f64::MIN_POSITIVE);
    let max_iter = 20 * n.max(10);
    let mut ap = vec![0.0; n];
    for iter in 0..max_iter {
        if rz.max(0.0).sqrt() <= target {
            return Ok(iter);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDivergence { iterations: iter, residual: rz.sqrt() });
        }
        let alpha = rz / pap;
        for i in 0..n {
            if free[i] {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDivergence { iterations: max_iter, residual: rz.max(0.0).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 50;
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] = 3.0 * x[i] - l - r;
            }
        };
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&truth, &mut b);
        let mut x = vec![0.0; n];
        conjugate_gradient(apply, &vec![3.0; n], &b, &mut x, &vec![true; n], 1e-13).unwrap();
        for (a, t) in x.iter().zip(&truth) {
            assert!((a - t).abs() < 1e-11);
        }
    }
}
