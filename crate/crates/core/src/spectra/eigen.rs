//! Symmetric eigensolvers.
//!
//! [`jacobi`] is the reference solver: cyclic Jacobi rotations with an
//! orthonormal eigenbasis. [`tridiagonal_ql`] returns eigenvalues only
//! (Householder reduction followed by implicit QL) and is what the ensemble
//! code calls, since it is an order of magnitude cheaper at `p = 200`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Sweep cap of the Jacobi solver.
pub const JACOBI_MAX_SWEEPS: usize = 30;
/// Off-diagonal Frobenius mass, relative to `||m||_F`, at which Jacobi stops.
pub const JACOBI_REL_TOL: f64 = 1e-12;

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi. Returns eigenvalues (unsorted, in diagonal order) and the
/// matrix whose columns are the matching eigenvectors.
pub fn jacobi(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    if n < 2 || scale == 0.0 {
        return Ok((a.diagonal(), v));
    }
    for _sweep in 0..=JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_REL_TOL * scale {
            return Ok((a.diagonal(), v));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[(k, p)] = new_kp;
                    a[(p, k)] = new_kp;
                    a[(k, q)] = new_kq;
                    a[(q, k)] = new_kq;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::NoConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Eigenvalues of a symmetric matrix via Householder tridiagonalization and
/// the implicit QL algorithm. Unsorted.
pub fn tridiagonal_ql(m: &Matrix) -> Result<Vec<f64>> {
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder(&mut a, n, &mut d, &mut e);
    implicit_ql(&mut d, &mut e)?;
    Ok(d)
}

/// Reduces the lower triangle of `a` (row-major, `n x n`) to tridiagonal form.
/// On return `d` holds the diagonal and `e[i]` the coupling of `i - 1` and `i`.
fn householder(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[idx(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[idx(i, l)];
            } else {
                for k in 0..=l {
                    a[idx(i, k)] /= scale;
                    h += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[idx(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[idx(j, k)] * a[idx(i, k)];
                    }
                    for k in j + 1..=l {
                        g += a[idx(k, j)] * a[idx(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * a[idx(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[idx(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[idx(j, k)] -= f * e[k] + g * a[idx(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[idx(i, l)];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[idx(i, i)];
    }
}

const QL_MAX_ITER: usize = 60;

fn implicit_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence { sweeps: QL_MAX_ITER });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    #[test]
    fn diagonal_input_is_returned() {
        let m = Matrix::diag(&[2.0, 8.0]);
        assert_eq!(sorted(jacobi(&m).unwrap().0), vec![8.0, 2.0]);
        assert_eq!(sorted(tridiagonal_ql(&m).unwrap()), vec![8.0, 2.0]);
    }

    #[test]
    fn rank_one_two_by_two_is_exact() {
        // M(1) M(1)' of the moving-average example
        let m = Matrix::from_rows(&[[5.0, -10.0], [-10.0, 20.0]]).unwrap();
        assert_eq!(sorted(jacobi(&m).unwrap().0), vec![25.0, 0.0]);
    }

    #[test]
    fn solvers_agree_on_a_tridiagonal_family() {
        // 1-D Laplacian: eigenvalues 2 - 2 cos(k pi / (n + 1))
        let n = 12;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 2.0;
            if i + 1 < n {
                m[(i, i + 1)] = -1.0;
                m[(i + 1, i)] = -1.0;
            }
        }
        let exact = sorted(
            (1..=n)
                .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
                .collect(),
        );
        for got in [sorted(jacobi(&m).unwrap().0), sorted(tridiagonal_ql(&m).unwrap())] {
            for (a, b) in got.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
