//! Small dense and banded kernels used by the propagator.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Thomas factorization of a general complex tridiagonal matrix, kept for
/// repeated solves. No pivoting: the matrices factored here are strictly
/// diagonally dominant.
#[derive(Debug, Clone)]
pub(crate) struct Tridiagonal {
    lower: Vec<C>,
    upper_scaled: Vec<C>,
    inv_pivot: Vec<C>,
}

impl Tridiagonal {
    /// `lower[i] = M[i, i-1]`, `diag[i] = M[i, i]`, `upper[i] = M[i, i+1]`.
    pub fn factor(lower: &[C], diag: &[C], upper: &[C]) -> Result<Self> {
        let n = diag.len();
        let mut upper_scaled = vec![ZERO; n];
        let mut inv_pivot = vec![ZERO; n];
        let mut prev = ZERO;
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * prev
            };
            if pivot.norm() == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular { pivot: i });
            }
            inv_pivot[i] = pivot.inv();
            prev = if i + 1 < n {
                upper[i] * inv_pivot[i]
            } else {
                ZERO
            };
            upper_scaled[i] = prev;
        }
        Ok(Tridiagonal {
            lower: lower.to_vec(),
            upper_scaled,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    /// Overwrites `x` with the solution of `M x = x`.
    pub fn solve_in_place(&self, x: &mut [C]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.upper_scaled[i] * x[i + 1];
        }
    }
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub(crate) struct DenseLu {
    n: usize,
    /// Packed `L` (unit diagonal) and `U`, column-major.
    lu_t: Vec<C>,
    inv_diag: Vec<C>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(n: usize, mut a: Vec<C>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular { pivot: k });
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let inv = pivot_row[k].inv();
            for row in tail.chunks_exact_mut(n) {
                let l = row[k] * inv;
                row[k] = l;
                if l == ZERO {
                    continue;
                }
                for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *x -= l * u;
                }
            }
        }
        let mut lu_t = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                lu_t[c * n + r] = a[r * n + c];
            }
        }
        let inv_diag = (0..n).map(|i| a[i * n + i].inv()).collect();
        Ok(DenseLu {
            n,
            lu_t,
            inv_diag,
            perm,
        })
    }

    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let n = self.n;
        let mut x: Vec<C> = self.perm.iter().map(|&p| b[p]).collect();
        // Column-oriented substitutions on the transposed factors: each inner
        // loop is a contiguous axpy.
        for j in 0..n {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            let col = &self.lu_t[j * n + j + 1..(j + 1) * n];
            for (xi, &l) in x[j + 1..].iter_mut().zip(col) {
                *xi -= l * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] *= self.inv_diag[j];
            let xj = x[j];
            let col = &self.lu_t[j * n..j * n + j];
            for (xi, &u) in x[..j].iter_mut().zip(col) {
                *xi -= u * xj;
            }
        }
        x
    }
}

pub(crate) fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Convergence {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Restarted GMRES for `op(x) = b`, starting from `x`. Stops when
/// `|b - op(x)| <= tol * |b|` or after `max_iter` inner iterations in total.
pub(crate) fn gmres<F>(
    op: F,
    b: &[C],
    x: &mut [C],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Convergence
where
    F: Fn(&[C], &mut [C]),
{
    let n = b.len();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    let mut work = vec![ZERO; n];
    loop {
        op(x, &mut work);
        let r: Vec<C> = b.iter().zip(&work).map(|(b, w)| b - w).collect();
        let beta = norm(&r);
        if beta <= tol * bnorm || iterations >= max_iter {
            return Convergence {
                iterations,
                residual: beta / bnorm,
                converged: beta <= tol * bnorm,
            };
        }
        let m = restart.min(max_iter - iterations).max(1);
        let mut basis: Vec<Vec<C>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![ZERO; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = C::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut w = vec![ZERO; n];
            op(&basis[j], &mut w);
            for (i, v) in basis.iter().enumerate() {
                let h = dot(v, &w);
                hess[i][j] = h;
                w.iter_mut().zip(v).for_each(|(w, v)| *w -= h * v);
            }
            let wn = norm(&w);
            hess[j + 1][j] = C::new(wn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * hess[i][j] + sn[i].conj() * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let (a, bb) = (hess[j][j], hess[j + 1][j]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if denom == 0.0 {
                used = j;
                break;
            }
            cs[j] = a / denom;
            sn[j] = bb / denom;
            hess[j][j] = C::new(denom, 0.0);
            hess[j + 1][j] = ZERO;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            used = j + 1;
            iterations += 1;
            if g[j + 1].norm() <= tol * bnorm * 0.5 || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let s: C = (i + 1..used).map(|k| hess[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[k]).for_each(|(x, v)| *x += yk * v);
        }
        if used == 0 {
            op(x, &mut work);
            let res = norm(&b.iter().zip(&work).map(|(b, w)| b - w).collect::<Vec<_>>());
            return Convergence {
                iterations,
                residual: res / bnorm,
                converged: res <= tol * bnorm,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn matvec(n: usize, a: &[C], x: &[C]) -> Vec<C> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
            .collect()
    }

    fn test_matrix(n: usize) -> Vec<C> {
        let mut a = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = c(
                    ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5,
                    ((i + 2 * j) % 5) as f64 / 5.0,
                );
            }
            a[i * n + i] += c(3.0, 1.0);
        }
        a
    }

    #[test]
    fn tridiagonal_solves_against_dense_product() {
        let n = 40;
        let lower: Vec<C> = (0..n).map(|i| c(-0.3, 0.1 * i as f64 / n as f64)).collect();
        let diag: Vec<C> = (0..n).map(|i| c(1.0, 0.5 + i as f64 * 0.01)).collect();
        let upper: Vec<C> = (0..n).map(|i| c(-0.2, -0.05 * (i % 3) as f64)).collect();
        let t = Tridiagonal::factor(&lower, &diag, &upper).unwrap();
        let b: Vec<C> = (0..n)
            .map(|i| c((i as f64).sin(), (i as f64).cos()))
            .collect();
        let mut x = b.clone();
        t.solve_in_place(&mut x);
        for i in 0..n {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += lower[i] * x[i - 1];
            }
            if i + 1 < n {
                r += upper[i] * x[i + 1];
            }
            assert!((r - b[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn tridiagonal_singular_pivot() {
        let z = vec![ZERO; 3];
        assert!(Tridiagonal::factor(&z, &z, &z).is_err());
    }

    #[test]
    fn dense_lu_identity_and_random() {
        let n = 5;
        let mut id = vec![ZERO; n * n];
        for i in 0..n {
            id[i * n + i] = c(1.0, 0.0);
        }
        let lu = DenseLu::factor(n, id).unwrap();
        let b: Vec<C> = (0..n).map(|i| c(i as f64, -1.0)).collect();
        assert_eq!(lu.solve(&b), b);

        let n = 30;
        let a = test_matrix(n);
        let lu = DenseLu::factor(n, a.clone()).unwrap();
        let b: Vec<C> = (0..n).map(|i| c(1.0 / (i + 1) as f64, 0.3)).collect();
        let x = lu.solve(&b);
        let r = matvec(n, &a, &x);
        let err: Vec<C> = r.iter().zip(&b).map(|(r, b)| r - b).collect();
        assert!(norm(&err) <= 1e-12 * norm(&b));
    }

    #[test]
    fn dense_lu_needs_pivoting() {
        // [[0, 1], [1, 0]]
        let a = vec![ZERO, c(1.0, 0.0), c(1.0, 0.0), ZERO];
        let lu = DenseLu::factor(2, a).unwrap();
        assert_eq!(
            lu.solve(&[c(2.0, 0.0), c(3.0, 0.0)]),
            vec![c(3.0, 0.0), c(2.0, 0.0)]
        );
        assert!(DenseLu::factor(2, vec![ZERO; 4]).is_err());
    }

    #[test]
    fn gmres_converges() {
        let n = 30;
        let a = test_matrix(n);
        let b: Vec<C> = (0..n).map(|i| c(1.0, i as f64 * 0.1)).collect();
        let mut x = vec![ZERO; n];
        let conv = gmres(
            |v, out| out.copy_from_slice(&matvec(n, &a, v)),
            &b,
            &mut x,
            1e-12,
            10,
            500,
        );
        assert!(conv.converged, "{conv:?}");
        let r = matvec(n, &a, &x);
        let err: Vec<C> = r.iter().zip(&b).map(|(r, b)| r - b).collect();
        assert!(norm(&err) <= 1e-11 * norm(&b));
    }

    #[test]
    fn gmres_reports_failure() {
        let n = 30;
        let a = test_matrix(n);
        let b: Vec<C> = (0..n).map(|i| c(1.0, i as f64 * 0.1)).collect();
        let mut x = vec![ZERO; n];
        let conv = gmres(
            |v, out| out.copy_from_slice(&matvec(n, &a, v)),
            &b,
            &mut x,
            1e-14,
            2,
            3,
        );
        assert!(!conv.converged);
        assert_eq!(conv.iterations, 3);
    }
}
