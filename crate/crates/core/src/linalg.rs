//! Small dense linear-algebra kernels: LU with partial pivoting and the
//! Grassmann–Taksar–Heyman elimination for stationary vectors.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// LU factorization `PA = LU` with partial (row) pivoting, stored compactly.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Array2<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factor a square matrix. Fails with `SingularSystem` when a pivot
    /// underflows relative to the matrix scale.
    pub fn factor(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Shape(format!("LU needs a square matrix, got {}x{}", n, a.ncols())));
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[[i, k]].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= scale * 1e-14 {
                return Err(Error::SingularSystem(format!("pivot {pivot:e} in column {k}")));
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
            }
            let d = lu[[k, k]];
            for i in (k + 1)..n {
                let l = lu[[i, k]] / d;
                lu[[i, k]] = l;
                if l != 0.0 {
                    for j in (k + 1)..n {
                        lu[[i, j]] -= l * lu[[k, j]];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.lu.nrows();
        let mut x: Array1<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc / self.lu[[i, i]];
        }
        x
    }
}

/// Stationary vector of an irreducible stochastic matrix by GTH elimination.
///
/// The algorithm never subtracts, so every component carries small relative
/// error even when the entries of `pi` span many orders of magnitude.
/// Returns `None` when a censored row has no outgoing mass, which only
/// happens for reducible input.
pub fn gth_stationary(p: &Array2<f64>) -> Option<Array1<f64>> {
    let n = p.nrows();
    let mut a = p.clone();
    let mut out_mass = vec![0.0; n];
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[[k, j]]).sum();
        if !(s > 0.0) {
            return None;
        }
        out_mass[k] = s;
        for i in 0..k {
            let aik = a[[i, k]];
            if aik == 0.0 {
                continue;
            }
            let f = aik / s;
            for j in 0..k {
                a[[i, j]] += f * a[[k, j]];
            }
        }
    }
    let mut pi = Array1::zeros(n);
    pi[0] = 1.0;
    for k in 1..n {
        let acc: f64 = (0..k).map(|i| pi[i] * a[[i, k]]).sum();
        pi[k] = acc / out_mass[k];
    }
    let total = pi.sum();
    if !(total.is_finite() && total > 0.0) {
        return None;
    }
    pi /= total;
    Some(pi)
}

/// Stationary vector by solving `(P^T - I) pi = 0` with the last equation
/// replaced by the normalization `sum(pi) = 1`.
pub fn lu_stationary(p: &Array2<f64>) -> Result<Array1<f64>> {
    let n = p.nrows();
    let mut a = p.t().to_owned();
    for i in 0..n {
        a[[i, i]] -= 1.0;
    }
    a.row_mut(n - 1).fill(1.0);
    let mut b = Array1::zeros(n);
    b[n - 1] = 1.0;
    Ok(Lu::factor(&a)?.solve(&b))
}

/// `a * b` for square matrices.
pub fn matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    a.dot(b)
}

/// Identity of size `n`.
pub fn identity(n: usize) -> Array2<f64> {
    Array2::eye(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn lu_solves_small_system() {
        let a = array![[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        let b = array![3.0, 2.0, 4.0];
        let x = Lu::factor(&a).unwrap().solve(&b);
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-14), "{r}");
    }

    #[test]
    fn lu_rejects_singular() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(Lu::factor(&a), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn gth_and_lu_agree_on_three_state_chain() {
        let p = array![[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]];
        let g = gth_stationary(&p).unwrap();
        let l = lu_stationary(&p).unwrap();
        for (x, y) in g.iter().zip(l.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((g[0] - 0.25).abs() < 1e-15 && (g[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gth_keeps_relative_accuracy_on_graded_chain() {
        // birth-death chain with up/down ratio 1e6: pi(k) ~ 1e6^k
        let n = 20;
        let mut p = Array2::zeros((n, n));
        let up = 1.0 - 1e-6;
        p[[0, 1]] = 1.0;
        for i in 1..n - 1 {
            p[[i, i + 1]] = up;
            p[[i, i - 1]] = 1e-6;
        }
        p[[n - 1, n - 2]] = 1.0;
        let pi = gth_stationary(&p).unwrap();
        // detailed balance pi(i) P(i,i+1) = pi(i+1) P(i+1,i), relative
        for i in 1..n - 2 {
            let lhs = pi[i] * p[[i, i + 1]];
            let rhs = pi[i + 1] * p[[i + 1, i]];
            assert!(((lhs - rhs) / rhs).abs() < 1e-13, "state {i}");
        }
        assert!(pi.iter().all(|&v| v > 0.0));
    }
}
