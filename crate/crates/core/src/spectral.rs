//! Eigendecomposition of reversible kernels in the pi-weighted inner product.
//!
//! For a reversible chain the matrix `S = D^{1/2} P D^{-1/2}`, `D = diag(pi)`,
//! is symmetric. Its entries equal `sqrt(P(x,y) P(y,x))`, which is how they
//! are formed here: the geometric mean needs no division by `pi` and is
//! symmetric to the last bit. Cyclic Jacobi rotations diagonalize `S`, and
//! the right eigenvectors of `P` are `f_i = D^{-1/2} u_i`, orthonormal in
//! `<f, g>_pi = sum_x pi(x) f(x) g(x)`.

use ndarray::{Array1, Array2};

use crate::chain::{Distribution, ValidatedChain};
use crate::error::{Error, Result};
use crate::kernel::{check_len, Kernel, KernelMode, NEGATIVE_MASS_FLOOR};

/// Convergence threshold on the off-diagonal Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 60;

/// Eigenvalues (descending) and pi-orthonormal right eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Array1<f64>,
    /// Columns are `f_i`.
    basis: Array2<f64>,
    /// Columns are the orthonormal eigenvectors `u_i` of `S`.
    sym_basis: Array2<f64>,
    pi: Array1<f64>,
    sqrt_pi: Array1<f64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Columns are the pi-orthonormal right eigenvectors.
    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn stationary(&self) -> &Array1<f64> {
        &self.pi
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// `sqrt(max pi / min pi)`: the factor by which absolute eigenvector
    /// error is amplified in kernel entries.
    pub fn conditioning(&self) -> f64 {
        let max = self.sqrt_pi.iter().cloned().fold(0.0, f64::max);
        let min = self.sqrt_pi.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Largest `|lambda_i|` over `i >= 2`.
    pub fn second_modulus(&self) -> f64 {
        self.eigenvalues.iter().skip(1).fold(0.0, |m, l| m.max(l.abs()))
    }

    /// Coefficients `<f, f_i>_pi` of a function.
    pub fn coefficients(&self, f: &[f64]) -> Array1<f64> {
        let weighted: Array1<f64> = f.iter().zip(self.pi.iter()).map(|(v, p)| v * p).collect();
        weighted.dot(&self.basis)
    }

    /// `sum_i c_i f_i`.
    pub fn synthesize(&self, coeffs: &Array1<f64>) -> Array1<f64> {
        self.basis.dot(coeffs)
    }

    /// `sum_i lambda_i f_i(x) f_i(y) pi(y)` entrywise.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.sym_matrix(|l| l)
    }

    /// `g_t(P)` for the given mode without clipping round-off negatives.
    pub fn functional_calculus(&self, mode: KernelMode, t: f64) -> Result<Array2<f64>> {
        mode.check_time(t)?;
        Ok(self.sym_matrix(|l| mode.g(l, t)))
    }

    /// `U g(Lambda) U^T` rescaled back to the kernel: entry `(x, y)` is
    /// multiplied by `sqrt(pi(y) / pi(x))`.
    fn sym_matrix(&self, g: impl Fn(f64) -> f64) -> Array2<f64> {
        let n = self.n();
        let mut scaled = self.sym_basis.clone();
        for (i, mut col) in scaled.columns_mut().into_iter().enumerate() {
            col *= g(self.eigenvalues[i]);
        }
        let mut k = scaled.dot(&self.sym_basis.t());
        for x in 0..n {
            for y in 0..n {
                k[[x, y]] *= self.sqrt_pi[y] / self.sqrt_pi[x];
            }
        }
        k
    }
}

/// Diagonalizes a reversible, irreducible chain.
pub fn decompose(chain: &ValidatedChain) -> Result<Spectrum> {
    if !chain.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    if !chain.is_reversible() {
        return Err(Error::NotReversible);
    }
    let p = chain.matrix();
    let n = chain.n();
    let pi = chain.pi().clone();
    if pi.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::DomainError("stationary mass underflows f64 on some state".into()));
    }
    let sqrt_pi = pi.mapv(f64::sqrt);

    let mut s = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            s[x * n + y] = if x == y { p[[x, x]] } else { (p[[x, y]] * p[[y, x]]).sqrt() };
        }
    }
    let (values, vectors) = jacobi_eigen(s, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let eigenvalues: Array1<f64> = order.iter().map(|&i| values[i]).collect();
    let mut sym_basis = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for x in 0..n {
            sym_basis[[x, col]] = vectors[x * n + i];
        }
    }
    // orient the top eigenvector along sqrt(pi)
    if sym_basis.column(0).dot(&sqrt_pi) < 0.0 {
        sym_basis.column_mut(0).mapv_inplace(|v| -v);
    }
    let mut basis = sym_basis.clone();
    for x in 0..n {
        basis.row_mut(x).mapv_inplace(|v| v / sqrt_pi[x]);
    }
    Ok(Spectrum { eigenvalues, basis, sym_basis, pi, sqrt_pi })
}

/// Cyclic Jacobi on a symmetric row-major matrix. Returns unsorted
/// eigenvalues and a row-major matrix whose columns are eigenvectors.
pub fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[p * n + q] * a[p * n + q];
            }
        }
        (2.0 * s).sqrt()
    };
    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= JACOBI_TOL {
            break;
        }
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(Error::JacobiNoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // negligible relative to both diagonal entries
                if sweeps > 4 && app.abs() + 100.0 * apq.abs() == app.abs() && aqq.abs() + 100.0 * apq.abs() == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_p = c * akp - s * akq;
                    let new_q = s * akp + c * akq;
                    a[k * n + p] = new_p;
                    a[p * n + k] = new_p;
                    a[k * n + q] = new_q;
                    a[q * n + k] = new_q;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    Ok((values, v))
}

impl Kernel for Spectrum {
    fn n(&self) -> usize {
        self.pi.len()
    }

    fn pi(&self) -> &Array1<f64> {
        &self.pi
    }

    fn kernel_matrix(&self, mode: KernelMode, t: f64) -> Result<Array2<f64>> {
        let mut k = self.functional_calculus(mode, t)?;
        for mut row in k.rows_mut() {
            let cleaned = Distribution::from_clipped(row.to_vec(), NEGATIVE_MASS_FLOOR)?;
            row.assign(&Array1::from(cleaned.into_vec()));
        }
        Ok(k)
    }

    fn kernel_row(&self, mode: KernelMode, t: f64, start: &Distribution) -> Result<Distribution> {
        check_len(self.n(), start)?;
        mode.check_time(t)?;
        let mu = Array1::from(start.as_slice().to_vec());
        // a_i = sum_x mu(x) f_i(x)
        let a = mu.dot(&self.basis);
        let scaled: Array1<f64> = a.iter().zip(self.eigenvalues.iter()).map(|(c, &l)| c * mode.g(l, t)).collect();
        let row = self.sym_basis.dot(&scaled) * &self.sqrt_pi;
        Distribution::from_clipped(row.to_vec(), NEGATIVE_MASS_FLOOR)
    }
}

/// Heat kernel from the Poisson-weighted lazy series
/// `H_t = sum_k e^{-2t} (2t)^k / k! P_L^k`.
///
/// Works for any stochastic matrix; serves as an oracle for the spectral
/// and power engines. The series is cut once `k > 2t` and the geometric
/// bound on the neglected Poisson mass drops below `tol`.
pub fn heat_series_reference(chain: &ValidatedChain, t: f64, tol: f64) -> Result<Array2<f64>> {
    if !(t >= 0.0 && t.is_finite()) || !(tol > 0.0) {
        return Err(Error::DomainError(format!("heat series needs t >= 0 and tol > 0, got t={t}, tol={tol}")));
    }
    let n = chain.n();
    let lazy = (chain.matrix() + &Array2::<f64>::eye(n)) * 0.5;
    let rate = 2.0 * t;
    // log Poisson weights, k = 0, 1, ...
    let mut log_w = vec![-rate];
    loop {
        let k = log_w.len();
        let next = if rate == 0.0 { f64::NEG_INFINITY } else { log_w[k - 1] + rate.ln() - (k as f64).ln() };
        let tail_bound = next.exp() / (1.0 - rate / (k as f64 + 1.0));
        log_w.push(next);
        if (k as f64 + 1.0 > rate && tail_bound <= tol) || k >= 100_000 {
            break;
        }
    }
    let mut h = Array2::zeros((n, n));
    let mut power = Array2::<f64>::eye(n);
    for lw in log_w {
        h.scaled_add(lw.exp(), &power);
        power = power.dot(&lazy);
    }
    Ok(h)
}
