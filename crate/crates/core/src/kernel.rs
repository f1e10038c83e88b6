//! Kernel families `P^t`, `P_L^t`, `A_t`, `H_t` and the engines that evaluate them.
//!
//! Two engines implement [`Kernel`]:
//!
//! * [`Spectrum`](crate::spectral::Spectrum) evaluates `g_t(P)` through the
//!   pi-orthonormal eigenbasis. Fast, and exact up to round-off when the
//!   stationary distribution is not too graded.
//! * [`PowerKernel`] forms the kernels from products of nonnegative matrices
//!   (binary powering, and scaling-and-squaring for the heat kernel). No
//!   cancellation occurs, so every entry keeps small relative error, which
//!   matters for chains whose `pi` spans tens of orders of magnitude and for
//!   non-reversible chains.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::chain::{tv, Distribution, ValidatedChain};
use crate::error::{Error, Result};
use crate::spectral::{decompose, Spectrum};

/// Which kernel family a time index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMode {
    /// `P^t`
    Disc,
    /// `((I + P) / 2)^t`
    Lazy,
    /// `(P^t + P^{t+1}) / 2`
    Ave,
    /// `exp(-t (I - P))`
    Heat,
}

impl KernelMode {
    pub const ALL: [KernelMode; 4] = [KernelMode::Disc, KernelMode::Lazy, KernelMode::Ave, KernelMode::Heat];

    pub fn name(self) -> &'static str {
        match self {
            KernelMode::Disc => "disc",
            KernelMode::Lazy => "lazy",
            KernelMode::Ave => "ave",
            KernelMode::Heat => "heat",
        }
    }

    pub fn is_discrete(self) -> bool {
        self != KernelMode::Heat
    }

    /// The scalar map applied to each eigenvalue.
    pub fn g(self, lambda: f64, t: f64) -> f64 {
        match self {
            KernelMode::Disc => powi_time(lambda, t),
            KernelMode::Lazy => powi_time(0.5 * (1.0 + lambda), t),
            KernelMode::Ave => 0.5 * powi_time(lambda, t) * (1.0 + lambda),
            KernelMode::Heat => (-t * (1.0 - lambda)).exp(),
        }
    }

    pub fn check_time(self, t: f64) -> Result<()> {
        let ok = t.is_finite() && t >= 0.0 && (!self.is_discrete() || t.fract() == 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidTime { t, mode: self.name() })
        }
    }
}

fn powi_time(x: f64, t: f64) -> f64 {
    if t <= i32::MAX as f64 {
        x.powi(t as i32)
    } else {
        x.powf(t)
    }
}

impl fmt::Display for KernelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disc" => Ok(KernelMode::Disc),
            "lazy" => Ok(KernelMode::Lazy),
            "ave" => Ok(KernelMode::Ave),
            "heat" => Ok(KernelMode::Heat),
            other => Err(Error::ParamError(format!("unknown mode {other:?}"))),
        }
    }
}

/// Anything that can evaluate the four kernel families of one chain.
pub trait Kernel: Sync {
    fn n(&self) -> usize;

    fn pi(&self) -> &Array1<f64>;

    /// All rows of `K_t` for the given mode.
    fn kernel_matrix(&self, mode: KernelMode, t: f64) -> Result<Array2<f64>>;

    /// `mu K_t`.
    fn kernel_row(&self, mode: KernelMode, t: f64, start: &Distribution) -> Result<Distribution> {
        check_len(self.n(), start)?;
        let k = self.kernel_matrix(mode, t)?;
        let row = Array1::from(start.as_slice().to_vec()).dot(&k);
        Distribution::from_clipped(row.to_vec(), NEGATIVE_MASS_FLOOR)
    }

    /// `d(t, x)` for every starting state `x`.
    fn distances_from_states(&self, mode: KernelMode, t: f64) -> Result<Vec<f64>> {
        let k = self.kernel_matrix(mode, t)?;
        let pi = self.pi().as_slice().expect("contiguous");
        Ok(k.outer_iter().map(|r| tv(r.as_slice().expect("contiguous"), pi).min(1.0)).collect())
    }
}

/// Entries below `-NEGATIVE_MASS_FLOOR` signal a numerical failure.
pub const NEGATIVE_MASS_FLOOR: f64 = 1e-11;

pub(crate) fn check_len(n: usize, d: &Distribution) -> Result<()> {
    if d.len() != n {
        return Err(Error::LengthMismatch { left: n, right: d.len() });
    }
    Ok(())
}

const CACHE_LEVELS: usize = 64;
/// Number of Taylor terms for `exp(-tau (I - P))` with `tau <= 1`; the
/// truncated Poisson(1) tail is below `1e-17`.
const HEAT_BASE_TERMS: usize = 19;

/// Direct evaluation from products of nonnegative matrices.
#[derive(Debug)]
pub struct PowerKernel {
    p: Array2<f64>,
    lazy: Array2<f64>,
    pi: Array1<f64>,
    disc_squares: Vec<OnceLock<Array2<f64>>>,
    lazy_squares: Vec<OnceLock<Array2<f64>>>,
    small_powers: OnceLock<Vec<Array2<f64>>>,
}

impl PowerKernel {
    pub fn new(chain: &ValidatedChain) -> Self {
        let p = chain.matrix().clone();
        let n = p.nrows();
        let lazy = (&p + &Array2::<f64>::eye(n)) * 0.5;
        Self {
            p,
            lazy,
            pi: chain.pi().clone(),
            disc_squares: (0..CACHE_LEVELS).map(|_| OnceLock::new()).collect(),
            lazy_squares: (0..CACHE_LEVELS).map(|_| OnceLock::new()).collect(),
            small_powers: OnceLock::new(),
        }
    }

    fn square_level<'a>(base: &'a Array2<f64>, cache: &'a [OnceLock<Array2<f64>>], level: usize) -> &'a Array2<f64> {
        if level == 0 {
            return base;
        }
        cache[level].get_or_init(|| {
            let half = Self::square_level(base, cache, level - 1);
            half.dot(half)
        })
    }

    fn power(&self, lazy: bool, t: u64) -> Array2<f64> {
        let (base, cache) = if lazy { (&self.lazy, &self.lazy_squares) } else { (&self.p, &self.disc_squares) };
        let mut acc: Option<Array2<f64>> = None;
        let mut level = 0;
        let mut rest = t;
        while rest > 0 {
            if rest & 1 == 1 {
                let sq = Self::square_level(base, cache, level);
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => a.dot(sq),
                });
            }
            rest >>= 1;
            level += 1;
        }
        acc.unwrap_or_else(|| Array2::eye(self.p.nrows()))
    }

    fn heat(&self, t: f64) -> Array2<f64> {
        let n = self.p.nrows();
        if t == 0.0 {
            return Array2::eye(n);
        }
        let halvings = if t > 1.0 { t.log2().ceil() as i32 } else { 0 };
        let tau = t / 2f64.powi(halvings);
        let powers = self.small_powers.get_or_init(|| {
            let mut v = Vec::with_capacity(HEAT_BASE_TERMS);
            v.push(Array2::eye(n));
            for k in 1..HEAT_BASE_TERMS {
                let next = v[k - 1].dot(&self.p);
                v.push(next);
            }
            v
        });
        let mut h = Array2::zeros((n, n));
        let mut w = (-tau).exp();
        for (k, pk) in powers.iter().enumerate() {
            if k > 0 {
                w *= tau / k as f64;
            }
            h.scaled_add(w, pk);
        }
        for _ in 0..halvings {
            h = h.dot(&h);
        }
        h
    }

    fn evolve_row(&self, base: &Array2<f64>, mut v: Array1<f64>, steps: u64) -> Array1<f64> {
        for _ in 0..steps {
            v = v.dot(base);
        }
        v
    }
}

/// Above this many steps a row is propagated through matrix powers instead
/// of repeated vector products.
const ROW_ITERATION_LIMIT: u64 = 256;

impl Kernel for PowerKernel {
    fn n(&self) -> usize {
        self.p.nrows()
    }

    fn pi(&self) -> &Array1<f64> {
        &self.pi
    }

    fn kernel_matrix(&self, mode: KernelMode, t: f64) -> Result<Array2<f64>> {
        mode.check_time(t)?;
        Ok(match mode {
            KernelMode::Disc => self.power(false, t as u64),
            KernelMode::Lazy => self.power(true, t as u64),
            KernelMode::Ave => self.power(false, t as u64).dot(&self.lazy),
            KernelMode::Heat => self.heat(t),
        })
    }

    fn kernel_row(&self, mode: KernelMode, t: f64, start: &Distribution) -> Result<Distribution> {
        check_len(self.n(), start)?;
        mode.check_time(t)?;
        let v = Array1::from(start.as_slice().to_vec());
        let steps = t as u64;
        let row = match mode {
            KernelMode::Disc if steps <= ROW_ITERATION_LIMIT => self.evolve_row(&self.p, v, steps),
            KernelMode::Lazy if steps <= ROW_ITERATION_LIMIT => self.evolve_row(&self.lazy, v, steps),
            KernelMode::Ave if steps <= ROW_ITERATION_LIMIT => self.evolve_row(&self.p, v, steps).dot(&self.lazy),
            _ => v.dot(&self.kernel_matrix(mode, t)?),
        };
        Distribution::from_clipped(row.to_vec(), NEGATIVE_MASS_FLOOR)
    }
}

/// Above this value of `sqrt(max pi / min pi)` the spectral engine loses
/// entrywise accuracy and [`Engine::for_chain`] picks [`PowerKernel`].
pub const SPECTRAL_CONDITIONING_LIMIT: f64 = 1e3;

/// The engine chosen for one chain.
#[derive(Debug)]
pub enum Engine {
    Spectral(Spectrum),
    Power(PowerKernel),
}

impl Engine {
    /// Spectral evaluation for well-conditioned reversible chains, matrix
    /// powers for everything else.
    pub fn for_chain(chain: &ValidatedChain) -> Result<Self> {
        if chain.is_reversible() && chain.is_irreducible() {
            if let Ok(spectrum) = decompose(chain) {
                if spectrum.conditioning() <= SPECTRAL_CONDITIONING_LIMIT {
                    return Ok(Engine::Spectral(spectrum));
                }
            }
        }
        Ok(Engine::Power(PowerKernel::new(chain)))
    }

    pub fn power(chain: &ValidatedChain) -> Self {
        Engine::Power(PowerKernel::new(chain))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Spectral(_) => "spectral",
            Engine::Power(_) => "power",
        }
    }
}

impl Kernel for Engine {
    fn n(&self) -> usize {
        match self {
            Engine::Spectral(s) => s.n(),
            Engine::Power(p) => p.n(),
        }
    }

    fn pi(&self) -> &Array1<f64> {
        match self {
            Engine::Spectral(s) => Kernel::pi(s),
            Engine::Power(p) => p.pi(),
        }
    }

    fn kernel_matrix(&self, mode: KernelMode, t: f64) -> Result<Array2<f64>> {
        match self {
            Engine::Spectral(s) => s.kernel_matrix(mode, t),
            Engine::Power(p) => p.kernel_matrix(mode, t),
        }
    }

    fn kernel_row(&self, mode: KernelMode, t: f64, start: &Distribution) -> Result<Distribution> {
        match self {
            Engine::Spectral(s) => s.kernel_row(mode, t, start),
            Engine::Power(p) => p.kernel_row(mode, t, start),
        }
    }

    fn distances_from_states(&self, mode: KernelMode, t: f64) -> Result<Vec<f64>> {
        match self {
            Engine::Spectral(s) => s.distances_from_states(mode, t),
            Engine::Power(p) => p.distances_from_states(mode, t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{validate_chain, ChainSpec};
    use ndarray::array;

    fn chain(p: Array2<f64>) -> ValidatedChain {
        validate_chain(ChainSpec::new("t", p).unwrap()).unwrap()
    }

    #[test]
    fn g_is_one_at_lambda_one() {
        for mode in KernelMode::ALL {
            for t in [0.0, 1.0, 7.0, 30.0] {
                assert_eq!(mode.g(1.0, t), 1.0);
            }
        }
    }

    #[test]
    fn mode_parsing_and_time_checks() {
        assert_eq!("ave".parse::<KernelMode>().unwrap(), KernelMode::Ave);
        assert!("avg".parse::<KernelMode>().is_err());
        assert!(KernelMode::Disc.check_time(1.5).is_err());
        assert!(KernelMode::Heat.check_time(1.5).is_ok());
        assert!(KernelMode::Heat.check_time(-1.0).is_err());
    }

    #[test]
    fn power_kernel_matches_naive_products() {
        let c = chain(array![[0.1, 0.6, 0.3], [0.2, 0.2, 0.6], [0.5, 0.25, 0.25]]);
        let pk = PowerKernel::new(&c);
        let mut naive = Array2::<f64>::eye(3);
        for t in 0..40u64 {
            let k = pk.kernel_matrix(KernelMode::Disc, t as f64).unwrap();
            let err = (&k - &naive).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-14, "t={t} err={err}");
            naive = naive.dot(c.matrix());
        }
    }

    #[test]
    fn heat_of_flip_chain() {
        let pk = PowerKernel::new(&chain(array![[0.0, 1.0], [1.0, 0.0]]));
        for t in [0.25, 1.0, 3.7, 20.0] {
            let h = pk.kernel_matrix(KernelMode::Heat, t).unwrap();
            let expect = 0.5 + 0.5 * (-2.0 * t).exp();
            assert!((h[[0, 0]] - expect).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn row_and_matrix_paths_agree() {
        let c = chain(array![[0.1, 0.6, 0.3], [0.2, 0.2, 0.6], [0.5, 0.25, 0.25]]);
        let pk = PowerKernel::new(&c);
        let mu = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        for mode in [KernelMode::Disc, KernelMode::Lazy, KernelMode::Ave] {
            for t in [0.0, 3.0, 300.0] {
                let row = pk.kernel_row(mode, t, &mu).unwrap();
                let via = Array1::from(mu.as_slice().to_vec()).dot(&pk.kernel_matrix(mode, t).unwrap());
                for (a, b) in row.as_slice().iter().zip(via.iter()) {
                    assert!((a - b).abs() < 1e-13);
                }
            }
        }
    }
}
