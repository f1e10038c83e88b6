//! Monte Carlo realization of the natural coupling between the discrete,
//! lazy and continuous-time chains, and of the Poisson thinning behind the
//! averaged-to-continuous comparison.
//!
//! `N` and `M` are independent rate-one Poisson processes and
//! `N_L = N + M`. The `k`-th event of `N_L` is a real move (`q_k = 1`) when it
//! belongs to `N`. With `S(l) = q_1 + ... + q_l` and a discrete path `X`,
//! `X^L_l = X_{S(l)}` and `X^c_t = X_{N(t)} = X^L_{N_L(t)}`.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{tv, ValidatedChain};
use crate::error::{Error, Result};
use crate::theorem_lab::report::{GridPoint, VerifierReport};
use crate::theorem_lab::tails::poisson_ln_pmf;

/// Generator for sample `index` of a run seeded by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Row-wise samplers for one transition matrix.
pub struct ChainSampler {
    rows: Vec<WeightedIndex<f64>>,
}

impl ChainSampler {
    pub fn new(chain: &ValidatedChain) -> Result<Self> {
        let rows = chain
            .matrix()
            .outer_iter()
            .map(|r| WeightedIndex::new(r.iter().copied()).map_err(|e| Error::InvalidDistribution(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainSampler { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn step<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        self.rows[x].sample(rng)
    }
}

/// One coupled realization on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSample {
    /// Discrete path `X_0, X_1, ...`, long enough for every derived index.
    pub path: Vec<usize>,
    /// Event times of `N` and of `M` in `[0, horizon]`.
    pub n_times: Vec<f64>,
    pub m_times: Vec<f64>,
    /// `q_k` for every `N_L` event in `[0, horizon]`, then independent
    /// fair coins up to the requested number of lazy steps.
    pub q: Vec<bool>,
    /// `xi ~ Bernoulli(1/2)` delaying the averaged chain.
    pub xi: bool,
}

impl CouplingSample {
    pub fn n_count(&self, t: f64) -> usize {
        self.n_times.partition_point(|&s| s <= t)
    }

    pub fn n_lazy_count(&self, t: f64) -> usize {
        self.n_count(t) + self.m_times.partition_point(|&s| s <= t)
    }

    /// `S(l)`.
    pub fn thinned(&self, l: usize) -> usize {
        self.q[..l].iter().filter(|&&b| b).count()
    }

    pub fn lazy_state(&self, l: usize) -> usize {
        self.path[self.thinned(l)]
    }

    /// `X_{N(t)}`.
    pub fn continuous_state(&self, t: f64) -> usize {
        self.path[self.n_count(t)]
    }

    /// `X^L_{N_L(t)}`.
    pub fn continuous_state_via_lazy(&self, t: f64) -> usize {
        self.lazy_state(self.n_lazy_count(t))
    }

    pub fn averaged_state(&self, t: usize) -> usize {
        self.path[t + usize::from(self.xi)]
    }
}

fn poisson_times<R: Rng + ?Sized>(horizon: f64, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(1.0).expect("unit rate");
    let mut out = Vec::new();
    let mut t: f64 = exp.sample(rng);
    while t <= horizon {
        out.push(t);
        t += exp.sample(rng);
    }
    out
}

/// Draws one coupled sample started at `start`, with at least `lazy_steps`
/// lazy coins.
pub fn sample_coupling<R: Rng + ?Sized>(sampler: &ChainSampler, start: usize, horizon: f64, lazy_steps: usize, rng: &mut R) -> CouplingSample {
    let n_times = poisson_times(horizon, rng);
    let m_times = poisson_times(horizon, rng);
    let mut q = Vec::with_capacity(n_times.len() + m_times.len());
    let (mut i, mut j) = (0, 0);
    while i < n_times.len() || j < m_times.len() {
        if j == m_times.len() || (i < n_times.len() && n_times[i] < m_times[j]) {
            q.push(true);
            i += 1;
        } else {
            q.push(false);
            j += 1;
        }
    }
    while q.len() < lazy_steps {
        q.push(rng.random_bool(0.5));
    }
    let xi = rng.random_bool(0.5);
    let moves = q.iter().filter(|&&b| b).count().max(horizon.floor() as usize + 1);
    let mut path = Vec::with_capacity(moves + 1);
    path.push(start);
    for _ in 0..moves {
        let x = *path.last().expect("nonempty");
        path.push(sampler.step(x, rng));
    }
    CouplingSample { path, n_times, m_times, q, xi }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    pub start: usize,
    pub t_max: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Empirical laws of `X^c_{t_max}`, `X^L_{floor(t_max)}` and `X_{floor(t_max) + xi}`.
    pub continuous: Vec<f64>,
    pub lazy: Vec<f64>,
    pub averaged: Vec<f64>,
    /// Samples in which `X_{N(t_max)}` and `X^L_{N_L(t_max)}` coincide.
    pub identity_holds: usize,
}

pub fn simulate_natural_coupling(chain: &ValidatedChain, start: usize, t_max: f64, n_samples: usize, seed: u64) -> Result<CouplingTable> {
    if n_samples == 0 {
        return Err(Error::ZeroSamples);
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidTime { t: t_max, mode: "coupling" });
    }
    let n = chain.n();
    if start >= n {
        return Err(Error::Shape(format!("start state {start} out of range for {n} states")));
    }
    let sampler = ChainSampler::new(chain)?;
    let ell = t_max.floor() as usize;
    let outcomes: Vec<(usize, usize, usize, bool)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let s = sample_coupling(&sampler, start, t_max, ell, &mut rng);
            let xc = s.continuous_state(t_max);
            (xc, s.lazy_state(ell), s.averaged_state(ell), xc == s.continuous_state_via_lazy(t_max))
        })
        .collect();
    let mut continuous = vec![0.0; n];
    let mut lazy = vec![0.0; n];
    let mut averaged = vec![0.0; n];
    let mut identity_holds = 0;
    let w = 1.0 / n_samples as f64;
    for (c, l, a, ok) in outcomes {
        continuous[c] += w;
        lazy[l] += w;
        averaged[a] += w;
        identity_holds += usize::from(ok);
    }
    Ok(CouplingTable { start, t_max, n_samples, seed, continuous, lazy, averaged, identity_holds })
}

/// One draw of `Z = Z_1 + eta 1_{Y > 0}` with `Y ~ Pois(2 tau)`,
/// `Z_1 | Y ~ Bin((Y - 1) v 0, 1/2)` and `eta ~ Bernoulli(1/2)`.
pub fn thinned_poisson<R: Rng + ?Sized>(tau: f64, rng: &mut R) -> u64 {
    let y = Poisson::new(2.0 * tau).expect("positive rate").sample(rng) as u64;
    let z1 = Binomial::new(y.saturating_sub(1), 0.5).expect("valid binomial").sample(rng);
    let eta = rng.random_bool(0.5);
    z1 + u64::from(eta && y > 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinningReport {
    pub tau: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Histogram bins `0..bins-1`, the last one collecting the upper tail.
    pub bins: usize,
    pub empirical_mean: f64,
    pub empirical_zero: f64,
    /// One point: `lhs` is the histogram TV to `Pois(tau)`, `rhs` the
    /// threshold `5 sqrt(bins / n_samples)`.
    pub report: VerifierReport,
}

pub fn check_poisson_thinning(tau: f64, n_samples: usize, seed: u64) -> Result<ThinningReport> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::DomainError(format!("tau must be positive, got {tau}")));
    }
    if n_samples == 0 {
        return Err(Error::ZeroSamples);
    }
    // exact law, cut where the remaining upper tail is negligible
    let mut exact = Vec::new();
    let mut mass = 0.0;
    let mut k = 0u64;
    loop {
        let p = poisson_ln_pmf(tau, k).exp();
        exact.push(p);
        mass += p;
        if k as f64 > tau && 1.0 - mass < 1e-12 {
            break;
        }
        k += 1;
    }
    let last = exact.len() - 1;
    exact[last] += (1.0 - mass).max(0.0);
    let bins = exact.len();

    let draws: Vec<u64> = (0..n_samples as u64).into_par_iter().map(|i| thinned_poisson(tau, &mut sample_rng(seed, i))).collect();
    let mut hist = vec![0.0; bins];
    let w = 1.0 / n_samples as f64;
    for &z in &draws {
        hist[(z as usize).min(last)] += w;
    }
    let empirical_mean = draws.iter().map(|&z| z as f64).sum::<f64>() * w;
    let distance = tv(&hist, &exact);
    let threshold = 5.0 * (bins as f64 / n_samples as f64).sqrt();
    let report = VerifierReport::new(format!("poisson_thinning[tau={tau}]"), vec![GridPoint::new(tau, n_samples as f64, distance, threshold)], None);
    Ok(ThinningReport { tau, n_samples, seed, bins, empirical_mean, empirical_zero: hist[0], report })
}

fn check_pmf(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() || pmf.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::UnnormalizedPmf("entries must be finite and nonnegative".into()));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::UnnormalizedPmf(format!("mass {total}")));
    }
    Ok(())
}

/// `(|| P_mu[X_{T1+T2}] - pi ||, || P_mu[X_{T1}] - pi ||)` for independent
/// times with the given pmfs (index = time); the first never exceeds the second.
pub fn randomized_stopping_tv(chain: &ValidatedChain, mu: &crate::chain::Distribution, t1_pmf: &[f64], t2_pmf: &[f64]) -> Result<(f64, f64)> {
    check_pmf(t1_pmf)?;
    check_pmf(t2_pmf)?;
    let n = chain.n();
    if mu.len() != n {
        return Err(Error::LengthMismatch { left: mu.len(), right: n });
    }
    let horizon = t1_pmf.len() + t2_pmf.len() - 1;
    let p = chain.matrix();
    let mut laws = Vec::with_capacity(horizon);
    let mut v = ndarray::Array1::from(mu.as_slice().to_vec());
    for _ in 0..horizon {
        laws.push(v.clone());
        v = v.dot(p);
    }
    let mut left = ndarray::Array1::<f64>::zeros(n);
    for (a, &pa) in t1_pmf.iter().enumerate() {
        for (b, &pb) in t2_pmf.iter().enumerate() {
            left.scaled_add(pa * pb, &laws[a + b]);
        }
    }
    let mut right = ndarray::Array1::<f64>::zeros(n);
    for (a, &pa) in t1_pmf.iter().enumerate() {
        right.scaled_add(pa, &laws[a]);
    }
    let pi = chain.pi().as_slice().expect("contiguous");
    Ok((tv(left.as_slice().expect("contiguous"), pi), tv(right.as_slice().expect("contiguous"), pi)))
}

/// A draw `(X, Y)` from the maximal coupling of `mu` and `nu`, for which
/// `P[X != Y] = || mu - nu ||_TV`.
pub fn sample_maximal_coupling<R: Rng + ?Sized>(mu: &[f64], nu: &[f64], rng: &mut R) -> Result<(usize, usize)> {
    if mu.len() != nu.len() {
        return Err(Error::LengthMismatch { left: mu.len(), right: nu.len() });
    }
    let overlap: Vec<f64> = mu.iter().zip(nu).map(|(a, b)| a.min(*b)).collect();
    let shared: f64 = overlap.iter().sum();
    let invalid = |e: rand::distr::weighted::Error| Error::InvalidDistribution(e.to_string());
    if rng.random::<f64>() < shared {
        let x = WeightedIndex::new(&overlap).map_err(invalid)?.sample(rng);
        return Ok((x, x));
    }
    let rest_mu: Vec<f64> = mu.iter().zip(&overlap).map(|(a, o)| (a - o).max(0.0)).collect();
    let rest_nu: Vec<f64> = nu.iter().zip(&overlap).map(|(b, o)| (b - o).max(0.0)).collect();
    let x = WeightedIndex::new(&rest_mu).map_err(invalid)?.sample(rng);
    let y = WeightedIndex::new(&rest_nu).map_err(invalid)?.sample(rng);
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{validate_chain, ChainSpec, Distribution};
    use ndarray::array;

    fn flip() -> ValidatedChain {
        validate_chain(ChainSpec::new("flip", array![[0.0, 1.0], [1.0, 0.0]]).unwrap()).unwrap()
    }

    #[test]
    fn flip_heat_marginal() {
        let c = flip();
        let table = simulate_natural_coupling(&c, 0, 1.0, 100_000, 11).unwrap();
        let exact0 = 0.5 + (-2.0f64).exp() / 2.0;
        let sd = (exact0 * (1.0 - exact0) / 1e5).sqrt();
        assert!((table.continuous[0] - exact0).abs() < 4.0 * sd);
        assert_eq!(table.identity_holds, 100_000);
        // lazy flip at one step is uniform; averaged flip is exactly uniform
        assert!((table.lazy[0] - 0.5).abs() < 4.0 * (0.25f64 / 1e5).sqrt());
        assert!((table.averaged[0] - 0.5).abs() < 4.0 * (0.25f64 / 1e5).sqrt());
    }

    #[test]
    fn zero_samples_and_determinism() {
        let c = flip();
        assert_eq!(simulate_natural_coupling(&c, 0, 1.0, 0, 1), Err(Error::ZeroSamples));
        assert_eq!(simulate_natural_coupling(&c, 0, 2.5, 500, 3).unwrap(), simulate_natural_coupling(&c, 0, 2.5, 500, 3).unwrap());
    }

    #[test]
    fn thinning_small_tau() {
        let r = check_poisson_thinning(1e-6, 10_000, 5).unwrap();
        assert!(r.empirical_zero > 0.999);
        assert!(r.report.holds);
    }

    #[test]
    fn stopping_pmf_errors_and_equality() {
        let c = flip();
        let mu = Distribution::point_mass(2, 0);
        assert!(matches!(randomized_stopping_tv(&c, &mu, &[0.5, 0.4], &[1.0]), Err(Error::UnnormalizedPmf(_))));
        let (l, r) = randomized_stopping_tv(&c, &mu, &[0.3, 0.7], &[1.0]).unwrap();
        assert_eq!(l, r);
        let (l, r) = randomized_stopping_tv(&c, &mu, &[1.0], &[0.5, 0.5]).unwrap();
        assert!(l.abs() < 1e-15 && (r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn maximal_coupling_mismatch_rate() {
        let mu = [0.5, 0.3, 0.2];
        let nu = [0.2, 0.3, 0.5];
        let n = 50_000;
        let mismatches = (0..n)
            .filter(|&i| {
                let (x, y) = sample_maximal_coupling(&mu, &nu, &mut sample_rng(9, i)).unwrap();
                x != y
            })
            .count();
        let rate = mismatches as f64 / n as f64;
        assert!((rate - 0.3).abs() < 4.0 * (0.21f64 / n as f64).sqrt(), "{rate}");
    }
}
