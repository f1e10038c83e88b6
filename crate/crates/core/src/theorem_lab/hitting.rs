//! Expected hitting times `E_x[T_A]` and `t_H(alpha)` over candidate sets.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::chain::ValidatedChain;
use crate::distances::mixing_time;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelMode};
use crate::linalg::Lu;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingTable {
    pub sets: Vec<Vec<usize>>,
    pub pi_mass: Vec<f64>,
    /// `expectations[i][x] = E_x[T_{sets[i]}]`
    pub expectations: Vec<Vec<f64>>,
}

impl HittingTable {
    /// Max of `E_x[T_A]` over starts and over sets with `pi(A) >= alpha`.
    pub fn t_h(&self, alpha: f64) -> Option<f64> {
        self.sets
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.pi_mass[i] >= alpha)
            .map(|(i, _)| self.expectations[i].iter().copied().fold(0.0, f64::max))
            .reduce(f64::max)
    }
}

/// `E_x[T_A]` for every `x`, from `(I - P) h = 1` on the complement of `A`.
pub fn hitting_times(chain: &ValidatedChain, set: &[usize]) -> Result<Vec<f64>> {
    let n = chain.n();
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut in_set = vec![false; n];
    for &a in set {
        if a >= n {
            return Err(Error::Shape(format!("state {a} out of range for {n} states")));
        }
        in_set[a] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&x| !in_set[x]).collect();
    let mut h = vec![0.0; n];
    if rest.is_empty() {
        return Ok(h);
    }
    let p = chain.matrix();
    let m = rest.len();
    let mut a = Array2::<f64>::zeros((m, m));
    for (i, &x) in rest.iter().enumerate() {
        for (j, &y) in rest.iter().enumerate() {
            a[[i, j]] = if i == j { 1.0 } else { 0.0 } - p[[x, y]];
        }
    }
    let sol = Lu::factor(&a)?.solve(&Array1::ones(m));
    for (i, &x) in rest.iter().enumerate() {
        h[x] = sol[i];
    }
    Ok(h)
}

pub fn hitting_time_profile(chain: &ValidatedChain, sets: &[Vec<usize>]) -> Result<HittingTable> {
    let pi = chain.pi();
    let mut pi_mass = Vec::with_capacity(sets.len());
    let mut expectations = Vec::with_capacity(sets.len());
    for set in sets {
        expectations.push(hitting_times(chain, set)?);
        pi_mass.push(set.iter().map(|&a| pi[a]).sum());
    }
    Ok(HittingTable { sets: sets.to_vec(), pi_mass, expectations })
}

/// True when only nearest-neighbour moves (and holding) have mass.
pub fn is_birth_death(chain: &ValidatedChain) -> bool {
    let p = chain.matrix();
    p.indexed_iter().all(|((x, y), &v)| v == 0.0 || x.abs_diff(y) <= 1)
}

/// The sets `{i >= k}` and `{i <= k}` for every `k`.
pub fn birth_death_interval_sets(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(2 * n);
    for k in 0..n {
        out.push((k..n).collect());
        out.push((0..=k).collect());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingComparison {
    pub alpha: f64,
    pub t_h: f64,
    pub t_ave: f64,
    /// `t_ave / t_H(alpha)`, bounded below by a constant depending on alpha.
    pub lower_ratio: f64,
    /// `t_H(alpha) / t_ave`, bounded below by a constant depending on alpha.
    pub upper_ratio: f64,
}

/// Compares `t_H(alpha)` on the supplied sets with `t_ave = t_ave(1/4)`.
pub fn compare_with_averaged_mixing<K: Kernel + ?Sized>(kernel: &K, table: &HittingTable, alpha: f64) -> Result<HittingComparison> {
    let t_h = table.t_h(alpha).ok_or(Error::EmptySet)?;
    let t_ave = mixing_time(kernel, KernelMode::Ave, 0.25)?.t_mix;
    Ok(HittingComparison { alpha, t_h, t_ave, lower_ratio: t_ave / t_h, upper_ratio: t_h / t_ave })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{validate_chain, ChainSpec};
    use crate::zoo::{make_chain, FamilySpec};
    use ndarray::array;

    #[test]
    fn whole_space_and_flip() {
        let c = validate_chain(ChainSpec::new("flip", array![[0.0, 1.0], [1.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(hitting_times(&c, &[0, 1]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(hitting_times(&c, &[1]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(hitting_times(&c, &[]), Err(Error::EmptySet));
    }

    #[test]
    fn path_to_far_end() {
        // reflecting walk holding 1/2 at the ends: E_0[T_n] = n(n+1)
        let c = validate_chain(make_chain(&FamilySpec::Path { n: 6 }).unwrap()).unwrap();
        let h = hitting_times(&c, &[6]).unwrap();
        assert!((h[0] - 42.0).abs() < 1e-9, "{}", h[0]);
        assert!(is_birth_death(&c));
        let table = hitting_time_profile(&c, &birth_death_interval_sets(7)).unwrap();
        assert!(table.t_h(0.5).unwrap() > 0.0);
        assert!(table.t_h(1.5).is_none());
    }
}
