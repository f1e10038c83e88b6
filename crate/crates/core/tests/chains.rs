use ndarray::{Array1, Array2};
use proptest::prelude::*;

use mixlab::chain::tv;
use mixlab::{
    decompose, lazy_kernel, make_chain, tv_distance, validate_chain, worst_case_distance, ChainSpec, Distribution, Engine, FamilySpec, Kernel,
    KernelMode, ValidatedChain,
};

fn zoo() -> Vec<ValidatedChain> {
    [
        FamilySpec::Flip,
        FamilySpec::Complete { n: 6 },
        FamilySpec::Path { n: 9 },
        FamilySpec::Ehrenfest { n: 12, laziness: 0.5 },
        FamilySpec::AfSection6 { n: 5, alpha: 0.5 },
        FamilySpec::AfSection6 { n: 8, alpha: 0.25 },
        FamilySpec::FragileBd { n: 10 },
        FamilySpec::BiasedCycle { n: 7, ell: 1.0 },
    ]
    .iter()
    .map(|f| validate_chain(make_chain(f).unwrap()).unwrap())
    .collect()
}

fn naive_power(p: &Array2<f64>, t: usize) -> Array2<f64> {
    (0..t).fold(Array2::eye(p.nrows()), |k, _| k.dot(p))
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn normalize(w: Vec<f64>) -> Distribution {
    let s: f64 = w.iter().sum();
    Distribution::new(w.into_iter().map(|x| x / s).collect()).unwrap()
}

/// Random reversible chain: a random spanning tree plus extra edges, with
/// symmetric conductances `c(x, y)` and `P(x, y) = c(x, y) / c(x)`.
fn reversible_from(n: usize, parents: &[usize], conductances: &[f64], extra: &[(usize, usize, f64)]) -> ValidatedChain {
    let mut c = Array2::<f64>::zeros((n, n));
    for i in 1..n {
        let j = parents[i - 1] % i;
        c[[i, j]] += conductances[i - 1];
        c[[j, i]] += conductances[i - 1];
    }
    for &(a, b, w) in extra {
        let (a, b) = (a % n, b % n);
        c[[a, b]] += w;
        if a != b {
            c[[b, a]] += w;
        }
    }
    let mut p = c.clone();
    for mut row in p.rows_mut() {
        let s = row.sum();
        row /= s;
    }
    validate_chain(ChainSpec::new("random", p).unwrap()).unwrap()
}

fn reversible_chain() -> impl Strategy<Value = ValidatedChain> {
    (2usize..9).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(0usize..64, n - 1),
            prop::collection::vec(0.05f64..5.0, n - 1),
            prop::collection::vec((0usize..64, 0usize..64, 0.05f64..5.0), 0..6),
        )
            .prop_map(|(n, parents, cond, extra)| reversible_from(n, &parents, &cond, &extra))
    })
}

fn stochastic_matrix() -> impl Strategy<Value = Array2<f64>> {
    (1usize..8).prop_flat_map(|n| {
        prop::collection::vec(0.01f64..1.0, n * n).prop_map(move |w| {
            let mut p = Array2::from_shape_vec((n, n), w).unwrap();
            for mut row in p.rows_mut() {
                let s = row.sum();
                row /= s;
            }
            p
        })
    })
}

proptest! {
    #[test]
    fn stationary_distribution_is_a_fixed_point(p in stochastic_matrix()) {
        let c = validate_chain(ChainSpec::new("dense", p.clone()).unwrap()).unwrap();
        let pi = c.pi();
        prop_assert!(pi.iter().all(|&x| x >= 0.0));
        prop_assert!((pi.sum() - 1.0).abs() < 1e-12);
        let moved = pi.dot(&p);
        prop_assert!(moved.iter().zip(pi.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn random_reversible_chains_are_certified(c in reversible_chain()) {
        prop_assert!(c.is_reversible());
        prop_assert!(c.is_irreducible());
    }

    #[test]
    fn lazy_kernel_keeps_pi(c in reversible_chain()) {
        let l = lazy_kernel(&c);
        let gap = l.pi().iter().zip(c.pi().iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(gap < 1e-10);
    }

    #[test]
    fn spectrum_reconstructs_the_chain(c in reversible_chain()) {
        let sp = decompose(&c).unwrap();
        prop_assert!(max_abs_diff(&sp.reconstruct(), c.matrix()) < 1e-9);
        let ev = sp.eigenvalues();
        prop_assert!((ev[0] - 1.0).abs() < 1e-10);
        prop_assert!(ev.windows(2).into_iter().all(|w| w[0] >= w[1]));
        // pi-orthonormal columns
        let b = sp.basis();
        let pi = c.pi();
        for i in 0..c.n() {
            for j in 0..c.n() {
                let ip: f64 = (0..c.n()).map(|x| pi[x] * b[[x, i]] * b[[x, j]]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tv_is_the_largest_event_gap(w1 in prop::collection::vec(0.0f64..1.0, 1..=12), seed in 0u64..1000) {
        let n = w1.len();
        prop_assume!(w1.iter().sum::<f64>() > 0.0);
        let w2: Vec<f64> = (0..n).map(|i| (((i as u64 + 1) * 2654435761 + seed * 40503) % 1000) as f64 + 1.0).collect();
        let (a, b) = (normalize(w1), normalize(w2));
        let d = tv_distance(&a, &b).unwrap();
        let best = (0u32..1 << n)
            .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| a.as_slice()[i] - b.as_slice()[i]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((d - best).abs() < 1e-14);
    }

    #[test]
    fn fixed_start_is_dominated_by_worst_case(c in reversible_chain(), w in prop::collection::vec(0.01f64..1.0, 8), t in 0u32..20) {
        let mu = normalize(w[..c.n()].to_vec());
        let e = Engine::for_chain(&c).unwrap();
        for mode in [KernelMode::Disc, KernelMode::Lazy, KernelMode::Ave, KernelMode::Heat] {
            let (worst, _) = worst_case_distance(&e, mode, t as f64).unwrap();
            let d = mixlab::distances::distance_from(&e, mode, t as f64, &mu).unwrap();
            prop_assert!(d <= worst + 1e-12);
        }
    }
}

#[test]
fn tv_to_stationarity_is_non_increasing_from_random_starts() {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 + 1e-3
    };
    for c in zoo() {
        let p = c.matrix();
        let pi = c.pi().as_slice().unwrap().to_vec();
        for _ in 0..100 {
            let mu = normalize((0..c.n()).map(|_| next()).collect());
            let mut row = Array1::from(mu.into_vec());
            let mut prev = tv(row.as_slice().unwrap(), &pi);
            for _ in 0..50 {
                row = row.dot(p);
                let d = tv(row.as_slice().unwrap(), &pi);
                assert!(d <= prev + 1e-12, "{}: {d} > {prev}", c.label());
                prev = d;
            }
        }
    }
}

#[test]
fn worst_case_profiles_are_monotone() {
    for c in zoo() {
        let e = Engine::for_chain(&c).unwrap();
        for mode in [KernelMode::Disc, KernelMode::Lazy, KernelMode::Ave, KernelMode::Heat] {
            let mut prev = f64::INFINITY;
            for t in 0..=200 {
                let (d, _) = worst_case_distance(&e, mode, t as f64).unwrap();
                assert!((0.0..=1.0).contains(&d));
                assert!(d <= prev + 1e-12, "{} {mode} t={t}: {d} > {prev}", c.label());
                prev = d;
            }
        }
    }
}

#[test]
fn continuous_time_distance_lower_bound() {
    for c in zoo() {
        let e = Engine::for_chain(&c).unwrap();
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let (d, _) = worst_case_distance(&e, KernelMode::Heat, t).unwrap();
            assert!(d >= (-2.0 * t).exp() / 2.0 - 1e-10, "{} t={t}: {d}", c.label());
        }
    }
}

#[test]
fn averaged_distance_from_two_discrete_rows() {
    for c in zoo() {
        let e = Engine::for_chain(&c).unwrap();
        let pi = c.pi().as_slice().unwrap().to_vec();
        for x in 0..c.n() {
            let mu = Distribution::point_mass(c.n(), x);
            for t in [0.0, 1.0, 4.0, 17.0] {
                let a = e.kernel_row(KernelMode::Disc, t, &mu).unwrap();
                let b = e.kernel_row(KernelMode::Disc, t + 1.0, &mu).unwrap();
                let mix: Vec<f64> = a.as_slice().iter().zip(b.as_slice()).map(|(u, v)| (u + v) / 2.0).collect();
                let direct = mixlab::distances::distance_from(&e, KernelMode::Ave, t, &mu).unwrap();
                assert!((direct - tv(&mix, &pi)).abs() < 1e-12, "{} x={x} t={t}", c.label());
            }
        }
    }
}

#[test]
fn engines_agree_with_matrix_powers() {
    for c in zoo().into_iter().filter(|c| c.is_reversible()) {
        let power = Engine::power(&c);
        for t in 0..=30 {
            let k = power.kernel_matrix(KernelMode::Disc, t as f64).unwrap();
            assert!(max_abs_diff(&k, &naive_power(c.matrix(), t)) < 1e-12, "{} t={t}", c.label());
        }
    }
}

#[test]
fn heat_semigroup_and_averaged_step() {
    for c in zoo().into_iter().filter(|c| c.is_reversible()) {
        let Ok(sp) = decompose(&c) else { continue };
        if sp.conditioning() > 1e3 {
            continue;
        }
        for (s, t) in [(0.5, 1.5), (2.0, 3.0), (0.1, 7.0)] {
            let hs = sp.functional_calculus(KernelMode::Heat, s).unwrap();
            let ht = sp.functional_calculus(KernelMode::Heat, t).unwrap();
            let hst = sp.functional_calculus(KernelMode::Heat, s + t).unwrap();
            assert!(max_abs_diff(&hs.dot(&ht), &hst) < 1e-9, "{}", c.label());
        }
        for t in 0..10 {
            let a = sp.functional_calculus(KernelMode::Ave, t as f64).unwrap();
            let a1 = sp.functional_calculus(KernelMode::Ave, (t + 1) as f64).unwrap();
            assert!(max_abs_diff(&a.dot(c.matrix()), &a1) < 1e-12, "{}", c.label());
        }
    }
}

#[test]
fn averaged_difference_identities() {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for c in zoo().into_iter().filter(|c| c.is_reversible()) {
        let Ok(sp) = decompose(&c) else { continue };
        if sp.conditioning() > 1e3 {
            continue;
        }
        let p = c.matrix();
        let p2 = p.dot(p);
        let ave = |t: usize| sp.functional_calculus(KernelMode::Ave, t as f64).unwrap();
        for _ in 0..20 {
            let f = Array1::from((0..c.n()).map(|_| next()).collect::<Vec<_>>());
            for t in [0usize, 1, 3, 8] {
                let lhs_even = ave(2 * t + 1).dot(&f) - ave(2 * t).dot(&f);
                let q = naive_power(&p2, t);
                let rhs_even = (naive_power(&p2, t + 1).dot(&f) - q.dot(&f)) * 0.5;
                let lhs_odd = ave(2 * t + 2).dot(&f) - ave(2 * t + 1).dot(&f);
                let pf = p.dot(&f);
                let rhs_odd = (naive_power(&p2, t + 1).dot(&pf) - q.dot(&pf)) * 0.5;
                let e1 = (&lhs_even - &rhs_even).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let e2 = (&lhs_odd - &rhs_odd).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(e1 < 1e-10 && e2 < 1e-10, "{} t={t}: {e1:e} {e2:e}", c.label());
            }
        }
    }
}

#[test]
fn flip_averaged_distance_vanishes() {
    let c = validate_chain(make_chain(&FamilySpec::Flip).unwrap()).unwrap();
    let e = Engine::for_chain(&c).unwrap();
    for t in 0..20 {
        assert!(worst_case_distance(&e, KernelMode::Ave, t as f64).unwrap().0 < 1e-15);
        assert!((worst_case_distance(&e, KernelMode::Disc, t as f64).unwrap().0 - 0.5).abs() < 1e-15);
    }
}
