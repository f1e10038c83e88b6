use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

use mixlab::coupling::{check_poisson_thinning, sample_coupling, sample_rng, simulate_natural_coupling, ChainSampler};
use mixlab::{make_chain, validate_chain, FamilySpec, ValidatedChain};

fn chain(f: FamilySpec) -> ValidatedChain {
    validate_chain(make_chain(&f).unwrap()).unwrap()
}

#[test]
fn thinned_count_is_binomial_half() {
    let c = chain(FamilySpec::Path { n: 5 });
    let sampler = ChainSampler::new(&c).unwrap();
    let samples = 100_000u64;
    let mut counts = [0u64; 21];
    for i in 0..samples {
        let mut rng = sample_rng(17, i);
        let s = sample_coupling(&sampler, 0, 1.0, 20, &mut rng);
        let k = s.thinned(20);
        assert!(k <= 20);
        counts[k] += 1;
    }
    let law = Binomial::new(0.5, 20).unwrap();
    // pool sparse tails so every cell expects at least 5 draws
    let (mut stat, mut cells, mut obs, mut exp) = (0.0, 0usize, 0.0, 0.0);
    for (k, &o) in counts.iter().enumerate() {
        obs += o as f64;
        exp += law.pmf(k as u64) * samples as f64;
        if exp >= 5.0 && (k == 20 || counts[k + 1..].iter().sum::<u64>() as f64 >= 5.0) {
            stat += (obs - exp) * (obs - exp) / exp;
            cells += 1;
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 {
        stat += (obs - exp) * (obs - exp) / exp;
        cells += 1;
    }
    let p_value = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
    assert!(p_value > 1e-4, "chi-square {stat} on {cells} cells, p = {p_value}");
}

#[test]
fn lazy_state_is_uncorrelated_with_lazy_clock() {
    let c = chain(FamilySpec::Flip);
    let sampler = ChainSampler::new(&c).unwrap();
    let samples = 100_000u64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..samples {
        let mut rng = sample_rng(23, i);
        let s = sample_coupling(&sampler, 0, 10.0, 10, &mut rng);
        let x = (s.lazy_state(10) == 1) as u8 as f64;
        let y = s.n_lazy_count(10.0) as f64;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let n = samples as f64;
    let cov = sxy / n - sx * sy / (n * n);
    let corr = cov / ((sxx / n - (sx / n).powi(2)) * (syy / n - (sy / n).powi(2))).sqrt();
    assert!(corr.abs() < 4.0 / n.sqrt(), "correlation {corr}");
}

#[test]
fn coupling_identity_holds_in_every_sample() {
    for f in [FamilySpec::Flip, FamilySpec::Path { n: 8 }, FamilySpec::AfSection6 { n: 5, alpha: 0.5 }] {
        let c = chain(f);
        let table = simulate_natural_coupling(&c, 0, 12.5, 5_000, 1).unwrap();
        assert_eq!(table.identity_holds, table.n_samples, "{f}");
        for law in [&table.continuous, &table.lazy, &table.averaged] {
            assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn simulation_is_reproducible() {
    let c = chain(FamilySpec::Path { n: 6 });
    let a = simulate_natural_coupling(&c, 2, 7.0, 2_000, 99).unwrap();
    let b = simulate_natural_coupling(&c, 2, 7.0, 2_000, 99).unwrap();
    assert_eq!(a, b);
    let t1 = check_poisson_thinning(4.0, 20_000, 5).unwrap();
    let t2 = check_poisson_thinning(4.0, 20_000, 5).unwrap();
    assert_eq!(t1, t2);
    assert!(t1.report.holds);
}
