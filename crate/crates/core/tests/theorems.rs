use proptest::prelude::*;

use mixlab::coupling::{sample_rng, ChainSampler};
use mixlab::cutoff::scan_family;
use mixlab::maximal::{maximal_function, random_function, variance};
use mixlab::theorem_lab::hitting::{birth_death_interval_sets, compare_with_averaged_mixing, hitting_time_profile, hitting_times, is_birth_death};
use mixlab::theorem_lab::window::CouplingWindow;
use mixlab::theorem_lab::{check_abelian, check_tail_bounds, fit_tauberian, SValue, TailKind};
use mixlab::{decompose, make_chain, validate_chain, Engine, FamilySpec, Kernel, KernelMode, ValidatedChain};

fn chain(f: FamilySpec) -> ValidatedChain {
    validate_chain(make_chain(&f).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn window_margin_covers_r_sqrt_s(t in 1.0f64..1e6, u in 0.0f64..1.0, v in -1.0f64..1.0) {
        let s = 2.0 + u * (t.min(700.0).exp() - 2.0).min(1e12);
        prop_assume!(s.ln() <= t);
        let w = CouplingWindow::new(t, s).unwrap();
        prop_assert!(w.r > 0.0);
        prop_assert!(w.m >= (w.r * (2f64.sqrt() + 1.0)).ceil() - 1e-9);
        prop_assert!(w.m >= w.r * s.sqrt());
        let j = t + v * w.r;
        prop_assert!(w.margin(j) >= w.r * s.sqrt() * (1.0 - 1e-12));
        if s.ln() <= t / 8.0 {
            prop_assert!(w.j_lo >= 0.0 && w.j_hi <= 2.0 * t);
        }
    }
}

#[test]
fn tail_bounds_hold_on_the_grid() {
    let eps = [0.05, 0.1, 0.2, 0.5, 1.0];
    for kind in [TailKind::Poisson, TailKind::Binomial] {
        for mu in [1.0, 10.0, 100.0, 1000.0] {
            for r in check_tail_bounds(kind, mu, &eps).unwrap() {
                assert!(r.holds, "{} at {mu}: {:?}", r.inequality_id, r.worst_point());
                assert_eq!(r.points.len(), eps.len());
            }
        }
    }
}

#[test]
fn abelian_checks_hold_on_reversible_chains() {
    let s_grid = [SValue::Fixed(0.5), SValue::Fixed(1.0), SValue::Fixed(2.0), SValue::SqrtT];
    let t_grid: Vec<u64> = (1..=40).collect();
    for f in [FamilySpec::Path { n: 8 }, FamilySpec::Ehrenfest { n: 10, laziness: 0.5 }, FamilySpec::AfSection6 { n: 6, alpha: 0.5 }] {
        let c = chain(f);
        let report = check_abelian(&Engine::for_chain(&c).unwrap(), &t_grid, &s_grid, false).unwrap();
        assert!(report.holds(), "{f}: {}", report.min_slack());
    }
}

#[test]
fn continuous_versus_lazy_survives_non_reversibility() {
    let c = chain(FamilySpec::BiasedCycle { n: 9, ell: 1.0 });
    let report = check_abelian(&Engine::for_chain(&c).unwrap(), &(1..=60).collect::<Vec<_>>(), &[SValue::Fixed(1.0), SValue::SqrtT], false).unwrap();
    for id in ["ct_vs_lazy/per_start", "ct_vs_lazy/worst_case"] {
        assert!(report.get(id).unwrap().holds, "{id}");
    }
}

#[test]
fn biased_cycle_constant_grows_with_n() {
    let mut fits = Vec::new();
    for n in [6u64, 12] {
        let c = chain(FamilySpec::BiasedCycle { n: n as usize, ell: 2.0 });
        let e = Engine::for_chain(&c).unwrap();
        let fit = fit_tauberian(&e, &[n * n, 2 * n * n], &[SValue::Fixed(2.0), SValue::Fixed(4.0)], false).unwrap();
        fits.push(fit.fitted_constant);
    }
    assert!(fits[1] > fits[0], "{fits:?}");
}

#[test]
fn hitting_times_match_simulation_on_a_path() {
    let c = chain(FamilySpec::Path { n: 10 });
    let target = [9usize];
    let exact = hitting_times(&c, &target).unwrap();
    let sampler = ChainSampler::new(&c).unwrap();
    let runs = 20_000u64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for i in 0..runs {
        let mut rng = sample_rng(11, i);
        let (mut x, mut steps) = (0usize, 0u64);
        while x != 9 {
            x = sampler.step(x, &mut rng);
            steps += 1;
        }
        sum += steps as f64;
        sum_sq += (steps * steps) as f64;
    }
    let mean = sum / runs as f64;
    let sd = ((sum_sq / runs as f64 - mean * mean) / runs as f64).sqrt();
    assert!((mean - exact[0]).abs() < 5.0 * sd, "{mean} vs {}", exact[0]);
    assert_eq!(exact[9], 0.0);
}

#[test]
fn hitting_comparison_on_birth_death_chain() {
    let c = chain(FamilySpec::Path { n: 12 });
    assert!(is_birth_death(&c));
    let table = hitting_time_profile(&c, &birth_death_interval_sets(12)).unwrap();
    let cmp = compare_with_averaged_mixing(&Engine::for_chain(&c).unwrap(), &table, 0.25).unwrap();
    assert!(cmp.t_h > 0.0 && cmp.t_ave > 0.0);
    assert!(cmp.lower_ratio.is_finite() && cmp.upper_ratio.is_finite());
}

#[test]
fn cutoff_scan_invariants() {
    let report = scan_family(&FamilySpec::Ehrenfest { n: 10, laziness: 0.5 }, &[10, 20], &[0.1, 0.25]).unwrap();
    for r in &report.ratios {
        if let Some(x) = r.ratio {
            assert!(x >= 1.0, "{r:?}");
        }
    }
    for s in &report.summaries {
        assert!(s.windows.iter().all(|&(_, w)| w >= 0.0));
    }
    for e in report.easy_direction.iter().filter(|e| e.admissible) {
        assert!(e.lhs <= e.rhs + 1e-10, "{e:?}");
    }
    let again = scan_family(&FamilySpec::Ehrenfest { n: 10, laziness: 0.5 }, &[10, 20], &[0.1, 0.25]).unwrap();
    assert_eq!(report, again);
}

fn zoo_spectra() -> Vec<(ValidatedChain, mixlab::Spectrum)> {
    [FamilySpec::Flip, FamilySpec::Complete { n: 5 }, FamilySpec::Path { n: 7 }, FamilySpec::Ehrenfest { n: 8, laziness: 0.5 }, FamilySpec::AfSection6 { n: 4, alpha: 0.5 }]
        .into_iter()
        .map(|f| {
            let c = chain(f);
            let sp = decompose(&c).unwrap();
            (c, sp)
        })
        .collect()
}

#[test]
fn maximal_function_dominates_each_time() {
    for (c, sp) in zoo_spectra() {
        let e = Engine::power(&c);
        let f = random_function(c.n(), 5, 0);
        for mode in [KernelMode::Lazy, KernelMode::Ave] {
            let res = maximal_function(&sp, &f, mode, 1).unwrap();
            assert!(res.g_star.iter().all(|&g| g >= 0.0));
            assert!(res.tail_bound < 1e-12 * f.iter().map(|x| x * x).sum::<f64>().sqrt());
            for t in (0..=res.t_max.min(200)).step_by(((res.t_max.min(200) / 20).max(1)) as usize) {
                let k0 = e.kernel_matrix(mode, t as f64).unwrap();
                let k1 = e.kernel_matrix(mode, (t + 1) as f64).unwrap();
                let diff = (k1 - k0).dot(&ndarray::Array1::from(f.clone()));
                for (x, d) in diff.iter().enumerate() {
                    assert!(res.g_star[x] >= (t + 1) as f64 * d.abs() - 1e-10, "{} {mode} t={t} x={x}", c.label());
                }
            }
        }
    }
}

#[test]
fn one_step_does_not_increase_variance() {
    for (c, _) in zoo_spectra() {
        let pi = c.pi().as_slice().unwrap().to_vec();
        for i in 0..100 {
            let f = random_function(c.n(), 9, i);
            let pf = c.matrix().dot(&ndarray::Array1::from(f.clone())).to_vec();
            assert!(variance(&pi, &pf) <= variance(&pi, &f) + 1e-12, "{}", c.label());
        }
    }
}

#[test]
fn ratio_is_affine_invariant() {
    for (c, sp) in zoo_spectra() {
        let f = random_function(c.n(), 13, 2);
        for mode in [KernelMode::Lazy, KernelMode::Ave] {
            let base = maximal_function(&sp, &f, mode, 1).unwrap().ratio.unwrap();
            for (a, b) in [(3.0, 0.0), (-0.5, 7.0), (1e3, -2.0)] {
                let g: Vec<f64> = f.iter().map(|x| a * x + b).collect();
                let r = maximal_function(&sp, &g, mode, 1).unwrap().ratio.unwrap();
                assert!((r - base).abs() < 1e-10 * base.max(1.0), "{} {mode}: {r} vs {base}", c.label());
            }
        }
    }
}
