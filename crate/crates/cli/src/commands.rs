use serde_json::json;

use mixlab::coupling::{check_poisson_thinning, simulate_natural_coupling};
use mixlab::cutoff::scan_family;
use mixlab::distances::{profile, write_profiles_csv};
use mixlab::maximal::stein_sweep;
use mixlab::theorem_lab::hitting::{birth_death_interval_sets, compare_with_averaged_mixing, hitting_time_profile, is_birth_death};
use mixlab::theorem_lab::{check_abelian, check_sharpness_section6, check_tail_bounds, fit_tauberian, TailKind, VerifierReport};
use mixlab::{decompose, mixing_time, Engine, FamilySpec, Start};

use crate::args::{AnalyzeArgs, Command, Format, ScanArgs, SimulateArgs, Suite, VerifyArgs};
use crate::input::{family_spec, has_chain, load_chain, parse_integer_times, parse_modes, parse_s_values, parse_times};
use crate::output::{comment_header, meta_json, Sink};
use crate::svg::emit_plot;
use crate::CliError;

const TAIL_MEANS: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
const HITTING_ALPHAS: [f64; 2] = [0.25, 0.5];

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze(a) => analyze(a),
        Command::Verify(a) => verify(a),
        Command::Scan(a) => scan(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::input(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn report_written(path: Option<std::path::PathBuf>) {
    if let Some(p) = path {
        eprintln!("wrote {}", p.display());
    }
}

fn analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let loaded = load_chain(&a.chain)?;
    let sink = Sink::new(a.output.out.as_deref())?;
    if a.dump_spec {
        return sink.write("chain.json", &to_json(loaded.chain.spec())?).map(report_written);
    }
    let modes = parse_modes(&a.mode)?;
    let times = parse_times(&a.t)?;
    let engine = Engine::for_chain(&loaded.chain)?;
    let c = &loaded.chain;
    eprintln!(
        "{}: {} states, reversible={}, engine={}",
        loaded.source,
        c.n(),
        c.is_reversible(),
        engine.name()
    );
    let profiles = modes.iter().map(|&m| profile(&engine, m, &times, Start::WorstCase)).collect::<Result<Vec<_>, _>>()?;
    let mut mixing = Vec::new();
    for &m in &modes {
        for &eps in &a.eps {
            mixing.push(mixing_time(&engine, m, eps)?);
        }
    }
    for r in &mixing {
        eprintln!("t_mix({}, eps={}) = {} (worst start {})", r.mode, r.epsilon, r.t_mix, r.argmax_state);
    }
    let meta = vec![
        ("chain", loaded.source.clone()),
        ("states", c.n().to_string()),
        ("engine", engine.name().to_string()),
        ("t", a.t.clone()),
        ("modes", modes.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")),
    ];
    let written = match a.output.format {
        Format::Csv => {
            let mut bytes = comment_header(&meta).into_bytes();
            write_profiles_csv(&profiles, &mut bytes)?;
            sink.write("profiles.csv", &bytes)?
        }
        Format::Json => sink.write("profiles.json", &to_json(&json!({ "meta": meta_json(&meta), "profiles": profiles, "mixing": mixing }))?)?,
        Format::Svg => {
            let comment = meta.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("; ");
            sink.write("profiles.svg", emit_plot(&profiles, &comment)?.as_bytes())?
        }
    };
    report_written(written);
    Ok(())
}

/// Outcome of one suite: grid reports plus suite-specific extras.
struct SuiteResult {
    reports: Vec<VerifierReport>,
    extra: serde_json::Value,
    /// Whether a failing report is a violated explicit-constant bound.
    hard: bool,
}

fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let sink = Sink::new(a.output.out.as_deref())?;
    let mut meta = vec![("suite", format!("{:?}", a.suite).to_lowercase())];
    let result = match a.suite {
        Suite::Tails => {
            meta.push(("eps", join(&a.eps)));
            let mut reports = Vec::new();
            for kind in [TailKind::Poisson, TailKind::Binomial] {
                for mu in TAIL_MEANS {
                    reports.extend(check_tail_bounds(kind, mu, &a.eps)?);
                }
            }
            SuiteResult { reports, extra: json!({ "means": TAIL_MEANS }), hard: true }
        }
        Suite::Sharpness => {
            let family = family_spec(&a.chain)?;
            let FamilySpec::AfSection6 { n, alpha } = family else {
                return Err(CliError::input("the sharpness suite needs --family af_section6"));
            };
            meta.push(("chain", family.to_string()));
            let r = check_sharpness_section6(n, alpha)?;
            SuiteResult { reports: vec![r.report.clone()], extra: serde_json::to_value(&r).unwrap_or_default(), hard: false }
        }
        suite => {
            let loaded = load_chain(&a.chain)?;
            let engine = Engine::for_chain(&loaded.chain)?;
            meta.push(("chain", loaded.source.clone()));
            meta.push(("engine", engine.name().to_string()));
            match suite {
                Suite::Abelian | Suite::Tauberian => {
                    let t_grid = parse_integer_times(&a.t)?;
                    let s_grid = parse_s_values(&a.s)?;
                    meta.push(("t", a.t.clone()));
                    meta.push(("s", a.s.clone()));
                    if suite == Suite::Abelian {
                        let r = check_abelian(&engine, &t_grid, &s_grid, a.strict_grid)?;
                        SuiteResult { reports: r.reports, extra: json!({ "skipped": r.skipped }), hard: true }
                    } else {
                        let f = fit_tauberian(&engine, &t_grid, &s_grid, a.strict_grid)?;
                        eprintln!("fitted constant {}", f.fitted_constant);
                        let mut reports = vec![f.ct_to_lazy, f.lazy_to_ave];
                        reports.extend(f.theorem_checks);
                        SuiteResult { reports, extra: json!({ "fitted_constant": f.fitted_constant, "skipped": f.skipped }), hard: false }
                    }
                }
                Suite::Hitting => {
                    let c = &loaded.chain;
                    let table = hitting_time_profile(c, &birth_death_interval_sets(c.n()))?;
                    let cmp = HITTING_ALPHAS.iter().map(|&al| compare_with_averaged_mixing(&engine, &table, al)).collect::<Result<Vec<_>, _>>()?;
                    SuiteResult { reports: Vec::new(), extra: json!({ "birth_death": is_birth_death(c), "comparisons": cmp }), hard: false }
                }
                Suite::Stein => {
                    meta.push(("seed", a.seed.to_string()));
                    meta.push(("samples", a.samples.to_string()));
                    let sweep = stein_sweep(&decompose(&loaded.chain)?, a.samples, a.seed)?;
                    SuiteResult { reports: Vec::new(), extra: serde_json::to_value(&sweep).unwrap_or_default(), hard: false }
                }
                Suite::Tails | Suite::Sharpness => unreachable!("handled above"),
            }
        }
    };

    for r in &result.reports {
        let fit = r.fitted_constant.map(|c| format!(", fitted {c:.6}")).unwrap_or_default();
        eprintln!("{}: holds={} min slack {:.3e}{fit}", r.inequality_id, r.holds, r.min_slack());
    }
    let written = match a.output.format {
        Format::Csv => {
            let mut bytes = comment_header(&meta).into_bytes();
            write_reports_csv(&result.reports, &result.extra, &mut bytes)?;
            sink.write("verify.csv", &bytes)?
        }
        Format::Json => sink.write("verify.json", &to_json(&json!({ "meta": meta_json(&meta), "reports": result.reports, "details": result.extra }))?)?,
        Format::Svg => return Err(CliError::input("svg output is only available for analyze")),
    };
    report_written(written);
    let failed: Vec<&str> = result.reports.iter().filter(|r| !r.holds).map(|r| r.inequality_id.as_str()).collect();
    if result.hard && !failed.is_empty() {
        return Err(CliError::Verification(failed.join(", ")));
    }
    Ok(())
}

fn write_reports_csv(reports: &[VerifierReport], extra: &serde_json::Value, out: &mut Vec<u8>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::input(e.to_string());
    if reports.is_empty() {
        // suites without grid reports emit their details as key,value rows
        w.write_record(["key", "value"]).map_err(csv_err)?;
        if let serde_json::Value::Object(map) = extra {
            for (k, v) in map {
                w.write_record([k.as_str(), &v.to_string()]).map_err(csv_err)?;
            }
        }
    } else {
        w.write_record(["inequality_id", "t", "s", "lhs", "rhs", "slack"]).map_err(csv_err)?;
        for r in reports {
            for p in &r.points {
                w.write_record([
                    r.inequality_id.clone(),
                    p.t.to_string(),
                    p.s.to_string(),
                    format!("{:.16e}", p.lhs),
                    format!("{:.16e}", p.rhs),
                    format!("{:.16e}", p.slack),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::input(e.to_string()))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn scan(a: ScanArgs) -> Result<(), CliError> {
    let mut chain_args = a.chain.clone();
    if chain_args.n.is_none() {
        // the size parameter is replaced per scanned size anyway
        chain_args.n = a.sizes.first().copied();
    }
    let family = family_spec(&chain_args)?;
    let sizes = if a.sizes.is_empty() { vec![family.size().ok_or_else(|| CliError::input("--sizes is required for this family"))?] } else { a.sizes.clone() };
    let sink = Sink::new(a.output.out.as_deref())?;
    let report = scan_family(&family, &sizes, &a.eps)?;
    for s in &report.summaries {
        eprintln!("size {}: t_ave/t_c = {:.6}", s.size, s.ave_over_ct);
    }
    let meta = vec![
        ("family", family.to_string()),
        ("sizes", sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")),
        ("eps", join(&a.eps)),
    ];
    let written = match a.output.format {
        Format::Csv => {
            let mut bytes = comment_header(&meta).into_bytes();
            report.write_csv(&mut bytes)?;
            sink.write("scan.csv", &bytes)?
        }
        Format::Json => sink.write("scan.json", &to_json(&json!({ "meta": meta_json(&meta), "report": report }))?)?,
        Format::Svg => return Err(CliError::input("svg output is only available for analyze")),
    };
    report_written(written);
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let sink = Sink::new(a.output.out.as_deref())?;
    let t_max: f64 = a.t.trim().parse().map_err(|_| CliError::input(format!("--t must be a single horizon, got {:?}", a.t)))?;
    let mut meta = vec![("seed", a.seed.to_string()), ("samples", a.samples.to_string()), ("t", a.t.clone())];
    let coupling = if has_chain(&a.chain) {
        let loaded = load_chain(&a.chain)?;
        meta.push(("chain", loaded.source.clone()));
        meta.push(("start", a.start.to_string()));
        Some(simulate_natural_coupling(&loaded.chain, a.start, t_max, a.samples, a.seed)?)
    } else {
        None
    };
    if coupling.is_none() && a.tau.is_empty() {
        return Err(CliError::input("nothing to simulate: give a chain, --tau, or both"));
    }
    let thinning = a.tau.iter().map(|&tau| check_poisson_thinning(tau, a.samples, a.seed)).collect::<Result<Vec<_>, _>>()?;
    if !a.tau.is_empty() {
        meta.push(("tau", join(&a.tau)));
    }

    let written = match a.output.format {
        Format::Csv => {
            let mut bytes = comment_header(&meta).into_bytes();
            for t in &thinning {
                bytes.extend(format!("# thinning tau={}: holds={} tv={:.6e}\n", t.tau, t.report.holds, t.report.points[0].lhs).into_bytes());
            }
            let mut w = csv::Writer::from_writer(&mut bytes);
            let csv_err = |e: csv::Error| CliError::input(e.to_string());
            w.write_record(["state", "continuous", "lazy", "averaged"]).map_err(csv_err)?;
            if let Some(c) = &coupling {
                for x in 0..c.continuous.len() {
                    w.write_record([x.to_string(), c.continuous[x].to_string(), c.lazy[x].to_string(), c.averaged[x].to_string()]).map_err(csv_err)?;
                }
            }
            w.flush().map_err(|e| CliError::input(e.to_string()))?;
            drop(w);
            sink.write("simulate.csv", &bytes)?
        }
        Format::Json => sink.write("simulate.json", &to_json(&json!({ "meta": meta_json(&meta), "coupling": coupling, "thinning": thinning }))?)?,
        Format::Svg => return Err(CliError::input("svg output is only available for analyze")),
    };
    report_written(written);

    let mut failures = Vec::new();
    if let Some(c) = &coupling {
        eprintln!("coupling identity held in {} of {} samples", c.identity_holds, c.n_samples);
        if c.identity_holds != c.n_samples {
            failures.push(format!("coupling identity failed in {} samples", c.n_samples - c.identity_holds));
        }
    }
    for t in &thinning {
        eprintln!("thinning tau={}: holds={}", t.tau, t.report.holds);
        if !t.report.holds {
            failures.push(format!("thinning at tau={}", t.tau));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}
