use std::collections::BTreeMap;
use std::fs;

use mixlab::theorem_lab::SValue;
use mixlab::{make_chain, validate_chain, ChainSpec, FamilySpec, KernelMode, ValidatedChain};

use crate::args::ChainArgs;
use crate::CliError;

/// Where a chain came from, echoed into output headers.
#[derive(Debug, Clone)]
pub struct LoadedChain {
    pub chain: ValidatedChain,
    pub source: String,
}

pub fn has_chain(args: &ChainArgs) -> bool {
    args.family.is_some() || args.chain_file.is_some()
}

pub fn family_spec(args: &ChainArgs) -> Result<FamilySpec, CliError> {
    let name = args.family.as_deref().ok_or_else(|| CliError::input("--family is required"))?;
    let mut params = BTreeMap::new();
    for kv in &args.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::input(format!("--params expects k=v, got {kv:?}")))?;
        let v: f64 = v.trim().parse().map_err(|_| CliError::input(format!("parameter {k} is not a number: {v:?}")))?;
        params.insert(k.trim().to_string(), v);
    }
    if let Some(n) = args.n {
        params.insert("n".into(), n as f64);
    }
    if let Some(a) = args.alpha {
        params.insert("alpha".into(), a);
    }
    Ok(FamilySpec::from_params(name, &params)?)
}

pub fn load_chain(args: &ChainArgs) -> Result<LoadedChain, CliError> {
    if let Some(path) = &args.chain_file {
        let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let source = path.display().to_string();
        if value.get("family").is_some() {
            let family: FamilySpec = serde_json::from_value(value).map_err(|e| CliError::input(format!("{source}: {e}")))?;
            let chain = validate_chain(make_chain(&family)?)?;
            return Ok(LoadedChain { chain, source });
        }
        let spec: ChainSpec = serde_json::from_value(value).map_err(|e| CliError::input(format!("{source}: {e}")))?;
        return Ok(LoadedChain { chain: validate_chain(spec)?, source });
    }
    let family = family_spec(args)?;
    let chain = validate_chain(make_chain(&family)?)?;
    Ok(LoadedChain { chain, source: family.to_string() })
}

/// `LO..HI[:STEP]` (inclusive) or a comma separated list.
pub fn parse_times(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::input(format!("bad time grid {text:?}; expected LO..HI[:STEP] or a comma list"));
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let times = if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (number(hi)?, number(step)?),
            None => (number(rest)?, 1.0),
        };
        let lo = number(lo)?;
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(bad());
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        if count > 1_000_000 {
            return Err(CliError::input(format!("time grid {text:?} has more than a million points")));
        }
        (0..=count).map(|k| lo + k as f64 * step).collect()
    } else {
        text.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if times.is_empty() {
        return Err(bad());
    }
    Ok(times)
}

pub fn parse_integer_times(text: &str) -> Result<Vec<u64>, CliError> {
    parse_times(text)?
        .into_iter()
        .map(|t| {
            if t >= 0.0 && t.fract() == 0.0 {
                Ok(t as u64)
            } else {
                Err(CliError::input(format!("time {t} in {text:?} is not a nonnegative integer")))
            }
        })
        .collect()
}

pub fn parse_s_values(text: &str) -> Result<Vec<SValue>, CliError> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<SValue>().map_err(|_| CliError::input(format!("bad s value {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::input("empty s grid"));
    }
    Ok(values)
}

pub fn parse_modes(list: &[String]) -> Result<Vec<KernelMode>, CliError> {
    if list.is_empty() {
        return Ok(KernelMode::ALL.to_vec());
    }
    let mut modes = list.iter().map(|m| m.trim().parse::<KernelMode>()).collect::<Result<Vec<_>, _>>()?;
    modes.dedup();
    Ok(modes)
}
