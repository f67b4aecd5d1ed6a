//! Config-key flags: one `--kebab-case` flag per config key, parsed into a
//! [`PartialConfig`] so flag values go through the same deserializer as
//! config files.

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};
use serde_json::{Map, Value};
use srl_core::harness::{ExperimentConfig, PartialConfig};

use crate::CliError;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Uint,
    Float,
    Word(&'static [&'static str]),
    Bool,
    UintList,
    FloatList,
}

struct Key {
    name: &'static str,
    kind: Kind,
    help: &'static str,
}

const OPERATORS: &[&str] = &["normalized_adjacency", "shift_psd", "squared", "sgc_power"];

const KEYS: &[Key] = &[
    Key { name: "trials", kind: Kind::Uint, help: "Independent trials" },
    Key { name: "data_path", kind: Kind::Word(&["graph", "spectrum"]), help: "Data source" },
    Key { name: "n", kind: Kind::Uint, help: "Graph vertex count" },
    Key { name: "d", kind: Kind::Uint, help: "Feature dimension" },
    Key { name: "ba_m", kind: Kind::Uint, help: "Edges per new vertex in the preferential-attachment graph" },
    Key { name: "regular_degree", kind: Kind::Uint, help: "Degree of the regular graph" },
    Key { name: "operator", kind: Kind::Word(OPERATORS), help: "Graph operator" },
    Key { name: "spectrum_head", kind: Kind::Uint, help: "Eigenvalues used by the decay fit" },
    Key { name: "betas", kind: Kind::FloatList, help: "Spectrum decay exponents" },
    Key { name: "layers", kind: Kind::UintList, help: "Layer counts, e.g. 1,2,3 or 1..4" },
    Key { name: "sigma", kind: Kind::Float, help: "Noise standard deviation" },
    Key { name: "n_train", kind: Kind::Uint, help: "Training samples N" },
    Key { name: "n_grid", kind: Kind::UintList, help: "Training sizes swept by the bounds run" },
    Key { name: "population", kind: Kind::Uint, help: "Evaluation rows on the spectrum path" },
    Key { name: "validation_fraction", kind: Kind::Float, help: "Share of rows held out for tuning" },
    Key { name: "gamma", kind: Kind::Float, help: "Fixed SGD stepsize (skips tuning)" },
    Key { name: "gamma_grid", kind: Kind::FloatList, help: "Absolute stepsize grid" },
    Key { name: "gamma_grid_rel", kind: Kind::FloatList, help: "Stepsize grid in units of 1/tr(M)" },
    Key { name: "lambda", kind: Kind::Float, help: "Fixed ridge penalty (skips tuning)" },
    Key { name: "lambda_grid", kind: Kind::FloatList, help: "Ridge penalty grid" },
    Key { name: "sgd_iterations", kind: Kind::Uint, help: "SGD iterations (defaults to n-train)" },
    Key { name: "sampling", kind: Kind::Word(&["with_replacement", "one_pass"]), help: "SGD sampling scheme" },
    Key { name: "align", kind: Kind::Word(&["head", "tail", "weighted"]), help: "Ground-truth alignment" },
    Key { name: "align_k", kind: Kind::Uint, help: "Head/tail width (defaults to ceil(d/10))" },
    Key { name: "align_p", kind: Kind::Float, help: "Exponent of the weighted alignment" },
    Key { name: "repeats", kind: Kind::Uint, help: "Retrainings for the bias/variance split (0 disables)" },
    Key { name: "ridge_b", kind: Kind::Float, help: "Ridge cutoff constant b > 1" },
    Key { name: "plots", kind: Kind::Bool, help: "Write SVG plots" },
];

pub const GRAPH_KEYS: &[&str] = &["n", "ba_m", "regular_degree"];

pub fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn show_default(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::Array(items) => Some(items.iter().map(|i| show_default(i).unwrap_or_default()).collect::<Vec<_>>().join(",")),
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

/// Adds the flags for `keys` (all keys when `None`) with defaults taken from
/// `preset`.
pub fn add_config_flags(mut cmd: Command, preset: &ExperimentConfig, keys: Option<&[&str]>) -> Command {
    let defaults = serde_json::to_value(preset).expect("config serializes");
    for key in KEYS.iter().filter(|k| keys.map_or(true, |ks| ks.contains(&k.name))) {
        let mut arg = Arg::new(key.name).long(flag_name(key.name)).help(key.help).action(ArgAction::Set);
        arg = match key.kind {
            Kind::Uint => arg.value_name("INT"),
            Kind::Float => arg.value_name("FLOAT").allow_negative_numbers(true),
            Kind::Word(words) => arg.value_name("NAME").value_parser(words.to_vec()),
            Kind::Bool => arg.value_name("BOOL").value_parser(["true", "false"]),
            Kind::UintList => arg.value_name("LIST"),
            Kind::FloatList => arg.value_name("LIST").allow_negative_numbers(true),
        };
        match show_default(&defaults[key.name]) {
            Some(d) => arg = arg.default_value(d),
            None => arg = arg.help(format!("{} [default: unset]", key.help)),
        }
        cmd = cmd.arg(arg);
    }
    cmd
}

fn bad(key: &str, raw: &str, why: impl std::fmt::Display) -> CliError {
    CliError::User(format!("invalid value '{raw}' for --{}: {why}", flag_name(key)))
}

fn parse_uint(key: &str, raw: &str) -> Result<u64, CliError> {
    raw.trim().parse::<u64>().map_err(|e| bad(key, raw, e))
}

fn parse_float(key: &str, raw: &str) -> Result<f64, CliError> {
    let v = raw.trim().parse::<f64>().map_err(|e| bad(key, raw, e))?;
    if !v.is_finite() {
        return Err(bad(key, raw, "must be finite"));
    }
    Ok(v)
}

/// `a..b` and `a..=b` are inclusive ranges; otherwise a comma list.
fn parse_uint_list(key: &str, raw: &str) -> Result<Vec<u64>, CliError> {
    if let Some((lo, hi)) = raw.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi) = (parse_uint(key, lo)?, parse_uint(key, hi)?);
        if lo > hi {
            return Err(bad(key, raw, "empty range"));
        }
        return Ok((lo..=hi).collect());
    }
    raw.split(',').map(|p| parse_uint(key, p)).collect()
}

fn to_json(key: &Key, raw: &str) -> Result<Value, CliError> {
    Ok(match key.kind {
        Kind::Uint => parse_uint(key.name, raw)?.into(),
        Kind::Float => parse_float(key.name, raw)?.into(),
        Kind::Word(_) => Value::String(raw.to_string()),
        Kind::Bool => Value::Bool(raw == "true"),
        Kind::UintList => parse_uint_list(key.name, raw)?.into(),
        Kind::FloatList => raw
            .split(',')
            .map(|p| parse_float(key.name, p))
            .collect::<Result<Vec<_>, _>>()?
            .into(),
    })
}

fn from_command_line(m: &ArgMatches, id: &str) -> bool {
    m.try_contains_id(id).unwrap_or(false) && m.value_source(id) == Some(ValueSource::CommandLine)
}

/// Collects the config keys given explicitly on the command line.
pub fn collect_overrides(m: &ArgMatches) -> Result<PartialConfig, CliError> {
    let mut map = Map::new();
    for key in KEYS {
        if !from_command_line(m, key.name) {
            continue;
        }
        let raw = m.get_one::<String>(key.name).expect("set from the command line");
        let value = to_json(key, raw)?;
        let mut single = Map::new();
        single.insert(key.name.to_string(), value.clone());
        serde_json::from_value::<PartialConfig>(Value::Object(single)).map_err(|e| bad(key.name, raw, e))?;
        map.insert(key.name.to_string(), value);
    }
    if from_command_line(m, "seed") {
        let raw = m.get_one::<String>("seed").expect("seed given");
        map.insert("seed".into(), parse_uint("seed", raw)?.into());
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::User(e.to_string()))
}

/// The seed supplied through the environment, if any and no flag was given.
pub fn env_seed(m: &ArgMatches) -> Result<Option<u64>, CliError> {
    if m.value_source("seed") != Some(ValueSource::EnvVariable) {
        return Ok(None);
    }
    let raw = m.get_one::<String>("seed").expect("seed from env");
    raw.trim()
        .parse()
        .map(Some)
        .map_err(|e| CliError::User(format!("invalid SRL_SEED value '{raw}': {e}")))
}
