use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use serde_json::json;
use srl_core::graph::{generate_ba, generate_regular};
use srl_core::harness::{
    median, render_svg, resolve_config, run_experiment, run_training, AxesConfig, ExperimentConfig, ExperimentKind,
    OutputDir, PartialConfig, RunArtifacts, RunOptions, Series,
};
use srl_core::learners::Algorithm;
use srl_core::Error;

mod flags;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configs or parameters: exit code 1.
    User(String),
    /// Anything else: exit code 2.
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match &e {
            Error::Config { key, message } if key != "<file>" => {
                CliError::User(format!("invalid value for --{}: {message}", flags::flag_name(key)))
            }
            _ if e.is_user_error() => CliError::User(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

const EXPERIMENTS: [(&str, ExperimentKind, &str); 4] = [
    ("spectrum", ExperimentKind::SpectrumStudy, "Operator and covariance spectra of matched BA and regular graphs"),
    ("compare", ExperimentKind::SgdVsRidge, "Tuned SGD vs tuned ridge on power-law spectra"),
    ("oversmooth", ExperimentKind::Oversmoothing, "Excess risk as layers are stacked"),
    ("bounds", ExperimentKind::BoundsSweep, "Measured risk against upper and lower bounds over N"),
];

fn common_args(cmd: Command, default_out: &'static str) -> Command {
    cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .help("JSON config file or a run manifest; flags override its keys [default: none]"),
    )
    .arg(
        Arg::new("out")
            .long("out")
            .value_name("DIR")
            .default_value(default_out)
            .help("Output directory (created if absent)"),
    )
    .arg(
        Arg::new("seed")
            .long("seed")
            .value_name("U64")
            .env("SRL_SEED")
            .default_value("0")
            .help("Master seed"),
    )
    .arg(
        Arg::new("jobs")
            .long("jobs")
            .value_name("K")
            .value_parser(clap::value_parser!(usize))
            .help("Concurrent trials [default: logical core count]"),
    )
}

fn cli() -> Command {
    let mut root = Command::new("srl")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Spectral risk laboratory: SGD vs ridge on graph aggregation data")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, kind, about) in EXPERIMENTS {
        let cmd = common_args(Command::new(name).about(about), default_out(name));
        root = root.subcommand(flags::add_config_flags(cmd, &ExperimentConfig::preset(kind), None));
    }
    let train = common_args(
        Command::new("train").about("Train one estimator and evaluate its risk and bounds"),
        "srl-out/train",
    )
    .arg(
        Arg::new("algorithm")
            .long("algorithm")
            .value_name("NAME")
            .value_parser(["sgd", "ridge"])
            .default_value("sgd")
            .help("Learner"),
    );
    root = root.subcommand(flags::add_config_flags(train, &ExperimentConfig::preset(ExperimentKind::SgdVsRidge), None));
    let gen = common_args(Command::new("gen-graph").about("Generate a graph and write it as JSON and an edge list"), "srl-out/graph")
        .arg(
            Arg::new("graph")
                .long("graph")
                .value_name("NAME")
                .value_parser(["ba", "regular"])
                .default_value("ba")
                .help("Graph family"),
        );
    root = root.subcommand(flags::add_config_flags(
        gen,
        &ExperimentConfig::preset(ExperimentKind::SpectrumStudy),
        Some(flags::GRAPH_KEYS),
    ));
    root.subcommand(
        Command::new("plot")
            .about("Plot columns of a results CSV as an SVG line chart")
            .arg(Arg::new("input").long("input").value_name("CSV").required(true).help("CSV file to read"))
            .arg(Arg::new("x").long("x").value_name("COLUMN").default_value("N").help("Column for the x axis"))
            .arg(Arg::new("y").long("y").value_name("COLUMN").default_value("delta").help("Column for the y axis"))
            .arg(
                Arg::new("group")
                    .long("group")
                    .value_name("COLUMN")
                    .default_value("algorithm")
                    .help("Column splitting rows into series; repeated x values are reduced to their median"),
            )
            .arg(Arg::new("log_x").long("log-x").action(ArgAction::SetTrue).help("Logarithmic x axis [default: false]"))
            .arg(Arg::new("log_y").long("log-y").action(ArgAction::SetTrue).help("Logarithmic y axis [default: false]"))
            .arg(Arg::new("title").long("title").value_name("TEXT").default_value("").help("Chart title"))
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("DIR")
                    .default_value("srl-out/plot")
                    .help("Output directory (created if absent)"),
            ),
    )
}

fn default_out(name: &str) -> &'static str {
    match name {
        "spectrum" => "srl-out/spectrum",
        "compare" => "srl-out/compare",
        "oversmooth" => "srl-out/oversmooth",
        _ => "srl-out/bounds",
    }
}

fn load_file(m: &ArgMatches) -> Result<Option<PartialConfig>, CliError> {
    let Some(path) = m.get_one::<String>("config") else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::User(format!("cannot read --config {path}: {e}")))?;
    PartialConfig::from_json(&text)
        .map(Some)
        .map_err(|e| CliError::User(format!("--config {path}: {e}")))
}

/// Preset, then config file, then `SRL_SEED` (if the file sets no seed),
/// then explicit flags.
fn resolve(kind: ExperimentKind, m: &ArgMatches) -> Result<ExperimentConfig, CliError> {
    let mut file = load_file(m)?;
    if let Some(seed) = flags::env_seed(m)? {
        let f = file.get_or_insert_with(PartialConfig::default);
        if f.seed.is_none() {
            f.seed = Some(seed);
        }
    }
    let overrides = flags::collect_overrides(m)?;
    Ok(resolve_config(kind, file.as_ref(), &overrides)?)
}

fn options(m: &ArgMatches) -> Result<RunOptions, CliError> {
    let mut opts = RunOptions::new(m.get_one::<String>("out").expect("has default"));
    if let Some(&j) = m.get_one::<usize>("jobs") {
        if j == 0 {
            return Err(CliError::User("invalid value '0' for --jobs: must be >= 1".into()));
        }
        opts.jobs = Some(j);
    }
    Ok(opts)
}

fn gen_graph(m: &ArgMatches) -> Result<RunArtifacts, CliError> {
    // Only the graph keys matter here, so the full config validation is skipped.
    let mut cfg = ExperimentConfig::preset(ExperimentKind::SpectrumStudy);
    let file = load_file(m)?.unwrap_or_default();
    if let (Some(seed), None) = (flags::env_seed(m)?, file.seed) {
        cfg.seed = seed;
    }
    file.apply(&mut cfg);
    flags::collect_overrides(m)?.apply(&mut cfg);
    let family = m.get_one::<String>("graph").expect("has default").as_str();
    let g = match family {
        "ba" => generate_ba(cfg.n, cfg.ba_m, cfg.seed)?,
        _ => generate_regular(cfg.n, cfg.regular_degree, cfg.seed)?,
    };
    let opts = options(m)?;
    let mut out = OutputDir::create(&opts.out_dir)?;
    out.write_text("graph.json", &(g.to_json()? + "\n"))?;
    out.write_text("graph.edges", &g.to_edge_list())?;
    let config = json!({
        "graph": family,
        "n": cfg.n,
        "ba_m": cfg.ba_m,
        "regular_degree": cfg.regular_degree,
    });
    Ok(out.finish_as("gen_graph", cfg.seed, config)?)
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn plot(m: &ArgMatches) -> Result<RunArtifacts, CliError> {
    let get = |id: &str| m.get_one::<String>(id).expect("has default").clone();
    let input = PathBuf::from(get("input"));
    let (xc, yc, gc) = (get("x"), get("y"), get("group"));
    let mut reader = csv::Reader::from_path(&input).map_err(|e| CliError::User(format!("--input {}: {e}", input.display())))?;
    let headers = reader.headers().map_err(|e| CliError::User(e.to_string()))?.clone();
    let col = |name: &str, flag: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::User(format!("invalid value '{name}' for --{flag}: no such column in {}", input.display())))
    };
    let (xi, yi) = (col(&xc, "x")?, col(&yc, "y")?);
    let gi = if gc.is_empty() { None } else { Some(col(&gc, "group")?) };

    let mut groups: BTreeMap<String, BTreeMap<u64, (f64, Vec<f64>)>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::User(format!("--input {}: {e}", input.display())))?;
        let (Some(x), Some(y)) = (parse_number(&rec[xi]), parse_number(&rec[yi])) else {
            continue;
        };
        let label = gi.map_or_else(|| yc.clone(), |g| rec[g].to_string());
        let cell = groups.entry(label).or_default().entry(x.to_bits()).or_insert((x, Vec::new()));
        cell.1.push(y);
    }
    if groups.is_empty() {
        return Err(CliError::User(format!("--input {}: no numeric rows for {xc}/{yc}", input.display())));
    }
    let series: Vec<Series> = groups
        .into_iter()
        .map(|(label, cells)| {
            let mut pts: Vec<(f64, f64)> = cells.into_values().map(|(x, ys)| (x, median(&ys))).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series::new(label, pts)
        })
        .collect();
    let axes = AxesConfig {
        title: get("title"),
        x_label: xc.clone(),
        y_label: yc.clone(),
        x_log: m.get_flag("log_x"),
        y_log: m.get_flag("log_y"),
        ..AxesConfig::default()
    };
    let svg = render_svg(&series, &axes)?;
    let mut out = OutputDir::create(Path::new(&get("out")))?;
    out.write_text("plot.svg", &svg)?;
    let config = json!({
        "input": input.to_string_lossy(),
        "x": xc,
        "y": yc,
        "group": gc,
        "log_x": axes.x_log,
        "log_y": axes.y_log,
        "title": axes.title,
    });
    Ok(out.finish_as("plot", 0, config)?)
}

fn dispatch(name: &str, m: &ArgMatches) -> Result<RunArtifacts, CliError> {
    if let Some((_, kind, _)) = EXPERIMENTS.iter().find(|(n, _, _)| *n == name) {
        let cfg = resolve(*kind, m)?;
        return Ok(run_experiment(&cfg, &options(m)?)?);
    }
    match name {
        "train" => {
            let cfg = resolve(ExperimentKind::SgdVsRidge, m)?;
            let algorithm = match m.get_one::<String>("algorithm").map(String::as_str) {
                Some("ridge") => Algorithm::Ridge,
                _ => Algorithm::Sgd,
            };
            let (outcome, artifacts) = run_training(&cfg, algorithm, &options(m)?)?;
            println!(
                "{}: hyperparameter {} excess risk {:.6e}",
                algorithm.as_str(),
                outcome.estimator.hyperparameter(),
                outcome.report.delta
            );
            Ok(artifacts)
        }
        "gen-graph" => gen_graph(m),
        "plot" => plot(m),
        other => Err(CliError::Internal(format!("unhandled subcommand {other}"))),
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match dispatch(name, sub) {
        Ok(artifacts) => {
            for f in &artifacts.files {
                println!("wrote {}", f.display());
            }
            println!("{}", artifacts.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(CliError::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
