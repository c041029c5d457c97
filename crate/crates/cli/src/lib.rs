//! Command-line driver: binds a TOML run file to one experiment and writes
//! its data tables.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cim_core::experiments::{
    check_bands, cubic_survey, default_workers, in_pool, independent_opo_experiment, run_campaign_on, sweep_pump,
    write_survey_csv, GsetMetadata, ReportKind, WORKERS_ENV,
};
use cim_core::quantum::{linearized_variances, squeezing_compare, write_squeeze_csv};
use cim_core::readout::{readout_table, write_readout_table_csv};
use cim_core::CimError;
use clap::{Args, Parser, Subcommand};

use config::{
    load, load_or_default, rebase_problem, relative_to, Bands, GsetConfig, IndependentConfig, ReadoutConfig,
    SolveConfig, SqueezeRunConfig, SurveyConfig,
};
use output::Outputs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("acceptance bands violated: {}", .0.join("; "))]
    Check(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Runtime(_) => 2,
            Self::Check(_) => 3,
        }
    }
}

fn config_err(e: CimError) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "cim", version, about = "Coherent Ising machine simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// More log output; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one campaign of trials on a single problem.
    Solve(RunArgs),
    /// Success probability and build-up time over every cubic graph of the given orders.
    SurveyCubic(RunArgs),
    /// MAX-CUT benchmark over G-set instance files.
    BenchGset(RunArgs),
    /// Compare quadrature variances of the positive-P and c-number processes.
    Squeeze(RunArgs),
    /// Phase state to pulse train and detector level mapping.
    ReadoutTable(RunArgs),
    /// Pattern statistics of uncoupled oscillators.
    Independent(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    pub out: PathBuf,
    /// Override the seed of the run file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(short, long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    /// Exit with status 3 when a metric leaves its `check` band.
    #[arg(long)]
    pub check: bool,
}

impl RunArgs {
    fn workers(&self) -> usize {
        self.workers.filter(|&w| w > 0).unwrap_or_else(default_workers)
    }

    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn require_config(&self, command: &str) -> Result<&Path, CliError> {
        self.config_path()
            .ok_or_else(|| CliError::Config(format!("{command} needs --config")))
    }
}

/// Files and metrics produced by one subcommand.
#[derive(Debug, Default)]
pub struct RunReport {
    pub outputs: Outputs,
    pub metrics: BTreeMap<String, f64>,
    pub bands: Bands,
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Self::Solve(a)
            | Self::SurveyCubic(a)
            | Self::BenchGset(a)
            | Self::Squeeze(a)
            | Self::ReadoutTable(a)
            | Self::Independent(a) => a,
        }
    }
}

/// Runs the subcommand, writes its outputs and checks its bands.
pub fn dispatch(command: &Command) -> Result<RunReport, CliError> {
    let args = command.args();
    let report = match command {
        Command::Solve(a) => solve(a)?,
        Command::SurveyCubic(a) => survey(a)?,
        Command::BenchGset(a) => bench_gset(a)?,
        Command::Squeeze(a) => squeeze(a)?,
        Command::ReadoutTable(a) => readout(a)?,
        Command::Independent(a) => independent(a)?,
    };
    let names: Vec<String> = report.outputs.names().map(str::to_owned).collect();
    let RunReport {
        outputs,
        metrics,
        bands,
    } = report;
    outputs
        .commit(&args.out)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", args.out.display())))?;
    for n in &names {
        log::info!("wrote {}", args.out.join(n).display());
    }
    let violations = check_bands(&metrics, &bands);
    for v in &violations {
        log::warn!("{v}");
    }
    if args.check && !violations.is_empty() {
        return Err(CliError::Check(violations.iter().map(ToString::to_string).collect()));
    }
    Ok(RunReport {
        outputs: Outputs::default(),
        metrics,
        bands,
    })
}

fn solve(a: &RunArgs) -> Result<RunReport, CliError> {
    let path = a.require_config("solve")?;
    let mut spec: SolveConfig = load(path)?;
    rebase_problem(&mut spec, Some(path));
    if let Some(seed) = a.seed {
        spec.sim.seed = seed;
    }
    spec.sim.validate().map_err(config_err)?;
    if spec.n_trials == 0 {
        return Err(CliError::Config("n_trials must be positive".into()));
    }
    let problem = spec.problem.resolve().map_err(config_err)?;

    let workers = a.workers();
    let st = run_campaign_on(&problem, &spec, workers).map_err(runtime_err)?;
    let mut metrics = st.metrics();
    let mut outputs = Outputs::default();
    for &kind in &spec.outputs {
        let empty = match kind {
            ReportKind::Histogram => st.histogram().is_none(),
            ReportKind::Levels => st.level_distribution().is_none(),
            _ => false,
        };
        if !empty {
            outputs
                .add(kind.file_name(), |w| st.write_report(kind, w))
                .map_err(runtime_err)?;
        }
    }
    if !spec.pump_sweep.is_empty() {
        let sweep = sweep_pump(&problem, &spec.pump_sweep, &spec.sim, spec.n_trials, workers).map_err(runtime_err)?;
        metrics.insert("p_opt".into(), sweep.p_opt);
        metrics.insert("q_opt".into(), sweep.q_opt);
        outputs.add("sweep.csv", |w| sweep.write_csv(w)).map_err(runtime_err)?;
    }
    Ok(RunReport {
        outputs,
        metrics,
        bands: spec.check,
    })
}

fn survey(a: &RunArgs) -> Result<RunReport, CliError> {
    let mut cfg: SurveyConfig = load_or_default(a.config_path())?;
    if let Some(seed) = a.seed {
        cfg.sim.seed = seed;
    }
    cfg.sim.validate().map_err(config_err)?;
    if cfg.orders.is_empty() || cfg.trials_per_graph == 0 {
        return Err(CliError::Config(
            "survey needs at least one order and one trial per graph".into(),
        ));
    }

    let s = cubic_survey(&cfg.orders, &cfg.sim, cfg.trials_per_graph, a.workers()).map_err(runtime_err)?;
    let mut metrics = BTreeMap::new();
    let mut medians = Vec::new();
    for o in &s.orders {
        metrics.insert(format!("q_min_{}", o.order), o.q_min);
        if let Some(m) = o.build_up.median {
            metrics.insert(format!("median_build_up_{}", o.order), m);
            medians.push(m);
        }
    }
    metrics.insert(
        "q_min".into(),
        s.orders.iter().map(|o| o.q_min).fold(f64::INFINITY, f64::min),
    );
    if !medians.is_empty() {
        let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        metrics.insert("median_build_up_min".into(), lo);
        metrics.insert("median_build_up_max".into(), hi);
        metrics.insert("median_build_up_ratio".into(), hi / lo);
    }
    let mut outputs = Outputs::default();
    outputs
        .add("survey.csv", |w| write_survey_csv(w, &s))
        .map_err(runtime_err)?;
    outputs.add("survey.json", |w| write_json(w, &s)).map_err(runtime_err)?;
    Ok(RunReport {
        outputs,
        metrics,
        bands: cfg.check,
    })
}

fn bench_gset(a: &RunArgs) -> Result<RunReport, CliError> {
    let path = a.require_config("bench-gset")?;
    let mut cfg: GsetConfig = load(path)?;
    if let Some(seed) = a.seed {
        cfg.sim.seed = seed;
    }
    cfg.sim.validate().map_err(config_err)?;
    if cfg.runs == 0 {
        return Err(CliError::Config("runs must be positive".into()));
    }
    let meta = GsetMetadata::read(relative_to(Some(path), &cfg.metadata)).map_err(config_err)?;
    let instances: Vec<PathBuf> = cfg.instances.iter().map(|p| relative_to(Some(path), p)).collect();
    if let Some(missing) = instances.iter().find(|p| !p.is_file()) {
        return Err(CliError::Config(format!(
            "instance file {} not found",
            missing.display()
        )));
    }

    let report =
        cim_core::experiments::benchmark_gset(&instances, &meta, &cfg.sim, cfg.runs, a.workers(), cfg.allow_large)
            .map_err(runtime_err)?;
    let mut metrics = BTreeMap::new();
    for r in &report.rows {
        metrics.insert(format!("o_avg_{}", r.name), r.o_avg);
        metrics.insert(format!("o_max_{}", r.name), r.o_max);
        if let Some(t) = r.t_avg {
            metrics.insert(format!("t_avg_{}", r.name), t);
        }
    }
    let mut outputs = Outputs::default();
    outputs.add("gset.csv", |w| report.write_csv(w)).map_err(runtime_err)?;
    outputs
        .add("gset.json", |w| write_json(w, &report))
        .map_err(runtime_err)?;
    Ok(RunReport {
        outputs,
        metrics,
        bands: cfg.check,
    })
}

fn squeeze(a: &RunArgs) -> Result<RunReport, CliError> {
    let mut cfg: SqueezeRunConfig = load_or_default(a.config_path())?;
    if let Some(seed) = a.seed {
        cfg.squeeze.seed = seed;
    }
    cfg.squeeze.validate().map_err(config_err)?;
    if cfg.p_values.is_empty() || cfg.p_values.iter().any(|p| !(0.0..=1.2).contains(p)) {
        return Err(CliError::Config("p_values must be nonempty and within [0, 1.2]".into()));
    }

    let rows = in_pool(a.workers(), || squeezing_compare(&cfg.p_values, &cfg.squeeze))
        .and_then(|r| r)
        .map_err(runtime_err)?;
    let mut metrics = BTreeMap::new();
    let max_z = rows.iter().map(|r| r.z1.abs().max(r.z2.abs())).fold(0.0, f64::max);
    metrics.insert("max_abs_z".into(), max_z);
    metrics.insert(
        "max_rejected_fraction".into(),
        rows.iter().map(|r| r.rejected_fraction).fold(0.0, f64::max),
    );
    let below: Vec<_> = rows.iter().filter(|r| r.p < 1.0).collect();
    if !below.is_empty() {
        let dev = below
            .iter()
            .map(|r| {
                let (l1, l2) = linearized_variances(r.p);
                ((r.qfpe.var_a1 - l1) / l1).abs().max(((r.qfpe.var_a2 - l2) / l2).abs())
            })
            .fold(0.0, f64::max);
        metrics.insert("max_linearized_deviation".into(), dev);
    }
    let mut outputs = Outputs::default();
    outputs
        .add("squeeze.csv", |w| write_squeeze_csv(w, &rows))
        .map_err(runtime_err)?;
    outputs
        .add("squeeze.json", |w| write_json(w, &rows))
        .map_err(runtime_err)?;
    Ok(RunReport {
        outputs,
        metrics,
        bands: cfg.check,
    })
}

fn readout(a: &RunArgs) -> Result<RunReport, CliError> {
    let cfg: ReadoutConfig = load_or_default(a.config_path())?;
    let rows = readout_table(cfg.n).map_err(config_err)?;
    let mut outputs = Outputs::default();
    outputs
        .add("readout_table.csv", |w| write_readout_table_csv(w, &rows))
        .map_err(runtime_err)?;
    Ok(RunReport {
        outputs,
        ..Default::default()
    })
}

fn independent(a: &RunArgs) -> Result<RunReport, CliError> {
    let mut cfg: IndependentConfig = load_or_default(a.config_path())?;
    if let Some(seed) = a.seed {
        cfg.sim.seed = seed;
    }
    cfg.sim.validate().map_err(config_err)?;
    if cfg.n < 2 || cfg.trials == 0 {
        return Err(CliError::Config(
            "independent needs n >= 2 and at least one trial".into(),
        ));
    }

    let r = independent_opo_experiment(cfg.n, &cfg.sim, cfg.trials, a.workers()).map_err(runtime_err)?;
    let mut metrics = BTreeMap::from([
        ("states_uniform".to_string(), f64::from(u8::from(r.states_uniform()))),
        ("levels_uniform".to_string(), f64::from(u8::from(r.levels_uniform()))),
    ]);
    for c in r.class_checks.iter().chain(&r.level_checks) {
        metrics.insert(
            format!("count_{}", c.label.trim_matches(|ch| ch == '[' || ch == ']')),
            c.observed as f64,
        );
    }
    let mut outputs = Outputs::default();
    outputs
        .add("histogram.csv", |w| r.histogram.write_csv(w))
        .map_err(runtime_err)?;
    outputs
        .add("levels.csv", |w| r.levels.write_csv(w))
        .map_err(runtime_err)?;
    outputs
        .add("checks.csv", |w| r.write_checks_csv(w))
        .map_err(runtime_err)?;
    Ok(RunReport {
        outputs,
        metrics,
        bands: cfg.check,
    })
}

fn write_json<W: std::io::Write, T: serde::Serialize>(mut w: W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
}
