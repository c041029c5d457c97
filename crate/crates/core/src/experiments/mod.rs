//! Multi-trial campaigns and the reports built on them.

mod gset;
mod independent;
mod stats;
mod sweep;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CimError, Result};
use crate::graph::{
    brute_force_ground, cut_value, delay_line_topology, energy_tolerance, enumerate_cubic_graphs, graph_to_ising,
    ising_energy, local_improvement, read_gset, DelaySpec, Edge, IsingProblem, WeightedGraph, BRUTE_FORCE_MAX_SPINS,
};
use crate::readout::{accumulate_histogram, slow_level_distribution, LevelDistribution, StateHistogram};
use crate::sde::{assemble_couplings, run_trial_with, SimConfig, TrialResult};

pub use gset::{benchmark_gset, GsetInstanceMeta, GsetMetadata, GsetReport, GsetRow, DESK_SCALE_MAX_VERTICES};
pub use independent::{
    independent_opo_config, independent_opo_experiment, independent_report, uniform_expectations, IndependentReport,
};
pub use stats::{cell_check, median, quantile, wilson_interval, BuildUpSummary, CellCheck, CONFIDENCE_Z};
pub use sweep::{
    cubic_survey, sweep_pump, write_survey_csv, CubicSurvey, GraphReport, OrderReport, PumpSweep, SweepRow,
};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "CIM_WORKERS";

/// Where the problem of a campaign comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    /// MAX-CUT on an inline graph with 0-indexed vertices.
    Graph { n: usize, edges: Vec<Edge> },
    /// MAX-CUT on the complete graph `K_n`.
    Complete { n: usize },
    /// MAX-CUT on a G-set file.
    Gset { path: PathBuf },
    /// MAX-CUT on the `index`-th non-isomorphic cubic graph of the given order.
    Cubic { order: usize, index: usize },
    /// Ising couplings realized by delay lines on a ring.
    Delay { spec: DelaySpec },
    /// Inline Ising couplings `(i, j, J_ij)`.
    Ising {
        n: usize,
        couplings: Vec<(usize, usize, f64)>,
    },
    /// `n` oscillators with every coupling blocked.
    Uncoupled { n: usize },
}

/// A resolved problem; `graph` is present for MAX-CUT sources.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub label: String,
    pub ising: IsingProblem,
    pub graph: Option<WeightedGraph>,
}

impl Problem {
    pub fn max_cut(label: impl Into<String>, g: WeightedGraph) -> Self {
        Self {
            label: label.into(),
            ising: graph_to_ising(&g),
            graph: Some(g),
        }
    }

    pub fn ising(label: impl Into<String>, ising: IsingProblem) -> Self {
        Self {
            label: label.into(),
            ising,
            graph: None,
        }
    }
}

impl ProblemSource {
    pub fn resolve(&self) -> Result<Problem> {
        Ok(match self {
            Self::Graph { n, edges } => Problem::max_cut(format!("graph-{n}"), WeightedGraph::new(*n, edges.clone())?),
            Self::Complete { n } => Problem::max_cut(format!("K{n}"), WeightedGraph::complete(*n)),
            Self::Gset { path } => {
                let label = path
                    .file_stem()
                    .map_or("gset".into(), |s| s.to_string_lossy().into_owned());
                Problem::max_cut(label, read_gset(path)?)
            }
            Self::Cubic { order, index } => {
                let graphs = enumerate_cubic_graphs(*order)?;
                let g = graphs.get(*index).cloned().ok_or_else(|| {
                    CimError::Config(format!(
                        "order {order} has {} cubic graphs, index {index} requested",
                        graphs.len()
                    ))
                })?;
                Problem::max_cut(format!("cubic-{order}-{index}"), g)
            }
            Self::Delay { spec } => {
                let phases: Vec<String> = spec.lines().iter().map(|l| l.phase.to_string()).collect();
                Problem::ising(format!("delay-[{}]", phases.join(",")), delay_line_topology(spec))
            }
            Self::Ising { n, couplings } => Problem::ising(
                format!("ising-{n}"),
                IsingProblem::from_pairs(*n, couplings.iter().copied())?,
            ),
            Self::Uncoupled { n } => {
                if *n == 0 {
                    return Err(CimError::Config("uncoupled problem needs n >= 1".into()));
                }
                Problem::ising(format!("uncoupled-{n}"), IsingProblem::uncoupled(*n))
            }
        })
    }
}

/// Output files a campaign can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    /// `summary.json`.
    Summary,
    /// `trials.csv`.
    Trials,
    /// `histogram.csv`.
    Histogram,
    /// `levels.csv`.
    Levels,
}

impl ReportKind {
    pub fn file_name(self) -> &'static str {
        match self {
            Self::Summary => "summary.json",
            Self::Trials => "trials.csv",
            Self::Histogram => "histogram.csv",
            Self::Levels => "levels.csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub problem: ProblemSource,
    #[serde(default)]
    pub sim: SimConfig,
    pub n_trials: u64,
    #[serde(default = "yes")]
    pub apply_local_improvement: bool,
    /// Fail with a capability error when no exact oracle is available.
    #[serde(default)]
    pub require_oracle: bool,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<ReportKind>,
    /// When nonempty, also estimate `q` at each of these constant pump rates.
    #[serde(default)]
    pub pump_sweep: Vec<f64>,
    /// Acceptance bands `metric = [low, high]` checked against the results.
    #[serde(default)]
    pub check: BTreeMap<String, [f64; 2]>,
}

fn yes() -> bool {
    true
}

fn default_outputs() -> Vec<ReportKind> {
    vec![ReportKind::Summary, ReportKind::Trials]
}

impl CampaignSpec {
    pub fn new(problem: ProblemSource, sim: SimConfig, n_trials: u64) -> Self {
        Self {
            problem,
            sim,
            n_trials,
            apply_local_improvement: true,
            require_oracle: false,
            outputs: default_outputs(),
            pump_sweep: Vec::new(),
            check: BTreeMap::new(),
        }
    }
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f(0..n)` on a pool of `workers` threads; results are in index order.
pub fn run_indexed<T, F>(n: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    in_pool(workers, || (0..n).into_par_iter().map(&f).collect())
}

/// Runs `f` inside a pool of `workers` threads.
pub fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CimError::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// A metric outside its acceptance band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandViolation {
    pub metric: String,
    pub value: Option<f64>,
    pub band: [f64; 2],
}

impl std::fmt::Display for BandViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.value {
            Some(v) => write!(f, "{} = {v} outside [{}, {}]", self.metric, self.band[0], self.band[1]),
            None => write!(f, "{} is unavailable", self.metric),
        }
    }
}

/// Compares `metrics` with each `[low, high]` band; a band naming a
/// missing metric is a violation.
pub fn check_bands(metrics: &BTreeMap<String, f64>, bands: &BTreeMap<String, [f64; 2]>) -> Vec<BandViolation> {
    bands
        .iter()
        .filter_map(|(name, &band)| {
            let value = metrics.get(name).copied();
            let ok = value.is_some_and(|v| v >= band[0] && v <= band[1]);
            (!ok).then(|| BandViolation {
                metric: name.clone(),
                value,
                band,
            })
        })
        .collect()
}

/// One trial as reported: the raw result or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub result: Option<TrialResult>,
    pub improved_energy: Option<f64>,
    pub error: Option<String>,
}

impl TrialRecord {
    fn build_up(&self) -> Option<f64> {
        self.result.as_ref().and_then(|r| r.build_up_time)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl ValueSummary {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramEntry {
    pub representative: String,
    pub class_size: usize,
    pub count: u64,
    pub per_state: f64,
}

/// Aggregate results of a campaign. Everything except `wall_clock_seconds`
/// is a deterministic function of the spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub label: String,
    pub n: usize,
    pub n_trials: u64,
    pub ground_energy: Option<f64>,
    pub q_raw: Option<f64>,
    pub q_raw_interval: Option<(f64, f64)>,
    pub q_improved: Option<f64>,
    pub q_improved_interval: Option<(f64, f64)>,
    pub successes_raw: Option<u64>,
    pub build_up: BuildUpSummary,
    /// Mean build-up time in normalized units.
    pub t_mean: Option<f64>,
    /// Mean build-up time in seconds, when the photon decay rate is known.
    pub t_mean_seconds: Option<f64>,
    pub energy: Option<ValueSummary>,
    pub cut: Option<ValueSummary>,
    pub failed_trials: u64,
    pub histogram: Vec<HistogramEntry>,
    pub levels: BTreeMap<String, f64>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
}

impl CampaignStats {
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<f64>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("q_raw", self.q_raw);
        put("q_improved", self.q_improved);
        put("median_build_up", self.build_up.median);
        put("t_mean", self.t_mean);
        put("cut_max", self.cut.as_ref().map(|c| c.max));
        put("cut_mean", self.cut.as_ref().map(|c| c.mean));
        for e in &self.histogram {
            put(
                &format!("fraction_{}", e.representative.trim_matches(|c| c == '[' || c == ']')),
                Some(e.count as f64 / self.n_trials as f64),
            );
        }
        m
    }

    pub fn histogram(&self) -> Option<StateHistogram> {
        let ok: Vec<TrialResult> = self.trials.iter().filter_map(|t| t.result.clone()).collect();
        accumulate_histogram(&ok).ok()
    }

    pub fn level_distribution(&self) -> Option<LevelDistribution> {
        let ok: Vec<TrialResult> = self.trials.iter().filter_map(|t| t.result.clone()).collect();
        slow_level_distribution(&ok).ok()
    }

    /// CSV: `trial,spins,energy,improved_energy,cut,build_up_time,steps,error`.
    pub fn write_trials_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "trial,spins,energy,improved_energy,cut,build_up_time,steps,error")?;
        for t in &self.trials {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            match &t.result {
                Some(r) => writeln!(
                    w,
                    "{},{},{},{},{},{},{},",
                    t.trial,
                    r.spins,
                    r.final_energy,
                    opt(t.improved_energy),
                    opt(r.final_cut),
                    opt(r.build_up_time),
                    r.steps
                )?,
                None => writeln!(
                    w,
                    "{},,,,,,,{}",
                    t.trial,
                    t.error.as_deref().unwrap_or("").replace(',', ";")
                )?,
            }
        }
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)
    }

    /// Writes one report kind; `Histogram` and `Levels` are skipped when no
    /// trial completed.
    pub fn write_report<W: Write>(&self, kind: ReportKind, w: W) -> std::io::Result<()> {
        match kind {
            ReportKind::Summary => self.write_summary_json(w),
            ReportKind::Trials => self.write_trials_csv(w),
            ReportKind::Histogram => self.histogram().map_or(Ok(()), |h| h.write_csv(w)),
            ReportKind::Levels => self.level_distribution().map_or(Ok(()), |l| l.write_csv(w)),
        }
    }
}

/// Runs the campaign on `workers` threads.
pub fn run_campaign(spec: &CampaignSpec, workers: usize) -> Result<CampaignStats> {
    let problem = spec.problem.resolve()?;
    run_campaign_on(&problem, spec, workers)
}

/// Same as [`run_campaign`] with an already resolved problem.
pub fn run_campaign_on(problem: &Problem, spec: &CampaignSpec, workers: usize) -> Result<CampaignStats> {
    if spec.n_trials == 0 {
        return Err(CimError::Config("a campaign needs at least one trial".into()));
    }
    spec.sim.validate()?;
    let n = problem.ising.n();
    let ground = if n <= BRUTE_FORCE_MAX_SPINS {
        Some(brute_force_ground(&problem.ising)?.energy)
    } else if spec.require_oracle {
        return Err(CimError::Capability(format!(
            "success probability needs an exact oracle, which is capped at {BRUTE_FORCE_MAX_SPINS} spins (problem has {n})"
        )));
    } else {
        None
    };

    let started = Instant::now();
    let xi = assemble_couplings(&problem.ising, spec.sim.xi_scale, spec.sim.coupling_scaling);
    let trials = run_indexed(spec.n_trials, workers, |k| {
        let outcome = run_trial_with(&problem.ising, &xi, &spec.sim, k).and_then(|mut r| {
            if let Some(g) = &problem.graph {
                r.final_cut = Some(cut_value(g, &r.spins)?);
            }
            let improved = if spec.apply_local_improvement {
                Some(ising_energy(
                    &problem.ising,
                    &local_improvement(&problem.ising, &r.spins)?,
                )?)
            } else {
                None
            };
            Ok((r, improved))
        });
        match outcome {
            Ok((r, improved_energy)) => TrialRecord {
                trial: k,
                result: Some(r),
                improved_energy,
                error: None,
            },
            Err(e) => {
                log::warn!("trial {k} failed: {e}");
                TrialRecord {
                    trial: k,
                    result: None,
                    improved_energy: None,
                    error: Some(e.to_string()),
                }
            }
        }
    })?;
    let wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(summarize(problem, spec, ground, trials, wall_clock_seconds))
}

fn summarize(
    problem: &Problem,
    spec: &CampaignSpec,
    ground: Option<f64>,
    trials: Vec<TrialRecord>,
    wall_clock_seconds: f64,
) -> CampaignStats {
    let total = spec.n_trials;
    let tol = energy_tolerance(&problem.ising);
    let is_ground = |e: f64| ground.is_some_and(|g| e <= g + tol);
    let settled = |t: &&TrialRecord| t.build_up().is_some();

    let raw = ground.map(|_| {
        trials
            .iter()
            .filter(settled)
            .filter(|t| is_ground(t.result.as_ref().unwrap().final_energy))
            .count() as u64
    });
    let improved = (ground.is_some() && spec.apply_local_improvement).then(|| {
        trials
            .iter()
            .filter(settled)
            .filter(|t| t.improved_energy.is_some_and(is_ground))
            .count() as u64
    });
    let q = |k: Option<u64>| k.map(|k| k as f64 / total as f64);
    let ci = |k: Option<u64>| k.map(|k| wilson_interval(k, total, CONFIDENCE_Z));

    let times: Vec<Option<f64>> = trials.iter().map(TrialRecord::build_up).collect();
    let build_up = BuildUpSummary::from_times(&times);
    let energies: Vec<f64> = trials
        .iter()
        .filter_map(|t| t.result.as_ref().map(|r| r.final_energy))
        .collect();
    let cuts: Vec<f64> = trials
        .iter()
        .filter_map(|t| t.result.as_ref().and_then(|r| r.final_cut))
        .collect();

    let mut stats = CampaignStats {
        label: problem.label.clone(),
        n: problem.ising.n(),
        n_trials: total,
        ground_energy: ground,
        q_raw: q(raw),
        q_raw_interval: ci(raw),
        q_improved: q(improved),
        q_improved_interval: ci(improved),
        successes_raw: raw,
        t_mean: build_up.mean,
        t_mean_seconds: build_up.mean.and_then(|t| spec.sim.physical.seconds(t)),
        build_up,
        energy: ValueSummary::of(&energies),
        cut: ValueSummary::of(&cuts),
        failed_trials: trials.iter().filter(|t| t.result.is_none()).count() as u64,
        histogram: Vec::new(),
        levels: BTreeMap::new(),
        wall_clock_seconds,
        trials,
    };
    if stats.n >= 2 {
        if let Some(h) = stats.histogram() {
            stats.histogram = h
                .per_state_entries()
                .into_iter()
                .map(|(c, per_state)| HistogramEntry {
                    representative: c.representative.to_string(),
                    class_size: c.class_size,
                    count: h.counts[&c],
                    per_state,
                })
                .collect();
        }
        if let Some(l) = stats.level_distribution() {
            stats.levels = l
                .counts
                .keys()
                .map(|&k| (format!("{}", k as f64 / l.n as f64), l.frequency(k)))
                .collect();
        }
    }
    stats
}
