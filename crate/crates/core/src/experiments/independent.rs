use std::collections::BTreeMap;
use std::io::Write;

use super::{cell_check, run_campaign_on, CampaignSpec, CellCheck, Problem, ProblemSource};
use crate::error::{CimError, Result};
use crate::graph::IsingProblem;
use crate::readout::{
    accumulate_histogram, classify_pattern, level_label, readout_table, slow_level_distribution, LevelDistribution,
    PatternClass, StateHistogram,
};
use crate::sde::{PumpSchedule, SimConfig, TrialResult};

/// Tolerance, in binomial standard deviations, of the uniformity checks.
const BAND_SIGMAS: f64 = 3.0;

/// Gradual pumping over the full ramp.
pub fn independent_opo_config() -> SimConfig {
    SimConfig {
        pump: PumpSchedule::GRADUAL,
        t_max: 1500.0,
        xi_scale: 0.0,
        ..Default::default()
    }
}

/// Class and level probabilities when every phase state is equally likely.
pub fn uniform_expectations(n: usize) -> Result<(BTreeMap<PatternClass, f64>, BTreeMap<usize, f64>)> {
    let rows = readout_table(n)?;
    let w = 1.0 / rows.len() as f64;
    let mut classes = BTreeMap::new();
    let mut levels = BTreeMap::new();
    for r in &rows {
        *classes.entry(classify_pattern(&r.train)).or_insert(0.0) += w;
        *levels.entry(r.train.ones()).or_insert(0.0) += w;
    }
    Ok((classes, levels))
}

#[derive(Debug, Clone)]
pub struct IndependentReport {
    pub histogram: StateHistogram,
    pub levels: LevelDistribution,
    pub class_checks: Vec<CellCheck>,
    pub level_checks: Vec<CellCheck>,
}

impl IndependentReport {
    pub fn states_uniform(&self) -> bool {
        self.class_checks.iter().all(|c| c.within)
    }

    pub fn levels_uniform(&self) -> bool {
        self.level_checks.iter().all(|c| c.within)
    }

    /// CSV: `kind,label,observed,expected,sigma,within`.
    pub fn write_checks_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "kind,label,observed,expected,sigma,within")?;
        for (kind, checks) in [("class", &self.class_checks), ("level", &self.level_checks)] {
            for c in checks {
                writeln!(
                    w,
                    "{kind},{},{},{},{},{}",
                    c.label, c.observed, c.expected, c.sigma, c.within
                )?;
            }
        }
        Ok(())
    }
}

/// Classifies finished trials and tests them against the uniform
/// phase-state distribution.
pub fn independent_report(results: &[TrialResult]) -> Result<IndependentReport> {
    let histogram = accumulate_histogram(results)?;
    let levels = slow_level_distribution(results)?;
    let (classes, level_probs) = uniform_expectations(histogram.n)?;
    let total = histogram.total;
    let class_checks = classes
        .iter()
        .map(|(c, &prob)| {
            let observed = histogram.counts.get(c).copied().unwrap_or(0);
            cell_check(c.representative.to_string(), observed, total, prob, BAND_SIGMAS)
        })
        .collect();
    let level_checks = level_probs
        .iter()
        .map(|(&ones, &prob)| {
            cell_check(
                level_label(ones, histogram.n),
                levels.count(ones),
                total,
                prob,
                BAND_SIGMAS,
            )
        })
        .collect();
    Ok(IndependentReport {
        histogram,
        levels,
        class_checks,
        level_checks,
    })
}

/// Runs `trials` trials of `n` uncoupled oscillators under `cfg`.
pub fn independent_opo_experiment(n: usize, cfg: &SimConfig, trials: u64, workers: usize) -> Result<IndependentReport> {
    if n < 2 {
        return Err(CimError::Config(
            "the interferometer readout needs at least 2 oscillators".into(),
        ));
    }
    let problem = Problem::ising(format!("uncoupled-{n}"), IsingProblem::uncoupled(n));
    let mut spec = CampaignSpec::new(ProblemSource::Uncoupled { n }, cfg.clone(), trials);
    spec.apply_local_improvement = false;
    let st = run_campaign_on(&problem, &spec, workers)?;
    let results: Vec<TrialResult> = st.trials.into_iter().filter_map(|t| t.result).collect();
    independent_report(&results)
}
