use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{run_campaign_on, wilson_interval, BuildUpSummary, CampaignSpec, Problem, ProblemSource, CONFIDENCE_Z};
use crate::error::{CimError, Result};
use crate::graph::{enumerate_cubic_graphs, MAX_ENUMERATION_ORDER};
use crate::sde::{PumpSchedule, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub trials: u64,
    pub successes: u64,
    pub q: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub median_build_up: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpSweep {
    pub label: String,
    pub rows: Vec<SweepRow>,
    /// First grid point attaining the largest `q`.
    pub p_opt: f64,
    pub q_opt: f64,
}

impl PumpSweep {
    /// CSV: `p,trials,successes,q,ci_low,ci_high,median_build_up`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "p,trials,successes,q,ci_low,ci_high,median_build_up")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.p,
                r.trials,
                r.successes,
                r.q,
                r.ci_low,
                r.ci_high,
                r.median_build_up.map_or(String::new(), |m| m.to_string())
            )?;
        }
        Ok(())
    }
}

/// Success probability at each constant pump rate of `p_grid`.
pub fn sweep_pump(
    problem: &Problem,
    p_grid: &[f64],
    cfg: &SimConfig,
    n_trials: u64,
    workers: usize,
) -> Result<PumpSweep> {
    if p_grid.is_empty() {
        return Err(CimError::Config("pump grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let sim = SimConfig {
            pump: PumpSchedule::Constant { p },
            ..cfg.clone()
        };
        let mut spec = CampaignSpec::new(ProblemSource::Uncoupled { n: 1 }, sim, n_trials);
        spec.require_oracle = true;
        spec.apply_local_improvement = false;
        let st = run_campaign_on(problem, &spec, workers)?;
        let successes = st.successes_raw.expect("oracle required");
        let (ci_low, ci_high) = wilson_interval(successes, n_trials, CONFIDENCE_Z);
        rows.push(SweepRow {
            p,
            trials: n_trials,
            successes,
            q: successes as f64 / n_trials as f64,
            ci_low,
            ci_high,
            median_build_up: st.build_up.median,
        });
    }
    let best = rows.iter().fold(&rows[0], |b, r| if r.q > b.q { r } else { b });
    let (p_opt, q_opt) = (best.p, best.q);
    Ok(PumpSweep {
        label: problem.label.clone(),
        p_opt,
        q_opt,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub index: usize,
    pub q: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub build_up: BuildUpSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub order: usize,
    pub graph_count: usize,
    pub graphs: Vec<GraphReport>,
    pub q_min: f64,
    /// Index of the first graph attaining `q_min`.
    pub worst_index: usize,
    /// Build-up statistics pooled over every trial of this order.
    pub build_up: BuildUpSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSurvey {
    pub orders: Vec<OrderReport>,
}

/// Runs every non-isomorphic connected cubic graph of each order.
pub fn cubic_survey(orders: &[usize], cfg: &SimConfig, trials_per_graph: u64, workers: usize) -> Result<CubicSurvey> {
    let mut out = Vec::new();
    for &order in orders {
        if order > MAX_ENUMERATION_ORDER {
            return Err(CimError::Capability(format!(
                "cubic enumeration is capped at order {MAX_ENUMERATION_ORDER}, got {order}"
            )));
        }
        let graphs = enumerate_cubic_graphs(order)?;
        let mut reports = Vec::with_capacity(graphs.len());
        let mut pooled = Vec::new();
        for (index, g) in graphs.into_iter().enumerate() {
            let problem = Problem::max_cut(format!("cubic-{order}-{index}"), g);
            let mut spec = CampaignSpec::new(ProblemSource::Uncoupled { n: 1 }, cfg.clone(), trials_per_graph);
            spec.apply_local_improvement = false;
            spec.require_oracle = true;
            let st = run_campaign_on(&problem, &spec, workers)?;
            let k = st.successes_raw.expect("oracle required");
            let (ci_low, ci_high) = wilson_interval(k, trials_per_graph, CONFIDENCE_Z);
            pooled.extend(
                st.trials
                    .iter()
                    .map(|t| t.result.as_ref().and_then(|r| r.build_up_time)),
            );
            reports.push(GraphReport {
                index,
                q: k as f64 / trials_per_graph as f64,
                ci_low,
                ci_high,
                build_up: st.build_up,
            });
        }
        let worst = reports.iter().fold(&reports[0], |w, r| if r.q < w.q { r } else { w });
        let (q_min, worst_index) = (worst.q, worst.index);
        out.push(OrderReport {
            order,
            graph_count: reports.len(),
            q_min,
            worst_index,
            build_up: BuildUpSummary::from_times(&pooled),
            graphs: reports,
        });
    }
    Ok(CubicSurvey { orders: out })
}

/// CSV: `order,index,q,ci_low,ci_high,median_build_up,max_build_up,no_build_up`.
pub fn write_survey_csv<W: Write>(mut w: W, survey: &CubicSurvey) -> std::io::Result<()> {
    writeln!(
        w,
        "order,index,q,ci_low,ci_high,median_build_up,max_build_up,no_build_up"
    )?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for o in &survey.orders {
        for g in &o.graphs {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                o.order,
                g.index,
                g.q,
                g.ci_low,
                g.ci_high,
                opt(g.build_up.median),
                opt(g.build_up.max),
                g.build_up.missing
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;

    #[test]
    fn empty_grid_is_rejected() {
        let p = Problem::max_cut("K4", WeightedGraph::complete(4));
        assert!(sweep_pump(&p, &[], &SimConfig::default(), 10, 1).is_err());
    }

    #[test]
    fn single_point_grid_gives_single_row() {
        let p = Problem::max_cut("K4", WeightedGraph::complete(4));
        let cfg = SimConfig {
            t_max: 300.0,
            ..Default::default()
        };
        let s = sweep_pump(&p, &[1.1], &cfg, 10, 2).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.p_opt, 1.1);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn survey_rejects_orders_beyond_cap() {
        assert!(matches!(
            cubic_survey(&[12], &SimConfig::default(), 1, 1),
            Err(CimError::Capability(_))
        ));
    }
}
