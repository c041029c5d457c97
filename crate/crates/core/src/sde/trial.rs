use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    assemble_couplings, trial_rng, AdaptiveTolerances, BuildUpCriterion, CouplingMatrix, IntegratorKind, OpoNetwork,
    OpoNetworkState, SimConfig, MIN_ADAPTIVE_STEP,
};
use crate::error::Result;
use crate::graph::{ising_energy, IsingProblem, SpinConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub spins: SpinConfig,
    /// Normalized time at which the network reached its final steady state.
    pub build_up_time: Option<f64>,
    pub final_energy: f64,
    pub final_cut: Option<f64>,
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<OpoNetworkState>>,
}

/// Integrates one trial from vacuum to `cfg.t_max`.
pub fn run_trial(problem: &IsingProblem, cfg: &SimConfig, trial: u64) -> Result<TrialResult> {
    cfg.validate()?;
    let xi = assemble_couplings(problem, cfg.xi_scale, cfg.coupling_scaling);
    run_trial_with(problem, &xi, cfg, trial)
}

/// Same as [`run_trial`] with couplings already assembled from `problem`.
pub fn run_trial_with(problem: &IsingProblem, xi: &CouplingMatrix, cfg: &SimConfig, trial: u64) -> Result<TrialResult> {
    let n = problem.n();
    let mut rng = trial_rng(cfg.seed, trial);
    let mut net = OpoNetwork::new(xi, cfg.a_s);
    let mut state = OpoNetworkState::vacuum(n);
    let mut samples = vec![state.clone()];
    let mut steps = 0u64;

    match cfg.integrator {
        IntegratorKind::FixedStep => {
            let full = (cfg.t_max / cfg.dt + 1e-9).floor() as u64;
            for k in 0..full {
                let p = cfg.pump.at(state.t);
                net.step_fixed(&mut state, cfg.dt, p, &mut rng)?;
                state.t = (k + 1) as f64 * cfg.dt;
                steps += 1;
                if steps.is_multiple_of(cfg.sample_stride as u64) {
                    samples.push(state.clone());
                }
            }
            let rest = cfg.t_max - state.t;
            if rest > 1e-12 {
                let p = cfg.pump.at(state.t);
                net.step_fixed(&mut state, rest, p, &mut rng)?;
                state.t = cfg.t_max;
                steps += 1;
            }
        }
        IntegratorKind::AdaptiveDp => {
            let tol = AdaptiveTolerances {
                rel: cfg.rel_tol,
                abs: cfg.abs_tol,
                dt_max: cfg.dt,
            };
            let mut dt = cfg.dt;
            while cfg.t_max - state.t > MIN_ADAPTIVE_STEP {
                let p = cfg.pump.at(state.t);
                let dt_try = dt.min(cfg.t_max - state.t);
                let step = net.step_adaptive(&mut state, dt_try, &tol, p, &mut rng)?;
                dt = step.dt_next;
                steps += 1;
                if steps.is_multiple_of(cfg.sample_stride as u64) {
                    samples.push(state.clone());
                }
            }
            state.t = cfg.t_max;
        }
    }
    if samples.last().is_none_or(|s| s.t < state.t) {
        samples.push(state.clone());
    }

    let spins = SpinConfig::from_amplitudes(&state.c);
    let final_energy = ising_energy(problem, &spins)?;
    let build_up_time = detect_build_up(&samples, &cfg.build_up);
    Ok(TrialResult {
        trial,
        spins,
        build_up_time,
        final_energy,
        final_cut: None,
        steps,
        trajectory: cfg.record_trajectory.then_some(samples),
    })
}

/// Earliest sampled time from which every in-phase sign equals its final
/// value and the in-phase power stays at or above `fraction` of its final
/// value. Absent when the final power is zero or the steady state begins
/// later than `window` before the last sample.
pub fn detect_build_up(trajectory: &[OpoNetworkState], criterion: &BuildUpCriterion) -> Option<f64> {
    let last = trajectory.last()?;
    let final_power = last.in_phase_power();
    if !(final_power > 0.0) {
        return None;
    }
    let final_spins = SpinConfig::from_amplitudes(&last.c);
    let threshold = criterion.fraction * final_power;
    let settled = |s: &OpoNetworkState| {
        s.in_phase_power() >= threshold
            && s.c
                .iter()
                .zip(final_spins.as_slice())
                .all(|(&c, &sign)| (c >= 0.0) == (sign > 0))
    };
    let first = trajectory.iter().rposition(|s| !settled(s)).map_or(0, |k| k + 1);
    let t_star = trajectory.get(first)?.t;
    (t_star <= last.t - criterion.window).then_some(t_star)
}

/// CSV with columns `t, c_1..c_n, s_1..s_n`.
pub fn write_trajectory_csv<W: Write>(mut w: W, trajectory: &[OpoNetworkState]) -> std::io::Result<()> {
    let n = trajectory.first().map_or(0, |s| s.n());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|j| format!("c_{j}")));
    header.extend((1..=n).map(|j| format!("s_{j}")));
    writeln!(w, "{}", header.join(","))?;
    for s in trajectory {
        let mut row = vec![format!("{}", s.t)];
        row.extend(s.c.iter().chain(&s.s).map(|x| format!("{x:e}")));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(t: f64, c: &[f64]) -> OpoNetworkState {
        OpoNetworkState {
            c: c.to_vec(),
            s: vec![0.0; c.len()],
            t,
        }
    }

    #[test]
    fn build_up_at_last_sign_change() {
        let traj: Vec<_> = (0..=100)
            .map(|k| {
                let t = k as f64;
                let sign = if k == 29 || (k < 29 && k % 3 == 0) { -1.0 } else { 1.0 };
                state(t, &[sign, 1.0])
            })
            .collect();
        assert_eq!(detect_build_up(&traj, &BuildUpCriterion::default()), Some(30.0));
    }

    #[test]
    fn build_up_needs_power() {
        let traj: Vec<_> = (0..=100).map(|k| state(k as f64, &[0.1 * k as f64])).collect();
        // Power crosses 0.9 of final (100) at c = sqrt(90) ~ 9.49, i.e. k = 95.
        assert_eq!(
            detect_build_up(
                &traj,
                &BuildUpCriterion {
                    fraction: 0.9,
                    window: 0.0
                }
            ),
            Some(95.0)
        );
        assert_eq!(
            detect_build_up(
                &traj,
                &BuildUpCriterion {
                    fraction: 0.9,
                    window: 10.0
                }
            ),
            None
        );
    }

    #[test]
    fn zero_trajectory_has_no_build_up() {
        let traj: Vec<_> = (0..10).map(|k| state(k as f64, &[0.0, 0.0])).collect();
        assert_eq!(detect_build_up(&traj, &BuildUpCriterion::default()), None);
        assert_eq!(detect_build_up(&[], &BuildUpCriterion::default()), None);
    }

    #[test]
    fn trajectory_csv_layout() {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &[state(0.0, &[1.0, -2.0])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,c_1,c_2,s_1,s_2\n0,1e0,-2e0,0e0,0e0\n");
    }
}
