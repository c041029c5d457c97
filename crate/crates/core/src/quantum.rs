//! Noise-model verification for a single below-threshold OPO.
//!
//! Two samplers estimate the in-phase and quadrature variances of the
//! signal: the real positive-P stochastic process behind the quantum
//! Fokker-Planck equation, and the c-number Langevin equation used by the
//! network simulator. Both must reproduce squeezing of the quadrature and
//! anti-squeezing of the in-phase component.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CimError, Result};
use crate::graph::IsingProblem;
use crate::sde::{assemble_couplings, trial_rng, CouplingScaling, OpoNetwork, OpoNetworkState};

/// Normalized positive-P variables `a = alpha/A_s`, `b = beta/A_s`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PositivePState {
    pub a: f64,
    pub b: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositivePStep {
    /// Step taken; flags report whether the diffusion of `a` or `b` was
    /// negative and clamped to zero.
    Taken { clamped_a: bool, clamped_b: bool },
    /// `|a|` or `|b|` left the guard box; the trajectory must be discarded.
    GuardExceeded,
}

/// Per-unit-time noise variance `max(p - x^2, 0) / A_s^2` and whether the
/// clamp was applied.
pub fn positive_p_diffusion(x: f64, p: f64, a_s: f64) -> (f64, bool) {
    let d = p - x * x;
    if d < 0.0 {
        (0.0, true)
    } else {
        (d / (a_s * a_s), false)
    }
}

/// `(da/dt, db/dt) = (-a + (p - a^2) b, -b + (p - b^2) a)`.
pub fn positive_p_drift(a: f64, b: f64, p: f64) -> (f64, f64) {
    (-a + (p - a * a) * b, -b + (p - b * b) * a)
}

/// One Euler-Maruyama step of the positive-P process.
pub fn positive_p_step<R: Rng + ?Sized>(
    state: &mut PositivePState,
    p: f64,
    dt: f64,
    a_s: f64,
    guard: f64,
    rng: &mut R,
) -> PositivePStep {
    let (da, db) = positive_p_drift(state.a, state.b, p);
    let (va, clamped_a) = positive_p_diffusion(state.a, p, a_s);
    let (vb, clamped_b) = positive_p_diffusion(state.b, p, a_s);
    let w1: f64 = rng.sample(StandardNormal);
    let w2: f64 = rng.sample(StandardNormal);
    state.a += da * dt + (va * dt).sqrt() * w1;
    state.b += db * dt + (vb * dt).sqrt() * w2;
    state.t += dt;
    if !(state.a.abs() <= guard && state.b.abs() <= guard) {
        return PositivePStep::GuardExceeded;
    }
    PositivePStep::Taken { clamped_a, clamped_b }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStats {
    /// `<A_s1>`.
    pub mean_a1: f64,
    /// `<A_s2>`. For the positive-P sampler this is `A_s <a - b> / 2`, the
    /// coefficient of `-i` in the formally imaginary estimator.
    pub mean_a2: f64,
    pub var_a1: f64,
    pub var_a2: f64,
    pub n_samples: usize,
    pub stderr_a1: f64,
    pub stderr_a2: f64,
}

/// Running first and second moments of two observables, Neumaier-summed.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    x: KahanSum,
    xx: KahanSum,
    y: KahanSum,
    yy: KahanSum,
}

#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Moments {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.x.add(x);
        self.xx.add(x * x);
        self.y.add(y);
        self.yy.add(y * y);
    }

    fn means(&self) -> [f64; 4] {
        let n = self.n as f64;
        [
            self.x.value() / n,
            self.xx.value() / n,
            self.y.value() / n,
            self.yy.value() / n,
        ]
    }
}

/// Pooled variance of `x` and `y` with batch-means standard errors
/// (delta method on `V = <x^2> - <x>^2`). Batches must be equally sized.
struct PooledVariance {
    n: usize,
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    se_x: f64,
    se_y: f64,
}

fn pool(batches: &[Moments]) -> Result<PooledVariance> {
    let n: usize = batches.iter().map(|b| b.n).sum();
    if n == 0 {
        return Err(CimError::Domain(
            "quadrature statistics need a nonempty ensemble".into(),
        ));
    }
    let mut total = [KahanSum::default(); 4];
    for b in batches {
        let m = b.means();
        for (t, v) in total.iter_mut().zip(m) {
            t.add(v * b.n as f64);
        }
    }
    let [mx, mxx, my, myy] = total.map(|t| t.value() / n as f64);
    let var_x = (mxx - mx * mx).max(0.0);
    let var_y = (myy - my * my).max(0.0);

    let k = batches.len();
    let (se_x, se_y) = if k < 2 {
        (0.0, 0.0)
    } else {
        let gx: Vec<f64> = batches
            .iter()
            .map(|b| b.means())
            .map(|m| m[1] - 2.0 * mx * m[0])
            .collect();
        let gy: Vec<f64> = batches
            .iter()
            .map(|b| b.means())
            .map(|m| m[3] - 2.0 * my * m[2])
            .collect();
        (std_error(&gx), std_error(&gy))
    };
    Ok(PooledVariance {
        n,
        mean_x: mx,
        mean_y: my,
        var_x,
        var_y,
        se_x,
        se_y,
    })
}

fn std_error(v: &[f64]) -> f64 {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

fn qfpe_from_pool(p: &PooledVariance, a_s: f64) -> QuadratureStats {
    let s2 = a_s * a_s;
    QuadratureStats {
        mean_a1: a_s * p.mean_x / 2.0,
        mean_a2: a_s * p.mean_y / 2.0,
        // [A_s^2 <(a+b)^2> + 1]/4 - <A_s1>^2
        var_a1: s2 * p.var_x / 4.0 + 0.25,
        // -[A_s^2 <(a-b)^2> - 1]/4 - <A_s2>^2 with <A_s2> = A_s <a-b> / 2i
        var_a2: 0.25 - s2 * p.var_y / 4.0,
        n_samples: p.n,
        stderr_a1: s2 * p.se_x / 4.0,
        stderr_a2: s2 * p.se_y / 4.0,
    }
}

fn clge_from_pool(p: &PooledVariance, a_s: f64) -> QuadratureStats {
    let s2 = a_s * a_s;
    QuadratureStats {
        mean_a1: a_s * p.mean_x,
        mean_a2: a_s * p.mean_y,
        var_a1: s2 * p.var_x,
        var_a2: s2 * p.var_y,
        n_samples: p.n,
        stderr_a1: s2 * p.se_x,
        stderr_a2: s2 * p.se_y,
    }
}

fn per_sample_batches(pairs: impl Iterator<Item = (f64, f64)>) -> Vec<Moments> {
    pairs
        .map(|(x, y)| {
            let mut m = Moments::default();
            m.push(x, y);
            m
        })
        .collect()
}

/// Quadrature statistics of independent positive-P samples.
pub fn qfpe_quadrature_stats(ensemble: &[PositivePState], a_s: f64) -> Result<QuadratureStats> {
    let batches = per_sample_batches(ensemble.iter().map(|s| (s.a + s.b, s.a - s.b)));
    Ok(qfpe_from_pool(&pool(&batches)?, a_s))
}

/// Quadrature statistics of independent single-OPO `(c, s)` samples.
pub fn clge_quadrature_stats(ensemble: &[(f64, f64)], a_s: f64) -> Result<QuadratureStats> {
    let batches = per_sample_batches(ensemble.iter().copied());
    Ok(clge_from_pool(&pool(&batches)?, a_s))
}

/// Linearized stationary variances `(1/(4(1-p)), 1/(4(1+p)))` below threshold.
pub fn linearized_variances(p: f64) -> (f64, f64) {
    (0.25 / (1.0 - p), 0.25 / (1.0 + p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeConfig {
    pub a_s: f64,
    pub dt: f64,
    /// Independent trajectories per sampler and pump rate.
    pub trajectories: usize,
    pub samples_per_trajectory: usize,
    /// Normalized time between recorded samples.
    pub sample_interval: f64,
    /// Burn-in is `burn_in_factor / |1 - p|` (with `|1 - p|` floored at 0.05).
    pub burn_in_factor: f64,
    pub guard: f64,
    pub seed: u64,
}

impl Default for SqueezeConfig {
    fn default() -> Self {
        Self {
            a_s: crate::sde::DEFAULT_SATURATION_AMPLITUDE,
            dt: 0.001,
            trajectories: 500,
            samples_per_trajectory: 200,
            sample_interval: 1.0,
            burn_in_factor: 20.0,
            guard: 10.0,
            seed: 0,
        }
    }
}

impl SqueezeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_s > 0.0 && self.dt > 0.0 && self.sample_interval >= self.dt && self.guard > 0.0) {
            return Err(CimError::Config(
                "squeeze needs a_s, dt, guard > 0 and sample_interval >= dt".into(),
            ));
        }
        if self.trajectories < 2 || self.samples_per_trajectory == 0 {
            return Err(CimError::Config(
                "squeeze needs >= 2 trajectories and >= 1 sample each".into(),
            ));
        }
        Ok(())
    }

    fn burn_in(&self, p: f64) -> f64 {
        self.burn_in_factor / (1.0 - p).abs().max(0.05)
    }

    fn steps(&self, span: f64) -> usize {
        (span / self.dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeRow {
    pub p: f64,
    pub qfpe: QuadratureStats,
    pub clge: QuadratureStats,
    pub z1: f64,
    pub z2: f64,
    pub rejected_fraction: f64,
    pub clamp_events: u64,
    /// `|z1| > 3` or `|z2| > 3`.
    pub flagged: bool,
}

impl SqueezeRow {
    pub fn ratio_a1(&self) -> f64 {
        self.qfpe.var_a1 / self.clge.var_a1
    }

    pub fn ratio_a2(&self) -> f64 {
        self.qfpe.var_a2 / self.clge.var_a2
    }
}

fn z_score(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let se = (sa * sa + sb * sb).sqrt();
    if se > 0.0 {
        (a - b) / se
    } else if a == b {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Samples the positive-P process at pump rate `p`; returns the stationary
/// statistics, the number of rejected trajectories and the clamp count.
pub fn sample_qfpe(p: f64, cfg: &SqueezeConfig, stream_base: u64) -> Result<(QuadratureStats, usize, u64)> {
    cfg.validate()?;
    let burn = cfg.steps(cfg.burn_in(p));
    let stride = cfg.steps(cfg.sample_interval);
    let runs: Vec<Option<(Moments, u64)>> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(cfg.seed, stream_base + k as u64);
            let mut st = PositivePState::default();
            let mut m = Moments::default();
            let mut clamps = 0u64;
            let total = burn + stride * cfg.samples_per_trajectory;
            for step in 1..=total {
                match positive_p_step(&mut st, p, cfg.dt, cfg.a_s, cfg.guard, &mut rng) {
                    PositivePStep::GuardExceeded => return None,
                    PositivePStep::Taken { clamped_a, clamped_b } => {
                        clamps += u64::from(clamped_a) + u64::from(clamped_b);
                    }
                }
                if step > burn && (step - burn).is_multiple_of(stride) {
                    m.push(st.a + st.b, st.a - st.b);
                }
            }
            Some((m, clamps))
        })
        .collect();
    let rejected = runs.iter().filter(|r| r.is_none()).count();
    let clamps = runs.iter().flatten().map(|(_, c)| c).sum();
    let batches: Vec<Moments> = runs.into_iter().flatten().map(|(m, _)| m).collect();
    Ok((qfpe_from_pool(&pool(&batches)?, cfg.a_s), rejected, clamps))
}

/// Samples the single-OPO c-number Langevin equation at pump rate `p`.
pub fn sample_clge(p: f64, cfg: &SqueezeConfig, stream_base: u64) -> Result<QuadratureStats> {
    cfg.validate()?;
    let xi = assemble_couplings(&IsingProblem::uncoupled(1), 0.0, CouplingScaling::Linear);
    let burn = cfg.steps(cfg.burn_in(p));
    let stride = cfg.steps(cfg.sample_interval);
    let batches: Vec<Moments> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(cfg.seed, stream_base + k as u64);
            let mut net = OpoNetwork::new(&xi, cfg.a_s);
            let mut st = OpoNetworkState::vacuum(1);
            let mut m = Moments::default();
            for step in 1..=burn + stride * cfg.samples_per_trajectory {
                net.step_fixed(&mut st, cfg.dt, p, &mut rng)?;
                if step > burn && (step - burn).is_multiple_of(stride) {
                    m.push(st.c[0], st.s[0]);
                }
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    Ok(clge_from_pool(&pool(&batches)?, cfg.a_s))
}

/// Runs both samplers at every pump rate and compares their variances.
pub fn squeezing_compare(p_values: &[f64], cfg: &SqueezeConfig) -> Result<Vec<SqueezeRow>> {
    cfg.validate()?;
    p_values
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if !(0.0..=1.2).contains(&p) {
                return Err(CimError::Domain(format!(
                    "squeezing comparison is validated for p in [0, 1.2], got {p}"
                )));
            }
            // Disjoint stream ranges per pump rate and per sampler.
            let base = (i as u64) << 33;
            let (qfpe, rejected, clamp_events) = sample_qfpe(p, cfg, base)?;
            let clge = sample_clge(p, cfg, base | 1 << 32)?;
            let z1 = z_score(qfpe.var_a1, qfpe.stderr_a1, clge.var_a1, clge.stderr_a1);
            let z2 = z_score(qfpe.var_a2, qfpe.stderr_a2, clge.var_a2, clge.stderr_a2);
            Ok(SqueezeRow {
                p,
                qfpe,
                clge,
                z1,
                z2,
                rejected_fraction: rejected as f64 / cfg.trajectories as f64,
                clamp_events,
                flagged: z1.abs() > 3.0 || z2.abs() > 3.0,
            })
        })
        .collect()
}

/// CSV: `p,var_a1_qfpe,var_a2_qfpe,var_a1_clge,var_a2_clge,z1,z2,rejected_fraction`.
pub fn write_squeeze_csv<W: Write>(mut w: W, rows: &[SqueezeRow]) -> std::io::Result<()> {
    writeln!(
        w,
        "p,var_a1_qfpe,var_a2_qfpe,var_a1_clge,var_a2_clge,z1,z2,rejected_fraction"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6},{:.6},{:.3},{:.3},{:.6}",
            r.p, r.qfpe.var_a1, r.qfpe.var_a2, r.clge.var_a1, r.clge.var_a2, r.z1, r.z2, r.rejected_fraction
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_is_stationary_without_pump() {
        assert_eq!(positive_p_drift(0.0, 0.0, 0.0), (0.0, 0.0));
        assert_eq!(positive_p_diffusion(0.0, 0.0, 7.0), (0.0, false));
        let mut st = PositivePState::default();
        let mut rng = trial_rng(1, 0);
        for _ in 0..100 {
            assert!(matches!(
                positive_p_step(&mut st, 0.0, 0.01, 7.0, 10.0, &mut rng),
                PositivePStep::Taken {
                    clamped_a: false,
                    clamped_b: false
                }
            ));
        }
        assert_eq!((st.a, st.b), (0.0, 0.0));
    }

    #[test]
    fn diffusion_examples() {
        let a_s = 3.0;
        assert_abs_diff_eq!(positive_p_diffusion(0.0, 0.5, a_s).0, 0.5 / 9.0, epsilon = 1e-15);
        assert_eq!(positive_p_diffusion(1.0, 0.5, a_s), (0.0, true));
    }

    #[test]
    fn guard_rejects_excursions() {
        let mut st = PositivePState {
            a: 9.99,
            b: 9.99,
            t: 0.0,
        };
        let mut rng = trial_rng(1, 0);
        assert_eq!(
            positive_p_step(&mut st, 1.0, 0.1, 1.0, 10.0, &mut rng),
            PositivePStep::GuardExceeded
        );
    }

    #[test]
    fn vacuum_ensemble_gives_quarter_variances() {
        let ens = vec![PositivePState::default(); 10];
        let st = qfpe_quadrature_stats(&ens, 50.0).unwrap();
        assert_eq!((st.var_a1, st.var_a2), (0.25, 0.25));
    }

    #[test]
    fn single_sample_keeps_only_vacuum_terms() {
        let a_s = 20.0;
        let s = PositivePState {
            a: 0.03,
            b: 0.01,
            t: 0.0,
        };
        let st = qfpe_quadrature_stats(&[s], a_s).unwrap();
        assert_abs_diff_eq!(st.var_a1, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(st.var_a2, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(st.mean_a1, a_s * 0.04 / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st.mean_a2, a_s * 0.02 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_clge_samples_have_zero_variance() {
        let st = clge_quadrature_stats(&[(0.2, -0.1); 5], 10.0).unwrap();
        assert_abs_diff_eq!(st.var_a1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st.var_a2, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st.mean_a1, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_ensembles_are_errors() {
        assert!(matches!(qfpe_quadrature_stats(&[], 1.0), Err(CimError::Domain(_))));
        assert!(matches!(clge_quadrature_stats(&[], 1.0), Err(CimError::Domain(_))));
    }

    #[test]
    fn stderr_shrinks_like_inverse_root_n() {
        let mut rng = trial_rng(9, 0);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<(f64, f64)> {
            (0..n)
                .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        };
        let small = clge_quadrature_stats(&draw(&mut rng, 2_000), 1.0).unwrap();
        let large = clge_quadrature_stats(&draw(&mut rng, 32_000), 1.0).unwrap();
        let ratio = small.stderr_a1 / large.stderr_a1;
        assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
    }

    #[test]
    fn rejects_pump_outside_validated_range() {
        assert!(squeezing_compare(&[1.5], &SqueezeConfig::default()).is_err());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_squeeze_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "p,var_a1_qfpe,var_a2_qfpe,var_a1_clge,var_a2_clge,z1,z2,rejected_fraction\n"
        );
    }
}
