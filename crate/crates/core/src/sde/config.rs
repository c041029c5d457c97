use serde::{Deserialize, Serialize};

use crate::error::{CimError, Result};

/// Normalized pump rate as a function of normalized time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PumpSchedule {
    Constant { p: f64 },
    LinearRamp { p_start: f64, p_end: f64, t_ramp: f64 },
}

impl PumpSchedule {
    /// Ramp used for gradual pumping: below threshold to 2.2 times
    /// threshold over 1500 normalized time units.
    pub const GRADUAL: Self = Self::LinearRamp {
        p_start: 0.0,
        p_end: 2.2,
        t_ramp: 1500.0,
    };

    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { p } => p,
            Self::LinearRamp { p_start, p_end, t_ramp } => {
                if t >= t_ramp {
                    p_end
                } else {
                    p_start + (p_end - p_start) * (t.max(0.0) / t_ramp)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { p } if !(p >= 0.0 && p.is_finite()) => Err(CimError::Config(format!(
                "pump rate must be a finite value >= 0, got {p}"
            ))),
            Self::LinearRamp { p_start, p_end, t_ramp } => {
                if !(p_start >= 0.0 && p_end >= 0.0 && p_start.is_finite() && p_end.is_finite()) {
                    return Err(CimError::Config("ramp pump rates must be finite and >= 0".into()));
                }
                if !(t_ramp > 0.0 && t_ramp.is_finite()) {
                    return Err(CimError::Config(format!(
                        "ramp duration must be positive, got {t_ramp}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    /// Euler-Maruyama with constant step `dt`.
    FixedStep,
    /// Dormand-Prince 5(4) on the drift with one noise increment per
    /// accepted step; `dt` acts as the maximum step.
    AdaptiveDp,
}

/// How Ising couplings turn into injection coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingScaling {
    Linear,
    SignOnly,
}

/// Steady-state criterion for the build-up time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildUpCriterion {
    /// Fraction of the final total in-phase power that must be held.
    pub fraction: f64,
    /// Minimum stretch of normalized time the steady state must persist
    /// before the end of the run.
    pub window: f64,
}

impl Default for BuildUpCriterion {
    fn default() -> Self {
        Self {
            fraction: 0.9,
            window: 10.0,
        }
    }
}

/// Physical constants only needed to convert normalized time into seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhysicalMetadata {
    /// Signal photon decay rate in 1/s.
    pub gamma_s: Option<f64>,
    pub gamma_p: Option<f64>,
    pub kappa: Option<f64>,
}

impl PhysicalMetadata {
    /// Converts normalized time `t` to seconds via `tau = 2 t / gamma_s`.
    pub fn seconds(&self, t: f64) -> Option<f64> {
        self.gamma_s.map(|g| 2.0 * t / g)
    }
}

pub const DEFAULT_SATURATION_AMPLITUDE: f64 = 1.0e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub pump: PumpSchedule,
    /// Injection coefficient of an antiferromagnetic (cut) edge of unit
    /// weight: `xi_jl = -xi_scale * J_jl`.
    pub xi_scale: f64,
    pub coupling_scaling: CouplingScaling,
    /// Saturation amplitude `A_s`; sets the quantum noise strength.
    pub a_s: f64,
    pub integrator: IntegratorKind,
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    pub seed: u64,
    /// Record one trajectory sample every this many integrator steps.
    pub sample_stride: usize,
    pub build_up: BuildUpCriterion,
    /// Keep the sampled trajectory in each trial result.
    pub record_trajectory: bool,
    pub physical: PhysicalMetadata,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            pump: PumpSchedule::Constant { p: 1.1 },
            xi_scale: -0.1,
            coupling_scaling: CouplingScaling::Linear,
            a_s: DEFAULT_SATURATION_AMPLITUDE,
            integrator: IntegratorKind::FixedStep,
            dt: 0.01,
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            t_max: 400.0,
            seed: 0,
            sample_stride: 50,
            build_up: BuildUpCriterion::default(),
            record_trajectory: false,
            physical: PhysicalMetadata::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.pump.validate()?;
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(CimError::Config(format!("dt must lie in (0, 0.1], got {}", self.dt)));
        }
        if !(self.t_max >= 1.0 && self.t_max.is_finite()) {
            return Err(CimError::Config(format!("t_max must be >= 1, got {}", self.t_max)));
        }
        if !(self.a_s > 0.0) {
            return Err(CimError::Config(format!("a_s must be positive, got {}", self.a_s)));
        }
        if !self.xi_scale.is_finite() {
            return Err(CimError::Config("xi_scale must be finite".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(CimError::Config("integrator tolerances must be positive".into()));
        }
        if self.sample_stride == 0 {
            return Err(CimError::Config("sample_stride must be >= 1".into()));
        }
        let b = self.build_up;
        if !(b.fraction > 0.0 && b.fraction <= 1.0 && b.window >= 0.0) {
            return Err(CimError::Config(
                "build_up needs 0 < fraction <= 1 and window >= 0".into(),
            ));
        }
        Ok(())
    }
}
