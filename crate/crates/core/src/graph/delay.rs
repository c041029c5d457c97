//! Time-multiplexed ring with delay lines.
//!
//! A delay of `m` slots injects the pulse in slot `i` into slot `i + m`
//! (mod `n`) for every `i`. Each injection is a directed contribution
//! `D[i][i+m] = +amp` (in phase) or `-amp` (out of phase); the Ising
//! coupling is the symmetric part `J = (D + D^T) / 2`, so delays `m` and
//! `n - m` addressing the same pair accumulate.

use serde::{Deserialize, Serialize};

use super::IsingProblem;
use crate::error::{CimError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingPhase {
    #[serde(rename = "0")]
    InPhase,
    #[serde(rename = "pi")]
    OutOfPhase,
}

impl CouplingPhase {
    pub fn sign(self) -> f64 {
        match self {
            Self::InPhase => 1.0,
            Self::OutOfPhase => -1.0,
        }
    }
}

impl std::fmt::Display for CouplingPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::InPhase => "0",
            Self::OutOfPhase => "pi",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayLine {
    pub delay: usize,
    pub phase: CouplingPhase,
    #[serde(default = "unit")]
    pub amplitude: f64,
    #[serde(default = "enabled")]
    pub enabled: bool,
}

fn unit() -> f64 {
    1.0
}

fn enabled() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDelaySpec")]
pub struct DelaySpec {
    n: usize,
    lines: Vec<DelayLine>,
}

#[derive(Deserialize)]
struct RawDelaySpec {
    n: usize,
    lines: Vec<DelayLine>,
}

impl TryFrom<RawDelaySpec> for DelaySpec {
    type Error = CimError;
    fn try_from(raw: RawDelaySpec) -> Result<Self> {
        Self::new(raw.n, raw.lines)
    }
}

impl DelaySpec {
    pub fn new(n: usize, lines: Vec<DelayLine>) -> Result<Self> {
        if n < 2 {
            return Err(CimError::Validation(format!("ring needs at least 2 slots, got {n}")));
        }
        let mut seen = vec![false; n];
        for line in &lines {
            if line.delay == 0 || line.delay >= n {
                return Err(CimError::Validation(format!(
                    "delay {} outside 1..={}",
                    line.delay,
                    n - 1
                )));
            }
            if seen[line.delay] {
                return Err(CimError::Validation(format!("delay {} listed twice", line.delay)));
            }
            seen[line.delay] = true;
            if !(line.amplitude >= 0.0 && line.amplitude.is_finite()) {
                return Err(CimError::Validation(format!(
                    "delay {} has invalid amplitude",
                    line.delay
                )));
            }
        }
        Ok(Self { n, lines })
    }

    /// One enabled unit-amplitude line per phase, with delays `1, 2, ...`.
    pub fn from_phases(n: usize, phases: &[CouplingPhase]) -> Result<Self> {
        let lines = phases
            .iter()
            .enumerate()
            .map(|(k, &phase)| DelayLine {
                delay: k + 1,
                phase,
                amplitude: 1.0,
                enabled: true,
            })
            .collect();
        Self::new(n, lines)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lines(&self) -> &[DelayLine] {
        &self.lines
    }
}

pub fn delay_line_topology(d: &DelaySpec) -> IsingProblem {
    let n = d.n;
    let contributions = d
        .lines
        .iter()
        .filter(|l| l.enabled)
        .flat_map(|l| (0..n).map(move |i| (i, (i + l.delay) % n, 0.5 * l.phase.sign() * l.amplitude)));
    IsingProblem::from_pairs(n, contributions).expect("validated delay spec yields a valid coupling matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{brute_force_ground, SpinConfig};
    use CouplingPhase::*;

    #[test]
    fn three_out_of_phase_delays_give_complete_antiferromagnet() {
        let p = delay_line_topology(&DelaySpec::from_phases(4, &[OutOfPhase; 3]).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(p.coupling(i, j), if i == j { 0.0 } else { -1.0 }, "({i},{j})");
            }
        }
    }

    #[test]
    fn single_in_phase_delay_is_ferromagnetic_ring() {
        let p = delay_line_topology(&DelaySpec::from_phases(4, &[InPhase]).unwrap());
        assert!(p.coupling(0, 1) > 0.0 && p.coupling(3, 0) > 0.0);
        assert_eq!(p.coupling(0, 2), 0.0);
        let g = brute_force_ground(&p).unwrap();
        assert_eq!(
            g.configs,
            vec![SpinConfig::new(vec![-1; 4]).unwrap(), SpinConfig::all_up(4)]
        );
    }

    #[test]
    fn disabled_lines_contribute_nothing() {
        let lines = (1..4)
            .map(|m| DelayLine {
                delay: m,
                phase: OutOfPhase,
                amplitude: 1.0,
                enabled: false,
            })
            .collect();
        let p = delay_line_topology(&DelaySpec::new(4, lines).unwrap());
        assert_eq!(p.pair_count(), 0);
        let p = delay_line_topology(&DelaySpec::new(4, vec![]).unwrap());
        assert_eq!(p.pair_count(), 0);
    }

    #[test]
    fn validation() {
        assert!(DelaySpec::from_phases(4, &[InPhase; 4]).is_err());
        let dup = vec![
            DelayLine {
                delay: 1,
                phase: InPhase,
                amplitude: 1.0,
                enabled: true,
            },
            DelayLine {
                delay: 1,
                phase: OutOfPhase,
                amplitude: 1.0,
                enabled: true,
            },
        ];
        assert!(DelaySpec::new(4, dup).is_err());
    }

    #[test]
    fn deserializes_from_toml() {
        let d: DelaySpec = toml::from_str(
            "n = 4\n[[lines]]\ndelay = 1\nphase = \"pi\"\n[[lines]]\ndelay = 2\nphase = \"0\"\namplitude = 0.5\n",
        )
        .unwrap();
        assert_eq!(d.lines()[1].phase, InPhase);
        assert!(toml::from_str::<DelaySpec>("n = 4\n[[lines]]\ndelay = 4\nphase = \"pi\"\n").is_err());
    }
}
