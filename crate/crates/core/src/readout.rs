//! One-bit-delay interferometer readout of a ring of phase-locked pulses.
//!
//! Slot `k` interferes with slot `k+1` (cyclically). Equal phases interfere
//! constructively and give a 1 bit. A slow detector sees the average of the
//! train; a fast detector without a time reference only sees the train up
//! to rotation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CimError, Result};
use crate::graph::{brute_force_ground, delay_line_topology, DelaySpec, SpinConfig};
use crate::sde::TrialResult;

/// Binary phases of the pulses in one round trip; `true` is the pi phase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhaseState(Vec<bool>);

impl PhaseState {
    pub fn new(pi: Vec<bool>) -> Result<Self> {
        if pi.len() < 2 {
            return Err(CimError::Validation("a phase state needs at least two slots".into()));
        }
        Ok(Self(pi))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_pi(&self, k: usize) -> bool {
        self.0[k]
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|&x| !x).collect())
    }
}

impl fmt::Display for PhaseState {
    /// `|0π0π⟩`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for &pi in &self.0 {
            f.write_str(if pi { "π" } else { "0" })?;
        }
        f.write_str("⟩")
    }
}

/// Interferometer output bits, one per slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PulseTrain(Vec<u8>);

impl PulseTrain {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() || bits.iter().any(|&b| b > 1) {
            return Err(CimError::Validation("pulse train bits must be 0 or 1".into()));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    fn rotated(&self, r: usize) -> Self {
        let mut v = self.0.clone();
        v.rotate_left(r);
        Self(v)
    }
}

impl fmt::Display for PulseTrain {
    /// `[0110]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        f.write_str("]")
    }
}

impl std::str::FromStr for PulseTrain {
    type Err = CimError;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let bits = inner
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(CimError::Validation(format!("bad pulse train {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits)
    }
}

impl From<PulseTrain> for String {
    fn from(p: PulseTrain) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PulseTrain {
    type Error = CimError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Pulse trains that are equal up to rotation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PatternClass {
    /// Lexicographically smallest rotation.
    pub representative: PulseTrain,
    /// Number of distinct rotations.
    pub class_size: usize,
}

pub fn interferometer_pattern(ps: &PhaseState) -> PulseTrain {
    let n = ps.len();
    PulseTrain((0..n).map(|k| u8::from(ps.is_pi(k) == ps.is_pi((k + 1) % n))).collect())
}

/// Slow-detector output in units of the maximum level `I_m`.
pub fn slow_detector_level(pt: &PulseTrain) -> f64 {
    pt.ones() as f64 / pt.len() as f64
}

pub fn classify_pattern(pt: &PulseTrain) -> PatternClass {
    let rotations: std::collections::BTreeSet<PulseTrain> = (0..pt.len()).map(|r| pt.rotated(r)).collect();
    PatternClass {
        class_size: rotations.len(),
        representative: rotations.into_iter().next().expect("nonempty train"),
    }
}

/// `+1` maps to the 0 phase, `-1` to pi.
pub fn spins_to_phase_state(s: &SpinConfig) -> Result<PhaseState> {
    PhaseState::new(s.as_slice().iter().map(|&x| x < 0).collect())
}

/// Pattern classes of a batch of trials. Per-state entries divide each
/// class count by the class size.
#[derive(Debug, Clone, PartialEq)]
pub struct StateHistogram {
    pub n: usize,
    pub total: u64,
    pub counts: BTreeMap<PatternClass, u64>,
}

impl StateHistogram {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            total: 0,
            counts: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, pt: &PulseTrain) -> Result<()> {
        if pt.len() != self.n {
            return Err(CimError::DimensionMismatch {
                expected: self.n,
                found: pt.len(),
            });
        }
        *self.counts.entry(classify_pattern(pt)).or_default() += 1;
        self.total += 1;
        Ok(())
    }

    pub fn count(&self, representative: &PulseTrain) -> u64 {
        self.counts
            .iter()
            .find(|(c, _)| &c.representative == representative)
            .map_or(0, |(_, &k)| k)
    }

    pub fn fraction(&self, representative: &PulseTrain) -> f64 {
        self.count(representative) as f64 / self.total as f64
    }

    /// `(class, per-state entry)` in class order.
    pub fn per_state_entries(&self) -> Vec<(PatternClass, f64)> {
        self.counts
            .iter()
            .map(|(c, &k)| (c.clone(), k as f64 / c.class_size as f64))
            .collect()
    }

    /// CSV: `representative,class_size,raw_count,per_state_entry`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "representative,class_size,raw_count,per_state_entry")?;
        for (c, &k) in &self.counts {
            writeln!(
                w,
                "{},{},{},{}",
                c.representative,
                c.class_size,
                k,
                k as f64 / c.class_size as f64
            )?;
        }
        Ok(())
    }
}

fn patterns(results: &[TrialResult]) -> Result<Vec<PulseTrain>> {
    if results.is_empty() {
        return Err(CimError::Domain("no trials to classify".into()));
    }
    let n = results[0].spins.len();
    results
        .iter()
        .map(|r| {
            if r.spins.len() != n {
                return Err(CimError::DimensionMismatch {
                    expected: n,
                    found: r.spins.len(),
                });
            }
            Ok(interferometer_pattern(&spins_to_phase_state(&r.spins)?))
        })
        .collect()
}

pub fn accumulate_histogram(results: &[TrialResult]) -> Result<StateHistogram> {
    let trains = patterns(results)?;
    let mut h = StateHistogram::new(trains[0].len());
    for t in &trains {
        h.record(t)?;
    }
    Ok(h)
}

/// Slow-detector levels, keyed by the number of 1 bits (level = ones / n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDistribution {
    pub n: usize,
    pub total: u64,
    pub counts: BTreeMap<usize, u64>,
}

impl LevelDistribution {
    pub fn from_trains<'a>(n: usize, trains: impl IntoIterator<Item = &'a PulseTrain>) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for t in trains {
            *counts.entry(t.ones()).or_default() += 1;
            total += 1;
        }
        Self { n, total, counts }
    }

    pub fn count(&self, ones: usize) -> u64 {
        self.counts.get(&ones).copied().unwrap_or(0)
    }

    pub fn frequency(&self, ones: usize) -> f64 {
        self.count(ones) as f64 / self.total as f64
    }

    /// CSV: `level,count,frequency` with the level in units of `I_m`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "level,count,frequency")?;
        for (&ones, &k) in &self.counts {
            writeln!(
                w,
                "{},{},{}",
                ones as f64 / self.n as f64,
                k,
                k as f64 / self.total as f64
            )?;
        }
        Ok(())
    }
}

pub fn slow_level_distribution(results: &[TrialResult]) -> Result<LevelDistribution> {
    let trains = patterns(results)?;
    Ok(LevelDistribution::from_trains(trains[0].len(), &trains))
}

/// Predicted level probabilities (keyed by number of 1 bits) when the
/// network settles uniformly into one of the ground states of the delay
/// configuration.
pub fn scenario_expectations(d: &DelaySpec) -> Result<BTreeMap<usize, f64>> {
    let ground = brute_force_ground(&delay_line_topology(d))?;
    let mut out = BTreeMap::new();
    let w = 1.0 / ground.configs.len() as f64;
    for s in &ground.configs {
        let pt = interferometer_pattern(&spins_to_phase_state(s)?);
        *out.entry(pt.ones()).or_insert(0.0) += w;
    }
    Ok(out)
}

/// One row of the exhaustive phase-state readout table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutRow {
    pub state: PhaseState,
    pub train: PulseTrain,
    pub level: f64,
}

/// All `2^n` phase states; slot `k` is pi when bit `k` of the row index is set.
pub fn readout_table(n: usize) -> Result<Vec<ReadoutRow>> {
    if !(2..=16).contains(&n) {
        return Err(CimError::Domain(format!(
            "readout table supports 2..=16 slots, got {n}"
        )));
    }
    (0..1u64 << n)
        .map(|idx| {
            let state = spins_to_phase_state(&SpinConfig::from_index(idx, n))?;
            let train = interferometer_pattern(&state);
            let level = slow_detector_level(&train);
            Ok(ReadoutRow { state, train, level })
        })
        .collect()
}

/// Level label relative to `I_m`: `0`, `I_m`, `I_m/2` or `k/n I_m`.
pub fn level_label(ones: usize, n: usize) -> String {
    if ones == 0 {
        "0".into()
    } else if ones == n {
        "I_m".into()
    } else if 2 * ones == n {
        "I_m/2".into()
    } else {
        format!("{ones}/{n} I_m")
    }
}

/// CSV: `state,pulse_train,slow_detector`.
pub fn write_readout_table_csv<W: Write>(mut w: W, rows: &[ReadoutRow]) -> std::io::Result<()> {
    writeln!(w, "state,pulse_train,slow_detector")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{}",
            r.state,
            r.train,
            level_label(r.train.ones(), r.train.len())
        )?;
    }
    Ok(())
}
