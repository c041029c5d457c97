//! Ising / MAX-CUT problem representation.
//!
//! Graphs are stored 0-indexed. The Ising energy uses the unordered-pair
//! convention `H = -sum_{i<j} J_ij s_i s_j`, and the MAX-CUT mapping sets
//! `J_uv = -w_uv`, so for unit weights `H = |E| - 2 * cut`.

mod cubic;
mod delay;
mod gset;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CimError, Result};

pub use cubic::{canonical_form, enumerate_cubic_graphs, random_cubic_graph, MAX_ENUMERATION_ORDER};
pub use delay::{delay_line_topology, CouplingPhase, DelayLine, DelaySpec};
pub use gset::{parse_gset, read_gset};

/// Largest spin count accepted by [`brute_force_ground`].
pub const BRUTE_FORCE_MAX_SPINS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected weighted simple graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 {
            return Err(CimError::Validation("graph must have at least one vertex".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(CimError::Validation(format!(
                    "edge ({}, {}) references a vertex outside 1..={n}",
                    e.u + 1,
                    e.v + 1
                )));
            }
            if e.u == e.v {
                return Err(CimError::Validation(format!("self-loop on vertex {}", e.u + 1)));
            }
            if !e.w.is_finite() {
                return Err(CimError::Validation(format!(
                    "non-finite weight on edge ({}, {})",
                    e.u + 1,
                    e.v + 1
                )));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(CimError::Validation(format!(
                    "duplicate edge ({}, {})",
                    e.u + 1,
                    e.v + 1
                )));
            }
        }
        Ok(Self { n, edges })
    }

    /// Unit-weight graph from 0-indexed vertex pairs.
    pub fn unweighted(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(u, v)| Edge { u, v, w: 1.0 }).collect())
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                edges.push(Edge { u, v, w: 1.0 });
            }
        }
        Self { n: n.max(1), edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of edges carrying a negative weight (`E_neg` in the scoring rule).
    pub fn negative_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.w < 0.0).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }
}

/// Symmetric coupling matrix with zero diagonal, stored row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl IsingProblem {
    /// Builds the matrix from unordered pairs. Repeated pairs accumulate and
    /// pairs that cancel to exactly zero are dropped.
    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(CimError::Validation("problem must have at least one spin".into()));
        }
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in pairs {
            if i >= n || j >= n {
                return Err(CimError::Validation(format!(
                    "coupling ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(CimError::Validation(format!("diagonal coupling on spin {i}")));
            }
            if !v.is_finite() {
                return Err(CimError::Validation(format!("non-finite coupling ({i}, {j})")));
            }
            *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for ((i, j), v) in acc {
            if v != 0.0 {
                rows[i].push((j, v));
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { n, row_ptr, cols, vals })
    }

    pub fn uncoupled(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonzero couplings of spin `i` as `(j, J_ij)`, sorted by `j`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(k, _)| k == j).map_or(0.0, |(_, v)| v)
    }

    /// Each unordered pair `i < j` with a nonzero coupling, once.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).filter(move |&(j, _)| j > i).map(move |(j, v)| (i, j, v)))
    }

    pub fn pair_count(&self) -> usize {
        self.vals.len() / 2
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[i][j] = v;
            }
        }
        m
    }

    /// Local field `h_i = sum_j J_ij s_j`.
    fn local_field(&self, i: usize, spins: &[i8]) -> f64 {
        self.row(i).map(|(j, v)| v * f64::from(spins[j])).sum()
    }

    /// Sum of absolute couplings over unordered pairs.
    fn coupling_mass(&self) -> f64 {
        self.vals.iter().map(|v| v.abs()).sum::<f64>() / 2.0
    }
}

/// Ising spin configuration with entries in {+1, -1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(CimError::Validation(format!("spin value {bad} is not +1 or -1")));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Bit `k` of `bits` set means spin `k` is down.
    pub fn from_index(bits: u64, n: usize) -> Self {
        Self((0..n).map(|k| if bits >> k & 1 == 1 { -1 } else { 1 }).collect())
    }

    /// Sign readout of real amplitudes; zero maps to +1.
    pub fn from_amplitudes(c: &[f64]) -> Self {
        Self(c.iter().map(|&x| if x >= 0.0 { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn flip(&mut self, k: usize) {
        self.0[k] = -self.0[k];
    }

    /// Global spin flip.
    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

impl TryFrom<Vec<i8>> for SpinConfig {
    type Error = CimError;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpinConfig> for Vec<i8> {
    fn from(s: SpinConfig) -> Self {
        s.0
    }
}

impl std::fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// MAX-CUT to Ising: `J_uv = -w_uv`.
pub fn graph_to_ising(g: &WeightedGraph) -> IsingProblem {
    IsingProblem::from_pairs(g.n(), g.edges().iter().map(|e| (e.u, e.v, -e.w)))
        .expect("a validated graph always yields a valid coupling matrix")
}

pub fn ising_energy(p: &IsingProblem, s: &SpinConfig) -> Result<f64> {
    check_len(p.n(), s)?;
    let spins = s.as_slice();
    Ok(-p
        .pairs()
        .map(|(i, j, v)| v * f64::from(spins[i] * spins[j]))
        .sum::<f64>())
}

pub fn cut_value(g: &WeightedGraph, s: &SpinConfig) -> Result<f64> {
    check_len(g.n(), s)?;
    let spins = s.as_slice();
    Ok(g.edges().iter().filter(|e| spins[e.u] != spins[e.v]).map(|e| e.w).sum())
}

fn check_len(n: usize, s: &SpinConfig) -> Result<()> {
    if s.len() != n {
        return Err(CimError::DimensionMismatch {
            expected: n,
            found: s.len(),
        });
    }
    Ok(())
}

/// Global minimum of the Ising energy and every configuration attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStates {
    pub energy: f64,
    pub configs: Vec<SpinConfig>,
}

impl GroundStates {
    pub fn contains(&self, s: &SpinConfig) -> bool {
        self.configs.binary_search(s).is_ok()
    }
}

/// Energy comparison tolerance for a problem.
pub fn energy_tolerance(p: &IsingProblem) -> f64 {
    1e-9 * p.coupling_mass().max(1.0)
}

/// Exhaustive scan over all `2^n` configurations in Gray-code order.
pub fn brute_force_ground(p: &IsingProblem) -> Result<GroundStates> {
    let n = p.n();
    if n > BRUTE_FORCE_MAX_SPINS {
        return Err(CimError::Capability(format!(
            "exhaustive search is capped at {BRUTE_FORCE_MAX_SPINS} spins, problem has {n}"
        )));
    }
    let tol = energy_tolerance(p);
    let mut spins = vec![1i8; n];
    let mut field: Vec<f64> = (0..n).map(|i| p.local_field(i, &spins)).collect();
    let mut energy = ising_energy(p, &SpinConfig::all_up(n))?;
    let mut best = energy;
    let mut ground: Vec<u64> = vec![0];
    let mut gray = 0u64;
    for step in 1u64..(1u64 << n) {
        let k = step.trailing_zeros() as usize;
        let sk = f64::from(spins[k]);
        energy += 2.0 * sk * field[k];
        for (j, v) in p.row(k) {
            field[j] -= 2.0 * v * sk;
        }
        spins[k] = -spins[k];
        gray ^= 1 << k;
        if energy < best - tol {
            best = energy;
            ground.clear();
            ground.push(gray);
        } else if energy <= best + tol {
            ground.push(gray);
        }
    }
    ground.sort_unstable();
    let configs: Vec<SpinConfig> = ground.into_iter().map(|b| SpinConfig::from_index(b, n)).collect();
    let energy = ising_energy(p, &configs[0])?;
    let mut configs = configs;
    configs.sort();
    Ok(GroundStates { energy, configs })
}

/// Steepest single-spin-flip descent until no flip lowers the energy.
pub fn local_improvement(p: &IsingProblem, s: &SpinConfig) -> Result<SpinConfig> {
    check_len(p.n(), s)?;
    let tol = energy_tolerance(p);
    let mut out = s.clone();
    let mut field: Vec<f64> = (0..p.n()).map(|i| p.local_field(i, out.as_slice())).collect();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (k, h) in field.iter().enumerate() {
            let delta = 2.0 * f64::from(out.as_slice()[k]) * h;
            if delta < -tol && best.is_none_or(|(_, d)| delta < d) {
                best = Some((k, delta));
            }
        }
        let Some((k, _)) = best else { break };
        let sk = f64::from(out.as_slice()[k]);
        for (j, v) in p.row(k) {
            field[j] -= 2.0 * v * sk;
        }
        out.flip(k);
    }
    Ok(out)
}

/// `(O + E_neg) / (U_SDP + E_neg)`.
pub fn normalized_cut_score(o: f64, e_neg: f64, u_sdp: f64) -> Result<f64> {
    if e_neg < 0.0 {
        return Err(CimError::Domain(format!("negative edge count {e_neg} is not allowed")));
    }
    let denom = u_sdp + e_neg;
    if !(denom > 0.0) {
        return Err(CimError::Domain(format!(
            "score denominator U_SDP + E_neg = {denom} must be positive"
        )));
    }
    Ok((o + e_neg) / denom)
}
