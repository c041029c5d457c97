//! c-number Langevin dynamics of a network of degenerate OPOs.
//!
//! For oscillator `j` with in-phase amplitude `c_j` and quadrature `s_j`
//! (both normalized by the saturation amplitude `A_s`):
//!
//! ```text
//! dc_j = {[-1 + p - (c_j^2 + s_j^2)] c_j + sum_l xi_jl c_l} dt + (1/A_s) sqrt(c_j^2 + s_j^2 + 1/2) dW_j1
//! ds_j = {[-1 - p - (c_j^2 + s_j^2)] s_j + sum_l xi_jl s_l} dt + (1/A_s) sqrt(c_j^2 + s_j^2 + 1/2) dW_j2
//! ```

mod config;
mod stepper;
mod trial;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::IsingProblem;

pub use config::{
    BuildUpCriterion, CouplingScaling, IntegratorKind, PhysicalMetadata, PumpSchedule, SimConfig,
    DEFAULT_SATURATION_AMPLITUDE,
};
pub use stepper::{AdaptiveStep, AdaptiveTolerances, OpoNetwork, MIN_ADAPTIVE_STEP};
pub use trial::{detect_build_up, run_trial, run_trial_with, write_trajectory_csv, TrialResult};

/// Injection coefficients `xi_jl`, symmetric, row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CouplingMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, l: usize) -> f64 {
        let r = self.row_ptr[j]..self.row_ptr[j + 1];
        self.cols[r.clone()]
            .iter()
            .position(|&k| k == l)
            .map_or(0.0, |k| self.vals[r.start + k])
    }

    /// `sum_l xi_jl x_l`, summed in increasing `l`.
    #[inline]
    pub fn row_dot(&self, j: usize, x: &[f64]) -> f64 {
        let r = self.row_ptr[j]..self.row_ptr[j + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&l, &v)| v * x[l])
            .sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|j| {
            let r = self.row_ptr[j]..self.row_ptr[j + 1];
            self.cols[r.clone()]
                .iter()
                .zip(&self.vals[r])
                .all(|(&l, &v)| self.get(l, j) == v)
        })
    }
}

/// `xi_jl = -xi_scale * J_jl` (linear) or `-xi_scale * sign(J_jl)`.
///
/// With the MAX-CUT mapping `J = -w` and `xi_scale = -0.1`, every unit edge
/// receives `xi = -0.1` (out-of-phase injection).
pub fn assemble_couplings(p: &IsingProblem, xi_scale: f64, scaling: CouplingScaling) -> CouplingMatrix {
    let n = p.n();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for j in 0..n {
        for (l, v) in p.row(j) {
            let w = match scaling {
                CouplingScaling::Linear => v,
                CouplingScaling::SignOnly => v.signum(),
            };
            let x = -xi_scale * w;
            if x != 0.0 {
                cols.push(l);
                vals.push(x);
            }
        }
        row_ptr.push(cols.len());
    }
    CouplingMatrix { n, row_ptr, cols, vals }
}

/// Quadrature amplitudes of every oscillator at normalized time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpoNetworkState {
    pub c: Vec<f64>,
    pub s: Vec<f64>,
    pub t: f64,
}

impl OpoNetworkState {
    /// Vacuum mean field: all amplitudes zero at `t = 0`.
    pub fn vacuum(n: usize) -> Self {
        Self {
            c: vec![0.0; n],
            s: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().chain(&self.s).all(|x| x.is_finite())
    }

    /// `sum_j c_j^2`.
    pub fn in_phase_power(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum()
    }
}

/// Deterministic part of the network equations.
pub fn drift(state: &OpoNetworkState, p: f64, xi: &CouplingMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = state.n();
    let mut dc = vec![0.0; n];
    let mut ds = vec![0.0; n];
    drift_into(&state.c, &state.s, p, xi, &mut dc, &mut ds);
    (dc, ds)
}

#[inline]
pub(crate) fn drift_into(c: &[f64], s: &[f64], p: f64, xi: &CouplingMatrix, dc: &mut [f64], ds: &mut [f64]) {
    for j in 0..c.len() {
        let r2 = c[j] * c[j] + s[j] * s[j];
        dc[j] = (-1.0 + p - r2) * c[j] + xi.row_dot(j, c);
        ds[j] = (-1.0 - p - r2) * s[j] + xi.row_dot(j, s);
    }
}

/// `(1/A_s) sqrt(c^2 + s^2 + 1/2)`, shared by both quadrature noises.
#[inline]
pub fn noise_amplitude(c: f64, s: f64, a_s: f64) -> f64 {
    (c * c + s * s + 0.5).sqrt() / a_s
}

/// Per-trial random stream: `(seed, trial)` selects a ChaCha stream, so any
/// trial can be replayed independently of execution order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graph_to_ising, Edge, WeightedGraph};
    use approx::assert_abs_diff_eq;

    #[test]
    fn k4_couplings_are_minus_point_one() {
        let xi = assemble_couplings(
            &graph_to_ising(&WeightedGraph::complete(4)),
            -0.1,
            CouplingScaling::Linear,
        );
        for j in 0..4 {
            for l in 0..4 {
                assert_eq!(xi.get(j, l), if j == l { 0.0 } else { -0.1 });
            }
        }
        assert!(xi.is_symmetric());
    }

    #[test]
    fn empty_and_negative_edges() {
        let xi = assemble_couplings(&IsingProblem::uncoupled(3), -0.1, CouplingScaling::Linear);
        assert!((0..3).all(|j| (0..3).all(|l| xi.get(j, l) == 0.0)));

        let g = WeightedGraph::new(2, vec![Edge { u: 0, v: 1, w: -1.0 }]).unwrap();
        let xi = assemble_couplings(&graph_to_ising(&g), -0.1, CouplingScaling::Linear);
        assert_eq!(xi.get(0, 1), 0.1);

        let g = WeightedGraph::new(2, vec![Edge { u: 0, v: 1, w: 3.0 }]).unwrap();
        let p = graph_to_ising(&g);
        assert_abs_diff_eq!(
            assemble_couplings(&p, -0.1, CouplingScaling::Linear).get(0, 1),
            -0.3,
            epsilon = 1e-15
        );
        assert_eq!(assemble_couplings(&p, -0.1, CouplingScaling::SignOnly).get(0, 1), -0.1);
    }

    #[test]
    fn drift_examples() {
        let xi0 = assemble_couplings(&IsingProblem::uncoupled(2), 0.0, CouplingScaling::Linear);
        let (dc, ds) = drift(&OpoNetworkState::vacuum(2), 1.3, &xi0);
        assert_eq!(dc, vec![0.0, 0.0]);
        assert_eq!(ds, vec![0.0, 0.0]);

        let xi1 = assemble_couplings(&IsingProblem::uncoupled(1), 0.0, CouplingScaling::Linear);
        let st = OpoNetworkState {
            c: vec![1.0],
            s: vec![0.0],
            t: 0.0,
        };
        assert_eq!(drift(&st, 2.0, &xi1).0, vec![0.0]);

        // Ferromagnetic pair: xi_12 = +0.1, fixed point c = sqrt(p - 1 + xi).
        let p = IsingProblem::from_pairs(2, [(0, 1, 1.0)]).unwrap();
        let xi = assemble_couplings(&p, -0.1, CouplingScaling::Linear);
        assert_eq!(xi.get(0, 1), 0.1);
        let c = 0.2f64.sqrt();
        let st = OpoNetworkState {
            c: vec![c, c],
            s: vec![0.0, 0.0],
            t: 0.0,
        };
        let (dc, _) = drift(&st, 1.1, &xi);
        assert_abs_diff_eq!(dc[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dc[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn noise_amplitude_examples() {
        assert_abs_diff_eq!(noise_amplitude(0.0, 0.0, 1.0), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(noise_amplitude(1.0, 0.0, 1.0), 1.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            noise_amplitude(0.3, 0.2, 4.0),
            noise_amplitude(0.3, 0.2, 2.0) / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn drift_is_odd_under_global_flip() {
        let p = graph_to_ising(&WeightedGraph::complete(4));
        let xi = assemble_couplings(&p, -0.1, CouplingScaling::Linear);
        let st = OpoNetworkState {
            c: vec![0.3, -0.2, 0.5, 0.1],
            s: vec![0.05, 0.0, -0.1, 0.2],
            t: 0.0,
        };
        let neg = OpoNetworkState {
            c: st.c.iter().map(|x| -x).collect(),
            s: st.s.iter().map(|x| -x).collect(),
            t: 0.0,
        };
        let (a, b) = drift(&st, 1.1, &xi);
        let (na, nb) = drift(&neg, 1.1, &xi);
        for j in 0..4 {
            assert_eq!(a[j], -na[j]);
            assert_eq!(b[j], -nb[j]);
        }
    }
}
