use rand::Rng;
use rand_distr::StandardNormal;

use super::{drift_into, noise_amplitude, CouplingMatrix, OpoNetworkState};
use crate::error::{CimError, Result};

/// Steps below this size abort the adaptive integrator.
pub const MIN_ADAPTIVE_STEP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveTolerances {
    pub rel: f64,
    pub abs: f64,
    pub dt_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveStep {
    pub dt_used: f64,
    pub dt_next: f64,
    pub rejections: u32,
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Integrator for one network with reusable work buffers.
pub struct OpoNetwork<'a> {
    xi: &'a CouplingMatrix,
    a_s: f64,
    amp: Vec<f64>,
    k: [Vec<f64>; 7],
    y: Vec<f64>,
    stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl<'a> OpoNetwork<'a> {
    /// `a_s = f64::INFINITY` switches the noise off.
    pub fn new(xi: &'a CouplingMatrix, a_s: f64) -> Self {
        let n = xi.n();
        Self {
            xi,
            a_s,
            amp: vec![0.0; n],
            k: std::array::from_fn(|_| vec![0.0; 2 * n]),
            y: vec![0.0; 2 * n],
            stage: vec![0.0; 2 * n],
            y_new: vec![0.0; 2 * n],
        }
    }

    fn noisy(&self) -> bool {
        self.a_s.is_finite()
    }

    fn eval(&self, y: &[f64], p: f64, out: &mut [f64]) {
        let n = self.xi.n();
        let (c, s) = y.split_at(n);
        let (dc, ds) = out.split_at_mut(n);
        drift_into(c, s, p, self.xi, dc, ds);
    }

    fn load_amplitudes(&mut self, state: &OpoNetworkState) {
        for j in 0..state.n() {
            self.amp[j] = noise_amplitude(state.c[j], state.s[j], self.a_s);
        }
    }

    /// Adds `amp_j * N(0,1) * sqrt(dt)` to `c_j` then `s_j`, for each `j` in order.
    fn add_noise<R: Rng + ?Sized>(&self, state: &mut OpoNetworkState, dt: f64, rng: &mut R) {
        if !self.noisy() {
            return;
        }
        let sq = dt.sqrt();
        for j in 0..state.n() {
            let a = self.amp[j] * sq;
            let w1: f64 = rng.sample(StandardNormal);
            let w2: f64 = rng.sample(StandardNormal);
            state.c[j] += a * w1;
            state.s[j] += a * w2;
        }
    }

    /// One Euler-Maruyama step with pump rate `p` held over the step.
    pub fn step_fixed<R: Rng + ?Sized>(
        &mut self,
        state: &mut OpoNetworkState,
        dt: f64,
        p: f64,
        rng: &mut R,
    ) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let n = state.n();
        self.load_amplitudes(state);
        {
            let (dc, ds) = self.k[0].split_at_mut(n);
            drift_into(&state.c, &state.s, p, self.xi, dc, ds);
        }
        for j in 0..n {
            state.c[j] += self.k[0][j] * dt;
            state.s[j] += self.k[0][n + j] * dt;
        }
        self.add_noise(state, dt, rng);
        state.t += dt;
        if !state.is_finite() {
            return Err(CimError::Divergence { t: state.t });
        }
        Ok(())
    }

    /// One accepted Dormand-Prince step on the drift, followed by a single
    /// noise increment with the pre-step amplitudes. Rejected attempts
    /// shrink the step and draw no noise.
    pub fn step_adaptive<R: Rng + ?Sized>(
        &mut self,
        state: &mut OpoNetworkState,
        dt_try: f64,
        tol: &AdaptiveTolerances,
        p: f64,
        rng: &mut R,
    ) -> Result<AdaptiveStep> {
        let n = state.n();
        self.y[..n].copy_from_slice(&state.c);
        self.y[n..].copy_from_slice(&state.s);
        self.load_amplitudes(state);

        let mut k0 = std::mem::take(&mut self.k[0]);
        self.eval(&self.y, p, &mut k0);
        self.k[0] = k0;

        let mut dt = dt_try.min(tol.dt_max);
        let mut rejections = 0;
        loop {
            if dt < MIN_ADAPTIVE_STEP {
                return Err(CimError::Stiffness { t: state.t, dt });
            }
            let err = self.attempt(dt, p, tol);
            if !err.is_finite() {
                rejections += 1;
                dt *= FAC_MIN;
                continue;
            }
            if err <= 1.0 {
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                state.c.copy_from_slice(&self.y_new[..n]);
                state.s.copy_from_slice(&self.y_new[n..]);
                self.add_noise(state, dt, rng);
                state.t += dt;
                if !state.is_finite() {
                    return Err(CimError::Divergence { t: state.t });
                }
                return Ok(AdaptiveStep {
                    dt_used: dt,
                    dt_next: (dt * fac).min(tol.dt_max),
                    rejections,
                });
            }
            rejections += 1;
            dt *= (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
        }
    }

    /// Fills `y_new` with the fifth-order solution; returns the scaled RMS
    /// error of the embedded fourth-order estimate.
    fn attempt(&mut self, dt: f64, p: f64, tol: &AdaptiveTolerances) -> f64 {
        let m = self.y.len();
        for s in 1..7 {
            for i in 0..m {
                let mut acc = 0.0;
                for (r, a) in A[s][..s].iter().enumerate() {
                    acc += a * self.k[r][i];
                }
                self.stage[i] = self.y[i] + dt * acc;
            }
            let mut ks = std::mem::take(&mut self.k[s]);
            self.eval(&self.stage, p, &mut ks);
            self.k[s] = ks;
        }
        // The last stage is evaluated at the fifth-order solution itself.
        self.y_new.copy_from_slice(&self.stage);
        let mut sum = 0.0;
        for i in 0..m {
            let mut e = 0.0;
            for (s, w) in E.iter().enumerate() {
                e += w * self.k[s][i];
            }
            let scale = tol.abs + tol.rel * self.y[i].abs().max(self.y_new[i].abs());
            let r = dt * e / scale;
            sum += r * r;
        }
        (sum / m as f64).sqrt()
    }
}
