use serde::{Deserialize, Serialize};

/// Two-sided normal quantile used for reported binomial intervals (95%).
pub const CONFIDENCE_Z: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Build-up times of the trials that reached a steady state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildUpSummary {
    pub count: usize,
    /// Trials without a detected steady state.
    pub missing: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
}

impl BuildUpSummary {
    pub fn from_times(times: &[Option<f64>]) -> Self {
        let mut v: Vec<f64> = times.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        Self {
            count: v.len(),
            missing: times.len() - v.len(),
            mean: (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64),
            median: quantile(&v, 0.5),
            q1: quantile(&v, 0.25),
            q3: quantile(&v, 0.75),
            max: v.last().copied(),
        }
    }
}

/// Observed count of one multinomial cell against its expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    pub label: String,
    pub observed: u64,
    pub expected: f64,
    /// Binomial standard deviation of the count.
    pub sigma: f64,
    pub within: bool,
}

/// `|observed - N p| <= k sqrt(N p (1 - p))`.
pub fn cell_check(label: impl Into<String>, observed: u64, total: u64, prob: f64, k: f64) -> CellCheck {
    let n = total as f64;
    let expected = n * prob;
    let sigma = (n * prob * (1.0 - prob)).sqrt();
    CellCheck {
        label: label.into(),
        observed,
        expected,
        sigma,
        within: (observed as f64 - expected).abs() <= k * sigma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(93, 100, CONFIDENCE_Z);
        assert!((lo - 0.8625).abs() < 1e-3 && (hi - 0.9657).abs() < 1e-3, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 0, CONFIDENCE_Z), (0.0, 1.0));
        let (lo, hi) = wilson_interval(10, 10, CONFIDENCE_Z);
        assert!((lo - 10.0 / (10.0 + CONFIDENCE_Z * CONFIDENCE_Z)).abs() < 1e-12 && hi > 1.0 - 1e-12);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), Some(2.5));
        assert_eq!(quantile(&v, 0.0), Some(1.0));
        assert_eq!(quantile(&v, 1.0), Some(4.0));
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn build_up_summary_counts_missing() {
        let s = BuildUpSummary::from_times(&[Some(10.0), None, Some(30.0), Some(20.0)]);
        assert_eq!((s.count, s.missing), (3, 1));
        assert_eq!((s.median, s.max, s.mean), (Some(20.0), Some(30.0), Some(20.0)));
        let empty = BuildUpSummary::from_times(&[None]);
        assert_eq!(empty.median, None);
    }

    #[test]
    fn cell_bands() {
        let c = cell_check("a", 130, 1000, 0.125, 3.0);
        assert!((c.sigma - 10.458).abs() < 1e-3 && c.within);
        assert!(!cell_check("b", 170, 1000, 0.125, 3.0).within);
    }
}
