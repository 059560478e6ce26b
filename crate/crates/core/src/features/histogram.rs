//! First-order statistics of a probability histogram.

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub const HISTOGRAM_STAT_NAMES: [&str; 12] = [
    "mean",
    "std_dev",
    "skewness",
    "kurtosis",
    "width",
    "energy",
    "entropy",
    "peak_height",
    "peak_value",
    "peak_energy",
    "n_local_maxima",
    "local_maxima_energy",
];

/// A normalized histogram: probabilities `p(r_k)` over values `r_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbHistogram {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl ProbHistogram {
    /// Validates non-negativity and normalization (within 1e-9).
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("histogram".into()));
        }
        if values.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values vs {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidValue(
                "negative or non-finite probability".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidValue(format!(
                "histogram sums to {total}, expected 1"
            )));
        }
        Ok(Self { values, probs })
    }

    /// Normalizes raw occurrence counts.
    pub fn from_counts(values: Vec<f64>, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput("histogram with zero total count".into()));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(values, probs)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// The twelve histogram statistics, in listing order:
/// mean, standard deviation, skewness and kurtosis (third and fourth central
/// moments, unnormalized), index width of the support, energy, entropy
/// (base 2), absolute-maximum height and its value, energy in a +-2-bin
/// window around the maximum, the number of strict interior local maxima and
/// their energy.
pub fn histogram_stats(h: &ProbHistogram) -> Result<FeatureVector> {
    let (r, p) = (h.values(), h.probs());
    let k = p.len();

    let mean: f64 = r.iter().zip(p).map(|(r, p)| r * p).sum();
    let central = |order: i32| -> f64 {
        r.iter()
            .zip(p)
            .map(|(r, p)| (r - mean).powi(order) * p)
            .sum()
    };
    let variance = central(2);
    let std_dev = variance.sqrt();
    let skewness = central(3);
    let kurtosis = central(4);

    let first = p.iter().position(|&x| x > 0.0).expect("normalized");
    let last = p.iter().rposition(|&x| x > 0.0).expect("normalized");
    let width = (last - first) as f64;

    let energy: f64 = p.iter().map(|x| x * x).sum();
    let entropy: f64 = -p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|x| x * x.log2())
        .sum::<f64>();

    let peak = (0..k)
        .max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap())
        .expect("non-empty");
    // max_by keeps the last of equal keys; scan for the first instead.
    let peak = (0..k).find(|&i| p[i] == p[peak]).unwrap();
    let peak_height = p[peak];
    let peak_value = r[peak];
    let lo = peak.saturating_sub(2);
    let hi = (peak + 2).min(k - 1);
    let peak_energy: f64 = p[lo..=hi].iter().map(|x| x * x).sum();

    let maxima: Vec<usize> = (1..k.saturating_sub(1))
        .filter(|&i| p[i - 1] < p[i] && p[i] > p[i + 1])
        .collect();
    let n_local_maxima = maxima.len() as f64;
    let local_maxima_energy: f64 = maxima.iter().map(|&i| p[i] * p[i]).sum();

    FeatureVector::new(
        HISTOGRAM_STAT_NAMES.iter().map(|s| s.to_string()).collect(),
        vec![
            mean,
            std_dev,
            skewness,
            kurtosis,
            width,
            energy,
            entropy,
            peak_height,
            peak_value,
            peak_energy,
            n_local_maxima,
            local_maxima_energy,
        ],
    )
}

/// Smoothness `1 - 1/(1 + sigma^2)`, an optional extra statistic.
pub fn smoothness(h: &ProbHistogram) -> f64 {
    let (r, p) = (h.values(), h.probs());
    let mean: f64 = r.iter().zip(p).map(|(r, p)| r * p).sum();
    let variance: f64 = r.iter().zip(p).map(|(r, p)| (r - mean).powi(2) * p).sum();
    1.0 - 1.0 / (1.0 + variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn stats(values: Vec<f64>, probs: Vec<f64>) -> Vec<f64> {
        histogram_stats(&ProbHistogram::new(values, probs).unwrap())
            .unwrap()
            .values()
            .to_vec()
    }

    #[test]
    fn two_point_uniform() {
        let f = stats(vec![0.0, 1.0], vec![0.5, 0.5]);
        assert_abs_diff_eq!(f[0], 0.5); // mean
        assert_abs_diff_eq!(f[5], 0.5); // energy
        assert_abs_diff_eq!(f[6], 1.0); // entropy, one bit
        assert_abs_diff_eq!(f[7], 0.5); // peak height
        assert_abs_diff_eq!(f[8], 0.0); // first of the tied peaks
    }

    #[test]
    fn single_spike_degenerates() {
        let f = stats(vec![3.0], vec![1.0]);
        assert_abs_diff_eq!(f[1], 0.0); // std
        assert_abs_diff_eq!(f[2], 0.0); // skewness
        assert_abs_diff_eq!(f[3], 0.0); // kurtosis
        assert_abs_diff_eq!(f[4], 0.0); // width
        assert_abs_diff_eq!(f[5], 1.0); // energy
        assert_abs_diff_eq!(f[6], 0.0); // entropy
        assert_abs_diff_eq!(f[10], 0.0); // no interior maximum
    }

    #[test]
    fn symmetric_three_bin_peak() {
        let f = stats(vec![0.0, 1.0, 2.0], vec![0.25, 0.5, 0.25]);
        assert_abs_diff_eq!(f[0], 1.0); // mean
        assert_abs_diff_eq!(f[7], 0.5); // abs max
        assert_abs_diff_eq!(f[8], 1.0); // at r = 1
        assert_abs_diff_eq!(f[10], 1.0); // one relative maximum
        assert_abs_diff_eq!(f[11], 0.25); // its energy
    }

    #[test]
    fn peak_energy_window_clips_at_bounds() {
        let f = stats(
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            vec![0.5, 0.2, 0.1, 0.1, 0.05, 0.05],
        );
        // peak at index 0; window covers indices 0..=2
        assert_abs_diff_eq!(f[9], 0.25 + 0.04 + 0.01, epsilon = 1e-12);
    }

    #[test]
    fn rejects_unnormalized_histogram() {
        assert!(ProbHistogram::new(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(ProbHistogram::new(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn entropy_extremes_and_energy() {
        let uniform = stats(vec![0.0, 1.0, 2.0, 3.0], vec![0.25; 4]);
        assert_abs_diff_eq!(uniform[6], 2.0); // log2(4) bits
        assert_abs_diff_eq!(uniform[5], 0.25); // minimal energy
        let spike = stats(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(spike[6], 0.0);
        assert_abs_diff_eq!(spike[5], 1.0);
        assert!(spike[4] == 0.0); // width of a spike
    }

    #[test]
    fn width_spans_first_to_last_support() {
        let f = stats(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.0, 0.5, 0.0, 0.5, 0.0]);
        assert_abs_diff_eq!(f[4], 2.0); // indices 1..=3
    }

    #[test]
    fn smoothness_of_flat_and_spread() {
        let spike = ProbHistogram::new(vec![5.0], vec![1.0]).unwrap();
        assert_abs_diff_eq!(smoothness(&spike), 0.0);
        let spread = ProbHistogram::new(vec![0.0, 10.0], vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(smoothness(&spread), 1.0 - 1.0 / 26.0, epsilon = 1e-12);
    }
}
