//! Second-order Haralick descriptors of a normalized co-occurrence matrix.

use crate::error::{Error, Result};
use crate::features::glcm::Glcm;
use crate::features::FeatureVector;

pub const HARALICK_NAMES: [&str; 6] = [
    "contrast",
    "dissimilarity",
    "homogeneity",
    "asm",
    "energy",
    "correlation",
];

/// Computes the six descriptors on the probability-normalized matrix
/// `P = counts / total_pairs`:
///
/// * contrast        `sum P_ij (g_i - g_j)^2`
/// * dissimilarity   `sum P_ij |g_i - g_j|`
/// * homogeneity     `sum P_ij / (1 + (g_i - g_j)^2)`
/// * asm             `sum P_ij^2`
/// * energy          `sqrt(asm)`
/// * correlation     `sum P_ij (g_i - mu_i)(g_j - mu_j) / sqrt(var_i var_j)`
///
/// Correlation over a matrix with a zero marginal variance (e.g. from a
/// constant image) is defined as 1, where the raw formula is 0/0.
#[allow(clippy::needless_range_loop)]
pub fn haralick(glcm: &Glcm) -> Result<FeatureVector> {
    if glcm.total_pairs() == 0 {
        return Err(Error::EmptyInput("glcm with zero pairs".into()));
    }
    let n = glcm.levels();

    let mut contrast = 0.0;
    let mut dissimilarity = 0.0;
    let mut homogeneity = 0.0;
    let mut asm = 0.0;
    let mut row_mass = vec![0.0; n];
    let mut col_mass = vec![0.0; n];
    for gi in 0..n {
        for gj in 0..n {
            let p = glcm.probability(gi, gj);
            if p == 0.0 {
                continue;
            }
            let d = gi as f64 - gj as f64;
            contrast += p * d * d;
            dissimilarity += p * d.abs();
            homogeneity += p / (1.0 + d * d);
            asm += p * p;
            row_mass[gi] += p;
            col_mass[gj] += p;
        }
    }

    let moments = |mass: &[f64]| {
        let mean: f64 = mass.iter().enumerate().map(|(g, m)| g as f64 * m).sum();
        let var: f64 = mass
            .iter()
            .enumerate()
            .map(|(g, m)| (g as f64 - mean).powi(2) * m)
            .sum();
        (mean, var)
    };
    let (mu_i, var_i) = moments(&row_mass);
    let (mu_j, var_j) = moments(&col_mass);

    let correlation = if var_i == 0.0 || var_j == 0.0 {
        1.0
    } else {
        let denom = (var_i * var_j).sqrt();
        let mut c = 0.0;
        for gi in 0..n {
            for gj in 0..n {
                let p = glcm.probability(gi, gj);
                if p != 0.0 {
                    c += p * (gi as f64 - mu_i) * (gj as f64 - mu_j);
                }
            }
        }
        c / denom
    };

    FeatureVector::new(
        HARALICK_NAMES.iter().map(|s| s.to_string()).collect(),
        vec![
            contrast,
            dissimilarity,
            homogeneity,
            asm,
            asm.sqrt(),
            correlation,
        ],
    )
}
