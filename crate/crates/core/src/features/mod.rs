//! Hand-crafted descriptors: co-occurrence texture (GLCM + Haralick),
//! rotation-invariant uniform local binary patterns, and first-order
//! histogram statistics.
//!
//! Two composite recipes are provided on top of the primitives:
//!
//! * [`pathomics_features`] — 24 Haralick descriptors per patch (unit-distance
//!   GLCM at the four canonical orientations, six descriptors each).
//! * [`radiomics_features`] — 48 features per slice: 12 gray-level histogram
//!   statistics, the same 24 GLCM descriptors, and 12 statistics of the
//!   LBP code histogram.
//!
//! Everything is deterministic; repeated calls are byte-identical.

mod glcm;
mod haralick;
mod histogram;
mod lbp;

pub use glcm::{compute_glcm, quantize, Glcm, GlcmParams, Orientation};
pub use haralick::haralick;
pub use histogram::{histogram_stats, smoothness, ProbHistogram};
pub use lbp::{lbp_code, lbp_histogram, riu2_code, LbpHistogram, LbpParams};

use crate::error::{Error, Result};
use crate::preprocess::GrayImage;

/// An ordered list of named, finite, real-valued features for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names vs {} values",
                names.len(),
                values.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].iter().any(|n| n == name) {
                return Err(Error::InvalidValue(format!("duplicate feature `{name}`")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "feature `{}` is not finite: {}",
                names[pos], values[pos]
            )));
        }
        Ok(Self { names, values })
    }

    /// Builds a vector with synthetic names `f0..f{n}`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let names = (0..values.len()).map(|i| format!("f{i}")).collect();
        Self::new(names, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Returns a copy with every name prefixed as `{prefix}.{name}`.
    pub fn with_prefix(&self, prefix: &str) -> FeatureVector {
        FeatureVector {
            names: self.names.iter().map(|n| format!("{prefix}.{n}")).collect(),
            values: self.values.clone(),
        }
    }

    /// Concatenates blocks, preserving order. Names must stay unique.
    pub fn concat(blocks: &[FeatureVector]) -> Result<FeatureVector> {
        let mut names = Vec::new();
        let mut values = Vec::new();
        for b in blocks {
            names.extend(b.names.iter().cloned());
            values.extend(b.values.iter().copied());
        }
        FeatureVector::new(names, values)
    }
}

/// Knobs for the composite feature recipes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureParams {
    /// Gray levels after linear re-quantization, applied before the GLCM.
    pub glcm_levels: usize,
    /// Pixel distance of the co-occurrence offset.
    pub glcm_delta: usize,
    /// Sampling points on the LBP circle.
    pub lbp_points: u32,
    /// Radius of the LBP circle.
    pub lbp_radius: f64,
    /// Also emit the smoothness statistic `1 - 1/(1 + sigma^2)` in each
    /// histogram block (off by default).
    pub emit_smoothness: bool,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            glcm_levels: 32,
            glcm_delta: 1,
            lbp_points: 8,
            lbp_radius: 1.0,
            emit_smoothness: false,
        }
    }
}

/// The 24 co-occurrence descriptors of one patch: six Haralick features for
/// each of the four canonical orientations at unit distance, concatenated in
/// orientation order (0, 45, 90, 135 degrees).
pub fn pathomics_features(patch: &GrayImage, params: &FeatureParams) -> Result<FeatureVector> {
    glcm_block(patch, params)
}

fn glcm_block(image: &GrayImage, params: &FeatureParams) -> Result<FeatureVector> {
    let quantized = quantize(image, params.glcm_levels)?;
    let mut blocks = Vec::with_capacity(4);
    for theta in Orientation::ALL {
        let glcm = compute_glcm(
            &quantized,
            &GlcmParams {
                delta: params.glcm_delta,
                theta,
                levels: params.glcm_levels,
            },
        )?;
        let prefix = format!("glcm_d{}_a{}", params.glcm_delta, theta.degrees());
        blocks.push(haralick(&glcm)?.with_prefix(&prefix));
    }
    FeatureVector::concat(&blocks)
}

/// The 48 per-slice descriptors: 12 statistics of the normalized gray-level
/// histogram, the 24 GLCM descriptors, and 12 statistics of the normalized
/// LBP code histogram.
pub fn radiomics_features(slice: &GrayImage, params: &FeatureParams) -> Result<FeatureVector> {
    // First-order statistics over the full intensity range of the slice.
    let range = slice.intensity_range() as usize;
    let mut counts = vec![0u64; range];
    for &p in slice.pixels() {
        counts[p as usize] += 1;
    }
    let values: Vec<f64> = (0..range).map(|k| k as f64).collect();
    let gray_hist = ProbHistogram::from_counts(values, &counts)?;
    let mut gray_stats = histogram_stats(&gray_hist)?;
    if params.emit_smoothness {
        gray_stats = append_smoothness(gray_stats, &gray_hist)?;
    }

    let texture = glcm_block(slice, params)?;

    let lbp_params = LbpParams {
        points: params.lbp_points,
        radius: params.lbp_radius,
    };
    let lbp_hist = lbp_histogram(slice, &lbp_params)?;
    let lbp_values: Vec<f64> = (0..lbp_hist.bins().len()).map(|k| k as f64).collect();
    let lbp_prob = ProbHistogram::from_counts(lbp_values, lbp_hist.bins())?;
    let mut lbp_stats = histogram_stats(&lbp_prob)?;
    if params.emit_smoothness {
        lbp_stats = append_smoothness(lbp_stats, &lbp_prob)?;
    }

    FeatureVector::concat(&[
        gray_stats.with_prefix("hist"),
        texture,
        lbp_stats.with_prefix("lbp"),
    ])
}

fn append_smoothness(stats: FeatureVector, hist: &ProbHistogram) -> Result<FeatureVector> {
    let mut names = stats.names().to_vec();
    let mut values = stats.values().to_vec();
    names.push("smoothness".into());
    values.push(smoothness(hist));
    FeatureVector::new(names, values)
}
