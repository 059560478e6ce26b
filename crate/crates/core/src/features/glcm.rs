//! Gray-level co-occurrence matrix.
//!
//! The matrix counts, for a spatial offset `(dx, dy)` derived from a distance
//! `delta` and an orientation `theta`, how often a pixel of intensity `g_i`
//! has a neighbour of intensity `g_j` at that offset. Counting is directed
//! (asymmetric): the pair `(g_i, g_j)` is not also tallied as `(g_j, g_i)`.

use crate::error::{Error, Result};
use crate::preprocess::GrayImage;

/// The four canonical co-occurrence orientations.
///
/// Offsets use image convention (y grows downward) with the angle measured
/// counter-clockwise, so for a distance `d`:
/// 0 -> (d, 0), 45 -> (d, -d), 90 -> (0, -d), 135 -> (-d, -d).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::Deg0,
        Orientation::Deg45,
        Orientation::Deg90,
        Orientation::Deg135,
    ];

    pub fn degrees(self) -> u32 {
        match self {
            Orientation::Deg0 => 0,
            Orientation::Deg45 => 45,
            Orientation::Deg90 => 90,
            Orientation::Deg135 => 135,
        }
    }

    /// Pixel offset `(dx, dy)` for distance `delta`.
    pub fn offset(self, delta: usize) -> (isize, isize) {
        let d = delta as isize;
        match self {
            Orientation::Deg0 => (d, 0),
            Orientation::Deg45 => (d, -d),
            Orientation::Deg90 => (0, -d),
            Orientation::Deg135 => (-d, -d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlcmParams {
    /// Pixel distance between the two points of a pair. Must be >= 1.
    pub delta: usize,
    /// Orientation of the pair.
    pub theta: Orientation,
    /// Number of gray levels spanned by the matrix. Image intensities must
    /// already lie in `[0, levels)`; see [`quantize`].
    pub levels: usize,
}

/// A co-occurrence count matrix together with the parameters that built it.
#[derive(Debug, Clone)]
pub struct Glcm {
    counts: Vec<u64>,
    params: GlcmParams,
    total_pairs: u64,
}

impl Glcm {
    pub fn params(&self) -> &GlcmParams {
        &self.params
    }

    pub fn levels(&self) -> usize {
        self.params.levels
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    #[inline]
    pub fn count(&self, gi: usize, gj: usize) -> u64 {
        self.counts[gi * self.params.levels + gj]
    }

    /// Probability-normalized entry `count / total_pairs`.
    #[inline]
    pub fn probability(&self, gi: usize, gj: usize) -> f64 {
        self.count(gi, gj) as f64 / self.total_pairs as f64
    }

    /// Builds a matrix directly from normalized probabilities.
    /// Intended for tests and worked examples; `total_pairs` is set to the
    /// given denominator.
    pub fn from_probabilities(probs: &[Vec<f64>], denominator: u64) -> Result<Glcm> {
        let levels = probs.len();
        if levels == 0 || probs.iter().any(|r| r.len() != levels) {
            return Err(Error::DimensionMismatch("glcm must be square".into()));
        }
        if denominator == 0 {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        let mut counts = Vec::with_capacity(levels * levels);
        for row in probs {
            for &p in row {
                let c = p * denominator as f64;
                if (c - c.round()).abs() > 1e-9 || c < 0.0 {
                    return Err(Error::InvalidValue(format!(
                        "probability {p} is not a multiple of 1/{denominator}"
                    )));
                }
                counts.push(c.round() as u64);
            }
        }
        let total: u64 = counts.iter().sum();
        if total != denominator {
            return Err(Error::InvalidValue(format!(
                "probabilities sum to {total}/{denominator}"
            )));
        }
        Ok(Glcm {
            counts,
            params: GlcmParams {
                delta: 1,
                theta: Orientation::Deg0,
                levels,
            },
            total_pairs: denominator,
        })
    }
}

/// Linearly re-quantizes intensities from `[0, 2^bit_depth)` to `[0, levels)`.
///
/// The output bit depth is the smallest that can hold `levels` values. When
/// `levels` equals the full intensity range the mapping is the identity.
pub fn quantize(image: &GrayImage, levels: usize) -> Result<GrayImage> {
    if levels == 0 || levels > 65536 {
        return Err(Error::InvalidParameter(format!(
            "levels must be in 1..=65536, got {levels}"
        )));
    }
    let range = image.intensity_range() as u64;
    let pixels = image
        .pixels()
        .iter()
        .map(|&p| ((p as u64 * levels as u64) / range) as u32)
        .collect();
    let mut depth = 1u8;
    while (1usize << depth) < levels {
        depth += 1;
    }
    GrayImage::new(image.width(), image.height(), depth, pixels)
}

/// Computes the co-occurrence matrix of `image` for `params`.
///
/// An offset that leaves no in-bounds pixel pair at all is an error.
pub fn compute_glcm(image: &GrayImage, params: &GlcmParams) -> Result<Glcm> {
    if params.delta == 0 {
        return Err(Error::InvalidParameter("delta must be >= 1".into()));
    }
    if params.levels == 0 {
        return Err(Error::InvalidParameter("levels must be >= 1".into()));
    }
    if let Some(&bad) = image
        .pixels()
        .iter()
        .find(|&&p| p as usize >= params.levels)
    {
        return Err(Error::InvalidValue(format!(
            "intensity {bad} is outside the {} quantization levels",
            params.levels
        )));
    }

    let (dx, dy) = params.theta.offset(params.delta);
    let (w, h) = (image.width() as isize, image.height() as isize);
    // Valid range of source positions such that (x + dx, y + dy) stays inside.
    let x_lo = 0.max(-dx);
    let x_hi = w.min(w - dx);
    let y_lo = 0.max(-dy);
    let y_hi = h.min(h - dy);
    if x_lo >= x_hi || y_lo >= y_hi {
        return Err(Error::ImageTooSmall(format!(
            "no valid pixel pair for offset ({dx},{dy}) in a {w}x{h} image"
        )));
    }

    let levels = params.levels;
    let mut counts = vec![0u64; levels * levels];
    let mut total = 0u64;
    for y in y_lo..y_hi {
        for x in x_lo..x_hi {
            let gi = image.get(x as usize, y as usize) as usize;
            let gj = image.get((x + dx) as usize, (y + dy) as usize) as usize;
            counts[gi * levels + gj] += 1;
            total += 1;
        }
    }

    Ok(Glcm {
        counts,
        params: params.clone(),
        total_pairs: total,
    })
}
