//! Rotation-invariant uniform local binary patterns.
//!
//! Each pixel is compared against `P` neighbours sampled on a circle of
//! radius `R` (bilinear interpolation where the circle misses the pixel
//! grid). A pattern whose circular sequence of sign bits has at most two
//! 0/1 transitions is *uniform* and coded by its number of ones, in
//! `[0, P]`; every other pattern collapses into the single code `P + 1`,
//! for `P + 2` codes overall. The code survives rotations of the
//! neighbourhood and monotonic intensity changes.

use crate::error::{Error, Result};
use crate::preprocess::GrayImage;

/// Comparison slack for interpolated neighbours. Interpolation noise is far
/// below this, while genuinely different sample values on integer-valued
/// images sit far above it, so the sign convention `sgn(0) = 1` stays stable.
const SGN_EPS: f64 = 1e-9;

/// Snap-to-grid tolerance for sample coordinates.
const COORD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbpParams {
    /// Number of sampling points `P` on the circle. Must be >= 4.
    pub points: u32,
    /// Circle radius `R`. Must be >= 1.
    pub radius: f64,
}

impl LbpParams {
    fn validate(&self) -> Result<()> {
        if self.points < 4 {
            return Err(Error::InvalidParameter(format!(
                "lbp needs at least 4 points, got {}",
                self.points
            )));
        }
        if self.radius.is_nan() || self.radius < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "lbp radius must be >= 1, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Margin of pixels a centre must keep from the border.
    fn margin(&self) -> usize {
        self.radius.ceil() as usize
    }

    /// Sampling offsets `(dx, dy)` for each point, y-down convention with the
    /// angle measured counter-clockwise.
    fn offsets(&self) -> Vec<(f64, f64)> {
        (0..self.points)
            .map(|p| {
                let angle = 2.0 * std::f64::consts::PI * p as f64 / self.points as f64;
                (self.radius * angle.cos(), -self.radius * angle.sin())
            })
            .collect()
    }
}

/// Occurrence counts of the `P + 2` codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpHistogram {
    bins: Vec<u64>,
}

impl LbpHistogram {
    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    /// Total number of pixels that had a full in-bounds neighbourhood.
    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }
}

/// Bilinear sample at fractional coordinates. Coordinates within a hair of a
/// grid point read the pixel directly.
fn sample_bilinear(image: &GrayImage, fx: f64, fy: f64) -> f64 {
    let rx = fx.round();
    let ry = fy.round();
    if (fx - rx).abs() < COORD_EPS && (fy - ry).abs() < COORD_EPS {
        return image.get(rx as usize, ry as usize) as f64;
    }
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(image.width() - 1);
    let y1 = (y0 + 1).min(image.height() - 1);
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let top = (1.0 - tx) * image.get(x0, y0) as f64 + tx * image.get(x1, y0) as f64;
    let bottom = (1.0 - tx) * image.get(x0, y1) as f64 + tx * image.get(x1, y1) as f64;
    (1.0 - ty) * top + ty * bottom
}

/// Rotation-invariant uniform code of a sampled neighbourhood.
///
/// `sgn(v) = 1` when `v >= 0` (within [`SGN_EPS`]); the uniformity degree is
/// the number of circular transitions in the sign sequence. Uniform patterns
/// (at most two transitions) are coded by their count of ones, everything
/// else by `P + 1`.
pub fn riu2_code(neighbors: &[f64], center: f64) -> u32 {
    let bits: Vec<u8> = neighbors
        .iter()
        .map(|&g| u8::from(g - center >= -SGN_EPS))
        .collect();
    let p = bits.len();
    let mut transitions = (bits[p - 1] != bits[0]) as u32;
    for i in 1..p {
        transitions += (bits[i] != bits[i - 1]) as u32;
    }
    if transitions <= 2 {
        bits.iter().map(|&b| b as u32).sum()
    } else {
        p as u32 + 1
    }
}

/// LBP code of the pixel at `center`, or an error when the circular
/// neighbourhood does not fit inside the image.
pub fn lbp_code(image: &GrayImage, center: (usize, usize), params: &LbpParams) -> Result<u32> {
    params.validate()?;
    let (x, y) = center;
    let m = params.margin();
    if x < m || y < m || x + m >= image.width() || y + m >= image.height() {
        return Err(Error::ImageTooSmall(format!(
            "neighbourhood of radius {} at ({x},{y}) leaves a {}x{} image",
            params.radius,
            image.width(),
            image.height()
        )));
    }
    let g_c = image.get(x, y) as f64;
    let samples: Vec<f64> = params
        .offsets()
        .into_iter()
        .map(|(dx, dy)| sample_bilinear(image, x as f64 + dx, y as f64 + dy))
        .collect();
    Ok(riu2_code(&samples, g_c))
}

/// Histogram of LBP codes over every pixel with a full neighbourhood.
pub fn lbp_histogram(image: &GrayImage, params: &LbpParams) -> Result<LbpHistogram> {
    params.validate()?;
    let m = params.margin();
    if image.width() <= 2 * m || image.height() <= 2 * m {
        return Err(Error::ImageTooSmall(format!(
            "{}x{} image has no valid centre for radius {}",
            image.width(),
            image.height(),
            params.radius
        )));
    }
    let offsets = params.offsets();
    let mut bins = vec![0u64; params.points as usize + 2];
    for y in m..image.height() - m {
        for x in m..image.width() - m {
            let g_c = image.get(x, y) as f64;
            let samples: Vec<f64> = offsets
                .iter()
                .map(|&(dx, dy)| sample_bilinear(image, x as f64 + dx, y as f64 + dy))
                .collect();
            bins[riu2_code(&samples, g_c) as usize] += 1;
        }
    }
    Ok(LbpHistogram { bins })
}
