//! Turns raw modality inputs (image crops, image stacks, tabular records) into
//! homogeneous per-sample units ready for feature extraction.
//!
//! All operations here are pure functions of their inputs; nothing holds
//! internal mutable state, so everything is safe to call concurrently.

use crate::error::{Error, Result};

/// A 2D grid of integer intensities with a declared bit depth.
///
/// Intensities are stored row-major and every pixel is strictly below
/// `2^bit_depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    pixels: Vec<u32>,
}

impl GrayImage {
    /// Builds an image from row-major pixels, validating the invariants:
    /// non-degenerate dimensions and every intensity below `2^bit_depth`.
    pub fn new(width: usize, height: usize, bit_depth: u8, pixels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if bit_depth == 0 || bit_depth > 16 {
            return Err(Error::InvalidParameter(format!(
                "bit depth must be in 1..=16, got {bit_depth}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        let max = 1u32 << bit_depth;
        if let Some(bad) = pixels.iter().find(|&&p| p >= max) {
            return Err(Error::InvalidValue(format!(
                "pixel value {bad} exceeds bit depth {bit_depth}"
            )));
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            pixels,
        })
    }

    /// Builds an image from nested rows. Rows must be non-empty and uniform.
    pub fn from_rows(rows: &[Vec<u32>], bit_depth: u8) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyInput("image rows".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::DimensionMismatch("ragged image rows".into()));
        }
        let pixels: Vec<u32> = rows.iter().flatten().copied().collect();
        Self::new(width, rows.len(), bit_depth, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    /// Number of representable intensities, `2^bit_depth`.
    pub fn intensity_range(&self) -> u32 {
        1u32 << self.bit_depth
    }

    /// Intensity at column `x`, row `y`. Panics when out of bounds.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[u32] {
        &self.pixels
    }
}

/// An 8-bit three-channel image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}

/// An ordered list of slices sharing one bit depth.
#[derive(Debug, Clone)]
pub struct ImageStack {
    slices: Vec<GrayImage>,
    stack_id: String,
}

impl ImageStack {
    pub fn new(stack_id: impl Into<String>, slices: Vec<GrayImage>) -> Result<Self> {
        let stack_id = stack_id.into();
        if let Some(first) = slices.first() {
            let depth = first.bit_depth();
            if slices.iter().any(|s| s.bit_depth() != depth) {
                return Err(Error::InvalidValue(format!(
                    "stack `{stack_id}` mixes bit depths"
                )));
            }
        }
        Ok(Self { slices, stack_id })
    }

    pub fn stack_id(&self) -> &str {
        &self.stack_id
    }

    pub fn slices(&self) -> &[GrayImage] {
        &self.slices
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

/// A single value of a tabular attribute.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Category(String),
    Number(f64),
}

/// One tabular record: an ordered list of uniquely named attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularRecord {
    attributes: Vec<(String, AttrValue)>,
}

impl TabularRecord {
    pub fn new(attributes: Vec<(String, AttrValue)>) -> Result<Self> {
        for (i, (name, _)) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidValue(format!(
                    "duplicate attribute name `{name}`"
                )));
            }
        }
        Ok(Self { attributes })
    }

    pub fn attributes(&self) -> &[(String, AttrValue)] {
        &self.attributes
    }

    pub fn get(&self, name: &str) -> Option<&AttrValue> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }
}

/// Extracts every `window`x`window` sub-image whose top-left corner lies at
/// `(i*stride, j*stride)` and fits entirely inside the image.
///
/// Corners are visited row-major; each patch owns a copy of its pixels.
/// An image smaller than the window is an error, not an empty list.
pub fn extract_patches(image: &GrayImage, window: usize, stride: usize) -> Result<Vec<GrayImage>> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidParameter(
            "window and stride must be >= 1".into(),
        ));
    }
    if window > image.width() || window > image.height() {
        return Err(Error::ImageTooSmall(format!(
            "{}x{} image cannot host a {window}x{window} patch",
            image.width(),
            image.height()
        )));
    }
    let nx = (image.width() - window) / stride + 1;
    let ny = (image.height() - window) / stride + 1;
    let mut patches = Vec::with_capacity(nx * ny);
    for cy in 0..ny {
        for cx in 0..nx {
            let (x0, y0) = (cx * stride, cy * stride);
            let mut pixels = Vec::with_capacity(window * window);
            for y in y0..y0 + window {
                for x in x0..x0 + window {
                    pixels.push(image.get(x, y));
                }
            }
            patches.push(GrayImage::new(window, window, image.bit_depth(), pixels)?);
        }
    }
    Ok(patches)
}

/// Fraction of pixels satisfying the background predicate, in `[0, 1]`.
pub fn background_fraction<F>(patch: &GrayImage, background: F) -> f64
where
    F: Fn(u32) -> bool,
{
    let hits = patch.pixels().iter().filter(|&&p| background(p)).count();
    hits as f64 / patch.pixels().len() as f64
}

/// Splits a stack into `(slice_index, slice)` pairs in stored order.
pub fn decompose_volume(stack: &ImageStack) -> Result<Vec<(usize, GrayImage)>> {
    if stack.is_empty() {
        return Err(Error::EmptyInput(format!("stack `{}`", stack.stack_id())));
    }
    Ok(stack.slices().iter().cloned().enumerate().collect())
}

/// Ordinal encoding: the 0-based position of `value` in `ordering`.
pub fn encode_ordinal(value: &str, ordering: &[String]) -> Result<usize> {
    ordering
        .iter()
        .position(|c| c == value)
        .ok_or_else(|| Error::UnknownCategory {
            value: value.to_string(),
            domain: ordering.to_vec(),
        })
}

/// One-hot encoding over `domain`: exactly one component is 1, at the
/// value's position in domain order.
pub fn encode_onehot(value: &str, domain: &[String]) -> Result<Vec<f64>> {
    let pos = domain
        .iter()
        .position(|c| c == value)
        .ok_or_else(|| Error::UnknownCategory {
            value: value.to_string(),
            domain: domain.to_vec(),
        })?;
    let mut v = vec![0.0; domain.len()];
    v[pos] = 1.0;
    Ok(v)
}

/// Converts an RGB image to its saturation channel.
///
/// Per pixel, `S = (max - min) / max` over the RGB triple (0 when `max` is 0),
/// rescaled to `[0, 255]` and rounded to the nearest integer. Output is 8-bit.
pub fn saturation_channel(rgb: &RgbImage) -> GrayImage {
    let pixels = (0..rgb.height())
        .flat_map(|y| (0..rgb.width()).map(move |x| (x, y)))
        .map(|(x, y)| {
            let [r, g, b] = rgb.get(x, y);
            let max = r.max(g).max(b) as f64;
            let min = r.min(g).min(b) as f64;
            if max == 0.0 {
                0
            } else {
                (((max - min) / max) * 255.0).round() as u32
            }
        })
        .collect();
    GrayImage::new(rgb.width(), rgb.height(), 8, pixels)
        .expect("saturation output is always a valid 8-bit image")
}
