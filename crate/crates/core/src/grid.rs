//! Real-valued image containers.
//!
//! Layout is row-major with `(i, j) = (row, column)`; the row index runs
//! along `y` and the column index along `x`. Every spatial operator in the
//! crate follows this convention.

use crate::error::{Error, Result};

/// Default peak intensity for synthetic grids (8-bit convention).
pub const DEFAULT_RANGE_MAX: f64 = 255.0;

/// Smallest admissible side length: stencils need a one-pixel ring.
pub const MIN_SIDE: usize = 3;

/// A 2D grid of finite real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
    range_max: f64,
}

impl ImageGrid {
    /// Validating constructor.
    pub fn new(width: usize, height: usize, data: Vec<f64>, range_max: f64) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} is smaller than the {MIN_SIDE}x{MIN_SIDE} minimum"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite value at pixel ({}, {})",
                pos / width,
                pos % width
            )));
        }
        if !(range_max.is_finite() && range_max > 0.0) {
            return Err(Error::InvalidImage(format!(
                "range_max must be positive and finite, got {range_max}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
            range_max,
        })
    }

    /// Constant grid with the default 8-bit range.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], DEFAULT_RANGE_MAX)
    }

    /// Builds a grid from `f(row, col)` with the default 8-bit range.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self::new(width, height, data, DEFAULT_RANGE_MAX)
    }

    /// Skips validation. Callers guarantee the length; finiteness is checked
    /// where it matters (solver divergence guard).
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>, range_max: f64) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
            range_max,
        }
    }

    /// Same shape and range, new data.
    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        Self::from_raw(self.width, self.height, data, self.range_max)
    }

    /// Pointwise map preserving shape and range.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two equally sized grids.
    pub fn zip_map(&self, other: &ImageGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.with_data(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn range_max(&self) -> f64 {
        self.range_max
    }

    pub fn set_range_max(&mut self, range_max: f64) -> Result<()> {
        if !(range_max.is_finite() && range_max > 0.0) {
            return Err(Error::InvalidImage(format!(
                "range_max must be positive and finite, got {range_max}"
            )));
        }
        self.range_max = range_max;
        Ok(())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    /// Reads with replicate extension outside the grid.
    #[inline]
    pub fn get_clamped(&self, i: isize, j: isize) -> f64 {
        let i = i.clamp(0, self.height as isize - 1) as usize;
        let j = j.clamp(0, self.width as isize - 1) as usize;
        self.data[i * self.width + j]
    }

    /// Writes one pixel; the value must be finite.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidImage(format!(
                "non-finite value {value} at ({i}, {j})"
            )));
        }
        self.data[i * self.width + j] = value;
        Ok(())
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_same_shape(&self, other: &ImageGrid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sequential left-to-right sum (fixed reduction order).
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Values clamped to `[0, range_max]`.
    pub fn clamped(&self) -> Self {
        let hi = self.range_max;
        self.map(|v| v.clamp(0.0, hi))
    }

    /// Grid rotated 90 degrees counter-clockwise.
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut data = Vec::with_capacity(w * h);
        // new[r][c] = old[c][w-1-r], new dims h x w
        for r in 0..w {
            for c in 0..h {
                data.push(self.get(c, w - 1 - r));
            }
        }
        Self::from_raw(h, w, data, self.range_max)
    }
}

/// Three equally sized channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    r: ImageGrid,
    g: ImageGrid,
    b: ImageGrid,
}

impl ColorImage {
    pub fn new(r: ImageGrid, g: ImageGrid, b: ImageGrid) -> Result<Self> {
        merge_channels(r, g, b)
    }

    pub fn r(&self) -> &ImageGrid {
        &self.r
    }

    pub fn g(&self) -> &ImageGrid {
        &self.g
    }

    pub fn b(&self) -> &ImageGrid {
        &self.b
    }

    pub fn channels(&self) -> [&ImageGrid; 3] {
        [&self.r, &self.g, &self.b]
    }

    pub fn width(&self) -> usize {
        self.r.width()
    }

    pub fn height(&self) -> usize {
        self.r.height()
    }

    pub fn range_max(&self) -> f64 {
        self.r.range_max()
    }

    /// Gray image replicated into all three channels.
    pub fn from_gray(gray: &ImageGrid) -> Self {
        Self {
            r: gray.clone(),
            g: gray.clone(),
            b: gray.clone(),
        }
    }
}

/// Decomposes a color image into independent R, G, B grids.
pub fn split_channels(c: ColorImage) -> (ImageGrid, ImageGrid, ImageGrid) {
    (c.r, c.g, c.b)
}

/// Inverse of [`split_channels`].
pub fn merge_channels(r: ImageGrid, g: ImageGrid, b: ImageGrid) -> Result<ColorImage> {
    r.check_same_shape(&g)?;
    r.check_same_shape(&b)?;
    if r.range_max() != g.range_max() || r.range_max() != b.range_max() {
        return Err(Error::DimensionMismatch(format!(
            "channel ranges differ: {} / {} / {}",
            r.range_max(),
            g.range_max(),
            b.range_max()
        )));
    }
    Ok(ColorImage { r, g, b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_and_nonfinite() {
        assert!(ImageGrid::filled(2, 5, 1.0).is_err());
        assert!(ImageGrid::new(3, 3, vec![0.0; 8], 255.0).is_err());
        let mut d = vec![1.0; 9];
        d[4] = f64::NAN;
        assert!(ImageGrid::new(3, 3, d, 255.0).is_err());
        assert!(ImageGrid::new(3, 3, vec![1.0; 9], 0.0).is_err());
    }

    #[test]
    fn row_major_indexing() {
        let g = ImageGrid::from_fn(4, 3, |i, j| (10 * i + j) as f64).unwrap();
        assert_eq!(g.get(2, 3), 23.0);
        assert_eq!(g.data()[2 * 4 + 3], 23.0);
        assert_eq!(g.get_clamped(-1, 5), g.get(0, 3));
    }

    #[test]
    fn split_merge_inverse() {
        let r = ImageGrid::from_fn(3, 3, |i, j| (i + j) as f64).unwrap();
        let g = ImageGrid::filled(3, 3, 7.0).unwrap();
        let b = ImageGrid::from_fn(3, 3, |i, _| i as f64).unwrap();
        let c = merge_channels(r.clone(), g.clone(), b.clone()).unwrap();
        let (r2, g2, b2) = split_channels(c.clone());
        assert_eq!((&r2, &g2, &b2), (&r, &g, &b));
        assert_eq!(merge_channels(r2, g2, b2).unwrap(), c);
    }

    #[test]
    fn split_gives_independent_grids() {
        let gray = ImageGrid::filled(3, 3, 5.0).unwrap();
        let (mut r, g, b) = split_channels(ColorImage::from_gray(&gray));
        assert_eq!(r, g);
        assert_eq!(g, b);
        r.set(1, 1, 99.0).unwrap();
        assert_eq!(g.get(1, 1), 5.0);
        assert_eq!(b.get(1, 1), 5.0);
    }

    #[test]
    fn merge_rejects_mismatch() {
        let a = ImageGrid::filled(3, 3, 0.0).unwrap();
        let b = ImageGrid::filled(4, 3, 0.0).unwrap();
        assert!(matches!(
            merge_channels(a.clone(), b, a.clone()),
            Err(Error::DimensionMismatch(_))
        ));
        let z = merge_channels(a.clone(), a.clone(), a).unwrap();
        assert!(z.channels().iter().all(|c| c.max() == 0.0));
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let g = ImageGrid::from_fn(5, 3, |i, j| (i * 7 + j * 3) as f64).unwrap();
        let r = g.rotate90();
        assert_eq!((r.width(), r.height()), (3, 5));
        assert_eq!(r.rotate90().rotate90().rotate90(), g);
    }
}
