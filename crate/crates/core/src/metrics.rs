//! Full-reference (PSNR, SSIM, MSSIM) and no-reference (speckle index)
//! quality measures.

use crate::error::{Error, Result};
use crate::grid::{ColorImage, ImageGrid};
use crate::smoothing::{convolve_separable, GaussianKernel};

/// Local-statistics window and stabilizing constants for SSIM.
///
/// Local moments are Gaussian-weighted over a `window_size` square with
/// replicate padding, so the SSIM map has the image's shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    pub window_size: usize,
    pub window_sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub dynamic_range: f64,
}

impl SsimConfig {
    /// 11x11 window, sigma 1.5, `c1 = (0.01 D)^2`, `c2 = (0.03 D)^2`.
    pub fn for_range(dynamic_range: f64) -> Self {
        Self {
            window_size: 11,
            window_sigma: 1.5,
            c1: (0.01 * dynamic_range).powi(2),
            c2: (0.03 * dynamic_range).powi(2),
            dynamic_range,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 || self.window_size % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "SSIM window size must be odd, got {}",
                self.window_size
            )));
        }
        for (name, v) in [
            ("window_sigma", self.window_sigma),
            ("c1", self.c1),
            ("c2", self.c2),
            ("dynamic_range", self.dynamic_range),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "SSIM {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self::for_range(255.0)
    }
}

/// Mean squared error.
pub fn mse(reference: &ImageGrid, test: &ImageGrid) -> Result<f64> {
    reference.check_same_shape(test)?;
    let total: f64 = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / reference.len() as f64)
}

/// PSNR in dB with an explicit peak; `+inf` when the images are equal.
pub fn psnr_with_peak(reference: &ImageGrid, test: &ImageGrid, peak: f64) -> Result<f64> {
    let err = mse(reference, test)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / err).log10())
}

/// PSNR in dB using `max(reference)` as the peak.
pub fn psnr(reference: &ImageGrid, test: &ImageGrid) -> Result<f64> {
    psnr_with_peak(reference, test, reference.max())
}

/// Per-pixel SSIM.
pub fn ssim_map(reference: &ImageGrid, test: &ImageGrid, cfg: &SsimConfig) -> Result<ImageGrid> {
    reference.check_same_shape(test)?;
    cfg.validate()?;
    let kernel = GaussianKernel::with_radius(cfg.window_sigma, cfg.window_size / 2)?;
    let blur = |g: &ImageGrid| convolve_separable(g, &kernel);

    let mu_x = blur(reference);
    let mu_y = blur(test);
    let xx = blur(&reference.map(|v| v * v));
    let yy = blur(&test.map(|v| v * v));
    let xy = blur(&reference.zip_map(test, |a, b| a * b)?);

    let n = reference.len();
    let mut out = Vec::with_capacity(n);
    for p in 0..n {
        let (mx, my) = (mu_x.data()[p], mu_y.data()[p]);
        let var_x = xx.data()[p] - mx * mx;
        let var_y = yy.data()[p] - my * my;
        let cov = xy.data()[p] - mx * my;
        let num = (2.0 * mx * my + cfg.c1) * (2.0 * cov + cfg.c2);
        let den = (mx * mx + my * my + cfg.c1) * (var_x + var_y + cfg.c2);
        out.push(num / den);
    }
    Ok(reference.with_data(out))
}

/// Mean of the SSIM map.
pub fn mssim(reference: &ImageGrid, test: &ImageGrid, cfg: &SsimConfig) -> Result<f64> {
    Ok(ssim_map(reference, test, cfg)?.mean())
}

/// `std / mean` over the grid (population standard deviation).
pub fn speckle_index(image: &ImageGrid) -> Result<f64> {
    speckle_index_of(image.data())
}

fn speckle_index_of(values: &[f64]) -> Result<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(Error::InvalidImage(format!(
            "speckle index needs a positive mean, got {mean}"
        )));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

/// Joint PSNR over all three channels with an explicit peak.
pub fn psnr_color_with_peak(reference: &ColorImage, test: &ColorImage, peak: f64) -> Result<f64> {
    let mut total = 0.0;
    for (a, b) in reference.channels().into_iter().zip(test.channels()) {
        total += mse(a, b)?;
    }
    let err = total / 3.0;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / err).log10())
}

/// Joint PSNR with the peak taken over all reference channels.
pub fn psnr_color(reference: &ColorImage, test: &ColorImage) -> Result<f64> {
    let peak = reference
        .channels()
        .iter()
        .map(|c| c.max())
        .fold(f64::NEG_INFINITY, f64::max);
    psnr_color_with_peak(reference, test, peak)
}

/// Mean of the per-channel MSSIM values.
pub fn mssim_color(reference: &ColorImage, test: &ColorImage, cfg: &SsimConfig) -> Result<f64> {
    let mut total = 0.0;
    for (a, b) in reference.channels().into_iter().zip(test.channels()) {
        total += mssim(a, b, cfg)?;
    }
    Ok(total / 3.0)
}

/// Speckle index over every sample of every channel.
pub fn speckle_index_color(image: &ColorImage) -> Result<f64> {
    let all: Vec<f64> = image
        .channels()
        .iter()
        .flat_map(|c| c.data().iter().copied())
        .collect();
    speckle_index_of(&all)
}
