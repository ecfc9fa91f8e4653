//! Gaussian pre-smoothing used inside every diffusion coefficient.

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Sampled, normalized 1D Gaussian of `2 * radius + 1` taps.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    weights: Vec<f64>,
}

/// Unnormalized profile `exp(-x^2 / (2 sigma^2))`.
pub fn gaussian_profile(sigma: f64, x: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp()
}

impl GaussianKernel {
    /// Radius `ceil(4 sigma)`.
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Self::with_radius(sigma, (4.0 * sigma).ceil() as usize)
    }

    /// Explicit support, e.g. the 11-tap SSIM window.
    pub fn with_radius(sigma: f64, radius: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let r = radius as isize;
        let raw: Vec<f64> = (-r..=r).map(|x| gaussian_profile(sigma, x as f64)).collect();
        let total: f64 = raw.iter().sum();
        Ok(Self {
            sigma,
            radius,
            weights: raw.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// All taps, offset `-radius` first.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at signed offset from the center.
    pub fn weight(&self, offset: isize) -> f64 {
        self.weights[(offset + self.radius as isize) as usize]
    }
}

pub fn gaussian_kernel(sigma: f64) -> Result<GaussianKernel> {
    GaussianKernel::new(sigma)
}

/// Separable convolution (rows, then columns) with replicate extension.
pub fn convolve_separable(image: &ImageGrid, kernel: &GaussianKernel) -> ImageGrid {
    let (w, h) = (image.width(), image.height());
    let r = kernel.radius as isize;
    let taps = kernel.weights();
    let src = image.data();

    let mut horiz = vec![0.0; w * h];
    for i in 0..h {
        let row = &src[i * w..(i + 1) * w];
        for j in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                let jj = (j as isize + t as isize - r).clamp(0, w as isize - 1) as usize;
                acc += k * row[jj];
            }
            horiz[i * w + j] = acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for i in 0..h {
        for (t, &k) in taps.iter().enumerate() {
            let ii = (i as isize + t as isize - r).clamp(0, h as isize - 1) as usize;
            let src_row = &horiz[ii * w..(ii + 1) * w];
            let dst_row = &mut out[i * w..(i + 1) * w];
            for (d, &s) in dst_row.iter_mut().zip(src_row) {
                *d += k * s;
            }
        }
    }
    image.with_data(out)
}

/// `I_xi = G_sigma * I`.
pub fn smooth(image: &ImageGrid, sigma: f64) -> Result<ImageGrid> {
    Ok(convolve_separable(image, &GaussianKernel::new(sigma)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::SpeckleRng;

    fn random_grid(w: usize, h: usize, seed: u64) -> ImageGrid {
        let mut rng = SpeckleRng::new(seed);
        ImageGrid::from_fn(w, h, |_, _| 255.0 * rng.next_open01()).unwrap()
    }

    /// Direct 2D convolution with clamped indices.
    fn brute_force(image: &ImageGrid, k: &GaussianKernel) -> ImageGrid {
        let r = k.radius() as isize;
        ImageGrid::from_fn(image.width(), image.height(), |i, j| {
            let mut acc = 0.0;
            for di in -r..=r {
                for dj in -r..=r {
                    acc += k.weight(di)
                        * k.weight(dj)
                        * image.get_clamped(i as isize + di, j as isize + dj);
                }
            }
            acc
        })
        .unwrap()
    }

    #[test]
    fn kernel_shape() {
        for sigma in [0.5, 1.0, 2.0, 5.0] {
            let k = gaussian_kernel(sigma).unwrap();
            assert_eq!(k.radius(), (4.0 * sigma).ceil() as usize);
            assert!((k.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for o in 0..=k.radius() as isize {
                assert_eq!(k.weight(o), k.weight(-o));
                assert!(k.weight(0) >= k.weight(o));
            }
        }
        let k = gaussian_kernel(1.0).unwrap();
        assert!((k.weight(1) / k.weight(0) - (-0.5f64).exp()).abs() <= 1e-9);
        assert!(gaussian_kernel(0.0).is_err());
        assert!(gaussian_kernel(-1.0).is_err());
    }

    #[test]
    fn constant_is_fixed_point() {
        let g = ImageGrid::filled(9, 7, 77.0).unwrap();
        let s = smooth(&g, 1.3).unwrap();
        assert!(s.data().iter().all(|v| (v - 77.0).abs() <= 1e-12));
    }

    #[test]
    fn impulse_center_is_product_of_center_taps() {
        let g = ImageGrid::from_fn(9, 9, |i, j| if i == 4 && j == 4 { 1.0 } else { 0.0 }).unwrap();
        let k = gaussian_kernel(1.0).unwrap();
        let s = convolve_separable(&g, &k);
        assert!((s.get(4, 4) - k.weight(0) * k.weight(0)).abs() <= 1e-15);
        let bf = brute_force(&g, &k);
        assert!((s.get(4, 4) - bf.get(4, 4)).abs() <= 1e-15);
    }

    #[test]
    fn matches_brute_force_2d() {
        for seed in 0..5 {
            let g = random_grid(16, 16, seed);
            let k = gaussian_kernel(1.5).unwrap();
            let a = convolve_separable(&g, &k);
            let b = brute_force(&g, &k);
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn max_principle() {
        let g = random_grid(20, 13, 11);
        let s = smooth(&g, 2.0).unwrap();
        let (lo, hi) = (g.min(), g.max());
        assert!(s.data().iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }
}
