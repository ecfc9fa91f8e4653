//! Discrete spatial operators under zero-flux (Neumann) boundaries.
//!
//! Rows run along `y` (spacing `dy`), columns along `x` (spacing `dx`).
//! The Neumann closure is a replicate ghost ring: a ghost value equals its
//! boundary neighbour, so every difference across the border vanishes. In
//! flux form this is the same as forcing boundary fluxes to zero, which
//! makes the grid sum of [`fd2_div`] and [`laplacian`] telescope to zero.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpacing {
    dx: f64,
    dy: f64,
}

impl GridSpacing {
    pub fn new(dx: f64, dy: f64) -> Result<Self> {
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got dx={dx} dy={dy}"
            )));
        }
        Ok(Self { dx, dy })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }
}

impl Default for GridSpacing {
    fn default() -> Self {
        Self { dx: 1.0, dy: 1.0 }
    }
}

/// Fills an output grid row by row in parallel.
fn par_rows(like: &ImageGrid, f: impl Fn(usize, &mut [f64]) + Sync) -> ImageGrid {
    let w = like.width();
    let mut out = vec![0.0; like.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(i, row)| f(i, row));
    like.with_data(out)
}

/// 5-point Laplacian with replicate boundary.
pub fn laplacian(image: &ImageGrid, h: GridSpacing) -> ImageGrid {
    let (w, ht) = (image.width(), image.height());
    let d = image.data();
    let (ix2, iy2) = (1.0 / (h.dx * h.dx), 1.0 / (h.dy * h.dy));
    par_rows(image, |i, row| {
        let up = if i > 0 { i - 1 } else { i };
        let down = if i + 1 < ht { i + 1 } else { i };
        for (j, out) in row.iter_mut().enumerate() {
            let left = if j > 0 { j - 1 } else { j };
            let right = if j + 1 < w { j + 1 } else { j };
            let c = d[i * w + j];
            let xx = d[i * w + right] - 2.0 * c + d[i * w + left];
            let yy = d[down * w + j] - 2.0 * c + d[up * w + j];
            *out = xx * ix2 + yy * iy2;
        }
    })
}

/// Conservative divergence `div(C grad I)` with half-point averaged
/// coefficients and zero boundary flux.
pub fn fd2_div(coeff: &ImageGrid, image: &ImageGrid, h: GridSpacing) -> Result<ImageGrid> {
    coeff.check_same_shape(image)?;
    let (w, ht) = (image.width(), image.height());
    let (c, u) = (coeff.data(), image.data());
    let (ix2, iy2) = (1.0 / (h.dx * h.dx), 1.0 / (h.dy * h.dy));
    Ok(par_rows(image, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let p = i * w + j;
            let flux = |q: usize| 0.5 * (c[q] + c[p]) * (u[q] - u[p]);
            let east = if j + 1 < w { flux(p + 1) } else { 0.0 };
            let west = if j > 0 { flux(p - 1) } else { 0.0 };
            let south = if i + 1 < ht { flux(p + w) } else { 0.0 };
            let north = if i > 0 { flux(p - w) } else { 0.0 };
            // (C_{+1/2}(u_{+1}-u) - C_{-1/2}(u-u_{-1})) = flux(+1) + flux(-1)
            *out = (east + west) * ix2 + (south + north) * iy2;
        }
    }))
}

/// Fourth-order operator `Lap(C * Lap(I))`, both Laplacians with the
/// replicate closure so that `dI/dn = 0` and `d(Lap I)/dn = 0`.
pub fn fd4(coeff: &ImageGrid, image: &ImageGrid, h: GridSpacing) -> Result<ImageGrid> {
    coeff.check_same_shape(image)?;
    let inner = laplacian(image, h);
    let b = inner.zip_map(coeff, |l, c| c * l)?;
    Ok(laplacian(&b, h))
}

/// Fidelity source `lambda * ((I - f) / (I + eps))^2`.
pub fn fidelity_source(
    image: &ImageGrid,
    observed: &ImageGrid,
    lambda: f64,
    eps: f64,
) -> Result<ImageGrid> {
    if lambda == 0.0 {
        image.check_same_shape(observed)?;
        return Ok(image.map(|_| 0.0));
    }
    image.zip_map(observed, |u, f| {
        let r = (u - f) / (u + eps);
        lambda * r * r
    })
}

/// Fidelity source with the denominator raised to `max(I + eps, |I - f|)`.
///
/// Identical to [`fidelity_source`] wherever `I + eps >= |I - f|` (roughly
/// `I >= f / 2`); elsewhere the squared ratio saturates at one, so the source
/// never exceeds `lambda`, including at and below zero.
pub fn fidelity_source_saturated(
    image: &ImageGrid,
    observed: &ImageGrid,
    lambda: f64,
    eps: f64,
) -> Result<ImageGrid> {
    if lambda == 0.0 {
        image.check_same_shape(observed)?;
        return Ok(image.map(|_| 0.0));
    }
    image.zip_map(observed, |u, f| {
        let diff = u - f;
        let den = (u + eps).max(diff.abs());
        if den == 0.0 {
            return 0.0;
        }
        let r = diff / den;
        lambda * r * r
    })
}

/// `|grad I|` from central differences; at the border the replicate ghost
/// makes the outward difference one-sided.
pub fn gradient_magnitude(image: &ImageGrid, h: GridSpacing) -> ImageGrid {
    let (w, ht) = (image.width(), image.height());
    let d = image.data();
    par_rows(image, |i, row| {
        let up = if i > 0 { i - 1 } else { i };
        let down = if i + 1 < ht { i + 1 } else { i };
        for (j, out) in row.iter_mut().enumerate() {
            let left = if j > 0 { j - 1 } else { j };
            let right = if j + 1 < w { j + 1 } else { j };
            let gx = (d[i * w + right] - d[i * w + left]) / (2.0 * h.dx);
            let gy = (d[down * w + j] - d[up * w + j]) / (2.0 * h.dy);
            *out = (gx * gx + gy * gy).sqrt();
        }
    })
}
