//! Adaptive diffusion coefficients.
//!
//! * `C1(I_xi) = 2 |I_xi|^a / (|I_xi|^a + M^a)`, `M = max |I_xi|` (gray-level indicator)
//! * `C2(|Lap I_xi|) = 1 / (1 + (|Lap I_xi| / k)^2)` (Laplacian indicator)
//! * `C3(|grad I_xi|) = 1 / (1 + (|grad I_xi| / k)^2)` (gradient indicator)
//!
//! [`coeff_field`] combines them per model.

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::model::Model;
use crate::smoothing::smooth;
use crate::stencils::{gradient_magnitude, laplacian, GridSpacing};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffParams {
    pub alpha: f64,
    pub k: f64,
    pub eps_guard: f64,
}

impl CoeffParams {
    pub fn new(alpha: f64, k: f64) -> Result<Self> {
        let p = Self {
            alpha,
            k,
            eps_guard: 1e-12,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("k", self.k), ("eps_guard", self.eps_guard)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Gray-level indicator. An all-zero input yields all zeros.
pub fn c1_gray(smoothed: &ImageGrid, alpha: f64) -> ImageGrid {
    c1_gray_guarded(smoothed, alpha, 1e-12)
}

fn c1_gray_guarded(smoothed: &ImageGrid, alpha: f64, eps_guard: f64) -> ImageGrid {
    let m = smoothed.data().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 {
        return smoothed.map(|_| 0.0);
    }
    let ma = m.powf(alpha);
    smoothed.map(|v| {
        let va = v.abs().powf(alpha);
        let den = va + ma;
        2.0 * va / if den > 0.0 { den } else { eps_guard }
    })
}

/// Edge-stopping function `1 / (1 + (x / k)^2)`.
#[inline]
pub fn edge_stop(x: f64, k: f64) -> f64 {
    let r = x / k;
    1.0 / (1.0 + r * r)
}

/// Laplacian indicator from a Laplacian field.
pub fn c2_laplacian(lap_smoothed: &ImageGrid, k: f64) -> ImageGrid {
    lap_smoothed.map(|v| edge_stop(v.abs(), k))
}

/// Gradient indicator from a gradient-magnitude field.
pub fn c3_gradient(grad_mag_smoothed: &ImageGrid, k: f64) -> ImageGrid {
    grad_mag_smoothed.map(|v| edge_stop(v.abs(), k))
}

/// Coefficient fields driving one model step. `None` means the model has
/// no term of that order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFields {
    /// Multiplies `grad I` in the divergence term.
    pub second_order: Option<ImageGrid>,
    /// Multiplies `Lap I` in the fourth-order term.
    pub fourth_order: Option<ImageGrid>,
}

/// Fields from an already smoothed image `I_xi`.
pub fn coeff_field_from_smoothed(
    model: Model,
    smoothed: &ImageGrid,
    params: &CoeffParams,
    spacing: GridSpacing,
) -> Result<CoefficientFields> {
    params.validate()?;
    let c1 = || c1_gray_guarded(smoothed, params.alpha, params.eps_guard);
    let c2 = || c2_laplacian(&laplacian(smoothed, spacing), params.k);
    let c3 = || c3_gradient(&gradient_magnitude(smoothed, spacing), params.k);
    let product = |a: ImageGrid, b: ImageGrid| a.zip_map(&b, |x, y| x * y);

    Ok(match model {
        Model::Tdm => CoefficientFields {
            second_order: Some(product(c1(), c3())?),
            fourth_order: None,
        },
        Model::Tdfm => CoefficientFields {
            second_order: None,
            fourth_order: Some(product(c1(), c2())?),
        },
        Model::Model1 => CoefficientFields {
            second_order: Some(product(c1(), c3())?),
            fourth_order: Some(c2()),
        },
        Model::Model2 => {
            let g = c1();
            CoefficientFields {
                second_order: Some(product(g.clone(), c3())?),
                fourth_order: Some(product(g, c2())?),
            }
        }
    })
}

/// Smooths `current` with `sigma`, then builds the model's fields.
pub fn coeff_field(
    model: Model,
    current: &ImageGrid,
    params: &CoeffParams,
    sigma: f64,
    spacing: GridSpacing,
) -> Result<CoefficientFields> {
    let smoothed = smooth(current, sigma)?;
    coeff_field_from_smoothed(model, &smoothed, params, spacing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::SpeckleRng;

    fn unit() -> GridSpacing {
        GridSpacing::default()
    }

    #[test]
    fn c1_values() {
        let c = ImageGrid::filled(4, 4, 80.0).unwrap();
        assert!(c1_gray(&c, 1.3).data().iter().all(|&v| (v - 1.0).abs() < 1e-15));

        let mut g = ImageGrid::filled(3, 3, 50.0).unwrap();
        g.set(0, 0, 100.0).unwrap();
        g.set(2, 2, 0.0).unwrap();
        let c = c1_gray(&g, 1.0);
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(2, 2), 0.0);
        assert!((c.get(1, 1) - 2.0 / 3.0).abs() < 1e-15);

        let z = ImageGrid::filled(3, 3, 0.0).unwrap();
        assert!(c1_gray(&z, 2.0).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn c1_is_scale_invariant() {
        let mut rng = SpeckleRng::new(1);
        let g = ImageGrid::from_fn(10, 10, |_, _| 255.0 * rng.next_open01()).unwrap();
        let a = c1_gray(&g, 1.7);
        let b = c1_gray(&g.map(|v| 3.7 * v), 1.7);
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-12);
            assert!((0.0..2.0).contains(x));
        }
    }

    #[test]
    fn c2_c3_values() {
        let k = 4.0;
        let g = ImageGrid::new(3, 3, vec![0.0, 4.0, -4.0, 8.0, -8.0, 1.0, 2.0, 3.0, 100.0], 255.0)
            .unwrap();
        for c in [c2_laplacian(&g, k), c3_gradient(&g, k)] {
            assert_eq!(c.get(0, 0), 1.0);
            assert!((c.get(0, 1) - 0.5).abs() < 1e-15);
            assert_eq!(c.get(0, 1), c.get(0, 2));
            assert_eq!(c.get(1, 0), c.get(1, 1));
            assert!(c.get(1, 0) < c.get(0, 1));
            assert!(c.data().iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn edge_stop_is_monotone() {
        let mut rng = SpeckleRng::new(2);
        for _ in 0..1000 {
            let a = 50.0 * rng.next_open01();
            let b = 50.0 * rng.next_open01();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            assert!(edge_stop(hi, 3.0) <= edge_stop(lo, 3.0));
            assert_eq!(edge_stop(a, 3.0), edge_stop(-a, 3.0));
        }
    }

    #[test]
    fn constant_image_gives_unit_fields() {
        let c = ImageGrid::filled(8, 8, 120.0).unwrap();
        let p = CoeffParams::new(1.0, 2.0).unwrap();
        for m in Model::ALL {
            let f = coeff_field(m, &c, &p, 1.0, unit()).unwrap();
            for field in [f.second_order, f.fourth_order].into_iter().flatten() {
                assert!(field.data().iter().all(|&v| (v - 1.0).abs() < 1e-12), "{m}");
            }
        }
    }

    #[test]
    fn field_presence_per_model() {
        let c = ImageGrid::filled(5, 5, 1.0).unwrap();
        let p = CoeffParams::new(1.0, 2.0).unwrap();
        let has = |m| {
            let f = coeff_field(m, &c, &p, 1.0, unit()).unwrap();
            (f.second_order.is_some(), f.fourth_order.is_some())
        };
        assert_eq!(has(Model::Tdm), (true, false));
        assert_eq!(has(Model::Tdfm), (false, true));
        assert_eq!(has(Model::Model1), (true, true));
        assert_eq!(has(Model::Model2), (true, true));
    }

    #[test]
    fn model1_on_ramp() {
        // Column ramp: zero Laplacian in the interior, constant gradient.
        let ramp = ImageGrid::from_fn(12, 12, |_, j| 10.0 + 5.0 * j as f64).unwrap();
        let p = CoeffParams::new(1.0, 2.0).unwrap();
        let f = coeff_field_from_smoothed(Model::Model1, &ramp, &p, unit()).unwrap();
        let (second, fourth) = (f.second_order.unwrap(), f.fourth_order.unwrap());
        for i in 0..12 {
            for j in 1..11 {
                assert!(second.get(i, j) < 1.0);
                assert_eq!(fourth.get(i, j), 1.0);
            }
        }
    }

    #[test]
    fn tdfm_matches_scalar_oracle() {
        let mut rng = SpeckleRng::new(9);
        let g = ImageGrid::from_fn(9, 7, |_, _| 1.0 + 254.0 * rng.next_open01()).unwrap();
        let p = CoeffParams::new(1.5, 6.0).unwrap();
        let f = coeff_field_from_smoothed(Model::Tdfm, &g, &p, unit()).unwrap();
        let field = f.fourth_order.unwrap();
        let m = g.max();
        for i in 0..7 {
            for j in 0..9 {
                let ii = i as isize;
                let jj = j as isize;
                let lap = g.get_clamped(ii + 1, jj)
                    + g.get_clamped(ii - 1, jj)
                    + g.get_clamped(ii, jj + 1)
                    + g.get_clamped(ii, jj - 1)
                    - 4.0 * g.get(i, j);
                let v = g.get(i, j);
                let c1 = 2.0 * v.powf(1.5) / (v.powf(1.5) + m.powf(1.5));
                let c2 = 1.0 / (1.0 + (lap.abs() / 6.0).powi(2));
                assert!((field.get(i, j) - c1 * c2).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(CoeffParams::new(0.0, 1.0).is_err());
        assert!(CoeffParams::new(1.0, -1.0).is_err());
    }
}
