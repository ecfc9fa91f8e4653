//! Published parameter rows for the four test images and the two
//! speckle-index scenes. `beta` in the source tables is the edge threshold `k`.

use crate::error::{Error, Result};
use crate::model::Model;
use crate::solver::SolverParams;

/// The four noise levels used throughout the tables.
pub const LOOKS: [u32; 4] = [1, 3, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetRow {
    pub image: &'static str,
    pub model: Model,
    pub look: u32,
    pub alpha: f64,
    pub k: f64,
    pub gamma: f64,
    pub lambda: f64,
}

/// Per-look columns `[L=1, L=3, L=5, L=10]` for one image and model.
struct Column {
    image: &'static str,
    model: Model,
    alpha: [f64; 4],
    k: f64,
    gamma: [f64; 4],
    lambda: [f64; 4],
}

const fn col(
    image: &'static str,
    model: Model,
    alpha: [f64; 4],
    k: f64,
    gamma: [f64; 4],
    lambda: [f64; 4],
) -> Column {
    Column { image, model, alpha, k, gamma, lambda }
}

const ONE: [f64; 4] = [1.0; 4];
const NONE: [f64; 4] = [0.0; 4];

#[rustfmt::skip]
const COLUMNS: &[Column] = &[
    // Grayscale.
    col("parrots", Model::Tdm,    ONE,                  2.0,  [5.0; 4],             NONE),
    col("parrots", Model::Tdfm,   ONE,                  3.0,  [5.0; 4],             [0.05, 0.1, 0.1, 0.2]),
    col("parrots", Model::Model1, [1.0, 1.0, 2.0, 1.0], 2.0,  [2.0, 4.0, 4.0, 4.0], [0.04, 0.07, 0.045, 0.1]),
    col("parrots", Model::Model2, [1.0, 1.0, 2.0, 3.0], 10.0, [1.0, 1.0, 1.0, 8.0], [0.1, 0.1, 0.5, 0.1]),
    col("texture", Model::Tdm,    ONE,                  2.0,  [5.0; 4],             NONE),
    col("texture", Model::Tdfm,   [0.4, 1.0, 0.5, 0.5], 3.0,  [4.0; 4],             [0.03, 0.03, 0.03, 0.05]),
    col("texture", Model::Model1, [1.0, 2.0, 0.2, 4.0], 2.0,  [2.0, 2.0, 1.0, 2.0], [0.03, 0.03, 0.06, 0.035]),
    col("texture", Model::Model2, [2.0, 2.0, 2.0, 0.1], 10.0, [1.0, 1.0, 2.0, 2.0], [0.05; 4]),
    // Color.
    col("caps",    Model::Tdm,    [3.0, 1.0, 2.0, 1.5], 2.0,  [8.0, 8.0, 5.0, 5.0], NONE),
    col("caps",    Model::Tdfm,   ONE,                  3.0,  [5.0; 4],             [0.5; 4]),
    col("caps",    Model::Model1, ONE,                  2.0,  [2.0, 1.0, 1.0, 1.0], [0.08, 0.01, 0.01, 0.01]),
    col("caps",    Model::Model2, [1.0, 1.0, 2.0, 3.0], 10.0, [8.0; 4],             [0.08, 0.1, 0.1, 0.1]),
    col("baboon",  Model::Tdm,    [2.0, 2.5, 1.1, 1.2], 2.0,  [9.0, 5.0, 5.0, 5.0], NONE),
    col("baboon",  Model::Tdfm,   [1.0, 1.1, 1.2, 1.2], 3.0,  [5.0; 4],             [0.1; 4]),
    col("baboon",  Model::Model1, ONE,                  2.0,  [2.0, 2.0, 1.0, 2.0], [0.1, 0.2, 0.2, 0.2]),
    col("baboon",  Model::Model2, ONE,                  10.0, [5.0; 4],             [0.1, 0.5, 0.5, 0.7]),
];

/// Preset image names in table order.
pub const IMAGES: [&str; 4] = ["parrots", "texture", "caps", "baboon"];

/// Every row of the gray and color tables.
pub fn all_rows() -> Vec<PresetRow> {
    let mut rows = Vec::with_capacity(COLUMNS.len() * LOOKS.len());
    for c in COLUMNS {
        for (i, &look) in LOOKS.iter().enumerate() {
            rows.push(PresetRow {
                image: c.image,
                model: c.model,
                look,
                alpha: c.alpha[i],
                k: c.k,
                gamma: c.gamma[i],
                lambda: c.lambda[i],
            });
        }
    }
    rows
}

/// Looks up the row for `image` (case-insensitive), `model` and `look`.
pub fn lookup(image: &str, model: Model, look: u32) -> Result<PresetRow> {
    let key = image.trim().to_ascii_lowercase();
    let slot = LOOKS.iter().position(|&l| l == look).ok_or_else(|| {
        Error::InvalidParameter(format!("no preset for look {look}; tables cover 1, 3, 5, 10"))
    })?;
    let c = COLUMNS
        .iter()
        .find(|c| c.image == key && c.model == model)
        .ok_or_else(|| Error::InvalidParameter(format!("no preset for image {image:?}")))?;
    Ok(PresetRow {
        image: c.image,
        model,
        look,
        alpha: c.alpha[slot],
        k: c.k,
        gamma: c.gamma[slot],
        lambda: c.lambda[slot],
    })
}

impl PresetRow {
    /// Solver parameters with this row's `alpha`, `k`, `gamma`, `lambda`
    /// and defaults elsewhere.
    pub fn params(&self) -> SolverParams {
        SolverParams {
            alpha: self.alpha,
            k: self.k,
            gamma: self.gamma,
            lambda: self.lambda,
            ..SolverParams::for_model(self.model)
        }
    }
}

/// Rows of the speckle-index study on real SAR and ultrasound scenes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeckleIndexRow {
    pub image: &'static str,
    pub model: Model,
    pub gamma: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub k: f64,
    pub noisy_si: f64,
    pub restored_si: f64,
}

#[rustfmt::skip]
pub const SPECKLE_INDEX_ROWS: [SpeckleIndexRow; 4] = [
    SpeckleIndexRow { image: "sar", model: Model::Model1, gamma: 5.0, alpha: 1.0, lambda: 0.001, k: 2.0, noisy_si: 1.02, restored_si: 0.2210 },
    SpeckleIndexRow { image: "sar", model: Model::Model2, gamma: 5.0, alpha: 1.0, lambda: 0.0001, k: 10.0, noisy_si: 1.02, restored_si: 0.2467 },
    SpeckleIndexRow { image: "ultrasound", model: Model::Model1, gamma: 2.0, alpha: 0.1, lambda: 0.001, k: 2.0, noisy_si: 0.5166, restored_si: 0.4561 },
    SpeckleIndexRow { image: "ultrasound", model: Model::Model2, gamma: 5.0, alpha: 0.1, lambda: 0.0001, k: 10.0, noisy_si: 0.5166, restored_si: 0.4696 },
];

impl SpeckleIndexRow {
    pub fn params(&self) -> SolverParams {
        SolverParams {
            alpha: self.alpha,
            k: self.k,
            gamma: self.gamma,
            lambda: self.lambda,
            ..SolverParams::for_model(self.model)
        }
    }
}

/// Speckle-index row for `image` ("sar" or "ultrasound") and `model`.
pub fn speckle_index_row(image: &str, model: Model) -> Result<SpeckleIndexRow> {
    let key = image.trim().to_ascii_lowercase();
    SPECKLE_INDEX_ROWS
        .iter()
        .find(|r| r.image == key && r.model == model)
        .copied()
        .ok_or_else(|| {
            Error::InvalidParameter(format!("no speckle-index preset for {image:?} / {model}"))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        let rows = all_rows();
        assert_eq!(rows.len(), 4 * 4 * 4);
        for img in IMAGES {
            for m in Model::ALL {
                for l in LOOKS {
                    assert_eq!(rows.iter().filter(|r| r.image == img && r.model == m && r.look == l).count(), 1);
                }
            }
        }
        assert!(rows.iter().filter(|r| r.model == Model::Tdm).all(|r| r.lambda == 0.0));
    }

    #[test]
    fn spot_values() {
        let r = lookup("Parrots", Model::Model1, 3).unwrap();
        assert_eq!((r.alpha, r.k, r.gamma, r.lambda), (1.0, 2.0, 4.0, 0.07));
        let r = lookup("texture", Model::Model2, 10).unwrap();
        assert_eq!((r.alpha, r.k, r.gamma, r.lambda), (0.1, 10.0, 2.0, 0.05));
        let r = lookup("baboon", Model::Tdm, 1).unwrap();
        assert_eq!((r.alpha, r.k, r.gamma, r.lambda), (2.0, 2.0, 9.0, 0.0));
        let r = lookup("caps", Model::Model1, 1).unwrap();
        assert_eq!((r.alpha, r.gamma, r.lambda), (1.0, 2.0, 0.08));
        assert!(lookup("caps", Model::Tdm, 2).is_err());
        assert!(lookup("lena", Model::Tdm, 1).is_err());
    }

    #[test]
    fn preset_params_validate() {
        for r in all_rows() {
            r.params().validate().unwrap();
        }
        let si = speckle_index_row("SAR", Model::Model2).unwrap();
        assert_eq!((si.lambda, si.k), (0.0001, 10.0));
        si.params().validate().unwrap();
    }
}
