use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The four telegraph-diffusion models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    /// Second-order telegraph diffusion, coefficient `C1 * C3`.
    Tdm,
    /// Fourth-order telegraph diffusion, coefficient `C1 * C2`, with fidelity.
    Tdfm,
    /// Weighted blend `A * second-order - (1 - A) * fourth-order - S`.
    Model1,
    /// Coupled fourth-order and second-order equations solved in turn.
    Model2,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Tdm, Model::Tdfm, Model::Model1, Model::Model2];

    pub fn name(self) -> &'static str {
        match self {
            Model::Tdm => "tdm",
            Model::Tdfm => "tdfm",
            Model::Model1 => "model1",
            Model::Model2 => "model2",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "tdm" | "tde" => Ok(Model::Tdm),
            "tdfm" => Ok(Model::Tdfm),
            "model1" | "m1" | "weighted" => Ok(Model::Model1),
            "model2" | "m2" | "coupled" => Ok(Model::Model2),
            _ => Err(Error::InvalidParameter(format!("unknown model {s:?}"))),
        }
    }
}
