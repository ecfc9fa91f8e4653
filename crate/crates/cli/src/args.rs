use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use despeckle::experiment::{apply_param, parse_bool};
use despeckle::presets;
use despeckle::solver::default_dt;
use despeckle::{Model, SolverParams};

#[derive(Debug, Parser)]
#[command(name = "despeckle", version, about = "Telegraph-diffusion speckle reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multiply an image by L-look gamma speckle.
    Noise(NoiseArgs),
    /// Restore a speckled image.
    Denoise(DenoiseArgs),
    /// Print `image,model,look,psnr,mssim,si` for a test image against a reference.
    Metrics(MetricsArgs),
    /// Sweep the Model 1 weight A and flag the PSNR argmax.
    SweepA(SweepArgs),
    /// Run a benchmark configuration and write its CSV table.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Clean PGM/PPM, or `phantom:<parrots|texture|blocks>`.
    pub input: String,
    #[arg(long)]
    pub looks: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Noisy output; a `.txt` record of the noise spec is written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Noisy PGM/PPM.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Clean reference; when given a metrics row is printed.
    #[arg(long)]
    pub reference: Option<String>,
    /// Look count reported in the metrics row and used for `--preset`.
    #[arg(long)]
    pub looks: Option<u32>,
    /// Append the metrics row to this CSV instead of printing it.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Per-iteration CSV: channel, iteration, rel_change, psnr, mssim.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub psnr_range: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub reference: String,
    pub test: PathBuf,
    /// Label for the image column (defaults to the test file stem).
    #[arg(long)]
    pub image: Option<String>,
    /// Label for the model column.
    #[arg(long, default_value = "-")]
    pub model: String,
    /// Label for the look column.
    #[arg(long)]
    pub looks: Option<u32>,
    #[arg(long)]
    pub psnr_range: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Clean reference PGM/PPM, or `phantom:<name>`.
    pub reference: String,
    /// Noisy input; synthesized from the reference with `--looks`/`--seed` if absent.
    #[arg(long)]
    pub noisy: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub looks: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5, 0.7, 0.9])]
    pub values: Vec<f64>,
    #[arg(long)]
    pub psnr_range: Option<f64>,
    /// CSV output (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub config: PathBuf,
    /// Rows solved concurrently (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// CSV output (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write wall_ms as 0 so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "model1")]
    pub model: Model,
    /// Start from a published parameter row (parrots, texture, caps, baboon);
    /// needs `--looks`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Edge threshold (the tables' beta), as a fraction of the intensity range.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub weight_a: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// on|off
    #[arg(long, value_parser = parse_on_off)]
    pub fidelity: Option<bool>,
    /// fourth-first|second-first
    #[arg(long)]
    pub couple_order: Option<String>,
    #[arg(long)]
    pub smooth_once: bool,
    /// normalized|intensity
    #[arg(long)]
    pub threshold_units: Option<String>,
    /// saturated|literal
    #[arg(long)]
    pub fidelity_guard: Option<String>,
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    parse_bool(s).map_err(|e| e.to_string())
}

impl SolverArgs {
    /// Defaults (or the preset row), then every flag given.
    pub fn params(&self, looks: Option<u32>) -> despeckle::Result<SolverParams> {
        let mut p = match &self.preset {
            Some(image) => {
                let look = looks.ok_or_else(|| {
                    despeckle::Error::InvalidParameter("--preset needs --looks".into())
                })?;
                presets::lookup(image, self.model, look)?.params()
            }
            None => SolverParams::for_model(self.model),
        };
        let numeric = [
            ("alpha", self.alpha),
            ("k", self.k),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
            ("weight_a", self.weight_a),
            ("dt", self.dt),
            ("sigma", self.sigma),
            ("eps", self.eps),
            ("tol", self.tol),
        ];
        for (key, value) in numeric {
            if let Some(v) = value {
                apply_param(&mut p, key, &v.to_string())?;
            }
        }
        if let Some(n) = self.max_iters {
            p.max_iters = n;
        }
        if let Some(f) = self.fidelity {
            p.fidelity = f;
        }
        if let Some(o) = &self.couple_order {
            p.couple_order = o.parse()?;
        }
        if let Some(u) = &self.threshold_units {
            p.threshold_units = u.parse()?;
        }
        if let Some(g) = &self.fidelity_guard {
            p.fidelity_guard = g.parse()?;
        }
        p.smooth_once |= self.smooth_once;
        if self.dt.is_none() {
            p.dt = default_dt(p.model, p.weight_a);
        }
        p.validate()?;
        Ok(p)
    }
}
