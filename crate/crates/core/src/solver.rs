//! Explicit telegraph time stepping for the four models.
//!
//! Every model evolves `I_tt + gamma I_t = RHS(I)` from `I(0) = f`,
//! `I_t(0) = 0`. Time derivatives are the backward second difference and
//! the forward first difference, which gives the damping-implicit update
//!
//! ```text
//! I^{n+1} = (RHS + (2 I^n - I^{n-1}) / dt^2 + (gamma / dt) I^n) / (1 / dt^2 + gamma / dt)
//!         = I^n + (dt^2 RHS + I^n - I^{n-1}) / (1 + gamma dt)
//! ```
//!
//! The second form is used: it is algebraically identical and leaves a
//! stationary iterate bit-for-bit unchanged.

use std::str::FromStr;

use rayon::prelude::*;

use crate::coefficients::{coeff_field_from_smoothed, CoeffParams, CoefficientFields};
use crate::error::{Error, Result};
use crate::grid::{merge_channels, ColorImage, ImageGrid};
use crate::metrics::{mssim, psnr, SsimConfig};
use crate::model::Model;
use crate::smoothing::smooth;
use crate::stencils::{fd2_div, fd4, fidelity_source, fidelity_source_saturated, GridSpacing};

/// Which half of the coupled model runs first in each outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoupleOrder {
    #[default]
    FourthFirst,
    SecondFirst,
}

/// Units of the edge threshold `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdUnits {
    /// `k` is a fraction of the image's `range_max` (intensities scaled to [0, 1]).
    #[default]
    Normalized,
    /// `k` is in raw intensity units.
    Intensity,
}

/// How the fidelity source treats iterates far below the observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FidelityGuard {
    /// `lambda ((I - f) / max(I + eps, |I - f|))^2`, bounded by `lambda`.
    #[default]
    Saturated,
    /// `lambda ((I - f) / (I + eps))^2` exactly; blows up where an
    /// iterate crosses `-eps`.
    Literal,
}

impl FromStr for CoupleOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fourth-first" | "fourth" | "4-2" => Ok(CoupleOrder::FourthFirst),
            "second-first" | "second" | "2-4" => Ok(CoupleOrder::SecondFirst),
            _ => Err(Error::InvalidParameter(format!(
                "couple order must be fourth-first or second-first, got {s:?}"
            ))),
        }
    }
}

impl FromStr for ThresholdUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normalized" | "unit" => Ok(ThresholdUnits::Normalized),
            "intensity" | "raw" => Ok(ThresholdUnits::Intensity),
            _ => Err(Error::InvalidParameter(format!(
                "threshold units must be normalized or intensity, got {s:?}"
            ))),
        }
    }
}

impl FromStr for FidelityGuard {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "saturated" => Ok(FidelityGuard::Saturated),
            "literal" => Ok(FidelityGuard::Literal),
            _ => Err(Error::InvalidParameter(format!(
                "fidelity guard must be saturated or literal, got {s:?}"
            ))),
        }
    }
}

/// All knobs of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub model: Model,
    pub alpha: f64,
    /// Edge threshold shared by `C2` and `C3`.
    pub k: f64,
    pub threshold_units: ThresholdUnits,
    /// Damping (1 / time).
    pub gamma: f64,
    /// Fidelity weight.
    pub lambda: f64,
    /// When false the fidelity source is dropped regardless of `lambda`.
    pub fidelity: bool,
    /// Weight of the second-order term in Model 1.
    pub weight_a: f64,
    pub dt: f64,
    pub spacing: GridSpacing,
    /// Gaussian pre-smoothing scale for `I_xi`.
    pub sigma: f64,
    /// Recompute `I_xi` from `f` once instead of from every iterate.
    pub smooth_once: bool,
    /// Guard in the fidelity denominator (intensity units).
    pub eps: f64,
    pub fidelity_guard: FidelityGuard,
    pub max_iters: usize,
    /// Stop when `||I^{n+1} - I^n||^2 / ||I^n||^2 <= tol`.
    pub tol: f64,
    pub couple_order: CoupleOrder,
    /// Optional `(alpha, k)` for Model 2's second-order equation.
    pub second_order_override: Option<(f64, f64)>,
}

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_WEIGHT_A: f64 = 0.7;

/// Default time step: 0.1 when the second-order term dominates, else 0.05.
pub fn default_dt(model: Model, weight_a: f64) -> f64 {
    match model {
        Model::Tdm => 0.1,
        Model::Model1 if weight_a >= 0.5 => 0.1,
        _ => 0.05,
    }
}

impl SolverParams {
    /// Defaults for `model` (Parrots, L = 3 row of the gray parameter table
    /// for the model-specific `alpha`, `k`, `gamma`, `lambda`).
    pub fn for_model(model: Model) -> Self {
        let (alpha, k, gamma, lambda) = match model {
            Model::Tdm => (1.0, 2.0, 5.0, 0.0),
            Model::Tdfm => (1.0, 3.0, 5.0, 0.1),
            Model::Model1 => (1.0, 2.0, 4.0, 0.07),
            Model::Model2 => (1.0, 10.0, 1.0, 0.1),
        };
        Self {
            model,
            alpha,
            k,
            threshold_units: ThresholdUnits::default(),
            gamma,
            lambda,
            fidelity: true,
            weight_a: DEFAULT_WEIGHT_A,
            dt: default_dt(model, DEFAULT_WEIGHT_A),
            spacing: GridSpacing::default(),
            sigma: DEFAULT_SIGMA,
            smooth_once: false,
            eps: DEFAULT_EPS,
            fidelity_guard: FidelityGuard::default(),
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            couple_order: CoupleOrder::default(),
            second_order_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(0.0..=1.0).contains(&self.weight_a) {
            return bad(format!("weight A must lie in [0, 1], got {}", self.weight_a));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be nonnegative, got {}", self.gamma));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        CoeffParams::new(self.alpha, self.k)?;
        if let Some((a, k)) = self.second_order_override {
            CoeffParams::new(a, k)?;
        }
        Ok(())
    }

    /// Effective fidelity weight.
    pub fn lambda_eff(&self) -> f64 {
        if self.fidelity {
            self.lambda
        } else {
            0.0
        }
    }

    /// The fidelity source `S` at `current`.
    pub fn fidelity_term(&self, current: &ImageGrid, observed: &ImageGrid) -> Result<ImageGrid> {
        let source = match self.fidelity_guard {
            FidelityGuard::Saturated => fidelity_source_saturated,
            FidelityGuard::Literal => fidelity_source,
        };
        source(current, observed, self.lambda_eff(), self.eps)
    }

    fn scale_k(&self, k: f64, range_max: f64) -> f64 {
        match self.threshold_units {
            ThresholdUnits::Normalized => k * range_max,
            ThresholdUnits::Intensity => k,
        }
    }

    /// Coefficient parameters in the image's intensity units.
    pub fn coeff_params(&self, range_max: f64) -> Result<CoeffParams> {
        CoeffParams::new(self.alpha, self.scale_k(self.k, range_max))
    }

    /// Coefficient parameters of Model 2's second-order equation.
    pub fn second_order_coeff_params(&self, range_max: f64) -> Result<CoeffParams> {
        let (alpha, k) = self.second_order_override.unwrap_or((self.alpha, self.k));
        CoeffParams::new(alpha, self.scale_k(k, range_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIters => "max_iters",
        }
    }
}

/// Per-iteration record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub iterations: usize,
    pub rel_changes: Vec<f64>,
    pub stop_reason: StopReason,
    pub psnr_per_iter: Option<Vec<f64>>,
    pub mssim_per_iter: Option<Vec<f64>>,
}

/// One damping-implicit telegraph update.
pub fn telegraph_step(
    current: &ImageGrid,
    previous: &ImageGrid,
    rhs: &ImageGrid,
    dt: f64,
    gamma: f64,
) -> Result<ImageGrid> {
    current.check_same_shape(previous)?;
    current.check_same_shape(rhs)?;
    if !(dt > 0.0) || !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "telegraph step needs dt > 0 and gamma >= 0, got dt={dt} gamma={gamma}"
        )));
    }
    let dt2 = dt * dt;
    let inv = 1.0 / (1.0 + gamma * dt);
    let w = current.width();
    let (u, up, r) = (current.data(), previous.data(), rhs.data());
    let mut out = vec![0.0; current.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(i, row)| {
        for (j, o) in row.iter_mut().enumerate() {
            let p = i * w + j;
            *o = u[p] + (dt2 * r[p] + (u[p] - up[p])) * inv;
        }
    });
    Ok(current.with_data(out))
}

fn axpy(a: f64, x: &ImageGrid, y: &ImageGrid) -> Result<ImageGrid> {
    y.zip_map(x, |yv, xv| yv + a * xv)
}

/// RHS from precomputed coefficient fields. For Model 2 this is the
/// fourth-order equation; see [`second_order_rhs`] for its companion.
pub fn rhs_from_fields(
    model: Model,
    fields: &CoefficientFields,
    current: &ImageGrid,
    observed: &ImageGrid,
    params: &SolverParams,
) -> Result<ImageGrid> {
    let missing = || Error::InvalidParameter(format!("coefficient field missing for {model}"));
    let h = params.spacing;
    let source = || params.fidelity_term(current, observed);
    match model {
        Model::Tdm => fd2_div(fields.second_order.as_ref().ok_or_else(missing)?, current, h),
        Model::Tdfm | Model::Model2 => {
            let f4 = fd4(fields.fourth_order.as_ref().ok_or_else(missing)?, current, h)?;
            f4.zip_map(&source()?, |a, s| -a - s)
        }
        Model::Model1 => {
            let a = params.weight_a;
            let f2 = fd2_div(fields.second_order.as_ref().ok_or_else(missing)?, current, h)?;
            let f4 = fd4(fields.fourth_order.as_ref().ok_or_else(missing)?, current, h)?;
            let s = source()?;
            let blended = f2.zip_map(&f4, |x, y| a * x - (1.0 - a) * y)?;
            axpy(-1.0, &s, &blended)
        }
    }
}

/// Model 2's second-order companion: `div(C1 C3 grad I)`.
pub fn second_order_rhs(smoothed: &ImageGrid, current: &ImageGrid, params: &SolverParams) -> Result<ImageGrid> {
    let cp = params.second_order_coeff_params(current.range_max())?;
    let fields = coeff_field_from_smoothed(Model::Tdm, smoothed, &cp, params.spacing)?;
    fd2_div(fields.second_order.as_ref().expect("tdm has a second-order field"), current, params.spacing)
}

/// RHS of the model's main equation at `current`, smoothing it first.
pub fn assemble_rhs(
    model: Model,
    current: &ImageGrid,
    observed: &ImageGrid,
    params: &SolverParams,
) -> Result<ImageGrid> {
    current.check_same_shape(observed)?;
    let smoothed = smooth(current, params.sigma)?;
    let cp = params.coeff_params(current.range_max())?;
    let fields = coeff_field_from_smoothed(model, &smoothed, &cp, params.spacing)?;
    rhs_from_fields(model, &fields, current, observed, params)
}

fn check_finite(g: &ImageGrid, iteration: usize, stage: &'static str) -> Result<()> {
    if g.data().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { iteration, stage })
    }
}

#[derive(Clone, Copy)]
enum SubStep {
    Fourth,
    Second,
}

struct Evolution<'a> {
    observed: &'a ImageGrid,
    params: &'a SolverParams,
    fixed_smoothed: Option<ImageGrid>,
}

impl Evolution<'_> {
    fn smoothed(&self, current: &ImageGrid) -> Result<ImageGrid> {
        match &self.fixed_smoothed {
            Some(s) => Ok(s.clone()),
            None => smooth(current, self.params.sigma),
        }
    }

    fn main_rhs(&self, current: &ImageGrid) -> Result<ImageGrid> {
        let p = self.params;
        let smoothed = self.smoothed(current)?;
        let cp = p.coeff_params(current.range_max())?;
        let fields = coeff_field_from_smoothed(p.model, &smoothed, &cp, p.spacing)?;
        rhs_from_fields(p.model, &fields, current, self.observed, p)
    }

    fn sub_rhs(&self, which: SubStep, current: &ImageGrid) -> Result<ImageGrid> {
        match which {
            SubStep::Fourth => self.main_rhs(current),
            SubStep::Second => second_order_rhs(&self.smoothed(current)?, current, self.params),
        }
    }
}

/// Sum of squares in fixed sequential order.
fn sum_sq(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |acc, v| acc + v * v)
}

fn relative_change(next: &ImageGrid, current: &ImageGrid) -> f64 {
    let diff = sum_sq(next.data().iter().zip(current.data()).map(|(a, b)| a - b));
    let norm = sum_sq(current.data().iter().copied());
    if norm > 0.0 {
        diff / norm
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Evolves `observed` until the relative change drops to `tol` or the
/// iteration cap is reached. The result is clamped to `[0, range_max]`.
pub fn run_solver(
    observed: &ImageGrid,
    params: &SolverParams,
    reference: Option<&ImageGrid>,
) -> Result<(ImageGrid, RunTrace)> {
    params.validate()?;
    if let Some(v) = observed.data().iter().find(|&&v| v < 0.0) {
        return Err(Error::InvalidImage(format!(
            "solver input must be nonnegative, found {v}"
        )));
    }
    if let Some(r) = reference {
        r.check_same_shape(observed)?;
    }
    let ssim_cfg = reference.map(|r| SsimConfig::for_range(r.range_max()));

    let evo = Evolution {
        observed,
        params,
        fixed_smoothed: if params.smooth_once {
            Some(smooth(observed, params.sigma)?)
        } else {
            None
        },
    };
    let (dt, gamma) = (params.dt, params.gamma);
    let order = match params.couple_order {
        CoupleOrder::FourthFirst => [SubStep::Fourth, SubStep::Second],
        CoupleOrder::SecondFirst => [SubStep::Second, SubStep::Fourth],
    };

    let mut current = observed.clone();
    // Zero initial velocity: I^{-1} = I^0.
    let mut previous = observed.clone();
    // The coupled model carries one increment per equation, so each
    // sub-step only sees its own momentum.
    let zero = observed.map(|_| 0.0);
    let mut increments = [zero.clone(), zero];

    let mut rel_changes = Vec::new();
    let mut psnrs = reference.map(|_| Vec::new());
    let mut mssims = reference.map(|_| Vec::new());
    let mut stop_reason = StopReason::MaxIters;

    for n in 1..=params.max_iters {
        let next = if params.model == Model::Model2 {
            let mut state = current.clone();
            for (slot, sub) in order.into_iter().enumerate() {
                let rhs = evo.sub_rhs(sub, &state)?;
                check_finite(&rhs, n, "rhs")?;
                let own_previous = state.zip_map(&increments[slot], |u, v| u - v)?;
                let out = telegraph_step(&state, &own_previous, &rhs, dt, gamma)?;
                check_finite(&out, n, "coupled sub-step")?;
                increments[slot] = out.zip_map(&state, |a, b| a - b)?;
                state = out;
            }
            state
        } else {
            let rhs = evo.main_rhs(&current)?;
            check_finite(&rhs, n, "rhs")?;
            telegraph_step(&current, &previous, &rhs, dt, gamma)?
        };
        check_finite(&next, n, "update")?;

        let rel = relative_change(&next, &current);
        rel_changes.push(rel);
        previous = std::mem::replace(&mut current, next);

        if let (Some(r), Some(cfg)) = (reference, ssim_cfg.as_ref()) {
            let shown = current.clamped();
            if let Some(v) = psnrs.as_mut() {
                v.push(psnr(r, &shown)?);
            }
            if let Some(v) = mssims.as_mut() {
                v.push(mssim(r, &shown, cfg)?);
            }
        }
        // The iterate starts at rest, so early changes are small while still
        // growing; only a change that has started to fall counts.
        let dropping = rel_changes.len() >= 2 && rel < rel_changes[rel_changes.len() - 2];
        if rel == 0.0 || (rel <= params.tol && dropping) {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    let trace = RunTrace {
        iterations: rel_changes.len(),
        rel_changes,
        stop_reason,
        psnr_per_iter: psnrs,
        mssim_per_iter: mssims,
    };
    Ok((current.clamped(), trace))
}

/// Runs the solver independently on each channel with identical params.
pub fn denoise_color(
    image: &ColorImage,
    params: &SolverParams,
    reference: Option<&ColorImage>,
) -> Result<(ColorImage, [RunTrace; 3])> {
    let refs = reference.map(|r| r.channels());
    let runs: Vec<Result<(ImageGrid, RunTrace)>> = image
        .channels()
        .par_iter()
        .enumerate()
        .map(|(c, ch)| run_solver(ch, params, refs.map(|r| r[c])))
        .collect();
    let mut out = Vec::with_capacity(3);
    for r in runs {
        out.push(r?);
    }
    let [(r, tr), (g, tg), (b, tb)]: [(ImageGrid, RunTrace); 3] =
        out.try_into().expect("three channels");
    Ok((merge_channels(r, g, b)?, [tr, tg, tb]))
}
