//! Batch experiments: the model x look benchmark grid and the Model 1
//! weight sweep, with a small INI-like configuration format.
//!
//! ```text
//! # comment
//! [bench]
//! seed = 42
//! jobs = 4
//! timing = off          # write wall_ms as 0 for byte-stable output
//!
//! [image parrots]
//! source = data/parrots.pgm      # or phantom:parrots (size, phantom_seed)
//! preset = parrots               # parameter table used for its rows
//!
//! [row]
//! image = parrots
//! model = model1
//! look = 3
//! gamma = 4                      # any solver key overrides the preset
//!
//! [grid]                         # expands to images x looks x models
//! images = parrots
//! looks = 1, 3, 5, 10
//! models = tdm, tdfm, model1, model2
//! ```
//!
//! Relative paths resolve against the configuration file's directory.
//! Each (image, look) pair draws its speckle from seed
//! `split_seed(split_seed(seed, image_index), look)`, so every model sees
//! the same noisy input.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{
    mssim, mssim_color, psnr, psnr_color, psnr_color_with_peak, psnr_with_peak, speckle_index,
    speckle_index_color, SsimConfig,
};
use crate::model::Model;
use crate::noise::{apply_speckle, apply_speckle_color, split_seed, NoiseSpec};
use crate::phantom::Phantom;
use crate::pnm::{load_any, AnyImage};
use crate::presets;
use crate::stencils::GridSpacing;
use crate::solver::{default_dt, denoise_color, run_solver, SolverParams};

pub const DEFAULT_PHANTOM_SIZE: usize = 256;
pub const DEFAULT_PHANTOM_SEED: u64 = 7;
pub const DEFAULT_SEED: u64 = 42;

pub const BENCH_HEADER: &str = "image,look,model,mssim,psnr,si,iterations,wall_ms";
pub const SWEEP_HEADER: &str = "a,psnr,mssim,iterations,best";

/// Parses `on/off`, `true/false`, `yes/no`, `1/0`.
pub fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidParameter(format!("expected on/off, got {s:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

/// Sets one solver knob by its configuration key. Returns `false` for an
/// unknown key.
pub fn apply_param(params: &mut SolverParams, key: &str, value: &str) -> Result<bool> {
    match key {
        "alpha" => params.alpha = parse_num(key, value)?,
        "k" | "beta" => params.k = parse_num(key, value)?,
        "gamma" => params.gamma = parse_num(key, value)?,
        "lambda" => params.lambda = parse_num(key, value)?,
        "weight_a" | "a" => params.weight_a = parse_num(key, value)?,
        "dt" => params.dt = parse_num(key, value)?,
        "sigma" => params.sigma = parse_num(key, value)?,
        "eps" => params.eps = parse_num(key, value)?,
        "tol" => params.tol = parse_num(key, value)?,
        "max_iters" => params.max_iters = parse_num(key, value)?,
        "fidelity" => params.fidelity = parse_bool(value)?,
        "smooth_once" => params.smooth_once = parse_bool(value)?,
        "couple_order" => params.couple_order = value.parse()?,
        "threshold_units" => params.threshold_units = value.parse()?,
        "fidelity_guard" => params.fidelity_guard = value.parse()?,
        "dx" => params.spacing = GridSpacing::new(parse_num(key, value)?, params.spacing.dy())?,
        "dy" => params.spacing = GridSpacing::new(params.spacing.dx(), parse_num(key, value)?)?,
        _ => return Ok(false),
    }
    Ok(true)
}

struct Section {
    kind: String,
    arg: Option<String>,
    line: usize,
    entries: Vec<(String, String, usize)>,
}

fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let inner = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                line: line_no,
                message: "unterminated section header".into(),
            })?;
            let mut parts = inner.split_whitespace();
            let kind = parts.next().unwrap_or("").to_ascii_lowercase();
            let arg = parts.next().map(str::to_string);
            if kind.is_empty() || parts.next().is_some() {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("bad section header [{inner}]"),
                });
            }
            sections.push(Section { kind, arg, line: line_no, entries: Vec::new() });
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            message: format!("expected key = value, got {line:?}"),
        })?;
        let section = sections.last_mut().ok_or_else(|| Error::Config {
            line: line_no,
            message: "key outside any section".into(),
        })?;
        section.entries.push((key.trim().to_ascii_lowercase(), value.trim().to_string(), line_no));
    }
    Ok(sections)
}

fn strip_comment(line: &str) -> &str {
    let t = line.trim_start();
    if t.starts_with('#') || t.starts_with(';') {
        return "";
    }
    match line.find(" #").or_else(|| line.find("\t#")) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn at_line(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::Config { line, message: other.to_string() },
    }
}

/// Where a clean reference image comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    File(PathBuf),
    Phantom { kind: Phantom, size: usize, seed: u64 },
}

impl ImageSource {
    /// `phantom:<name>` or a file path; relative paths join `base`.
    pub fn parse(spec: &str, base: &Path) -> Result<Self> {
        let spec = spec.trim();
        if let Some(name) = spec.strip_prefix("phantom:") {
            return Ok(ImageSource::Phantom {
                kind: name.parse()?,
                size: DEFAULT_PHANTOM_SIZE,
                seed: DEFAULT_PHANTOM_SEED,
            });
        }
        let p = PathBuf::from(spec);
        Ok(ImageSource::File(if p.is_absolute() { p } else { base.join(p) }))
    }

    pub fn load(&self) -> Result<AnyImage> {
        match self {
            ImageSource::File(p) => load_any(p),
            ImageSource::Phantom { kind, size, seed } => kind.render(*size, *seed).map(AnyImage::Gray),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchImage {
    pub name: String,
    pub source: ImageSource,
    /// Parameter-table image whose rows seed this image's parameters.
    pub preset: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub image: String,
    pub model: Model,
    pub look: u32,
    pub params: SolverParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub seed: u64,
    pub jobs: Option<usize>,
    /// When false, `wall_ms` is written as 0.
    pub timing: bool,
    pub psnr_range: Option<f64>,
    pub images: Vec<BenchImage>,
    pub rows: Vec<ExperimentRow>,
}

impl BenchConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = BenchConfig {
            seed: DEFAULT_SEED,
            jobs: None,
            timing: true,
            psnr_range: None,
            images: Vec::new(),
            rows: Vec::new(),
        };
        let sections = parse_sections(text)?;

        // Images first so rows may precede their image section.
        for s in sections.iter().filter(|s| s.kind == "image") {
            let name = s.arg.clone().ok_or_else(|| Error::Config {
                line: s.line,
                message: "[image] needs a name, e.g. [image parrots]".into(),
            })?;
            if cfg.images.iter().any(|i| i.name == name) {
                return Err(Error::Config { line: s.line, message: format!("duplicate image {name:?}") });
            }
            let mut source = None;
            let mut preset = None;
            let (mut size, mut pseed) = (None, None);
            for (k, v, line) in &s.entries {
                let r: Result<()> = (|| {
                    match k.as_str() {
                        "source" | "path" => source = Some(ImageSource::parse(v, base)?),
                        "preset" => {
                            preset = if v.eq_ignore_ascii_case("none") { None } else { Some(v.to_ascii_lowercase()) }
                        }
                        "size" => size = Some(parse_num::<usize>(k, v)?),
                        "phantom_seed" => pseed = Some(parse_num::<u64>(k, v)?),
                        _ => return Err(Error::InvalidParameter(format!("unknown image key {k:?}"))),
                    }
                    Ok(())
                })();
                r.map_err(at_line(*line))?;
            }
            let mut source = source.ok_or_else(|| Error::Config {
                line: s.line,
                message: format!("image {name:?} has no source"),
            })?;
            if let ImageSource::Phantom { size: sz, seed, .. } = &mut source {
                *sz = size.unwrap_or(*sz);
                *seed = pseed.unwrap_or(*seed);
            }
            cfg.images.push(BenchImage { name, source, preset });
        }

        for s in &sections {
            match s.kind.as_str() {
                "image" => {}
                "bench" => {
                    for (k, v, line) in &s.entries {
                        let r: Result<()> = (|| {
                            match k.as_str() {
                                "seed" => cfg.seed = parse_num(k, v)?,
                                "jobs" => cfg.jobs = Some(parse_num(k, v)?),
                                "timing" => cfg.timing = parse_bool(v)?,
                                "psnr_range" => cfg.psnr_range = Some(parse_num(k, v)?),
                                _ => return Err(Error::InvalidParameter(format!("unknown bench key {k:?}"))),
                            }
                            Ok(())
                        })();
                        r.map_err(at_line(*line))?;
                    }
                }
                "row" => {
                    let row = cfg.parse_row(s)?;
                    cfg.rows.push(row);
                }
                "grid" => {
                    let rows = cfg.parse_grid(s)?;
                    cfg.rows.extend(rows);
                }
                other => {
                    return Err(Error::Config { line: s.line, message: format!("unknown section [{other}]") })
                }
            }
        }
        if cfg.jobs == Some(0) {
            return Err(Error::Config { line: 0, message: "jobs must be positive".into() });
        }
        Ok(cfg)
    }

    fn image(&self, name: &str, line: usize) -> Result<&BenchImage> {
        self.images
            .iter()
            .find(|i| i.name == name)
            .ok_or_else(|| Error::Config { line, message: format!("unknown image {name:?}") })
    }

    /// Defaults for `model`, then the image's preset row, then `overrides`.
    fn build_params(
        &self,
        image: &BenchImage,
        model: Model,
        look: u32,
        overrides: &[(String, String, usize)],
    ) -> Result<SolverParams> {
        let mut params = match &image.preset {
            Some(p) => presets::lookup(p, model, look)?.params(),
            None => SolverParams::for_model(model),
        };
        let mut dt_set = false;
        for (k, v, line) in overrides {
            if !apply_param(&mut params, k, v).map_err(at_line(*line))? {
                return Err(Error::Config { line: *line, message: format!("unknown key {k:?}") });
            }
            dt_set |= k == "dt";
        }
        if !dt_set {
            params.dt = default_dt(model, params.weight_a);
        }
        params.validate()?;
        Ok(params)
    }

    fn parse_row(&self, s: &Section) -> Result<ExperimentRow> {
        let (mut image, mut model, mut look) = (None, None, None);
        let mut overrides = Vec::new();
        for (k, v, line) in &s.entries {
            match k.as_str() {
                "image" => image = Some(v.clone()),
                "model" => model = Some(v.parse::<Model>().map_err(at_line(*line))?),
                "look" | "looks" => look = Some(parse_num::<u32>(k, v).map_err(at_line(*line))?),
                _ => overrides.push((k.clone(), v.clone(), *line)),
            }
        }
        let missing = |what: &str| Error::Config { line: s.line, message: format!("[row] needs {what}") };
        let image = image.ok_or_else(|| missing("image"))?;
        let model = model.ok_or_else(|| missing("model"))?;
        let look = look.ok_or_else(|| missing("look"))?;
        let img = self.image(&image, s.line)?;
        let params = self.build_params(img, model, look, &overrides).map_err(at_line(s.line))?;
        Ok(ExperimentRow { image, model, look, params })
    }

    fn parse_grid(&self, s: &Section) -> Result<Vec<ExperimentRow>> {
        let mut images: Vec<String> = self.images.iter().map(|i| i.name.clone()).collect();
        let mut looks = presets::LOOKS.to_vec();
        let mut models = Model::ALL.to_vec();
        let mut overrides = Vec::new();
        for (k, v, line) in &s.entries {
            let at = at_line(*line);
            match k.as_str() {
                "images" => images = parse_list(v, |x| Ok(x.to_string())).map_err(&at)?,
                "looks" => looks = parse_list(v, |x| parse_num::<u32>("looks", x)).map_err(&at)?,
                "models" => models = parse_list(v, |x| x.parse::<Model>()).map_err(&at)?,
                _ => overrides.push((k.clone(), v.clone(), *line)),
            }
        }
        let mut rows = Vec::new();
        for name in &images {
            let img = self.image(name, s.line)?;
            for &look in &looks {
                for &model in &models {
                    let params = self.build_params(img, model, look, &overrides).map_err(at_line(s.line))?;
                    rows.push(ExperimentRow { image: name.clone(), model, look, params });
                }
            }
        }
        Ok(rows)
    }
}

/// Quality of a restored image against its clean reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub psnr: f64,
    pub mssim: f64,
    pub si: f64,
}

/// PSNR (peak `psnr_range` or `max(reference)`), MSSIM and the test
/// image's speckle index.
pub fn score(reference: &AnyImage, test: &AnyImage, psnr_range: Option<f64>) -> Result<Scores> {
    match (reference, test) {
        (AnyImage::Gray(r), AnyImage::Gray(t)) => Ok(Scores {
            psnr: match psnr_range {
                Some(peak) => psnr_with_peak(r, t, peak)?,
                None => psnr(r, t)?,
            },
            mssim: mssim(r, t, &SsimConfig::for_range(r.range_max()))?,
            si: speckle_index(t)?,
        }),
        (AnyImage::Color(r), AnyImage::Color(t)) => Ok(Scores {
            psnr: match psnr_range {
                Some(peak) => psnr_color_with_peak(r, t, peak)?,
                None => psnr_color(r, t)?,
            },
            mssim: mssim_color(r, t, &SsimConfig::for_range(r.range_max()))?,
            si: speckle_index_color(t)?,
        }),
        _ => Err(Error::DimensionMismatch("cannot compare a gray image with a color image".into())),
    }
}

/// Speckle at `spec`, channel-wise for color images.
pub fn speckle_any(clean: &AnyImage, spec: NoiseSpec) -> Result<AnyImage> {
    Ok(match clean {
        AnyImage::Gray(g) => AnyImage::Gray(apply_speckle(g, spec)?),
        AnyImage::Color(c) => AnyImage::Color(apply_speckle_color(c, spec)?),
    })
}

/// Restores `observed`; returns the image and the iteration count (the
/// largest over channels for color input).
pub fn denoise_any(observed: &AnyImage, params: &SolverParams) -> Result<(AnyImage, usize)> {
    match observed {
        AnyImage::Gray(g) => {
            let (out, trace) = run_solver(g, params, None)?;
            Ok((AnyImage::Gray(out), trace.iterations))
        }
        AnyImage::Color(c) => {
            let (out, traces) = denoise_color(c, params, None)?;
            let iters = traces.iter().map(|t| t.iterations).max().unwrap_or(0);
            Ok((AnyImage::Color(out), iters))
        }
    }
}

/// Clamps every channel to `[0, range_max]`, as stored files would be.
pub fn clamp_any(image: &AnyImage) -> AnyImage {
    match image {
        AnyImage::Gray(g) => AnyImage::Gray(g.clamped()),
        AnyImage::Color(c) => AnyImage::Color(
            crate::grid::merge_channels(c.r().clamped(), c.g().clamped(), c.b().clamped())
                .expect("same shape"),
        ),
    }
}

/// Seed of the speckle for image number `image_index` at `look`.
pub fn noise_seed(seed: u64, image_index: usize, look: u32) -> u64 {
    split_seed(split_seed(seed, image_index as u64), look as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub image: String,
    pub look: u32,
    pub model: Model,
    pub outcome: std::result::Result<BenchOutcome, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOutcome {
    pub scores: Scores,
    pub iterations: usize,
    pub wall_ms: u128,
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}"))),
    }
}

/// Runs every row. Inputs are loaded and checked before any solver starts;
/// a failing row is recorded and the rest still run. Records keep config
/// order whatever the completion order.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let mut cleans = Vec::with_capacity(cfg.images.len());
    for img in &cfg.images {
        cleans.push(img.source.load()?);
    }
    let index_of = |name: &str| cfg.images.iter().position(|i| i.name == name);
    for row in &cfg.rows {
        if index_of(&row.image).is_none() {
            return Err(Error::InvalidParameter(format!("row references unknown image {:?}", row.image)));
        }
        NoiseSpec::new(row.look, 0)?;
    }

    with_pool(cfg.jobs, || {
        cfg.rows
            .par_iter()
            .map(|row| {
                let idx = index_of(&row.image).expect("checked above");
                let clean = &cleans[idx];
                let outcome = (|| {
                    let spec = NoiseSpec::new(row.look, noise_seed(cfg.seed, idx, row.look))?;
                    let noisy = speckle_any(clean, spec)?;
                    let start = Instant::now();
                    let (restored, iterations) = denoise_any(&noisy, &row.params)?;
                    let wall_ms = start.elapsed().as_millis();
                    let scores = score(clean, &restored, cfg.psnr_range)?;
                    Ok::<_, Error>(BenchOutcome { scores, iterations, wall_ms })
                })();
                BenchRecord {
                    image: row.image.clone(),
                    look: row.look,
                    model: row.model,
                    outcome: outcome.map_err(|e| e.to_string()),
                }
            })
            .collect()
    })
}

/// Writes the bench CSV. Failed rows keep their key columns and leave the
/// rest empty.
pub fn write_bench_csv(records: &[BenchRecord], timing: bool, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{BENCH_HEADER}")?;
    for r in records {
        match &r.outcome {
            Ok(o) => writeln!(
                out,
                "{},{},{},{:.6},{:.4},{:.6},{},{}",
                r.image,
                r.look,
                r.model,
                o.scores.mssim,
                o.scores.psnr,
                o.scores.si,
                o.iterations,
                if timing { o.wall_ms } else { 0 }
            )?,
            Err(_) => writeln!(out, "{},{},{},,,,,", r.image, r.look, r.model)?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub a: f64,
    pub psnr: f64,
    pub mssim: f64,
    pub iterations: usize,
    /// Set on the PSNR argmax (first one on ties).
    pub best: bool,
}

/// Model 1 over each weight in `values`. With `fixed_dt = None` every
/// weight uses its default time step.
pub fn sweep_a(
    reference: &AnyImage,
    noisy: &AnyImage,
    base: &SolverParams,
    values: &[f64],
    fixed_dt: Option<f64>,
    psnr_range: Option<f64>,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one weight".into()));
    }
    if let Some(a) = values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidParameter(format!("weight A must lie in [0, 1], got {a}")));
    }
    let runs: Vec<Result<SweepRow>> = values
        .par_iter()
        .map(|&a| {
            let params = SolverParams {
                model: Model::Model1,
                weight_a: a,
                dt: fixed_dt.unwrap_or_else(|| default_dt(Model::Model1, a)),
                ..base.clone()
            };
            let (restored, iterations) = denoise_any(noisy, &params)?;
            let s = score(reference, &restored, psnr_range)?;
            Ok(SweepRow { a, psnr: s.psnr, mssim: s.mssim, iterations, best: false })
        })
        .collect();
    let mut rows = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.psnr > rows[best].psnr {
            best = i;
        }
    }
    rows[best].best = true;
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{:.4},{:.6},{},{}", r.a, r.psnr, r.mssim, r.iterations, u8::from(r.best))?;
    }
    Ok(())
}
