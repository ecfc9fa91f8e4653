//! `despeckle` command-line tool.
//!
//! Exit codes: 0 success, 1 solver failure, 2 usage or input error.

mod args;

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use despeckle::experiment::{
    run_bench, score, speckle_any, sweep_a, write_bench_csv, write_sweep_csv,
    BenchConfig, ImageSource,
};
use despeckle::pnm::{load_any, save_any, AnyImage};
use despeckle::solver::run_solver;
use despeckle::{denoise_color, Error, NoiseSpec, RunTrace};

use args::{BenchArgs, Cli, Command, DenoiseArgs, MetricsArgs, NoiseArgs, SweepArgs};

const SOLVER_FAILURE: u8 = 1;
const INPUT_ERROR: u8 = 2;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } => SOLVER_FAILURE,
        _ => INPUT_ERROR,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Noise(a) => cmd_noise(&a),
        Command::Denoise(a) => cmd_denoise(&a),
        Command::Metrics(a) => cmd_metrics(&a),
        Command::SweepA(a) => cmd_sweep_a(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e }
}

fn load_source(spec: &str) -> despeckle::Result<AnyImage> {
    ImageSource::parse(spec, Path::new("."))?.load()
}

/// Writes to `path`, or stdout when absent.
fn with_output(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> despeckle::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
            f(&mut w).and_then(|_| w.flush()).map_err(io_err(p))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn cmd_noise(a: &NoiseArgs) -> despeckle::Result<u8> {
    let spec = NoiseSpec::new(a.looks, a.seed)?;
    let clean = load_source(&a.input)?;
    let noisy = speckle_any(&clean, spec)?;
    save_any(&noisy, &a.out)?;

    let mut record = format!("input = {}\nlooks = {}\nseed = {}\n", a.input, a.looks, a.seed);
    record.push_str("distribution = gamma(shape = looks, scale = 1 / looks)\n");
    record.push_str("row_seed = split_seed(seed, row)\n");
    if let AnyImage::Color(_) = clean {
        for (c, name) in ["r", "g", "b"].iter().enumerate() {
            record.push_str(&format!("seed_{name} = {}\n", spec.for_channel(c as u64).seed()));
        }
    }
    let sidecar = a.out.with_extension("txt");
    std::fs::write(&sidecar, record).map_err(io_err(&sidecar))?;
    Ok(0)
}

fn write_trace(path: &Path, traces: &[RunTrace]) -> despeckle::Result<()> {
    with_output(Some(path), |w| {
        writeln!(w, "channel,iteration,rel_change,psnr,mssim")?;
        for (c, t) in traces.iter().enumerate() {
            for (i, rel) in t.rel_changes.iter().enumerate() {
                let at = |v: &Option<Vec<f64>>| v.as_ref().map(|x| format!("{:.6}", x[i])).unwrap_or_default();
                writeln!(w, "{c},{},{rel:.6e},{},{}", i + 1, at(&t.psnr_per_iter), at(&t.mssim_per_iter))?;
            }
        }
        Ok(())
    })
}

fn cmd_denoise(a: &DenoiseArgs) -> despeckle::Result<u8> {
    let params = a.solver.params(a.looks)?;
    let observed = load_any(&a.input)?;
    let reference = a.reference.as_deref().map(load_source).transpose()?;

    let restored = match (&observed, &reference) {
        (AnyImage::Gray(g), r) => {
            let r = match r {
                Some(AnyImage::Gray(r)) => Some(r),
                Some(_) => return Err(Error::DimensionMismatch("gray input needs a gray reference".into())),
                None => None,
            };
            let (out, trace) = run_solver(g, &params, r)?;
            if let Some(p) = &a.trace {
                write_trace(p, std::slice::from_ref(&trace))?;
            }
            AnyImage::Gray(out)
        }
        (AnyImage::Color(c), r) => {
            let r = match r {
                Some(AnyImage::Color(r)) => Some(r),
                Some(_) => return Err(Error::DimensionMismatch("color input needs a color reference".into())),
                None => None,
            };
            let (out, traces) = denoise_color(c, &params, r)?;
            if let Some(p) = &a.trace {
                write_trace(p, &traces)?;
            }
            AnyImage::Color(out)
        }
    };
    save_any(&restored, &a.out)?;

    if let Some(reference) = &reference {
        let s = score(reference, &restored, a.psnr_range)?;
        let row = format!(
            "{},{},{},{:.4},{:.6},{:.6}",
            stem(&a.input),
            params.model,
            a.looks.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
            s.psnr,
            s.mssim,
            s.si
        );
        match &a.csv {
            Some(p) => {
                let fresh = !p.exists();
                let mut f = OpenOptions::new().create(true).append(true).open(p).map_err(io_err(p))?;
                if fresh {
                    writeln!(f, "image,model,look,psnr,mssim,si").map_err(io_err(p))?;
                }
                writeln!(f, "{row}").map_err(io_err(p))?;
            }
            None => println!("{row}"),
        }
    }
    Ok(0)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_metrics(a: &MetricsArgs) -> despeckle::Result<u8> {
    let reference = load_source(&a.reference)?;
    let test = load_any(&a.test)?;
    let s = score(&reference, &test, a.psnr_range)?;
    println!(
        "{},{},{},{:.4},{:.6},{:.6}",
        a.image.clone().unwrap_or_else(|| stem(&a.test)),
        a.model,
        a.looks.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
        s.psnr,
        s.mssim,
        s.si
    );
    Ok(0)
}

fn cmd_sweep_a(a: &SweepArgs) -> despeckle::Result<u8> {
    let mut solver = a.solver.clone();
    solver.model = despeckle::Model::Model1;
    let base = solver.params(Some(a.looks))?;
    let reference = load_source(&a.reference)?;
    let noisy = match &a.noisy {
        Some(p) => load_any(p)?,
        None => speckle_any(&reference, NoiseSpec::new(a.looks, a.seed)?)?,
    };
    let rows = sweep_a(&reference, &noisy, &base, &a.values, a.solver.dt, a.psnr_range)?;
    with_output(a.out.as_deref(), |w| write_sweep_csv(&rows, w))?;
    if let Some(best) = rows.iter().find(|r| r.best) {
        eprintln!("best A = {} (PSNR {:.4} dB)", best.a, best.psnr);
    }
    Ok(0)
}

fn cmd_bench(a: &BenchArgs) -> despeckle::Result<u8> {
    let mut cfg = BenchConfig::load(&a.config)?;
    if a.jobs.is_some() {
        cfg.jobs = a.jobs;
    }
    if cfg.jobs == Some(0) {
        return Err(Error::InvalidParameter("--jobs must be positive".into()));
    }
    if a.no_timing {
        cfg.timing = false;
    }
    let records = run_bench(&cfg)?;
    with_output(a.out.as_deref(), |w| write_bench_csv(&records, cfg.timing, w))?;
    let mut failed = 0;
    for r in &records {
        if let Err(e) = &r.outcome {
            eprintln!("row {}/L={}/{} failed: {e}", r.image, r.look, r.model);
            failed += 1;
        }
    }
    Ok(if failed > 0 { SOLVER_FAILURE } else { 0 })
}
