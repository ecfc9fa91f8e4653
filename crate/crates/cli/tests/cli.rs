use std::path::Path;
use std::process::{Command, Output};

use despeckle::pnm::{load_any, save_ppm, AnyImage};
use despeckle::phantom::Phantom;
use despeckle::ColorImage;

fn despeckle(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_despeckle"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_color(dir: &Path) {
    let a = Phantom::Parrots.render(32, 1).unwrap();
    let b = Phantom::Texture.render(32, 1).unwrap();
    let c = Phantom::Blocks.render(32, 1).unwrap();
    save_ppm(&ColorImage::new(a, b, c).unwrap(), dir.join("clean.ppm")).unwrap();
}

#[test]
fn noise_is_reproducible_and_records_spec() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a.pgm", "b.pgm"] {
        let o = despeckle(&["noise", "phantom:parrots", "--looks", "3", "--seed", "9", "--out", out], d);
        assert_eq!(code(&o), 0, "{o:?}");
    }
    assert_eq!(std::fs::read(d.join("a.pgm")).unwrap(), std::fs::read(d.join("b.pgm")).unwrap());
    let record = std::fs::read_to_string(d.join("a.txt")).unwrap();
    assert!(record.contains("looks = 3") && record.contains("seed = 9"), "{record}");

    let o = despeckle(&["noise", "phantom:parrots", "--looks", "1", "--seed", "10", "--out", "c.pgm"], d);
    assert_eq!(code(&o), 0);
    assert_ne!(std::fs::read(d.join("a.pgm")).unwrap(), std::fs::read(d.join("c.pgm")).unwrap());
}

#[test]
fn noise_rejects_zero_looks() {
    let dir = tempfile::tempdir().unwrap();
    let o = despeckle(&["noise", "phantom:parrots", "--looks", "0", "--out", "x.pgm"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("x.pgm").exists());
}

#[test]
fn color_noise_uses_independent_channels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_color(d);
    let o = despeckle(&["noise", "clean.ppm", "--looks", "1", "--seed", "4", "--out", "noisy.ppm"], d);
    assert_eq!(code(&o), 0, "{o:?}");
    let record = std::fs::read_to_string(d.join("noisy.txt")).unwrap();
    assert!(record.contains("seed_r") && record.contains("seed_b"));
    let noisy = match load_any(d.join("noisy.ppm")).unwrap() {
        AnyImage::Color(c) => c,
        other => panic!("{other:?}"),
    };
    let clean = match load_any(d.join("clean.ppm")).unwrap() {
        AnyImage::Color(c) => c,
        other => panic!("{other:?}"),
    };
    // Multiplicative factors differ between channels at the same pixel.
    let ratio = |n: &despeckle::ImageGrid, c: &despeckle::ImageGrid| n.get(5, 5) / c.get(5, 5);
    assert_ne!(ratio(noisy.r(), clean.r()), ratio(noisy.g(), clean.g()));
}

#[test]
fn denoise_dispatches_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = despeckle(&["noise", "phantom:blocks", "--looks", "3", "--out", "n.pgm"], d);
    assert_eq!(code(&o), 0);
    let o = despeckle(
        &[
            "denoise", "n.pgm", "--reference", "phantom:blocks", "--looks", "3", "--model", "tdm",
            "--max-iters", "5", "--trace", "trace.csv", "--out", "r.pgm",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{o:?}");
    let row = stdout(&o);
    let fields: Vec<&str> = row.trim().split(',').collect();
    assert_eq!(fields.len(), 6, "{row}");
    assert_eq!(&fields[..3], ["n", "tdm", "3"]);
    let trace = std::fs::read_to_string(d.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "channel,iteration,rel_change,psnr,mssim");
    assert!(lines.len() >= 2 && lines.len() <= 6);
    assert!(matches!(load_any(d.join("r.pgm")).unwrap(), AnyImage::Gray(_)));

    write_color(d);
    let o = despeckle(&["noise", "clean.ppm", "--looks", "5", "--out", "cn.ppm"], d);
    assert_eq!(code(&o), 0);
    let o = despeckle(
        &["denoise", "cn.ppm", "--model", "model2", "--max-iters", "3", "--trace", "ct.csv", "--out", "cr.ppm"],
        d,
    );
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(matches!(load_any(d.join("cr.ppm")).unwrap(), AnyImage::Color(_)));
    let trace = std::fs::read_to_string(d.join("ct.csv")).unwrap();
    assert!(trace.lines().any(|l| l.starts_with("2,")));
}

#[test]
fn denoise_reports_missing_input_and_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = despeckle(&["denoise", "nope.pgm", "--out", "x.pgm"], d);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.pgm"));

    despeckle(&["noise", "phantom:blocks", "--looks", "1", "--out", "n.pgm"], d);
    let o = despeckle(
        &[
            "denoise", "n.pgm", "--model", "tdfm", "--dt", "1000", "--gamma", "0", "--k", "1e300",
            "--threshold-units", "intensity", "--out", "x.pgm",
        ],
        d,
    );
    assert_eq!(code(&o), 1, "{o:?}");

    let o = despeckle(&["denoise", "n.pgm", "--model", "nonsense", "--out", "x.pgm"], d);
    assert_eq!(code(&o), 2);
    let o = despeckle(&["denoise", "n.pgm", "--fidelity", "maybe", "--out", "x.pgm"], d);
    assert_eq!(code(&o), 2);
}

#[test]
fn metrics_prints_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    despeckle(&["noise", "phantom:texture", "--looks", "10", "--out", "n.pgm"], d);
    let o = despeckle(&["metrics", "phantom:texture", "n.pgm", "--model", "noisy", "--looks", "10"], d);
    assert_eq!(code(&o), 0, "{o:?}");
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    let f: Vec<&str> = out.trim().split(',').collect();
    assert_eq!(&f[..3], ["n", "noisy", "10"]);
    let psnr: f64 = f[3].parse().unwrap();
    assert!(psnr > 5.0 && psnr < 40.0);
}

#[test]
fn sweep_a_rows_and_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = despeckle(&["sweep-a", "phantom:blocks", "--values", "0.5", "--max-iters", "3"], d);
    assert_eq!(code(&o), 0, "{o:?}");
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.5,") && lines[1].ends_with(",1"));

    let o = despeckle(&["sweep-a", "phantom:blocks", "--values", "0.3,1.2"], d);
    assert_eq!(code(&o), 2);
}

#[test]
fn bench_is_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("b.ini"),
        "[bench]\nseed = 3\n\n[image p]\nsource = phantom:parrots\nsize = 32\npreset = parrots\n\n[grid]\nlooks = 1, 3\nmax_iters = 6\n",
    )
    .unwrap();
    let o1 = despeckle(&["bench", "b.ini", "--no-timing", "--jobs", "1", "--out", "one.csv"], d);
    let o2 = despeckle(&["bench", "b.ini", "--no-timing", "--jobs", "4", "--out", "two.csv"], d);
    assert_eq!(code(&o1), 0, "{o1:?}");
    assert_eq!(code(&o2), 0);
    let one = std::fs::read(d.join("one.csv")).unwrap();
    assert_eq!(one, std::fs::read(d.join("two.csv")).unwrap());
    let text = String::from_utf8(one).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 4);
    assert_eq!(text.lines().next(), Some("image,look,model,mssim,psnr,si,iterations,wall_ms"));

    let o = despeckle(&["bench", "missing.ini"], d);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&despeckle(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&despeckle(&["noise", "phantom:parrots"], dir.path())), 2);
}
