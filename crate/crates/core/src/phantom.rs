//! Deterministic synthetic test images.
//!
//! * `parrots`: smooth shaded background with overlapping bright and dark
//!   ellipses, a mix of flat regions, soft shading and sharp edges.
//! * `texture`: oriented gratings and a checkerboard of varying period.
//! * `blocks`: piecewise-constant rectangles on a flat background
//!   (homogeneous regions, as in SAR/ultrasound scenes).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::noise::SpeckleRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phantom {
    Parrots,
    Texture,
    Blocks,
}

impl Phantom {
    pub fn name(self) -> &'static str {
        match self {
            Phantom::Parrots => "parrots",
            Phantom::Texture => "texture",
            Phantom::Blocks => "blocks",
        }
    }

    pub fn render(self, size: usize, seed: u64) -> Result<ImageGrid> {
        match self {
            Phantom::Parrots => parrots_like(size, seed),
            Phantom::Texture => texture_like(size, seed),
            Phantom::Blocks => blocks(size, seed),
        }
    }
}

impl fmt::Display for Phantom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phantom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parrots" => Ok(Phantom::Parrots),
            "texture" => Ok(Phantom::Texture),
            "blocks" | "sar" => Ok(Phantom::Blocks),
            _ => Err(Error::InvalidParameter(format!("unknown phantom {s:?}"))),
        }
    }
}

pub fn parrots_like(size: usize, seed: u64) -> Result<ImageGrid> {
    let mut rng = SpeckleRng::new(seed);
    let n = size as f64;
    struct Ellipse {
        ci: f64,
        cj: f64,
        ri: f64,
        rj: f64,
        rot: f64,
        value: f64,
        shade: f64,
    }
    let mut shapes = Vec::new();
    for _ in 0..9 {
        shapes.push(Ellipse {
            ci: n * (0.15 + 0.7 * rng.next_open01()),
            cj: n * (0.15 + 0.7 * rng.next_open01()),
            ri: n * (0.06 + 0.16 * rng.next_open01()),
            rj: n * (0.06 + 0.16 * rng.next_open01()),
            rot: std::f64::consts::PI * rng.next_open01(),
            value: 30.0 + 200.0 * rng.next_open01(),
            shade: 0.25 * (rng.next_open01() - 0.5),
        });
    }
    ImageGrid::from_fn(size, size, |i, j| {
        let (y, x) = (i as f64, j as f64);
        let mut v = 70.0 + 60.0 * (x / n) + 25.0 * (std::f64::consts::PI * y / n).sin();
        for e in &shapes {
            let (dy, dx) = (y - e.ci, x - e.cj);
            let (c, s) = (e.rot.cos(), e.rot.sin());
            let u = (c * dx + s * dy) / e.rj;
            let w = (-s * dx + c * dy) / e.ri;
            let r2 = u * u + w * w;
            if r2 <= 1.0 {
                v = e.value * (1.0 + e.shade * (1.0 - r2));
            }
        }
        v.clamp(15.0, 240.0)
    })
}

pub fn texture_like(size: usize, seed: u64) -> Result<ImageGrid> {
    let mut rng = SpeckleRng::new(seed);
    let phase = 2.0 * std::f64::consts::PI * rng.next_open01();
    let angle = std::f64::consts::FRAC_PI_4 * (0.5 + rng.next_open01());
    let n = size as f64;
    ImageGrid::from_fn(size, size, |i, j| {
        let (y, x) = (i as f64, j as f64);
        let half = size / 2;
        match (i < half, j < half) {
            // Vertical stripes, period 16.
            (true, true) => if (j / 8) % 2 == 0 { 60.0 } else { 190.0 },
            // Oriented sinusoidal grating, period ~ 20 px.
            (true, false) => {
                let t = x * angle.cos() + y * angle.sin();
                125.0 + 80.0 * (2.0 * std::f64::consts::PI * t / 20.0 + phase).sin()
            }
            // Checkerboard, 12 px cells.
            (false, true) => if (i / 12 + j / 12) % 2 == 0 { 50.0 } else { 200.0 },
            // Concentric rings with slowly growing period.
            (false, false) => {
                let (dy, dx) = (y - 0.75 * n, x - 0.75 * n);
                let r = (dx * dx + dy * dy).sqrt();
                125.0 + 70.0 * (r * r / (6.0 * n)).cos()
            }
        }
    })
}

pub fn blocks(size: usize, seed: u64) -> Result<ImageGrid> {
    let mut rng = SpeckleRng::new(seed);
    let n = size as f64;
    let mut rects = Vec::new();
    for _ in 0..6 {
        let h = n * (0.15 + 0.25 * rng.next_open01());
        let w = n * (0.15 + 0.25 * rng.next_open01());
        let top = (n - h) * rng.next_open01();
        let left = (n - w) * rng.next_open01();
        rects.push((top, left, h, w, 90.0 + 60.0 * rng.next_open01()));
    }
    ImageGrid::from_fn(size, size, |i, j| {
        let (y, x) = (i as f64, j as f64);
        let mut v = 100.0;
        for &(t, l, h, w, val) in &rects {
            if y >= t && y < t + h && x >= l && x < l + w {
                v = val;
            }
        }
        v
    })
}
