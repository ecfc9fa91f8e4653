//! Netpbm gray (P2/P5) and color (P3/P6) readers and writers.
//!
//! Samples are converted to `f64` on load and `range_max` is set to the file
//! maxval. On save, values are clamped to `[0, maxval]` and rounded half to
//! even; files are always written in the binary variant (P5/P6), with two
//! big-endian bytes per sample when maxval exceeds 255.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{merge_channels, ColorImage, ImageGrid};

const MAX_MAXVAL: u32 = 65535;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    GrayAscii,
    GrayBinary,
    ColorAscii,
    ColorBinary,
}

impl Kind {
    fn samples_per_pixel(self) -> usize {
        match self {
            Kind::GrayAscii | Kind::GrayBinary => 1,
            Kind::ColorAscii | Kind::ColorBinary => 3,
        }
    }

    fn is_binary(self) -> bool {
        matches!(self, Kind::GrayBinary | Kind::ColorBinary)
    }
}

struct Header {
    kind: Kind,
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the first raster byte.
    data_start: usize,
}

/// Byte cursor over a header that skips whitespace and `#` comments.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{what} out of range")))
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 {
        return Err(Error::MalformedHeader("file too short for magic".into()));
    }
    let kind = match &bytes[..2] {
        b"P2" => Kind::GrayAscii,
        b"P5" => Kind::GrayBinary,
        b"P3" => Kind::ColorAscii,
        b"P6" => Kind::ColorBinary,
        other => {
            return Err(Error::UnsupportedMagic(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > MAX_MAXVAL {
        return Err(Error::MalformedHeader(format!(
            "maxval {maxval} outside 1..={MAX_MAXVAL}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero image dimension".into()));
    }
    // Exactly one whitespace byte separates maxval from a binary raster.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => return Err(Error::MalformedHeader("garbage after maxval".into())),
        None => {}
    }
    Ok(Header {
        kind,
        width,
        height,
        maxval,
        data_start: cur.pos,
    })
}

fn read_samples(bytes: &[u8], header: &Header) -> Result<Vec<f64>> {
    let expected = header.width * header.height * header.kind.samples_per_pixel();
    let raster = &bytes[header.data_start..];
    let maxval = header.maxval as f64;
    let samples: Vec<f64> = if header.kind.is_binary() {
        if header.maxval < 256 {
            if raster.len() < expected {
                return Err(Error::Truncated {
                    expected,
                    got: raster.len(),
                });
            }
            raster[..expected].iter().map(|&b| b as f64).collect()
        } else {
            if raster.len() < 2 * expected {
                return Err(Error::Truncated {
                    expected,
                    got: raster.len() / 2,
                });
            }
            raster[..2 * expected]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                .collect()
        }
    } else {
        let mut cur = Cursor {
            bytes: raster,
            pos: 0,
        };
        let mut out = Vec::with_capacity(expected);
        for _ in 0..expected {
            cur.skip_space_and_comments();
            if cur.pos >= raster.len() {
                return Err(Error::Truncated {
                    expected,
                    got: out.len(),
                });
            }
            let v = cur
                .number("sample")
                .map_err(|_| Error::MalformedHeader("non-numeric ASCII sample".into()))?;
            out.push(v as f64);
        }
        out
    };
    if let Some(v) = samples.iter().find(|&&v| v > maxval) {
        return Err(Error::MalformedHeader(format!(
            "sample {v} exceeds maxval {maxval}"
        )));
    }
    Ok(samples)
}

/// Decodes a P2/P5 image from memory.
pub fn decode_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let header = parse_header(bytes)?;
    if header.kind.samples_per_pixel() != 1 {
        return Err(Error::UnsupportedMagic(
            String::from_utf8_lossy(&bytes[..2]).into_owned(),
        ));
    }
    let data = read_samples(bytes, &header)?;
    ImageGrid::new(header.width, header.height, data, header.maxval as f64)
}

/// Decodes a P3/P6 image from memory.
pub fn decode_ppm(bytes: &[u8]) -> Result<ColorImage> {
    let header = parse_header(bytes)?;
    if header.kind.samples_per_pixel() != 3 {
        return Err(Error::UnsupportedMagic(
            String::from_utf8_lossy(&bytes[..2]).into_owned(),
        ));
    }
    let data = read_samples(bytes, &header)?;
    let n = header.width * header.height;
    let mut channels = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for px in data.chunks_exact(3) {
        for (ch, &v) in channels.iter_mut().zip(px) {
            ch.push(v);
        }
    }
    let [r, g, b] = channels;
    let maxval = header.maxval as f64;
    merge_channels(
        ImageGrid::new(header.width, header.height, r, maxval)?,
        ImageGrid::new(header.width, header.height, g, maxval)?,
        ImageGrid::new(header.width, header.height, b, maxval)?,
    )
}

/// Maxval used when writing an image with the given declared range.
pub fn maxval_for(range_max: f64) -> u32 {
    (range_max.round_ties_even() as u32).clamp(1, MAX_MAXVAL)
}

/// Clamp to `[0, maxval]` and round half to even.
pub fn quantize(value: f64, maxval: u32) -> u32 {
    value.clamp(0.0, maxval as f64).round_ties_even() as u32
}

fn push_sample(out: &mut Vec<u8>, v: u32, maxval: u32) {
    if maxval < 256 {
        out.push(v as u8);
    } else {
        out.extend_from_slice(&(v as u16).to_be_bytes());
    }
}

/// Encodes as binary P5.
pub fn encode_pgm(image: &ImageGrid) -> Vec<u8> {
    let maxval = maxval_for(image.range_max());
    let mut out = format!("P5\n{} {}\n{}\n", image.width(), image.height(), maxval).into_bytes();
    for &v in image.data() {
        push_sample(&mut out, quantize(v, maxval), maxval);
    }
    out
}

/// Encodes as binary P6.
pub fn encode_ppm(image: &ColorImage) -> Vec<u8> {
    let maxval = maxval_for(image.range_max());
    let mut out = format!("P6\n{} {}\n{}\n", image.width(), image.height(), maxval).into_bytes();
    let [r, g, b] = image.channels();
    for ((&rv, &gv), &bv) in r.data().iter().zip(g.data()).zip(b.data()) {
        for v in [rv, gv, bv] {
            push_sample(&mut out, quantize(v, maxval), maxval);
        }
    }
    out
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<ImageGrid> {
    decode_pgm(&read_file(path.as_ref())?)
}

pub fn save_pgm(image: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm(image))
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<ColorImage> {
    decode_ppm(&read_file(path.as_ref())?)
}

pub fn save_ppm(image: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_ppm(image))
}

/// Either kind of Netpbm image, dispatched on the magic number.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyImage {
    Gray(ImageGrid),
    Color(ColorImage),
}

pub fn decode_any(bytes: &[u8]) -> Result<AnyImage> {
    match bytes.get(..2) {
        Some(b"P2") | Some(b"P5") => decode_pgm(bytes).map(AnyImage::Gray),
        Some(b"P3") | Some(b"P6") => decode_ppm(bytes).map(AnyImage::Color),
        Some(m) => Err(Error::UnsupportedMagic(String::from_utf8_lossy(m).into_owned())),
        None => Err(Error::MalformedHeader("file too short for magic".into())),
    }
}

pub fn load_any(path: impl AsRef<Path>) -> Result<AnyImage> {
    decode_any(&read_file(path.as_ref())?)
}

pub fn save_any(image: &AnyImage, path: impl AsRef<Path>) -> Result<()> {
    match image {
        AnyImage::Gray(g) => save_pgm(g, path),
        AnyImage::Color(c) => save_ppm(c, path),
    }
}
