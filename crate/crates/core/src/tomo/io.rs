//! Raw binary formats for exact round-trips plus 16-bit PGM for viewing.
//!
//! Images: `BIMG1\n{side}\n` then `side²` little-endian `f64`.
//! Sinograms: `BSIN1\n{n_angles} {n_det} {angle_min} {angle_max}\n` then
//! `n_angles · n_det` little-endian `f64`, row-major by angle.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

use super::geometry::{Geometry, Sinogram};

const IMAGE_MAGIC: &[u8] = b"BIMG1\n";
const SINO_MAGIC: &[u8] = b"BSIN1\n";

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format { offset, message: message.into() }
}

fn push_doubles(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(8 * values.len());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn expect_magic(bytes: &[u8], magic: &[u8]) -> Result<usize> {
    if bytes.is_empty() {
        return Err(format_err(0, "empty file"));
    }
    for (i, &m) in magic.iter().enumerate() {
        match bytes.get(i) {
            Some(&b) if b == m => {}
            Some(_) => return Err(format_err(i, format!("bad magic, expected {:?}", String::from_utf8_lossy(magic)))),
            None => return Err(format_err(i, "truncated magic")),
        }
    }
    Ok(magic.len())
}

/// The header line starting at `start`, without its newline, and the offset
/// just past it.
fn header_line(bytes: &[u8], start: usize) -> Result<(&str, usize)> {
    let end = bytes[start..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|p| start + p)
        .ok_or_else(|| format_err(start, "unterminated header line"))?;
    let text = std::str::from_utf8(&bytes[start..end])
        .map_err(|e| format_err(start + e.valid_up_to(), "header is not UTF-8"))?;
    Ok((text, end + 1))
}

fn parse_field<T: std::str::FromStr>(line: &str, line_start: usize, field: &str, name: &str) -> Result<T> {
    let offset = line_start + (field.as_ptr() as usize - line.as_ptr() as usize);
    field.parse().map_err(|_| format_err(offset, format!("cannot parse {name} from {field:?}")))
}

fn read_doubles(bytes: &[u8], start: usize, count: usize) -> Result<Vec<f64>> {
    let body = &bytes[start..];
    let expected = count * 8;
    if body.len() != expected {
        return Err(format_err(
            start,
            format!("payload length mismatch: expected {expected} bytes, found {}", body.len()),
        ));
    }
    Ok(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect())
}

pub fn encode_image(img: &Image) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(IMAGE_MAGIC);
    out.extend_from_slice(format!("{}\n", img.side()).as_bytes());
    push_doubles(&mut out, img.data());
    out
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let pos = expect_magic(bytes, IMAGE_MAGIC)?;
    let (line, next) = header_line(bytes, pos)?;
    let side: usize = parse_field(line, pos, line.trim(), "side")?;
    if side == 0 {
        return Err(format_err(pos, "side must be positive"));
    }
    let data = read_doubles(bytes, next, side * side)?;
    Image::new(side, data).map_err(|e| format_err(next, e.to_string()))
}

pub fn encode_sinogram(s: &Sinogram) -> Vec<u8> {
    let g = s.geometry();
    let mut out = Vec::new();
    out.extend_from_slice(SINO_MAGIC);
    out.extend_from_slice(format!("{} {} {} {}\n", g.n_angles(), g.n_det(), g.angle_min(), g.angle_max()).as_bytes());
    push_doubles(&mut out, s.data());
    out
}

pub fn decode_sinogram(bytes: &[u8]) -> Result<Sinogram> {
    let pos = expect_magic(bytes, SINO_MAGIC)?;
    let (line, next) = header_line(bytes, pos)?;
    let fields: Vec<&str> = line.split_ascii_whitespace().collect();
    if fields.len() != 4 {
        return Err(format_err(pos, format!("expected 4 header fields, found {}", fields.len())));
    }
    let n_angles: usize = parse_field(line, pos, fields[0], "n_angles")?;
    let n_det: usize = parse_field(line, pos, fields[1], "n_det")?;
    let angle_min: f64 = parse_field(line, pos, fields[2], "angle_min")?;
    let angle_max: f64 = parse_field(line, pos, fields[3], "angle_max")?;
    let geometry = Geometry::new(n_angles, n_det, angle_min, angle_max).map_err(|e| format_err(pos, e.to_string()))?;
    let data = read_doubles(bytes, next, geometry.len())?;
    Sinogram::new(geometry, data).map_err(|e| format_err(next, e.to_string()))
}

/// Binary 16-bit PGM, scaled so the maximum maps to 65535; negatives clip to 0.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let side = img.side();
    let max = img.data().iter().copied().fold(0.0f64, f64::max);
    let mut out = format!("P5\n{side} {side}\n65535\n").into_bytes();
    out.reserve(2 * img.len());
    for &v in img.data() {
        let q = if max > 0.0 { (v.max(0.0) / max * 65535.0).round() as u16 } else { 0 };
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

pub fn write_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    fs::write(path, encode_image(img))?;
    Ok(())
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    decode_image(&fs::read(path)?)
}

pub fn write_sinogram(path: impl AsRef<Path>, s: &Sinogram) -> Result<()> {
    fs::write(path, encode_sinogram(s))?;
    Ok(())
}

pub fn read_sinogram(path: impl AsRef<Path>) -> Result<Sinogram> {
    decode_sinogram(&fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}
