//! Binary PGM (P5) images.

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// Grayscale image with samples rescaled to `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { spec: path.display().to_string(), msg: msg.into() }
}

/// Read a P5 file; 8- and 16-bit samples are both accepted.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    parse_pgm(&bytes).map_err(|m| parse_err(path, m))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(format!("magic {:?} is not P5", fields[0]));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad header field {s:?}"));
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(format!("bad dimensions {width}x{height} or maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let bps = if maxval < 256 { 1 } else { 2 };
    let need = width * height * bps;
    let raster = bytes.get(pos..pos + need).ok_or_else(|| format!("raster has fewer than {need} bytes"))?;
    let scale = 1.0 / maxval as f64;
    let data = if bps == 1 {
        raster.iter().map(|&b| b as f64 * scale).collect()
    } else {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale).collect()
    };
    Ok(GrayImage { width, height, data })
}

/// Write an 8-bit P5 file, clamping samples to `[0, 1]`.
pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "P5\n{} {}\n255\n", img.width, img.height)?;
    let raster: Vec<u8> = img.data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    f.write_all(&raster)?;
    Ok(())
}
