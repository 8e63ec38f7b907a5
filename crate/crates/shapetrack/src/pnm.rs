//! Binary PGM (P5) and PPM (P6) with maxval 255.

use shapetrack_core::{GrayImage, RgbImage};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("PNM format error at byte {offset}: {message}")]
pub struct PnmError {
    pub offset: usize,
    pub message: String,
}

fn fail<T>(offset: usize, message: impl Into<String>) -> Result<T, PnmError> {
    Err(PnmError { offset, message: message.into() })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PnmImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

struct Header {
    rgb: bool,
    width: usize,
    height: usize,
    body: usize,
}

fn skip_space(bytes: &[u8], mut i: usize) -> usize {
    loop {
        match bytes.get(i) {
            Some(b) if b.is_ascii_whitespace() => i += 1,
            Some(b'#') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            _ => return i,
        }
    }
}

fn number(bytes: &[u8], i: usize, what: &str) -> Result<(usize, usize), PnmError> {
    let start = skip_space(bytes, i);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return fail(start, format!("expected {what}"));
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ascii digits");
    match text.parse::<usize>() {
        Ok(v) => Ok((v, end)),
        Err(_) => fail(start, format!("{what} `{text}` out of range")),
    }
}

fn header(bytes: &[u8]) -> Result<Header, PnmError> {
    let rgb = match bytes.get(..2) {
        Some(b"P5") => false,
        Some(b"P6") => true,
        _ => return fail(0, "expected magic P5 or P6"),
    };
    let (width, i) = number(bytes, 2, "width")?;
    let (height, i) = number(bytes, i, "height")?;
    let (maxval, i) = number(bytes, i, "maxval")?;
    if width == 0 || height == 0 {
        return fail(2, format!("empty image {width}x{height}"));
    }
    if maxval != 255 {
        return fail(i, format!("maxval {maxval} is not 255"));
    }
    match bytes.get(i) {
        Some(b) if b.is_ascii_whitespace() => Ok(Header { rgb, width, height, body: i + 1 }),
        _ => fail(i, "expected a single whitespace byte before the body"),
    }
}

pub fn read_pnm(bytes: &[u8]) -> Result<PnmImage, PnmError> {
    let h = header(bytes)?;
    let channels = if h.rgb { 3 } else { 1 };
    let need = h
        .width
        .checked_mul(h.height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or(PnmError { offset: 2, message: "dimensions overflow".into() })?;
    let body = &bytes[h.body..];
    if body.len() < need {
        return fail(bytes.len(), format!("body has {} bytes, expected {need}", body.len()));
    }
    if body.len() > need {
        return fail(h.body + need, format!("{} trailing bytes after the body", body.len() - need));
    }
    let img = if h.rgb {
        let px = body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        PnmImage::Rgb(RgbImage::new(h.width, h.height, px).expect("sizes checked"))
    } else {
        let px = body.iter().map(|&v| v as f32).collect();
        PnmImage::Gray(GrayImage::new(h.width, h.height, px).expect("sizes checked"))
    };
    Ok(img)
}

pub fn read_ppm(bytes: &[u8]) -> Result<RgbImage, PnmError> {
    match read_pnm(bytes)? {
        PnmImage::Rgb(img) => Ok(img),
        PnmImage::Gray(_) => fail(0, "expected an RGB (P6) image"),
    }
}

pub fn write_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(img.pixels().len() * 3);
    for p in img.pixels() {
        out.extend_from_slice(p);
    }
    out
}

/// Samples are rounded half-up to integers.
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| (v + 0.5).floor().clamp(0.0, 255.0) as u8));
    out
}

pub fn write_pnm(img: &PnmImage) -> Vec<u8> {
    match img {
        PnmImage::Gray(g) => write_pgm(g),
        PnmImage::Rgb(c) => write_ppm(c),
    }
}
