//! Nine-class facial landmark palette and label masks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, RgbImage};

/// Landmark class. The discriminant is the stable class id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum LandmarkClass {
    Background = 0,
    Hair = 1,
    FaceSkin = 2,
    Sclera = 3,
    Pupil = 4,
    Eyebrow = 5,
    Nostril = 6,
    Lip = 7,
    InnerMouth = 8,
}

impl LandmarkClass {
    pub const COUNT: usize = 9;

    pub const ALL: [LandmarkClass; 9] = [
        LandmarkClass::Background,
        LandmarkClass::Hair,
        LandmarkClass::FaceSkin,
        LandmarkClass::Sclera,
        LandmarkClass::Pupil,
        LandmarkClass::Eyebrow,
        LandmarkClass::Nostril,
        LandmarkClass::Lip,
        LandmarkClass::InnerMouth,
    ];

    #[inline]
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    /// Palette colour used in mask images.
    pub fn rgb(self) -> [u8; 3] {
        match self {
            LandmarkClass::Background => [0, 0, 0],
            LandmarkClass::Hair => [106, 57, 6],
            LandmarkClass::FaceSkin => [255, 255, 0],
            LandmarkClass::Sclera => [0, 255, 0],
            LandmarkClass::Pupil => [0, 0, 255],
            LandmarkClass::Eyebrow => [255, 0, 255],
            LandmarkClass::Nostril => [0, 255, 255],
            LandmarkClass::Lip => [255, 0, 0],
            LandmarkClass::InnerMouth => [255, 255, 255],
        }
    }

    pub fn from_rgb(rgb: [u8; 3]) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.rgb() == rgb)
    }

    pub fn name(self) -> &'static str {
        match self {
            LandmarkClass::Background => "Background",
            LandmarkClass::Hair => "Hair",
            LandmarkClass::FaceSkin => "FaceSkin",
            LandmarkClass::Sclera => "Sclera",
            LandmarkClass::Pupil => "Pupil",
            LandmarkClass::Eyebrow => "Eyebrow",
            LandmarkClass::Nostril => "Nostril",
            LandmarkClass::Lip => "Lip",
            LandmarkClass::InnerMouth => "InnerMouth",
        }
    }

    /// Parses a canonical name or one of the report aliases
    /// ("Face skin", "MOUTH", "INNER MOUTH", "Between mouth", ...).
    /// Case, spaces, underscores and hyphens are ignored.
    pub fn from_name(name: &str) -> Option<Self> {
        let mut key = [0u8; 32];
        let mut n = 0;
        for b in name.bytes() {
            if b == b' ' || b == b'_' || b == b'-' {
                continue;
            }
            if n == key.len() {
                return None;
            }
            key[n] = b.to_ascii_lowercase();
            n += 1;
        }
        Some(match &key[..n] {
            b"background" => LandmarkClass::Background,
            b"hair" => LandmarkClass::Hair,
            b"faceskin" | b"skin" => LandmarkClass::FaceSkin,
            b"sclera" => LandmarkClass::Sclera,
            b"pupil" => LandmarkClass::Pupil,
            b"eyebrow" => LandmarkClass::Eyebrow,
            b"nostril" => LandmarkClass::Nostril,
            b"lip" | b"mouth" => LandmarkClass::Lip,
            b"innermouth" | b"betweenmouth" => LandmarkClass::InnerMouth,
            _ => return None,
        })
    }
}

impl fmt::Display for LandmarkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-pixel class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<LandmarkClass>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<LandmarkClass>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::invalid(format!(
                "label buffer of {} for a {width}x{height} mask",
                labels.len()
            )));
        }
        Ok(LabelMask { width, height, labels })
    }

    pub fn filled(width: usize, height: usize, cls: LandmarkClass) -> Result<Self> {
        LabelMask::new(width, height, vec![cls; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[LandmarkClass] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> LandmarkClass {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, cls: LandmarkClass) {
        self.labels[y * self.width + x] = cls;
    }

    /// Pixel count per class id.
    pub fn histogram(&self) -> [usize; LandmarkClass::COUNT] {
        let mut h = [0; LandmarkClass::COUNT];
        for &c in &self.labels {
            h[c as usize] += 1;
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeMode {
    /// Off-palette pixels are an error.
    #[default]
    Strict,
    /// Off-palette pixels snap to the closest palette colour (ties to the smaller id).
    Nearest,
}

fn nearest_class(rgb: [u8; 3]) -> LandmarkClass {
    let mut best = LandmarkClass::Background;
    let mut best_d = u32::MAX;
    for c in LandmarkClass::ALL {
        let p = c.rgb();
        let d: u32 = (0..3)
            .map(|k| {
                let diff = rgb[k] as i32 - p[k] as i32;
                (diff * diff) as u32
            })
            .sum();
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

pub fn decode_mask(img: &RgbImage, mode: DecodeMode) -> Result<LabelMask> {
    let mut labels = Vec::with_capacity(img.pixels().len());
    for (i, &rgb) in img.pixels().iter().enumerate() {
        let cls = match (LandmarkClass::from_rgb(rgb), mode) {
            (Some(c), _) => c,
            (None, DecodeMode::Nearest) => nearest_class(rgb),
            (None, DecodeMode::Strict) => {
                return Err(Error::Decode { x: i % img.width(), y: i / img.width(), rgb })
            }
        };
        labels.push(cls);
    }
    Ok(LabelMask { width: img.width(), height: img.height(), labels })
}

pub fn encode_mask(mask: &LabelMask) -> RgbImage {
    let data = mask.labels.iter().map(|c| c.rgb()).collect();
    RgbImage::new(mask.width, mask.height, data).expect("mask dimensions are valid")
}

pub fn class_mask(mask: &LabelMask, cls: LandmarkClass) -> BinaryMask {
    let data = mask.labels.iter().map(|&c| c == cls).collect();
    BinaryMask::new(mask.width, mask.height, data).expect("mask dimensions are valid")
}
