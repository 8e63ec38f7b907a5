//! Synthetic face scenes with exact ground-truth masks.
//!
//! A scene is a stack of ellipses drawn in script order (later regions paint
//! over earlier ones) in face-local coordinates, moved per frame by a
//! cumulative pose. Regions carry their palette colour plus a ±15 speckle
//! texture that moves with the face; the background is a static, dark
//! value-noise texture.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imaging::RgbImage;
use crate::mask_codec::{LabelMask, LandmarkClass};
use crate::math;

/// Peak intensity offset of the region speckle.
pub const SPECKLE_AMPLITUDE: f64 = 15.0;
/// Lattice spacing of the region speckle, in face-local pixels.
pub const SPECKLE_CELL: f64 = 3.0;
/// Brightest background grey level.
pub const BACKGROUND_MAX: f64 = 24.0;
/// Lattice spacing of the background texture, in pixels.
pub const BACKGROUND_CELL: f64 = 6.0;

/// One step of the splitmix64 generator.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub cls: LandmarkClass,
    pub cx: f64,
    pub cy: f64,
    pub ax: f64,
    pub ay: f64,
    /// Degrees, counter-clockwise in image coordinates (y down).
    pub rot: f64,
}

impl Region {
    /// Whether the face-local point lies inside the ellipse.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = (math::sin(self.rot.to_radians()), math::cos(self.rot.to_radians()));
        self.contains_with(x, y, c, s)
    }

    #[inline]
    fn contains_with(&self, x: f64, y: f64, cos_r: f64, sin_r: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = cos_r * dx + sin_r * dy;
        let v = -sin_r * dx + cos_r * dy;
        (u / self.ax) * (u / self.ax) + (v / self.ay) * (v / self.ay) <= 1.0
    }
}

/// Per-frame increments applied over frames `start..end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSegment {
    pub start: usize,
    pub end: usize,
    pub dx: f64,
    pub dy: f64,
    /// Degrees per frame about the face centre.
    pub drot: f64,
    /// Scale factor per frame about the face centre.
    pub dscale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneScript {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub frame_count: usize,
    pub regions: Vec<Region>,
    /// Empty means a static scene.
    pub motion: Vec<MotionSegment>,
}

impl SceneScript {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.width == 0 || self.height == 0 {
            return fail(format!("frame size {}x{} is empty", self.width, self.height));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return fail(format!("fps must be positive, got {}", self.fps));
        }
        if self.frame_count == 0 {
            return fail("frames must be at least 1".into());
        }
        for (i, r) in self.regions.iter().enumerate() {
            let finite = [r.cx, r.cy, r.ax, r.ay, r.rot].iter().all(|v| v.is_finite());
            if !finite || r.ax <= 0.0 || r.ay <= 0.0 {
                return fail(format!("region {} ({}) needs finite values and positive axes", i + 1, r.cls));
            }
        }
        let mut expected = 0;
        for (i, m) in self.motion.iter().enumerate() {
            if m.start >= m.end {
                return fail(format!("motion {} has start {} >= end {}", i + 1, m.start, m.end));
            }
            if m.start < expected {
                return fail(format!("motion {} overlaps the previous segment at frame {}", i + 1, m.start));
            }
            if m.start > expected {
                return fail(format!("frames {}..{} are not covered by any motion segment", expected, m.start));
            }
            if ![m.dx, m.dy, m.drot, m.dscale].iter().all(|v| v.is_finite()) || m.dscale <= 0.0 {
                return fail(format!("motion {} needs finite values and dscale > 0", i + 1));
            }
            expected = m.end;
        }
        if !self.motion.is_empty() && expected != self.frame_count {
            return fail(format!("motion segments end at {expected}, frames = {}", self.frame_count));
        }
        Ok(())
    }

    /// Fixed point the pose rotates and scales about: the skin ellipse
    /// centre, else the mean region centre, else the frame centre.
    pub fn face_center(&self) -> (f64, f64) {
        if let Some(r) = self.regions.iter().find(|r| r.cls == LandmarkClass::FaceSkin) {
            return (r.cx, r.cy);
        }
        if self.regions.is_empty() {
            return (self.width as f64 / 2.0, self.height as f64 / 2.0);
        }
        let n = self.regions.len() as f64;
        let sx: f64 = self.regions.iter().map(|r| r.cx).sum();
        let sy: f64 = self.regions.iter().map(|r| r.cy).sum();
        (sx / n, sy / n)
    }

    /// Cumulative pose of every frame.
    pub fn poses(&self) -> Vec<Pose> {
        let mut poses = Vec::with_capacity(self.frame_count);
        let mut pose = Pose::IDENTITY;
        let mut seg = 0;
        for f in 0..self.frame_count {
            if f > 0 {
                while seg < self.motion.len() && self.motion[seg].end <= f {
                    seg += 1;
                }
                if let Some(m) = self.motion.get(seg).filter(|m| m.start <= f) {
                    pose.tx += m.dx;
                    pose.ty += m.dy;
                    pose.rot += m.drot;
                    pose.scale *= m.dscale;
                }
            }
            poses.push(pose);
        }
        poses
    }
}

/// Face placement: translation of the face centre, rotation (degrees) and
/// uniform scale about it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub tx: f64,
    pub ty: f64,
    pub rot: f64,
    pub scale: f64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { tx: 0.0, ty: 0.0, rot: 0.0, scale: 1.0 };

    /// Face-local point to frame coordinates.
    pub fn apply(&self, center: (f64, f64), x: f64, y: f64) -> (f64, f64) {
        let (s, c) = (math::sin(self.rot.to_radians()), math::cos(self.rot.to_radians()));
        let (dx, dy) = (x - center.0, y - center.1);
        (
            center.0 + self.tx + self.scale * (c * dx - s * dy),
            center.1 + self.ty + self.scale * (s * dx + c * dy),
        )
    }

    /// Frame point to face-local coordinates.
    pub fn invert(&self, center: (f64, f64), x: f64, y: f64) -> (f64, f64) {
        let (s, c) = (math::sin(self.rot.to_radians()), math::cos(self.rot.to_radians()));
        let (dx, dy) = ((x - center.0 - self.tx) / self.scale, (y - center.1 - self.ty) / self.scale);
        (center.0 + c * dx + s * dy, center.1 - s * dx + c * dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub frames: Vec<RgbImage>,
    pub masks: Vec<LabelMask>,
    pub poses: Vec<Pose>,
}

/// Lattice value noise in [0, 1], bilinear between hashed lattice values.
fn value_noise(seed: u64, x: f64, y: f64, cell: f64) -> f64 {
    let (gx, gy) = (x / cell, y / cell);
    let (fx, fy) = (math::floor(gx), math::floor(gy));
    let (tx, ty) = (gx - fx, gy - fy);
    let (ix, iy) = (fx as i64, fy as i64);
    let at = |i: i64, j: i64| {
        let mut s = seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (j as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
        (splitmix64(&mut s) >> 11) as f64 / (1u64 << 53) as f64
    };
    let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
    let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
    top * (1.0 - ty) + bottom * ty
}

fn speckled(rgb: [u8; 3], offset: f64) -> [u8; 3] {
    rgb.map(|c| math::round_half_up((c as f64 + offset).clamp(0.0, 255.0)) as u8)
}

/// Renders one frame and its mask under `pose`.
pub fn render_frame(script: &SceneScript, pose: &Pose) -> Result<(RgbImage, LabelMask)> {
    let (w, h) = (script.width, script.height);
    let center = script.face_center();
    let trig: Vec<(f64, f64)> = script
        .regions
        .iter()
        .map(|r| (math::cos(r.rot.to_radians()), math::sin(r.rot.to_radians())))
        .collect();
    let bg_seed = script.seed ^ 0x6267_5f74_6578_7475;
    let fg_seed = script.seed ^ 0x7370_6563_6b6c_6521;
    let mut pixels = Vec::with_capacity(w * h);
    let mut labels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (lx, ly) = pose.invert(center, x as f64, y as f64);
            let hit = script
                .regions
                .iter()
                .zip(&trig)
                .rev()
                .find(|(r, &(c, s))| r.contains_with(lx, ly, c, s))
                .map(|(r, _)| r.cls);
            match hit {
                Some(cls) => {
                    let n = value_noise(fg_seed, lx, ly, SPECKLE_CELL);
                    pixels.push(speckled(cls.rgb(), SPECKLE_AMPLITUDE * (2.0 * n - 1.0)));
                    labels.push(cls);
                }
                None => {
                    let v = math::round_half_up(BACKGROUND_MAX * value_noise(bg_seed, x as f64, y as f64, BACKGROUND_CELL));
                    pixels.push([v as u8; 3]);
                    labels.push(LandmarkClass::Background);
                }
            }
        }
    }
    Ok((RgbImage::new(w, h, pixels)?, LabelMask::new(w, h, labels)?))
}

/// Renders every frame of a validated script.
pub fn generate_sequence(script: &SceneScript) -> Result<SyntheticSequence> {
    script.validate()?;
    let poses = script.poses();
    let mut frames = Vec::with_capacity(poses.len());
    let mut masks = Vec::with_capacity(poses.len());
    for pose in &poses {
        let (f, m) = render_frame(script, pose)?;
        frames.push(f);
        masks.push(m);
    }
    Ok(SyntheticSequence { frames, masks, poses })
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Top,
    Region,
    Motion,
}

struct Block {
    line: usize,
    keys: Vec<(String, String, usize)>,
}

impl Block {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        let i = self.keys.iter().position(|(k, _, _)| k == key)?;
        let (_, v, line) = self.keys.remove(i);
        Some((v, line))
    }

    fn number<T: core::str::FromStr>(&mut self, key: &str, default: Option<T>) -> Result<T> {
        match self.take(key) {
            Some((v, line)) => v.parse().map_err(|_| Error::Syntax {
                line,
                message: format!("`{key}` expects a number, got `{v}`"),
            }),
            None => default.ok_or_else(|| Error::Syntax {
                line: self.line,
                message: format!("missing required key `{key}`"),
            }),
        }
    }
}

/// Parses the scene script text format and validates the result.
///
/// ```text
/// seed = 7
/// width = 224
/// height = 224
/// fps = 30
/// frames = 60
///
/// [region]
/// class = FaceSkin
/// cx = 112
/// cy = 112
/// ax = 50
/// ay = 64
///
/// [motion]
/// start = 0
/// end = 60
/// dx = 0.5
/// ```
///
/// `#` starts a comment. `width`/`height` default to 224, `fps` to 30,
/// `rot`, `dx`, `dy`, `drot` to 0 and `dscale` to 1.
pub fn parse_script(text: &str) -> Result<SceneScript> {
    const TOP_KEYS: [&str; 5] = ["seed", "width", "height", "fps", "frames"];
    const REGION_KEYS: [&str; 6] = ["class", "cx", "cy", "ax", "ay", "rot"];
    const MOTION_KEYS: [&str; 6] = ["start", "end", "dx", "dy", "drot", "dscale"];

    let mut top = Block { line: 1, keys: Vec::new() };
    let mut blocks: Vec<(Section, Block)> = Vec::new();
    let mut section = Section::Top;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            section = match content {
                "[region]" => Section::Region,
                "[motion]" => Section::Motion,
                _ => {
                    return Err(Error::Syntax { line, message: format!("unknown section `{content}`") });
                }
            };
            blocks.push((section, Block { line, keys: Vec::new() }));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Syntax { line, message: format!("expected `key = value`, got `{content}`") });
        };
        let (key, value) = (key.trim(), value.trim());
        let allowed: &[&str] = match section {
            Section::Top => &TOP_KEYS,
            Section::Region => &REGION_KEYS,
            Section::Motion => &MOTION_KEYS,
        };
        if !allowed.contains(&key) {
            return Err(Error::Syntax { line, message: format!("unknown key `{key}`") });
        }
        let block = match blocks.last_mut() {
            Some((_, b)) if section != Section::Top => b,
            _ => &mut top,
        };
        if block.keys.iter().any(|(k, _, _)| k == key) {
            return Err(Error::Syntax { line, message: format!("duplicate key `{key}`") });
        }
        block.keys.push((key.into(), value.into(), line));
    }

    let mut script = SceneScript {
        seed: top.number("seed", None)?,
        width: top.number("width", Some(224))?,
        height: top.number("height", Some(224))?,
        fps: top.number("fps", Some(30.0))?,
        frame_count: top.number("frames", None)?,
        regions: Vec::new(),
        motion: Vec::new(),
    };
    for (kind, mut b) in blocks {
        match kind {
            Section::Region => {
                let (name, _) = b.take("class").ok_or_else(|| Error::Syntax {
                    line: b.line,
                    message: "missing required key `class`".into(),
                })?;
                let cls = LandmarkClass::from_name(&name).ok_or_else(|| {
                    let names: Vec<&str> = LandmarkClass::ALL.iter().map(|c| c.name()).collect();
                    Error::Validation(format!("unknown class `{name}`; expected one of {}", names.join(", ")))
                })?;
                script.regions.push(Region {
                    cls,
                    cx: b.number("cx", None)?,
                    cy: b.number("cy", None)?,
                    ax: b.number("ax", None)?,
                    ay: b.number("ay", None)?,
                    rot: b.number("rot", Some(0.0))?,
                });
            }
            Section::Motion => script.motion.push(MotionSegment {
                start: b.number("start", None)?,
                end: b.number("end", None)?,
                dx: b.number("dx", Some(0.0))?,
                dy: b.number("dy", Some(0.0))?,
                drot: b.number("drot", Some(0.0))?,
                dscale: b.number("dscale", Some(1.0))?,
            }),
            Section::Top => unreachable!(),
        }
    }
    script.validate()?;
    Ok(script)
}
