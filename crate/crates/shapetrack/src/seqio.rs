//! Numbered PNM directories (`000000.ppm`, `000001.ppm`, ...).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use shapetrack_core::mask_codec::{decode_mask, encode_mask};
use shapetrack_core::synth::{render_frame, SceneScript};
use shapetrack_core::{DecodeMode, LabelMask, RgbImage};

use crate::pnm;

pub fn frame_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("{index:06}.ppm"))
}

/// Number of frames in `dir`, checking they are numbered 0..n without gaps.
pub fn count_frames(dir: &Path) -> Result<usize> {
    let mut indices = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_suffix(".ppm") {
            if stem.len() == 6 {
                if let Ok(i) = stem.parse::<usize>() {
                    indices.push(i);
                }
            }
        }
    }
    indices.sort_unstable();
    for (expected, &i) in indices.iter().enumerate() {
        if i != expected {
            bail!("{}: frame {expected:06}.ppm is missing", dir.display());
        }
    }
    if indices.is_empty() {
        bail!("{}: no numbered .ppm frames", dir.display());
    }
    Ok(indices.len())
}

pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    pnm::read_ppm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

pub fn read_mask(path: &Path) -> Result<LabelMask> {
    let img = read_rgb(path)?;
    decode_mask(&img, DecodeMode::Strict).with_context(|| format!("decoding mask {}", path.display()))
}

pub fn write_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    fs::write(path, pnm::write_ppm(img)).with_context(|| format!("writing {}", path.display()))
}

/// Lazily reads frames `0..n` of a directory.
pub fn frames(dir: &Path) -> Result<impl Iterator<Item = shapetrack_core::Result<RgbImage>> + '_> {
    let n = count_frames(dir)?;
    Ok((0..n).map(move |i| {
        read_rgb(&frame_path(dir, i)).map_err(|e| shapetrack_core::Error::InvalidArgument(format!("{e:#}")))
    }))
}

pub fn read_masks(dir: &Path) -> Result<Vec<LabelMask>> {
    let n = count_frames(dir)?;
    (0..n).map(|i| read_mask(&frame_path(dir, i))).collect()
}

/// Renders a script into `out/frames` and `out/masks`.
pub fn write_sequence(script: &SceneScript, out: &Path) -> Result<()> {
    script.validate()?;
    let (frames, masks) = (out.join("frames"), out.join("masks"));
    fs::create_dir_all(&frames).with_context(|| format!("creating {}", frames.display()))?;
    fs::create_dir_all(&masks).with_context(|| format!("creating {}", masks.display()))?;
    use rayon::prelude::*;
    script.poses().par_iter().enumerate().try_for_each(|(i, pose)| -> Result<()> {
        let (frame, mask) = render_frame(script, pose)?;
        write_rgb(&frame_path(&frames, i), &frame)?;
        write_rgb(&frame_path(&masks, i), &encode_mask(&mask))
    })
}
