//! Raster types and the image kernels used by sampling and tracking.
//!
//! Every kernel replicates edge pixels for out-of-raster reads.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Default Canny pre-smoothing sigma.
pub const CANNY_SIGMA: f64 = 1.4;
/// Default Canny low threshold, as a fraction of the strongest suppressed response.
pub const CANNY_LOW: f64 = 0.1;
/// Default Canny high threshold.
pub const CANNY_HIGH: f64 = 0.3;
/// Smallest side allowed for a pyramid level.
pub const MIN_PYRAMID_SIDE: usize = 16;

/// Single-channel intensity raster, samples in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !(0.0..=255.0).contains(v)) {
            return Err(Error::invalid(format!(
                "sample {} at index {i} outside [0, 255]",
                data[i]
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    /// Builds an image from `f(x, y)`; values are clamped into `[0, 255]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        check_dims(width, height, width * height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                data.push(if v.is_nan() { 0.0 } else { v.clamp(0.0, 255.0) });
            }
        }
        Ok(GrayImage { width, height, data })
    }

    // Callers guarantee the range invariant.
    fn from_raw(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        GrayImage { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// Bilinear sample. The caller keeps `(x, y)` inside `[0, w-1] x [0, h-1]`.
    #[inline]
    pub fn bilinear(&self, x: f32, y: f32) -> f32 {
        bilinear(&self.data, self.width, self.height, x, y)
    }
}

/// Real-valued raster of a spatial derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GradientImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn bilinear(&self, x: f32, y: f32) -> f32 {
        bilinear(&self.data, self.width, self.height, x, y)
    }
}

#[inline]
fn bilinear(data: &[f32], width: usize, height: usize, x: f32, y: f32) -> f32 {
    let x0 = math::floorf(x);
    let y0 = math::floorf(y);
    let ax = x - x0;
    let ay = y - y0;
    let x0 = x0 as usize;
    let y0 = y0 as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let r0 = y0 * width;
    let r1 = y1 * width;
    let top = data[r0 + x0] + ax * (data[r0 + x1] - data[r0 + x0]);
    let bottom = data[r1 + x0] + ax * (data[r1 + x1] - data[r1 + x0]);
    top + ay * (bottom - top)
}

/// Interleaved 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(RgbImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        RgbImage::new(width, height, vec![rgb; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.data[y * self.width + x] = rgb;
    }
}

/// Boolean raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(BinaryMask { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        BinaryMask::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        check_dims(width, height, width * height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(BinaryMask { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the true pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            let row = &self.data[y * self.width..(y + 1) * self.width];
            let Some(first) = row.iter().position(|&b| b) else {
                continue;
            };
            let last = row.iter().rposition(|&b| b).unwrap_or(first);
            bbox = Some(match bbox {
                None => (first, y, last, y),
                Some((x0, y0, x1, _)) => (x0.min(first), y0, x1.max(last), y),
            });
        }
        bbox
    }

    /// Copy of the inclusive rectangle `[x0, x1] x [y0, y1]`.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> BinaryMask {
        let w = x1 - x0 + 1;
        let h = y1 - y0 + 1;
        let mut data = Vec::with_capacity(w * h);
        for y in y0..=y1 {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x1 + 1]);
        }
        BinaryMask { width: w, height: h, data }
    }

    /// 0/255 intensity rendering.
    pub fn to_gray(&self) -> GrayImage {
        let data = self.data.iter().map(|&b| if b { 255.0 } else { 0.0 }).collect();
        GrayImage::from_raw(self.width, self.height, data)
    }
}

/// Multi-resolution stack; level 0 is full resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePyramid {
    levels: Vec<GrayImage>,
}

impl ImagePyramid {
    pub fn levels(&self) -> &[GrayImage] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> &GrayImage {
        &self.levels[index]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn same_shape(&self, other: &ImagePyramid) -> bool {
        self.levels.len() == other.levels.len()
            && self
                .levels
                .iter()
                .zip(&other.levels)
                .all(|(a, b)| a.width == b.width && a.height == b.height)
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!("empty raster {width}x{height}")));
    }
    if len != width * height {
        return Err(Error::invalid(format!(
            "buffer holds {len} samples, {width}x{height} needs {}",
            width * height
        )));
    }
    Ok(())
}

/// BT.601 luma, rounded half-up to an integral sample.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let data = img
        .data
        .iter()
        .map(|&[r, g, b]| {
            let luma = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
            math::round_half_up(luma).min(255.0) as f32
        })
        .collect();
    GrayImage::from_raw(img.width, img.height, data)
}

/// Majority vote over the `(2r+1)^2` window.
pub fn median_filter(mask: &BinaryMask, radius: usize) -> Result<BinaryMask> {
    if radius < 1 {
        return Err(Error::invalid("median radius must be at least 1"));
    }
    let (w, h) = (mask.width, mask.height);
    let r = radius as isize;
    let clamp_x = |x: isize| x.clamp(0, w as isize - 1) as usize;
    let clamp_y = |y: isize| y.clamp(0, h as isize - 1) as usize;

    // Replication is separable, so row counts followed by column counts
    // give the exact replicated window count.
    let mut rows = vec![0u32; w * h];
    for y in 0..h {
        let line = &mask.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut n = 0;
            for dx in -r..=r {
                n += line[clamp_x(x as isize + dx)] as u32;
            }
            rows[y * w + x] = n;
        }
    }
    let side = 2 * radius + 1;
    let half = (side * side / 2) as u32;
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut n = 0;
            for dy in -r..=r {
                n += rows[clamp_y(y as isize + dy) * w + x];
            }
            out[y * w + x] = n > half;
        }
    }
    Ok(BinaryMask { width: w, height: h, data: out })
}

/// Normalised Gaussian taps for offsets `-ceil(3 sigma) ..= ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let half = math::ceil(3.0 * sigma) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| math::exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let taps = gaussian_kernel(sigma)?;
    let half = (taps.len() / 2) as isize;
    let (w, h) = (img.width, img.height);

    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        let line = &img.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0f64;
            for (k, &t) in taps.iter().enumerate() {
                let sx = (x as isize + k as isize - half).clamp(0, w as isize - 1) as usize;
                acc += t * line[sx] as f64;
            }
            tmp[y * w + x] = acc as f32;
        }
    }
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f64;
            for (k, &t) in taps.iter().enumerate() {
                let sy = (y as isize + k as isize - half).clamp(0, h as isize - 1) as usize;
                acc += t * tmp[sy * w + x] as f64;
            }
            out[y * w + x] = (acc as f32).clamp(0.0, 255.0);
        }
    }
    Ok(GrayImage::from_raw(w, h, out))
}

/// 3x3 Sobel derivatives scaled by 1/8, so a unit ramp has gradient 1.
pub fn sobel_gradients(img: &GrayImage) -> Result<(GradientImage, GradientImage)> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::invalid(format!("sobel needs at least 3x3, got {w}x{h}")));
    }
    let mut gx = vec![0.0f32; w * h];
    let mut gy = vec![0.0f32; w * h];
    for y in 0..h {
        let yi = y as isize;
        for x in 0..w {
            let xi = x as isize;
            let p = |dx: isize, dy: isize| img.get_clamped(xi + dx, yi + dy);
            let (tl, t, tr) = (p(-1, -1), p(0, -1), p(1, -1));
            let (l, r) = (p(-1, 0), p(1, 0));
            let (bl, b, br) = (p(-1, 1), p(0, 1), p(1, 1));
            gx[y * w + x] = ((tr + 2.0 * r + br) - (tl + 2.0 * l + bl)) / 8.0;
            gy[y * w + x] = ((bl + 2.0 * b + br) - (tl + 2.0 * t + tr)) / 8.0;
        }
    }
    Ok((
        GradientImage { width: w, height: h, data: gx },
        GradientImage { width: w, height: h, data: gy },
    ))
}

/// L2 gradient magnitude after Gaussian smoothing, as used by [`canny`].
pub fn smoothed_magnitude(img: &GrayImage, sigma: f64) -> Result<Vec<f32>> {
    let blurred = gaussian_blur(img, sigma)?;
    let (gx, gy) = sobel_gradients(&blurred)?;
    Ok(gx
        .data
        .iter()
        .zip(&gy.data)
        .map(|(&a, &b)| libm::sqrtf(a * a + b * b))
        .collect())
}

/// Canny edge detector. `low` and `high` are fractions of the strongest
/// response surviving non-maximum suppression.
pub fn canny(img: &GrayImage, sigma: f64, low: f64, high: f64) -> Result<BinaryMask> {
    if !(low > 0.0 && low < high && high <= 1.0) {
        return Err(Error::invalid(format!(
            "canny thresholds need 0 < low < high <= 1, got low={low} high={high}"
        )));
    }
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::invalid(format!("canny needs at least 3x3, got {w}x{h}")));
    }
    let blurred = gaussian_blur(img, sigma)?;
    let (gx, gy) = sobel_gradients(&blurred)?;
    let mag: Vec<f32> = gx
        .data
        .iter()
        .zip(&gy.data)
        .map(|(&a, &b)| libm::sqrtf(a * a + b * b))
        .collect();

    const TAN_22_5: f32 = 0.414_213_57;
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        mag[y * w + x]
    };
    let mut suppressed = vec![0.0f32; w * h];
    let mut peak = 0.0f32;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m <= 0.0 {
                continue;
            }
            let (ax, ay) = (gx.data[i].abs(), gy.data[i].abs());
            let (dx, dy): (isize, isize) = if ay <= ax * TAN_22_5 {
                (1, 0)
            } else if ax <= ay * TAN_22_5 {
                (0, 1)
            } else if (gx.data[i] > 0.0) == (gy.data[i] > 0.0) {
                (1, 1)
            } else {
                (1, -1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let behind = at(xi - dx, yi - dy);
            let ahead = at(xi + dx, yi + dy);
            // Asymmetric comparison keeps exactly one pixel of a flat two-pixel ridge.
            if m >= behind && m > ahead {
                suppressed[i] = m;
                peak = peak.max(m);
            }
        }
    }

    let mut edges = vec![false; w * h];
    if peak <= 0.0 {
        return Ok(BinaryMask { width: w, height: h, data: edges });
    }
    let high_t = (high * peak as f64) as f32;
    let low_t = (low * peak as f64) as f32;
    let mut queue = VecDeque::new();
    for (i, &m) in suppressed.iter().enumerate() {
        if m >= high_t && m > 0.0 {
            edges[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edges[j] && suppressed[j] >= low_t && suppressed[j] > 0.0 {
                    edges[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(BinaryMask { width: w, height: h, data: edges })
}

/// Gaussian pyramid: blur with sigma 1, keep even rows and columns.
/// The depth is clamped so no level drops below 16x16.
pub fn build_pyramid(img: &GrayImage, levels: usize) -> Result<ImagePyramid> {
    if levels < 1 {
        return Err(Error::invalid("pyramid needs at least one level"));
    }
    let mut out = Vec::with_capacity(levels);
    out.push(img.clone());
    while out.len() < levels {
        let prev = out.last().unwrap();
        let (nw, nh) = (prev.width.div_ceil(2), prev.height.div_ceil(2));
        if nw < MIN_PYRAMID_SIDE || nh < MIN_PYRAMID_SIDE {
            break;
        }
        let blurred = gaussian_blur(prev, 1.0)?;
        let mut data = Vec::with_capacity(nw * nh);
        for y in 0..nh {
            for x in 0..nw {
                data.push(blurred.get(2 * x, 2 * y));
            }
        }
        out.push(GrayImage::from_raw(nw, nh, data));
    }
    Ok(ImagePyramid { levels: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, f: impl FnMut(usize, usize) -> f32) -> GrayImage {
        GrayImage::from_fn(w, h, f).unwrap()
    }

    #[test]
    fn grayscale_examples() {
        let img = RgbImage::new(3, 1, vec![[255, 255, 255], [255, 0, 0], [37, 37, 37]]).unwrap();
        let g = to_grayscale(&img);
        assert_eq!(g.data(), &[255.0, 76.0, 37.0]);
        for v in 0..=255u8 {
            let g = to_grayscale(&RgbImage::filled(1, 1, [v, v, v]).unwrap());
            assert_eq!(g.get(0, 0), v as f32);
        }
    }

    #[test]
    fn raster_invariants() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![256.0]).is_err());
        assert!(RgbImage::new(2, 1, vec![[0; 3]]).is_err());
    }

    #[test]
    fn median_examples() {
        let empty = BinaryMask::filled(5, 5, false).unwrap();
        assert_eq!(median_filter(&empty, 1).unwrap(), empty);
        let full = BinaryMask::filled(5, 5, true).unwrap();
        assert_eq!(median_filter(&full, 1).unwrap(), full);
        let mut speck = empty.clone();
        speck.set(2, 2, true);
        assert_eq!(median_filter(&speck, 1).unwrap(), empty);
        assert!(median_filter(&speck, 0).is_err());
    }

    #[test]
    fn median_uses_edge_replication() {
        // A true corner pixel is replicated into 4 of the 9 window slots, which is not a majority.
        let mut m = BinaryMask::filled(4, 4, false).unwrap();
        m.set(0, 0, true);
        assert!(!median_filter(&m, 1).unwrap().get(0, 0));
        // With its two neighbours set, the corner window holds 4 + 2 + 2 = 8 trues.
        m.set(1, 0, true);
        m.set(0, 1, true);
        assert!(median_filter(&m, 1).unwrap().get(0, 0));
    }

    #[test]
    fn blur_constant_and_symmetry() {
        let c = GrayImage::filled(9, 7, 113.0).unwrap();
        assert_eq!(gaussian_blur(&c, 1.7).unwrap(), c);
        assert!(gaussian_blur(&c, 0.0).is_err());
        assert!(gaussian_blur(&c, -1.0).is_err());

        let imp = gray(11, 11, |x, y| if x == 5 && y == 5 { 255.0 } else { 0.0 });
        let b = gaussian_blur(&imp, 1.3).unwrap();
        for y in 0..11 {
            for x in 0..11 {
                // 90 degree rotation maps (x, y) to (10 - y, x).
                assert!((b.get(x, y) - b.get(10 - y, x)).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn blur_impulse_matches_hand_kernel() {
        // sigma = 1 => taps at offsets -3..=3 with weight exp(-i^2 / 2), normalised.
        let raw: Vec<f64> = (-3i32..=3).map(|i| (-(i * i) as f64 / 2.0).exp()).collect();
        let sum: f64 = raw.iter().sum();
        let centre = raw[3] / sum;
        let imp = gray(15, 15, |x, y| if x == 7 && y == 7 { 255.0 } else { 0.0 });
        let b = gaussian_blur(&imp, 1.0).unwrap();
        let expected = 255.0 * centre * centre;
        assert!((b.get(7, 7) as f64 - expected).abs() < 1e-3, "{} vs {expected}", b.get(7, 7));
    }

    #[test]
    fn sobel_ramps() {
        let c = GrayImage::filled(6, 6, 40.0).unwrap();
        let (gx, gy) = sobel_gradients(&c).unwrap();
        assert!(gx.data().iter().chain(gy.data()).all(|&v| v == 0.0));

        let rx = gray(8, 8, |x, _| x as f32);
        let (gx, gy) = sobel_gradients(&rx).unwrap();
        let ry = gray(8, 8, |_, y| y as f32);
        let (hx, hy) = sobel_gradients(&ry).unwrap();
        for y in 1..7 {
            for x in 1..7 {
                assert_eq!(gx.get(x, y), 1.0);
                assert_eq!(gy.get(x, y), 0.0);
                assert_eq!(hy.get(x, y), 1.0);
                assert_eq!(hx.get(x, y), 0.0);
            }
        }
        assert!(sobel_gradients(&GrayImage::filled(2, 5, 0.0).unwrap()).is_err());
    }

    #[test]
    fn canny_constant_is_empty() {
        let c = GrayImage::filled(20, 20, 90.0).unwrap();
        assert_eq!(canny(&c, CANNY_SIGMA, CANNY_LOW, CANNY_HIGH).unwrap().count(), 0);
        assert!(canny(&c, 1.4, 0.3, 0.1).is_err());
        assert!(canny(&c, 1.4, 0.0, 0.3).is_err());
        assert!(canny(&c, 1.4, 0.1, 1.5).is_err());
    }

    #[test]
    fn canny_vertical_step() {
        // Left half 0, right half 255; the boundary lies between columns 15 and 16.
        let img = gray(32, 24, |x, _| if x < 16 { 0.0 } else { 255.0 });
        let e = canny(&img, CANNY_SIGMA, CANNY_LOW, CANNY_HIGH).unwrap();
        assert!(e.count() > 0);
        for y in 0..24 {
            for x in 0..32 {
                if e.get(x, y) {
                    assert!(x == 15 || x == 16, "edge at column {x}");
                }
            }
        }
    }

    #[test]
    fn canny_disk_hugs_circle() {
        let (c, r) = (50.0f64, 30.0f64);
        let img = gray(101, 101, |x, y| {
            let d2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2);
            if d2 <= r * r { 255.0 } else { 0.0 }
        });
        let e = canny(&img, CANNY_SIGMA, CANNY_LOW, CANNY_HIGH).unwrap();
        let pts: Vec<(f64, f64)> = (0..101)
            .flat_map(|y| (0..101).map(move |x| (x, y)))
            .filter(|&(x, y)| e.get(x, y))
            .map(|(x, y)| (x as f64, y as f64))
            .collect();
        for &(x, y) in &pts {
            let d = ((x - c).hypot(y - c) - r).abs();
            assert!(d <= 1.5, "edge pixel ({x}, {y}) is {d} from the circle");
        }
        for k in 0..720 {
            let t = k as f64 * core::f64::consts::PI / 360.0;
            let (px, py) = (c + r * t.cos(), c + r * t.sin());
            let best = pts.iter().map(|&(x, y)| (x - px).hypot(y - py)).fold(f64::MAX, f64::min);
            assert!(best <= 1.5, "circle point at angle {t} is {best} from any edge");
        }
    }

    #[test]
    fn canny_hysteresis_soundness() {
        let img = gray(40, 40, |x, y| ((x * 7 + y * 13) % 23) as f32 * 10.0);
        let e = canny(&img, 1.0, 0.2, 0.5).unwrap();
        let mag = smoothed_magnitude(&img, 1.0).unwrap();
        let max = mag.iter().cloned().fold(0.0f32, f32::max);
        for (i, &b) in e.data().iter().enumerate() {
            if b {
                assert!(mag[i] >= 0.2 * max * (1.0 - 1e-6), "{} < 0.2 * {max}", mag[i]);
            }
        }
    }

    #[test]
    fn pyramid_shapes() {
        let img = gray(224, 224, |x, y| ((x * 31 + y * 17) % 255) as f32);
        let one = build_pyramid(&img, 1).unwrap();
        assert_eq!(one.depth(), 1);
        assert_eq!(one.level(0), &img);
        let p = build_pyramid(&img, 3).unwrap();
        let sizes: Vec<_> = p.levels().iter().map(|l| (l.width(), l.height())).collect();
        assert_eq!(sizes, [(224, 224), (112, 112), (56, 56)]);
        // 224 -> 112 -> 56 -> 28 -> 14 stops at 28.
        assert_eq!(build_pyramid(&img, 10).unwrap().depth(), 4);
        let odd = build_pyramid(&GrayImage::filled(45, 33, 0.0).unwrap(), 3).unwrap();
        assert_eq!((odd.level(1).width(), odd.level(1).height()), (23, 17));
        assert_eq!(odd.depth(), 2);
        assert!(build_pyramid(&img, 0).is_err());

        let c = GrayImage::filled(64, 48, 77.0).unwrap();
        for level in build_pyramid(&c, 3).unwrap().levels() {
            assert!(level.data().iter().all(|&v| v == 77.0));
        }
    }

    #[test]
    fn bounding_box_and_crop() {
        let mut m = BinaryMask::filled(10, 8, false).unwrap();
        assert_eq!(m.bounding_box(), None);
        m.set(3, 2, true);
        m.set(6, 5, true);
        assert_eq!(m.bounding_box(), Some((3, 2, 6, 5)));
        let c = m.crop(3, 2, 6, 5);
        assert_eq!((c.width(), c.height(), c.count()), (4, 4, 2));
        assert!(c.get(0, 0) && c.get(3, 3));
    }
}
