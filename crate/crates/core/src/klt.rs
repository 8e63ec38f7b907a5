//! Pyramidal Lucas-Kanade point tracking with explicit loss reasons.
//!
//! Spatial gradients come from the previous frame only and are computed
//! once per pyramid level, so the 2x2 normal matrix is fixed across the
//! iterations of a solve. Windows that leave the raster are never clamped:
//! the point is reported as [`TrackStatus::LostOutOfBounds`] instead.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::imaging::{build_pyramid, sobel_gradients, GradientImage, GrayImage, ImagePyramid};
use crate::math;
use crate::sampling::{Point2, PointRole, PointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrackStatus {
    Ok,
    LostOutOfBounds,
    LostSmallEigen,
    LostHighResidual,
    LostNotConverged,
}

impl TrackStatus {
    pub const ALL: [TrackStatus; 5] = [
        TrackStatus::Ok,
        TrackStatus::LostOutOfBounds,
        TrackStatus::LostSmallEigen,
        TrackStatus::LostHighResidual,
        TrackStatus::LostNotConverged,
    ];

    #[inline]
    pub fn is_ok(self) -> bool {
        self == TrackStatus::Ok
    }

    pub fn name(self) -> &'static str {
        match self {
            TrackStatus::Ok => "Ok",
            TrackStatus::LostOutOfBounds => "LostOutOfBounds",
            TrackStatus::LostSmallEigen => "LostSmallEigen",
            TrackStatus::LostHighResidual => "LostHighResidual",
            TrackStatus::LostNotConverged => "LostNotConverged",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|s| s.name() == name)
    }
}

impl fmt::Display for TrackStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Displacement between two frames, in pixels of the level it was solved on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowVector {
    pub dx: f64,
    pub dy: f64,
}

impl FlowVector {
    pub const ZERO: FlowVector = FlowVector { dx: 0.0, dy: 0.0 };

    pub const fn new(dx: f64, dy: f64) -> Self {
        FlowVector { dx, dy }
    }

    pub fn norm(self) -> f64 {
        math::sqrt(self.dx * self.dx + self.dy * self.dy)
    }

    pub fn scaled(self, k: f64) -> Self {
        FlowVector { dx: self.dx * k, dy: self.dy * k }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    /// Half-size of the square integration window.
    pub window_radius: usize,
    pub pyramid_levels: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the update step, in pixels.
    pub epsilon: f64,
    /// Minimum eigenvalue of the normal matrix per window pixel, with
    /// intensities scaled to `[0, 1]`.
    pub min_eigenvalue: f64,
    /// Largest accepted mean absolute intensity difference over the final window.
    pub max_residual: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            window_radius: 7,
            pyramid_levels: 3,
            max_iterations: 20,
            epsilon: 0.01,
            min_eigenvalue: 1e-4,
            max_residual: 20.0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_radius < 2 {
            return Err(Error::invalid("window_radius must be at least 2"));
        }
        if self.pyramid_levels < 1 || self.max_iterations < 1 {
            return Err(Error::invalid("pyramid_levels and max_iterations must be positive"));
        }
        let reals = [self.epsilon, self.min_eigenvalue, self.max_residual];
        if reals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(format!("tracker thresholds must be positive: {reals:?}")));
        }
        Ok(())
    }
}

/// Outcome of a single-level solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSolve {
    pub flow: FlowVector,
    pub status: TrackStatus,
    pub iterations: usize,
}

/// Pyramid of one frame together with its per-level gradients.
#[derive(Debug, Clone)]
pub struct TrackingPyramid {
    pyramid: ImagePyramid,
    gx: Vec<GradientImage>,
    gy: Vec<GradientImage>,
}

impl TrackingPyramid {
    pub fn new(img: &GrayImage, levels: usize) -> Result<Self> {
        Self::from_pyramid(build_pyramid(img, levels)?)
    }

    pub fn from_pyramid(pyramid: ImagePyramid) -> Result<Self> {
        let mut gx = Vec::with_capacity(pyramid.depth());
        let mut gy = Vec::with_capacity(pyramid.depth());
        for level in pyramid.levels() {
            let (a, b) = sobel_gradients(level)?;
            gx.push(a);
            gy.push(b);
        }
        Ok(TrackingPyramid { pyramid, gx, gy })
    }

    pub fn pyramid(&self) -> &ImagePyramid {
        &self.pyramid
    }

    pub fn depth(&self) -> usize {
        self.pyramid.depth()
    }
}

struct Window {
    // Template intensity and gradients, row-major over the window.
    t: Vec<f32>,
    gx: Vec<f32>,
    gy: Vec<f32>,
    radius: usize,
    g_xx: f64,
    g_xy: f64,
    g_yy: f64,
}

#[inline]
fn window_inside(x: f64, y: f64, r: f64, w: usize, h: usize) -> bool {
    x - r >= 0.0 && y - r >= 0.0 && x + r <= (w - 1) as f64 && y + r <= (h - 1) as f64
}

/// Bilinear samples of the `(2r+1)^2` window centred on `(x, y)`, row-major.
///
/// Offsets are integral, so every sample shares one pair of interpolation
/// weights. The window must lie inside the raster.
fn sample_window(data: &[f32], width: usize, height: usize, x: f64, y: f64, r: usize, out: &mut Vec<f32>) {
    let side = 2 * r + 1;
    let (lx, ly) = (x - r as f64, y - r as f64);
    let (fx, fy) = (math::floor(lx), math::floor(ly));
    let (ax, ay) = ((lx - fx) as f32, (ly - fy) as f32);
    let (x0, y0) = (fx as usize, fy as usize);
    out.clear();
    for j in 0..side {
        let ya = y0 + j;
        let yb = (ya + 1).min(height - 1);
        let last = (x0 + side).min(width - 1);
        let top = &data[ya * width + x0..=ya * width + last];
        let bot = &data[yb * width + x0..=yb * width + last];
        if top.len() == side + 1 {
            for i in 0..side {
                let a = top[i] + ax * (top[i + 1] - top[i]);
                let b = bot[i] + ax * (bot[i + 1] - bot[i]);
                out.push(a + ay * (b - a));
            }
        } else {
            // Right edge of the raster: the missing column only ever gets weight zero.
            for i in 0..side {
                let k = (i + 1).min(top.len() - 1);
                let a = top[i] + ax * (top[k] - top[i]);
                let b = bot[i] + ax * (bot[k] - bot[i]);
                out.push(a + ay * (b - a));
            }
        }
    }
}

fn gather_window(prev: &GrayImage, gx: &GradientImage, gy: &GradientImage, p: Point2, radius: usize) -> Window {
    let (w, h) = (prev.width(), prev.height());
    let n = (2 * radius + 1) * (2 * radius + 1);
    let (mut t, mut wx, mut wy) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    sample_window(prev.data(), w, h, p.x, p.y, radius, &mut t);
    sample_window(gx.data(), w, h, p.x, p.y, radius, &mut wx);
    sample_window(gy.data(), w, h, p.x, p.y, radius, &mut wy);
    let (mut g_xx, mut g_xy, mut g_yy) = (0.0f64, 0.0f64, 0.0f64);
    for (&ix, &iy) in wx.iter().zip(&wy) {
        g_xx += (ix * ix) as f64;
        g_xy += (ix * iy) as f64;
        g_yy += (iy * iy) as f64;
    }
    Window { t, gx: wx, gy: wy, radius, g_xx, g_xy, g_yy }
}

impl Window {
    fn min_eigenvalue(&self) -> f64 {
        let half_tr = 0.5 * (self.g_xx + self.g_yy);
        let half_diff = 0.5 * (self.g_xx - self.g_yy);
        half_tr - math::sqrt(half_diff * half_diff + self.g_xy * self.g_xy)
    }

    fn area(&self) -> usize {
        self.t.len()
    }

    // Sum of gradient-weighted differences against the `next` window at `(qx, qy)`.
    fn mismatch(&self, next: &GrayImage, qx: f64, qy: f64, scratch: &mut Vec<f32>) -> (f64, f64) {
        sample_window(next.data(), next.width(), next.height(), qx, qy, self.radius, scratch);
        let (mut bx, mut by) = (0.0f32, 0.0f32);
        for k in 0..self.t.len() {
            let diff = self.t[k] - scratch[k];
            bx += self.gx[k] * diff;
            by += self.gy[k] * diff;
        }
        (bx as f64, by as f64)
    }

    fn mean_abs_residual(&self, next: &GrayImage, qx: f64, qy: f64, scratch: &mut Vec<f32>) -> f64 {
        sample_window(next.data(), next.width(), next.height(), qx, qy, self.radius, scratch);
        let total: f64 = self.t.iter().zip(scratch.iter()).map(|(a, b)| (a - b).abs() as f64).sum();
        total / self.area() as f64
    }
}

fn solve_level(
    window: &Window,
    next: &GrayImage,
    p: Point2,
    guess: FlowVector,
    cfg: &TrackerConfig,
) -> LevelSolve {
    let (a, b, c) = (window.g_xx, window.g_xy, window.g_yy);
    debug_assert!(
        a >= 0.0 && c >= 0.0 && a * c - b * b >= -1e-9 * (a * c).max(1.0),
        "normal matrix not PSD: [{a}, {b}; {b}, {c}]"
    );
    let area = window.area() as f64;
    if window.min_eigenvalue() / (area * 255.0 * 255.0) < cfg.min_eigenvalue {
        return LevelSolve { flow: guess, status: TrackStatus::LostSmallEigen, iterations: 0 };
    }
    let det = a * c - b * b;
    let r = window.radius as f64;
    let (w, h) = (next.width(), next.height());

    let mut scratch = Vec::with_capacity(window.area());
    let mut flow = guess;
    let mut last_step = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=cfg.max_iterations {
        iterations = it;
        let (qx, qy) = (p.x + flow.dx, p.y + flow.dy);
        if !window_inside(qx, qy, r, w, h) {
            return LevelSolve { flow, status: TrackStatus::LostOutOfBounds, iterations };
        }
        let (bx, by) = window.mismatch(next, qx, qy, &mut scratch);
        let step = FlowVector::new((c * bx - b * by) / det, (a * by - b * bx) / det);
        flow.dx += step.dx;
        flow.dy += step.dy;
        last_step = step.norm();
        if last_step < cfg.epsilon {
            converged = true;
            break;
        }
    }
    if !window_inside(p.x + flow.dx, p.y + flow.dy, r, w, h) {
        return LevelSolve { flow, status: TrackStatus::LostOutOfBounds, iterations };
    }
    let status = if !converged && last_step >= 0.5 {
        TrackStatus::LostNotConverged
    } else {
        TrackStatus::Ok
    };
    LevelSolve { flow, status, iterations }
}

/// Iterative Lucas-Kanade solve on a single level.
///
/// Gradients of `prev` are computed on every call; the pyramid tracker
/// reuses them instead.
pub fn lk_refine_level(
    prev: &GrayImage,
    next: &GrayImage,
    p_prev: Point2,
    guess: FlowVector,
    cfg: &TrackerConfig,
) -> Result<LevelSolve> {
    cfg.validate()?;
    if prev.width() != next.width() || prev.height() != next.height() {
        return Err(Error::invalid("prev and next differ in size"));
    }
    let r = cfg.window_radius as f64;
    if !window_inside(p_prev.x, p_prev.y, r, prev.width(), prev.height()) {
        return Err(Error::invalid(format!(
            "window around ({}, {}) leaves the previous image",
            p_prev.x, p_prev.y
        )));
    }
    let (gx, gy) = sobel_gradients(prev)?;
    let window = gather_window(prev, &gx, &gy, p_prev, cfg.window_radius);
    Ok(solve_level(&window, next, p_prev, guess, cfg))
}

/// Coarse-to-fine track of one point. On loss the returned position is the
/// last valid estimate.
pub fn track_point(
    prev: &TrackingPyramid,
    next: &TrackingPyramid,
    p: Point2,
    cfg: &TrackerConfig,
) -> Result<(Point2, TrackStatus)> {
    if !prev.pyramid.same_shape(&next.pyramid) {
        return Err(Error::invalid("pyramids differ in shape"));
    }
    Ok(track_point_unchecked(prev, next, p, cfg))
}

fn track_point_unchecked(
    prev: &TrackingPyramid,
    next: &TrackingPyramid,
    p: Point2,
    cfg: &TrackerConfig,
) -> (Point2, TrackStatus) {
    let levels = prev.depth().min(cfg.pyramid_levels);
    let r = cfg.window_radius as f64;
    let mut flow = FlowVector::ZERO;
    let at = |flow: FlowVector, scale: f64| Point2::new(p.x + flow.dx * scale, p.y + flow.dy * scale);

    for level in (0..levels).rev() {
        let scale = (1u32 << level) as f64;
        let img = prev.pyramid.level(level);
        let pl = Point2::new(p.x / scale, p.y / scale);
        if !window_inside(pl.x, pl.y, r, img.width(), img.height()) {
            return (at(flow, scale), TrackStatus::LostOutOfBounds);
        }
        let window = gather_window(img, &prev.gx[level], &prev.gy[level], pl, cfg.window_radius);
        let solve = solve_level(&window, next.pyramid.level(level), pl, flow, cfg);
        if !solve.status.is_ok() {
            return (at(flow, scale), solve.status);
        }
        flow = solve.flow;
        if level == 0 {
            let mut scratch = Vec::with_capacity(window.area());
            let residual = window.mean_abs_residual(next.pyramid.level(0), pl.x + flow.dx, pl.y + flow.dy, &mut scratch);
            if residual > cfg.max_residual {
                return (at(flow, 1.0), TrackStatus::LostHighResidual);
            }
        } else {
            flow = flow.scaled(2.0);
        }
    }
    (at(flow, 1.0), TrackStatus::Ok)
}

/// Tracks every `Ok` point of `pts`; lost points are copied through untouched.
pub fn track_points_prepared(
    prev: &TrackingPyramid,
    next: &TrackingPyramid,
    pts: &PointSet,
    cfg: &TrackerConfig,
) -> Result<PointSet> {
    cfg.validate()?;
    if !prev.pyramid.same_shape(&next.pyramid) {
        return Err(Error::invalid("pyramids differ in shape"));
    }
    let one = |(p, s): (Point2, TrackStatus)| {
        if s.is_ok() {
            track_point_unchecked(prev, next, p, cfg)
        } else {
            (p, s)
        }
    };
    #[cfg(feature = "rayon")]
    let tracked: Vec<(Point2, TrackStatus)> = {
        use rayon::prelude::*;
        let items: Vec<(Point2, TrackStatus)> = pts.iter().collect();
        items.into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "rayon"))]
    let tracked: Vec<(Point2, TrackStatus)> = pts.iter().map(one).collect();

    let (points, status) = tracked.into_iter().unzip();
    PointSet::with_status(pts.cls(), points, status, PointRole::Tracked)
}

/// Builds both pyramids and tracks `pts` from `prev` to `next`.
pub fn track_points(prev: &GrayImage, next: &GrayImage, pts: &PointSet, cfg: &TrackerConfig) -> Result<PointSet> {
    cfg.validate()?;
    if prev.width() != next.width() || prev.height() != next.height() {
        return Err(Error::invalid(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            prev.width(),
            prev.height(),
            next.width(),
            next.height()
        )));
    }
    let a = TrackingPyramid::new(prev, cfg.pyramid_levels)?;
    let b = TrackingPyramid::new(next, cfg.pyramid_levels)?;
    track_points_prepared(&a, &b, pts, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask_codec::LandmarkClass;
    use alloc::vec;
    use proptest::prelude::*;

    // Random texture: lattice value noise summed over several cell sizes so
    // every pyramid level sees structure, sampled at an arbitrary offset so
    // shifted copies are exact.
    fn speckle(seed: u64, w: usize, h: usize, ox: f64, oy: f64) -> GrayImage {
        let lattice = |octave: u64, ix: i64, iy: i64| {
            let mut z = seed ^ octave.wrapping_mul(0xD6E8_FEB8_6659_FD93)
                ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
        };
        let octaves = [(3.0, 0.3), (8.0, 0.3), (20.0, 0.25), (48.0, 0.15)];
        GrayImage::from_fn(w, h, |x, y| {
            let mut v = 0.0;
            for (o, &(cell, weight)) in octaves.iter().enumerate() {
                let (u, t) = ((x as f64 - ox) / cell, (y as f64 - oy) / cell);
                let (fx, fy) = (u.floor(), t.floor());
                let (ax, ay) = (u - fx, t - fy);
                let (ix, iy, o) = (fx as i64, fy as i64, o as u64);
                let top = lattice(o, ix, iy) * (1.0 - ax) + lattice(o, ix + 1, iy) * ax;
                let bot = lattice(o, ix, iy + 1) * (1.0 - ax) + lattice(o, ix + 1, iy + 1) * ax;
                v += weight * (top * (1.0 - ay) + bot * ay);
            }
            (30.0 + 190.0 * v) as f32
        })
        .unwrap()
    }

    #[test]
    fn identical_frames_zero_flow() {
        let img = speckle(1, 64, 64, 0.0, 0.0);
        let cfg = TrackerConfig::default();
        let s = lk_refine_level(&img, &img, Point2::new(30.0, 30.0), FlowVector::ZERO, &cfg).unwrap();
        assert_eq!(s.status, TrackStatus::Ok);
        assert_eq!(s.flow, FlowVector::ZERO);
        assert!(s.iterations <= 1);
    }

    #[test]
    fn integer_shift_single_level() {
        let prev = speckle(2, 80, 80, 0.0, 0.0);
        let next = speckle(2, 80, 80, 3.0, 2.0);
        let cfg = TrackerConfig { window_radius: 10, ..TrackerConfig::default() };
        let s = lk_refine_level(&prev, &next, Point2::new(40.0, 40.0), FlowVector::ZERO, &cfg).unwrap();
        assert_eq!(s.status, TrackStatus::Ok);
        assert!((s.flow.dx - 3.0).abs() < 0.1 && (s.flow.dy - 2.0).abs() < 0.1, "{:?}", s.flow);
    }

    #[test]
    fn flat_window_is_small_eigen() {
        let img = GrayImage::filled(40, 40, 120.0).unwrap();
        let s = lk_refine_level(&img, &img, Point2::new(20.0, 20.0), FlowVector::ZERO, &TrackerConfig::default())
            .unwrap();
        assert_eq!(s.status, TrackStatus::LostSmallEigen);
    }

    #[test]
    fn window_outside_prev_is_invalid() {
        let img = GrayImage::filled(40, 40, 120.0).unwrap();
        let r = lk_refine_level(&img, &img, Point2::new(3.0, 20.0), FlowVector::ZERO, &TrackerConfig::default());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn pyramid_identity_and_translation() {
        let cfg = TrackerConfig::default();
        let a = TrackingPyramid::new(&speckle(3, 224, 224, 0.0, 0.0), 3).unwrap();
        let p = Point2::new(100.0, 120.0);
        assert_eq!(track_point(&a, &a, p, &cfg).unwrap(), (p, TrackStatus::Ok));

        let b = TrackingPyramid::new(&speckle(3, 224, 224, 6.0, -4.0), 3).unwrap();
        for &(x, y) in &[(60.0, 60.0), (112.0, 112.0), (150.0, 90.0), (80.0, 170.0)] {
            let (q, s) = track_point(&a, &b, Point2::new(x, y), &cfg).unwrap();
            assert_eq!(s, TrackStatus::Ok);
            assert!((q.x - x - 6.0).hypot(q.y - y + 4.0) < 0.2, "({x},{y}) -> {q:?}");
        }
        let small = TrackingPyramid::new(&speckle(3, 112, 112, 0.0, 0.0), 3).unwrap();
        assert!(track_point(&a, &small, p, &cfg).is_err());
    }

    #[test]
    fn border_point_pushed_out_is_lost() {
        let cfg = TrackerConfig { pyramid_levels: 1, ..TrackerConfig::default() };
        let a = TrackingPyramid::new(&speckle(4, 64, 64, 0.0, 0.0), 1).unwrap();
        let b = TrackingPyramid::new(&speckle(4, 64, 64, -3.0, 0.0), 1).unwrap();
        // Window radius 7 at x = 9 fits in prev (2 px to spare) but not once moved 3 px left.
        let (_, s) = track_point(&a, &b, Point2::new(9.0, 30.0), &cfg).unwrap();
        assert_eq!(s, TrackStatus::LostOutOfBounds);
        // Two pixels from the border the window never fits.
        let (_, s) = track_point(&a, &b, Point2::new(2.0, 30.0), &cfg).unwrap();
        assert_eq!(s, TrackStatus::LostOutOfBounds);
    }

    #[test]
    fn batch_tracking_rules() {
        let cfg = TrackerConfig::default();
        let img = speckle(5, 224, 224, 0.0, 0.0);
        let pts = PointSet::with_status(
            LandmarkClass::Lip,
            vec![Point2::new(50.0, 60.0), Point2::new(100.0, 100.0), Point2::new(3.0, 3.0)],
            vec![TrackStatus::Ok, TrackStatus::Ok, TrackStatus::LostOutOfBounds],
            PointRole::Spliced,
        )
        .unwrap();
        let out = track_points(&img, &img, &pts, &cfg).unwrap();
        assert_eq!(out.role(), PointRole::Tracked);
        assert_eq!(out.points(), pts.points());
        assert_eq!(out.status(), pts.status());

        let other = GrayImage::filled(100, 100, 0.0).unwrap();
        assert!(track_points(&img, &other, &pts, &cfg).is_err());
    }

    #[test]
    fn subpixel_bilinear_warp() {
        let prev = speckle(6, 224, 224, 0.0, 0.0);
        let (sx, sy) = (0.5f32, 0.25f32);
        let next = GrayImage::from_fn(224, 224, |x, y| {
            let (u, v) = (x as f32 - sx, y as f32 - sy);
            prev.bilinear(u.clamp(0.0, 223.0), v.clamp(0.0, 223.0))
        })
        .unwrap();
        let pts: Vec<Point2> = (0..8)
            .flat_map(|i| (0..8).map(move |j| Point2::new(40.0 + 20.0 * i as f64, 40.0 + 20.0 * j as f64)))
            .collect();
        let set = PointSet::new(LandmarkClass::Hair, pts.clone(), PointRole::Sampled);
        let out = track_points(&prev, &next, &set, &TrackerConfig::default()).unwrap();
        assert_eq!(out.ok_count(), pts.len());
        let n = pts.len() as f64;
        let mdx = out.points().iter().zip(&pts).map(|(q, p)| q.x - p.x).sum::<f64>() / n;
        let mdy = out.points().iter().zip(&pts).map(|(q, p)| q.y - p.y).sum::<f64>() / n;
        assert!((mdx - 0.5).hypot(mdy - 0.25) < 0.2, "mean flow ({mdx}, {mdy})");
    }

    #[test]
    fn config_validation() {
        assert!(TrackerConfig::default().validate().is_ok());
        assert!(TrackerConfig { window_radius: 1, ..Default::default() }.validate().is_err());
        assert!(TrackerConfig { epsilon: 0.0, ..Default::default() }.validate().is_err());
        assert_eq!(TrackStatus::from_name("LostSmallEigen"), Some(TrackStatus::LostSmallEigen));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn zero_motion_fixed_point(seed in any::<u64>(), x in 40.0f64..180.0, y in 40.0f64..180.0) {
            let img = speckle(seed, 224, 224, 0.0, 0.0);
            let a = TrackingPyramid::new(&img, 3).unwrap();
            let (q, s) = track_point(&a, &a, Point2::new(x, y), &TrackerConfig::default()).unwrap();
            prop_assert_eq!(s, TrackStatus::Ok);
            prop_assert!((q.x - x).abs() <= 0.01 && (q.y - y).abs() <= 0.01);
        }

        #[test]
        // Up to half a window at the coarsest level: 4 * 7 / 2 = 14 px.
        fn shift_equivariance(seed in any::<u64>(), sx in -14i32..=14, sy in -14i32..=14) {
            prop_assume!(((sx * sx + sy * sy) as f64).sqrt() <= 14.0);
            let cfg = TrackerConfig::default();
            let a = TrackingPyramid::new(&speckle(seed, 224, 224, 0.0, 0.0), 3).unwrap();
            let b = TrackingPyramid::new(&speckle(seed, 224, 224, sx as f64, sy as f64), 3).unwrap();
            let mut sq = 0.0;
            let mut n = 0.0;
            for &(x, y) in &[(80.0, 80.0), (112.0, 112.0), (144.0, 96.0), (96.0, 144.0), (130.0, 130.0)] {
                let (q, s) = track_point(&a, &b, Point2::new(x, y), &cfg).unwrap();
                prop_assert_eq!(s, TrackStatus::Ok);
                sq += (q.x - x - sx as f64).powi(2) + (q.y - y - sy as f64).powi(2);
                n += 1.0;
            }
            prop_assert!((sq / n).sqrt() <= 0.2, "rms {}", (sq / n).sqrt());
        }
    }
}
