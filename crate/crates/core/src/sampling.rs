//! Turning class masks into bounded, contour-ordered tracking points.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imaging::{self, BinaryMask};
use crate::klt::TrackStatus;
use crate::mask_codec::{class_mask, LabelMask, LandmarkClass};

/// Default per-class point budget.
pub const DEFAULT_BUDGET: usize = 400;
/// Default cap on the number of points summed over all classes.
pub const DEFAULT_GLOBAL_CAP: usize = 2000;

// Median radius 1 + blur half-width 5 + Sobel 1 + suppression 1, with slack.
const CROP_MARGIN: usize = 10;

/// Sub-pixel image position; integer coordinates are pixel centres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }
}

/// Where a point set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointRole {
    /// Freshly sampled from a segmentation mask.
    Sampled,
    /// Output of the point tracker.
    Tracked,
    /// Sampled points shifted by the motion delta.
    Spliced,
}

/// Points of one landmark class with a status per point.
///
/// Point identity is the index: entry `i` of two snapshots of the same set
/// refers to the same physical point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    cls: LandmarkClass,
    points: Vec<Point2>,
    status: Vec<TrackStatus>,
    role: PointRole,
}

impl PointSet {
    /// All points start out `Ok`.
    pub fn new(cls: LandmarkClass, points: Vec<Point2>, role: PointRole) -> Self {
        let status = vec![TrackStatus::Ok; points.len()];
        PointSet { cls, points, status, role }
    }

    pub fn with_status(
        cls: LandmarkClass,
        points: Vec<Point2>,
        status: Vec<TrackStatus>,
        role: PointRole,
    ) -> Result<Self> {
        if points.len() != status.len() {
            return Err(Error::invalid("points and status lengths differ"));
        }
        Ok(PointSet { cls, points, status, role })
    }

    pub fn cls(&self) -> LandmarkClass {
        self.cls
    }

    pub fn role(&self) -> PointRole {
        self.role
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn status(&self) -> &[TrackStatus] {
        &self.status
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ok_count(&self) -> usize {
        self.status.iter().filter(|s| s.is_ok()).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point2, TrackStatus)> + '_ {
        self.points.iter().copied().zip(self.status.iter().copied())
    }
}

/// Median filter (radius 1) followed by default Canny on the 0/255 rendering.
///
/// Work is confined to the mask's bounding box plus a margin wide enough
/// that the result equals the full-raster computation.
pub fn contour_edges(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut out = BinaryMask::filled(w, h, false).expect("non-empty mask");
    let Some((x0, y0, x1, y1)) = mask.bounding_box() else {
        return out;
    };
    let cx0 = x0.saturating_sub(CROP_MARGIN);
    let cy0 = y0.saturating_sub(CROP_MARGIN);
    let cx1 = (x1 + CROP_MARGIN).min(w - 1);
    let cy1 = (y1 + CROP_MARGIN).min(h - 1);
    let crop = mask.crop(cx0, cy0, cx1, cy1);
    if crop.width() < 3 || crop.height() < 3 {
        // Only reachable for rasters thinner than 3 pixels.
        return out;
    }
    let filtered = imaging::median_filter(&crop, 1).expect("radius 1 is valid");
    let edges = imaging::canny(
        &filtered.to_gray(),
        imaging::CANNY_SIGMA,
        imaging::CANNY_LOW,
        imaging::CANNY_HIGH,
    )
    .expect("default thresholds are valid");
    for y in 0..edges.height() {
        for x in 0..edges.width() {
            if edges.get(x, y) {
                out.set(cx0 + x, cy0 + y, true);
            }
        }
    }
    out
}

// Clockwise from east in image coordinates (y grows downwards).
const DIRS: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

// Neighbour visiting order given the previous step direction: 4-neighbours
// before diagonals so no pixel of a staircase is skipped, each group sorted
// by turn angle, right turns first on ties.
fn candidate_order(prev: Option<usize>) -> [usize; 8] {
    match prev {
        None => [0, 2, 4, 6, 1, 3, 5, 7],
        Some(d) => {
            let mut order = [0usize; 8];
            let mut n = 0;
            for diagonal in [false, true] {
                for turn in [0usize, 1, 7, 2, 6, 3, 5, 4] {
                    let k = (d + turn) % 8;
                    if (k % 2 == 1) == diagonal {
                        order[n] = k;
                        n += 1;
                    }
                }
            }
            order
        }
    }
}

fn walk(edges: &BinaryMask, visited: &mut [bool], start: (usize, usize)) -> Vec<(usize, usize)> {
    let (w, h) = (edges.width() as isize, edges.height() as isize);
    let mut path = Vec::new();
    let mut cur = start;
    let mut prev = None;
    loop {
        let next = candidate_order(prev).into_iter().find_map(|k| {
            let (dx, dy) = DIRS[k];
            let (nx, ny) = (cur.0 as isize + dx, cur.1 as isize + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                return None;
            }
            let i = ny as usize * w as usize + nx as usize;
            (edges.data()[i] && !visited[i]).then_some((k, (nx as usize, ny as usize)))
        });
        let Some((k, p)) = next else {
            return path;
        };
        visited[p.1 * w as usize + p.0] = true;
        path.push(p);
        prev = Some(k);
        cur = p;
    }
}

/// Orders edge pixels into chains by boundary following.
///
/// Chains start at the topmost-leftmost unvisited edge pixel and grow in
/// both directions from it, so an open curve is returned end to end.
pub fn trace_chains(edges: &BinaryMask) -> Vec<Vec<(usize, usize)>> {
    let w = edges.width();
    let mut visited = vec![false; edges.data().len()];
    let mut chains = Vec::new();
    for (i, &e) in edges.data().iter().enumerate() {
        if !e || visited[i] {
            continue;
        }
        let start = (i % w, i / w);
        visited[i] = true;
        let forward = walk(edges, &mut visited, start);
        let backward = walk(edges, &mut visited, start);
        let mut chain = Vec::with_capacity(forward.len() + backward.len() + 1);
        chain.extend(backward.into_iter().rev());
        chain.push(start);
        chain.extend(forward);
        chains.push(chain);
    }
    chains
}

/// Contour points of a mask at pixel centres, in traversal order.
pub fn extract_contour(mask: &BinaryMask, cls: LandmarkClass) -> PointSet {
    let edges = contour_edges(mask);
    let points = trace_chains(&edges)
        .into_iter()
        .flatten()
        .map(|(x, y)| Point2::new(x as f64, y as f64))
        .collect();
    PointSet::new(cls, points, PointRole::Sampled)
}

/// Uniform-stride thinning to at most `budget` points, keeping order.
pub fn decimate(points: &PointSet, budget: usize) -> Result<PointSet> {
    if budget < 1 {
        return Err(Error::invalid("point budget must be at least 1"));
    }
    let n = points.len();
    if n <= budget {
        return Ok(points.clone());
    }
    // floor(k * n / budget) without float rounding.
    let idx = (0..budget).map(|k| k * n / budget);
    Ok(PointSet {
        cls: points.cls,
        points: idx.clone().map(|i| points.points[i]).collect(),
        status: idx.map(|i| points.status[i]).collect(),
        role: points.role,
    })
}

/// One sampled set per non-background class present in `mask`.
/// Classes whose contour comes out empty are skipped.
pub fn sample_landmark_points(mask: &LabelMask, budget_per_class: usize) -> Result<Vec<PointSet>> {
    sample_landmark_points_capped(mask, budget_per_class, usize::MAX)
}

/// Like [`sample_landmark_points`], but when the per-class results would
/// exceed `global_cap` points in total every class budget is scaled down in
/// proportion to its contour length (each class keeps at least one point).
pub fn sample_landmark_points_capped(
    mask: &LabelMask,
    budget_per_class: usize,
    global_cap: usize,
) -> Result<Vec<PointSet>> {
    if budget_per_class < 1 {
        return Err(Error::invalid("point budget must be at least 1"));
    }
    let hist = mask.histogram();
    let present: Vec<LandmarkClass> = LandmarkClass::ALL[1..]
        .iter()
        .copied()
        .filter(|&c| hist[c as usize] > 0)
        .collect();

    #[cfg(feature = "rayon")]
    let contours: Vec<PointSet> = {
        use rayon::prelude::*;
        present.par_iter().map(|&c| extract_contour(&class_mask(mask, c), c)).collect()
    };
    #[cfg(not(feature = "rayon"))]
    let contours: Vec<PointSet> =
        present.iter().map(|&c| extract_contour(&class_mask(mask, c), c)).collect();

    let contours: Vec<PointSet> = contours.into_iter().filter(|p| !p.is_empty()).collect();
    let wanted: usize = contours.iter().map(|p| p.len().min(budget_per_class)).sum();
    let total: usize = contours.iter().map(|p| p.len()).sum();
    contours
        .iter()
        .map(|p| {
            let budget = if wanted > global_cap {
                ((global_cap as u128 * p.len() as u128 / total as u128) as usize)
                    .clamp(1, budget_per_class)
            } else {
                budget_per_class
            };
            decimate(p, budget)
        })
        .collect()
}
