//! Segmentation confusion matrices, tracking accuracy curves and timing
//! statistics, plus their CSV and SVG renderings.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::hybrid::TrackLog;
use crate::imaging::BinaryMask;
use crate::mask_codec::{class_mask, LabelMask, LandmarkClass};
use crate::math;
use crate::sampling::{contour_edges, PointSet};

const N: usize = LandmarkClass::COUNT;

/// Rows are ground-truth classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    counts: [[u64; N]; N],
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        ConfusionMatrix { counts: [[0; N]; N] }
    }
}

impl ConfusionMatrix {
    /// Raw pixel counts.
    pub fn counts(&self) -> &[[u64; N]; N] {
        &self.counts
    }

    /// Pixels whose ground truth is `gt`.
    pub fn support(&self, gt: LandmarkClass) -> u64 {
        self.counts[gt.id() as usize].iter().sum()
    }

    /// Row-normalised entry; zero on rows without support.
    pub fn rate(&self, gt: LandmarkClass, pred: LandmarkClass) -> f64 {
        let n = self.support(gt);
        if n == 0 {
            0.0
        } else {
            self.counts[gt.id() as usize][pred.id() as usize] as f64 / n as f64
        }
    }

    pub fn normalized(&self) -> [[f64; N]; N] {
        let mut out = [[0.0; N]; N];
        for g in LandmarkClass::ALL {
            for p in LandmarkClass::ALL {
                out[g.id() as usize][p.id() as usize] = self.rate(g, p);
            }
        }
        out
    }

    /// Adds another matrix's counts, pooling frames.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += y;
            }
        }
    }

    /// Header of class names, then one `gt_class,v0,...,v8` row per class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gt_class");
        for c in LandmarkClass::ALL {
            s.push(',');
            s.push_str(c.name());
        }
        s.push('\n');
        let m = self.normalized();
        for g in LandmarkClass::ALL {
            s.push_str(g.name());
            for v in m[g.id() as usize] {
                let _ = write!(s, ",{v:.4}");
            }
            s.push('\n');
        }
        s
    }
}

/// Pixel-wise confusion of `pred` against `gt`.
///
/// With `threshold == 0` each pixel is counted at (gt, pred). With
/// `threshold = k > 0` a pixel counts as correct when any prediction within
/// Chebyshev distance `k` carries its ground-truth class; otherwise it is
/// attributed to the prediction at the pixel itself.
pub fn confusion_matrix(pred: &LabelMask, gt: &LabelMask, threshold: usize) -> Result<ConfusionMatrix> {
    let (w, h) = (gt.width(), gt.height());
    if (pred.width(), pred.height()) != (w, h) {
        return Err(Error::invalid(format!(
            "prediction is {}x{}, ground truth {w}x{h}",
            pred.width(),
            pred.height()
        )));
    }
    let mut m = ConfusionMatrix::default();
    let near = if threshold == 0 { None } else { Some(dilated_presence(pred, threshold)) };
    for y in 0..h {
        for x in 0..w {
            let g = gt.get(x, y);
            let p = match &near {
                Some(near) if near[g.id() as usize].get(x, y) => g,
                _ => pred.get(x, y),
            };
            m.counts[g.id() as usize][p.id() as usize] += 1;
        }
    }
    Ok(m)
}

/// For each class, where that class occurs within Chebyshev distance `k`.
fn dilated_presence(mask: &LabelMask, k: usize) -> Vec<BinaryMask> {
    let (w, h) = (mask.width(), mask.height());
    LandmarkClass::ALL
        .iter()
        .map(|&c| {
            let m = class_mask(mask, c);
            let rows = BinaryMask::from_fn(w, h, |x, y| {
                (x.saturating_sub(k)..=(x + k).min(w - 1)).any(|i| m.get(i, y))
            })
            .expect("non-empty");
            BinaryMask::from_fn(w, h, |x, y| (y.saturating_sub(k)..=(y + k).min(h - 1)).any(|j| rows.get(x, j)))
                .expect("non-empty")
        })
        .collect()
}

/// Points of `points` that are `Ok` and within `threshold` (Euclidean) of
/// an edge pixel of `edges`.
pub fn count_correct(points: &PointSet, edges: &BinaryMask, threshold: f64) -> usize {
    let (w, h) = (edges.width() as i64, edges.height() as i64);
    let reach = math::ceil(threshold) as i64 + 1;
    points
        .iter()
        .filter(|(p, s)| {
            if !s.is_ok() || !(p.x.is_finite() && p.y.is_finite()) {
                return false;
            }
            let (cx, cy) = (math::floor(p.x) as i64, math::floor(p.y) as i64);
            for y in (cy - reach).max(0)..=(cy + reach).min(h - 1) {
                for x in (cx - reach).max(0)..=(cx + reach).min(w - 1) {
                    if edges.get(x as usize, y as usize) {
                        let (dx, dy) = (x as f64 - p.x, y as f64 - p.y);
                        if dx * dx + dy * dy <= threshold * threshold {
                            return true;
                        }
                    }
                }
            }
            false
        })
        .count()
}

/// Fraction of `initial_count` points that are `Ok` and within `threshold`
/// of the ground-truth contour of their class.
pub fn tracking_accuracy(points: &PointSet, gt_mask: &LabelMask, initial_count: usize, threshold: f64) -> Result<f64> {
    if initial_count == 0 {
        return Err(Error::invalid("initial point count is zero"));
    }
    if points.len() > initial_count {
        return Err(Error::invalid(format!("{} points exceed initial count {initial_count}", points.len())));
    }
    if !(threshold >= 0.0) {
        return Err(Error::invalid("threshold must be >= 0"));
    }
    let edges = contour_edges(&class_mask(gt_mask, points.cls()));
    Ok(count_correct(points, &edges, threshold) as f64 / initial_count as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCurve {
    pub points: Vec<(usize, f64)>,
    pub mean: f64,
}

impl AccuracyCurve {
    pub fn from_points(points: Vec<(usize, f64)>) -> Self {
        let mean = if points.is_empty() {
            0.0
        } else {
            points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64
        };
        AccuracyCurve { points, mean }
    }

    /// `frame,accuracy` with four decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("frame,accuracy\n");
        for (f, a) in &self.points {
            let _ = writeln!(s, "{f},{a:.4}");
        }
        s
    }

    /// Standalone 800x400 line plot, accuracy 0 at the bottom gridline and
    /// 1 at the top one.
    pub fn to_svg(&self) -> String {
        const W: f64 = 800.0;
        const H: f64 = 400.0;
        const LEFT: f64 = 60.0;
        const RIGHT: f64 = 20.0;
        const TOP: f64 = 20.0;
        const BOTTOM: f64 = 40.0;
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let last = self.points.iter().map(|p| p.0).max().unwrap_or(0).max(1) as f64;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"400\" viewBox=\"0 0 800 400\">"
        );
        let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"800\" height=\"400\" fill=\"white\"/>");
        for i in 0..=4 {
            let v = i as f64 / 4.0;
            let y = TOP + ph * (1.0 - v);
            let _ = writeln!(
                s,
                "<line class=\"grid\" x1=\"{LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#cccccc\" stroke-width=\"1\"/>",
                LEFT + pw
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{v:.2}</text>",
                LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">frame (0 to {})</text>",
            LEFT + pw / 2.0,
            H - 10.0,
            last as usize
        );
        s.push_str("<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" points=\"");
        for (i, (f, a)) in self.points.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let x = LEFT + pw * (*f as f64 / last);
            let y = TOP + ph * (1.0 - a.clamp(0.0, 1.0));
            let _ = write!(s, "{x:.2},{y:.2}");
        }
        s.push_str("\"/>\n</svg>\n");
        s
    }
}

/// Per-frame accuracy pooled over classes.
///
/// Each class's denominator is its point count at the most recent refresh;
/// tracked sets keep lost points, so that is the set length at every frame.
pub fn accuracy_curve(log: &TrackLog, gt_masks: &[LabelMask], threshold: f64) -> Result<AccuracyCurve> {
    if log.frames.len() != gt_masks.len() {
        return Err(Error::invalid(format!(
            "log has {} frames, ground truth {}",
            log.frames.len(),
            gt_masks.len()
        )));
    }
    let mut points = Vec::with_capacity(gt_masks.len());
    for (i, (entry, gt)) in log.frames.iter().zip(gt_masks).enumerate() {
        if entry.frame != i {
            return Err(Error::invalid(format!("log entry {i} is frame {}", entry.frame)));
        }
        let (mut correct, mut total) = (0usize, 0usize);
        for set in &entry.sets {
            let edges = contour_edges(&class_mask(gt, set.cls()));
            correct += count_correct(set, &edges, threshold);
            total += set.len();
        }
        let acc = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
        points.push((entry.frame, acc));
    }
    Ok(AccuracyCurve::from_points(points))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub frame: usize,
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageStats {
    pub stage: String,
    pub mean: f64,
    pub max: f64,
    pub count: usize,
}

impl StageStats {
    /// Frames per second if this stage were the whole pipeline.
    pub fn max_fps(&self) -> f64 {
        1.0 / self.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingStats {
    /// In order of first appearance.
    pub stages: Vec<StageStats>,
    /// Per-frame sum of all stages except `segment`, which runs concurrently.
    pub critical_path: StageStats,
    pub video_fps: f64,
}

impl TimingStats {
    /// `min(video rate, 1 / mean critical path)`.
    pub fn effective_fps(&self) -> f64 {
        self.video_fps.min(self.critical_path.max_fps())
    }

    pub fn stage(&self, name: &str) -> Option<&StageStats> {
        self.stages.iter().find(|s| s.stage == name)
    }

    /// `stage,mean_s,max_s,max_fps`, one row per stage then `critical_path`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("stage,mean_s,max_s,max_fps\n");
        for st in self.stages.iter().chain(core::iter::once(&self.critical_path)) {
            let _ = writeln!(s, "{},{:.6},{:.6},{:.1}", st.stage, st.mean, st.max, st.max_fps());
        }
        s
    }
}

fn summarize(stage: &str, values: &[f64]) -> StageStats {
    let max = values.iter().copied().fold(0.0, f64::max);
    StageStats {
        stage: stage.into(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        max,
        count: values.len(),
    }
}

/// Stage means and maxima from a timing sidecar.
pub fn timing_stats(records: &[TimingRecord], video_fps: f64) -> Result<TimingStats> {
    if records.is_empty() {
        return Err(Error::invalid("no timing records"));
    }
    if !(video_fps > 0.0) {
        return Err(Error::invalid("video fps must be positive"));
    }
    if let Some(r) = records.iter().find(|r| !(r.seconds >= 0.0 && r.seconds.is_finite())) {
        return Err(Error::invalid(format!("frame {} stage {} has time {}", r.frame, r.stage, r.seconds)));
    }
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        if !names.contains(&r.stage.as_str()) {
            names.push(&r.stage);
        }
    }
    let stages = names
        .iter()
        .map(|&n| {
            let v: Vec<f64> = records.iter().filter(|r| r.stage == n).map(|r| r.seconds).collect();
            summarize(n, &v)
        })
        .collect();

    let mut frames: Vec<(usize, f64)> = Vec::new();
    for r in records.iter().filter(|r| r.stage != "segment") {
        match frames.iter_mut().find(|(f, _)| *f == r.frame) {
            Some((_, s)) => *s += r.seconds,
            None => frames.push((r.frame, r.seconds)),
        }
    }
    let per_frame: Vec<f64> = frames.iter().map(|f| f.1).collect();
    let critical_path = if per_frame.is_empty() {
        StageStats { stage: "critical_path".into(), mean: 0.0, max: 0.0, count: 0 }
    } else {
        summarize("critical_path", &per_frame)
    };
    Ok(TimingStats { stages, critical_path, video_fps })
}
