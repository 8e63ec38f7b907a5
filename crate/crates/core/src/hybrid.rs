//! Segmentation-refreshed point tracking.
//!
//! A slow [`SegmentationSource`] is asked for a mask every `refresh_period`
//! frames. While it works, the pyramidal tracker carries the contour points
//! forward. When a mask arrives, freshly sampled contour points replace the
//! tracked ones after being shifted by the recent mean per-frame motion
//! (the motion delta), which offsets part of the mask's staleness.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imaging::{to_grayscale, RgbImage};
use crate::klt::{track_points_prepared, FlowVector, TrackerConfig, TrackingPyramid};
use crate::mask_codec::{LabelMask, LandmarkClass};
use crate::sampling::{self, Point2, PointRole, PointSet};

/// Snapshots kept for the motion delta: three frame-to-frame intervals.
pub const HISTORY_CAPACITY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrackingMode {
    /// Tracking with periodic segmentation refresh.
    #[default]
    Combined,
    /// Bootstrap once, then track only.
    KltOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    /// Frames between segmentation requests.
    pub refresh_period: usize,
    pub budget_per_class: usize,
    /// Upper bound on the points sampled over all classes.
    pub global_cap: usize,
    pub mode: TrackingMode,
    /// Multiplier on the motion delta when splicing.
    pub delta_scale: f64,
    pub tracker: TrackerConfig,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            refresh_period: 4,
            budget_per_class: sampling::DEFAULT_BUDGET,
            global_cap: sampling::DEFAULT_GLOBAL_CAP,
            mode: TrackingMode::Combined,
            delta_scale: 1.0,
            tracker: TrackerConfig::default(),
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refresh_period < 1 {
            return Err(Error::invalid("refresh period must be at least 1"));
        }
        if self.budget_per_class < 1 || self.global_cap < 1 {
            return Err(Error::invalid("point budgets must be at least 1"));
        }
        if !(self.delta_scale >= 0.0 && self.delta_scale.is_finite()) {
            return Err(Error::invalid(format!("delta_scale must be >= 0, got {}", self.delta_scale)));
        }
        self.tracker.validate()
    }
}

/// Result of polling a segmentation source.
#[derive(Debug, Clone, PartialEq)]
pub enum SegPoll {
    /// The outstanding request finished.
    Ready { requested_at: usize, mask: LabelMask },
    Pending,
    /// Nothing is outstanding.
    Idle,
}

/// Something that turns frames into label masks, possibly slowly.
///
/// At most one request is outstanding at a time. Results are only observed
/// through [`poll`](SegmentationSource::poll) at frame boundaries; a failed
/// request surfaces as an error from `poll`.
pub trait SegmentationSource {
    fn request(&mut self, frame_index: usize, frame: &RgbImage) -> Result<()>;

    fn poll(&mut self, frame_index: usize) -> Result<SegPoll>;

    /// Blocking segmentation, used for the frame-0 bootstrap.
    fn segment_now(&mut self, frame_index: usize, frame: &RgbImage) -> Result<LabelMask>;

    /// Declared latency in frames.
    fn latency_frames(&self) -> usize;
}

impl<S: SegmentationSource + ?Sized> SegmentationSource for &mut S {
    fn request(&mut self, frame_index: usize, frame: &RgbImage) -> Result<()> {
        (**self).request(frame_index, frame)
    }

    fn poll(&mut self, frame_index: usize) -> Result<SegPoll> {
        (**self).poll(frame_index)
    }

    fn segment_now(&mut self, frame_index: usize, frame: &RgbImage) -> Result<LabelMask> {
        (**self).segment_now(frame_index, frame)
    }

    fn latency_frames(&self) -> usize {
        (**self).latency_frames()
    }
}

/// Deterministic source: a request made at frame `t` becomes ready exactly
/// when polled at frame `t + latency`.
pub struct DelayedSource<F> {
    segment: F,
    latency: usize,
    outstanding: Option<(usize, Result<LabelMask>)>,
}

impl<F> DelayedSource<F>
where
    F: FnMut(usize, &RgbImage) -> Result<LabelMask>,
{
    pub fn new(latency: usize, segment: F) -> Self {
        DelayedSource { segment, latency, outstanding: None }
    }
}

impl<F> SegmentationSource for DelayedSource<F>
where
    F: FnMut(usize, &RgbImage) -> Result<LabelMask>,
{
    fn request(&mut self, frame_index: usize, frame: &RgbImage) -> Result<()> {
        if let Some((t, _)) = &self.outstanding {
            return Err(Error::invalid(format!("request for frame {t} still outstanding")));
        }
        let result = (self.segment)(frame_index, frame);
        self.outstanding = Some((frame_index, result));
        Ok(())
    }

    fn poll(&mut self, frame_index: usize) -> Result<SegPoll> {
        match &self.outstanding {
            None => Ok(SegPoll::Idle),
            Some((t, _)) if frame_index < t + self.latency => Ok(SegPoll::Pending),
            Some(_) => {
                let (t, result) = self.outstanding.take().unwrap();
                match result {
                    Ok(mask) => Ok(SegPoll::Ready { requested_at: t, mask }),
                    Err(e) => Err(Error::Segmentation { frame: t, message: format!("{e}") }),
                }
            }
        }
    }

    fn segment_now(&mut self, frame_index: usize, frame: &RgbImage) -> Result<LabelMask> {
        (self.segment)(frame_index, frame)
    }

    fn latency_frames(&self) -> usize {
        self.latency
    }
}

/// One history entry: the tracked sets after processing `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub frame: usize,
    /// Bumped at every replacement; point identity only holds within a generation.
    pub generation: u64,
    pub sets: Vec<PointSet>,
}

impl Snapshot {
    fn set(&self, cls: LandmarkClass) -> Option<&PointSet> {
        self.sets.iter().find(|s| s.cls() == cls)
    }
}

/// The last four snapshots, oldest first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackHistory {
    entries: VecDeque<Snapshot>,
}

impl TrackHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a snapshot, evicting the oldest beyond capacity. Frames must increase.
    pub fn push(&mut self, frame: usize, generation: u64, sets: Vec<PointSet>) -> Result<()> {
        if let Some(last) = self.entries.back() {
            if frame <= last.frame {
                return Err(Error::invalid(format!(
                    "history frame {frame} does not follow {}",
                    last.frame
                )));
            }
        }
        if self.entries.len() == HISTORY_CAPACITY {
            self.entries.pop_front();
        }
        self.entries.push_back(Snapshot { frame, generation, sets });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Snapshot> {
        self.entries.iter()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// Mean recent per-frame motion of one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionDelta {
    pub cls: LandmarkClass,
    pub delta: FlowVector,
    /// Points usable in each interval, newest interval first.
    pub counts: [usize; 3],
}

/// Average over the available intervals of the mean displacement of points
/// that are `Ok` at both ends of the interval.
///
/// Intervals are taken newest first. An interval is skipped when the class
/// is missing at either end, when the ends belong to different generations,
/// or when no point qualifies; skipped intervals do not dilute the average.
pub fn compute_delta(history: &TrackHistory, cls: LandmarkClass) -> MotionDelta {
    let mut counts = [0usize; 3];
    let (mut sx, mut sy, mut used) = (0.0f64, 0.0f64, 0usize);
    let n = history.entries.len();
    for i in 0..3 {
        if i + 2 > n {
            break;
        }
        let newer = &history.entries[n - 1 - i];
        let older = &history.entries[n - 2 - i];
        if newer.generation != older.generation {
            continue;
        }
        let (Some(a), Some(b)) = (newer.set(cls), older.set(cls)) else {
            continue;
        };
        if a.len() != b.len() {
            continue;
        }
        let (mut dx, mut dy, mut k) = (0.0f64, 0.0f64, 0usize);
        for ((pa, sa), (pb, sb)) in a.iter().zip(b.iter()) {
            if sa.is_ok() && sb.is_ok() {
                dx += pa.x - pb.x;
                dy += pa.y - pb.y;
                k += 1;
            }
        }
        counts[i] = k;
        if k > 0 {
            sx += dx / k as f64;
            sy += dy / k as f64;
            used += 1;
        }
    }
    let delta = if used == 0 {
        FlowVector::ZERO
    } else {
        FlowVector::new(sx / used as f64, sy / used as f64)
    };
    MotionDelta { cls, delta, counts }
}

/// Shifts freshly sampled points by `scale * delta`, dropping any that
/// leave the `width x height` frame.
pub fn apply_refresh(
    p_s: &PointSet,
    delta: &MotionDelta,
    frame_dims: (usize, usize),
    scale: f64,
) -> Result<PointSet> {
    if p_s.role() != PointRole::Sampled {
        return Err(Error::invalid("only sampled point sets can be spliced"));
    }
    let (w, h) = (frame_dims.0 as f64, frame_dims.1 as f64);
    let (dx, dy) = (scale * delta.delta.dx, scale * delta.delta.dy);
    let points = p_s
        .points()
        .iter()
        .map(|p| Point2::new(p.x + dx, p.y + dy))
        .filter(|p| p.x >= 0.0 && p.x < w && p.y >= 0.0 && p.y < h)
        .collect();
    Ok(PointSet::new(p_s.cls(), points, PointRole::Spliced))
}

/// Monotonic seconds, for per-stage timing.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Clock that always reads zero; timings come out as zeros.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// Seconds spent per stage while processing one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub track: f64,
    pub sample: f64,
    pub splice: f64,
    pub segment: f64,
}

impl StageTimings {
    pub const STAGES: [&'static str; 4] = ["track", "sample", "splice", "segment"];

    pub fn values(&self) -> [f64; 4] {
        [self.track, self.sample, self.splice, self.segment]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub frame: usize,
    pub sets: Vec<PointSet>,
    /// The point sets were replaced from a segmentation result (or bootstrapped) this frame.
    pub refreshed: bool,
    pub timings: StageTimings,
}

/// Owner of the tracking state. Feed frames in order through [`step`](Self::step).
pub struct HybridTracker<C: Clock = NoClock> {
    cfg: HybridConfig,
    clock: C,
    next_frame: usize,
    dims: Option<(usize, usize)>,
    current: Vec<PointSet>,
    history: TrackHistory,
    generation: u64,
    pending: Option<usize>,
    prev_pyramid: Option<TrackingPyramid>,
}

impl HybridTracker<NoClock> {
    pub fn new(cfg: HybridConfig) -> Result<Self> {
        Self::with_clock(cfg, NoClock)
    }
}

impl<C: Clock> HybridTracker<C> {
    pub fn with_clock(cfg: HybridConfig, clock: C) -> Result<Self> {
        cfg.validate()?;
        Ok(HybridTracker {
            cfg,
            clock,
            next_frame: 0,
            dims: None,
            current: Vec::new(),
            history: TrackHistory::new(),
            generation: 0,
            pending: None,
            prev_pyramid: None,
        })
    }

    pub fn config(&self) -> &HybridConfig {
        &self.cfg
    }

    /// Index of the frame the next `step` call will process.
    pub fn frame_index(&self) -> usize {
        self.next_frame
    }

    pub fn current(&self) -> &[PointSet] {
        &self.current
    }

    pub fn history(&self) -> &TrackHistory {
        &self.history
    }

    /// Processes the next frame.
    pub fn step<S: SegmentationSource + ?Sized>(&mut self, frame: &RgbImage, source: &mut S) -> Result<StepOutput> {
        let dims = (frame.width(), frame.height());
        match self.dims {
            Some(d) if d != dims => {
                return Err(Error::invalid(format!(
                    "frame {} is {}x{}, sequence is {}x{}",
                    self.next_frame, dims.0, dims.1, d.0, d.1
                )))
            }
            _ => self.dims = Some(dims),
        }
        let t = self.next_frame;
        let out = self.step_inner(t, frame, source).map_err(|e| match e {
            e @ Error::Step { .. } => e,
            e => Error::Step { frame: t, source: Box::new(e) },
        })?;
        self.next_frame += 1;
        Ok(out)
    }

    fn sample(&self, mask: &LabelMask) -> Result<Vec<PointSet>> {
        if (mask.width(), mask.height()) != self.dims.unwrap() {
            return Err(Error::invalid(format!(
                "segmentation mask is {}x{}, frames are {:?}",
                mask.width(),
                mask.height(),
                self.dims.unwrap()
            )));
        }
        sampling::sample_landmark_points_capped(mask, self.cfg.budget_per_class, self.cfg.global_cap)
    }

    fn step_inner<S: SegmentationSource + ?Sized>(
        &mut self,
        t: usize,
        frame: &RgbImage,
        source: &mut S,
    ) -> Result<StepOutput> {
        let mut timings = StageTimings::default();
        let clock_start = self.clock.now();
        let gray = to_grayscale(frame);
        let pyramid = TrackingPyramid::new(&gray, self.cfg.tracker.pyramid_levels)?;
        timings.track += self.clock.now() - clock_start;
        let combined = self.cfg.mode == TrackingMode::Combined;
        let mut refreshed = false;

        if t == 0 {
            let s0 = self.clock.now();
            let mask = source.segment_now(0, frame)?;
            let s1 = self.clock.now();
            self.current = self.sample(&mask)?;
            timings.segment += s1 - s0;
            timings.sample += self.clock.now() - s1;
            refreshed = true;
            if combined {
                let s0 = self.clock.now();
                source.request(0, frame)?;
                self.pending = Some(0);
                timings.segment += self.clock.now() - s0;
            }
        } else {
            if combined && self.pending.is_some() {
                let s0 = self.clock.now();
                let polled = source.poll(t)?;
                timings.segment += self.clock.now() - s0;
                match polled {
                    SegPoll::Ready { mask, .. } => {
                        self.pending = None;
                        let s1 = self.clock.now();
                        let sampled = self.sample(&mask)?;
                        let s2 = self.clock.now();
                        timings.sample += s2 - s1;
                        let mut spliced = Vec::with_capacity(sampled.len());
                        for p_s in &sampled {
                            let delta = compute_delta(&self.history, p_s.cls());
                            let p_c = apply_refresh(p_s, &delta, self.dims.unwrap(), self.cfg.delta_scale)?;
                            if !p_c.is_empty() {
                                spliced.push(p_c);
                            }
                        }
                        self.current = spliced;
                        self.generation += 1;
                        refreshed = true;
                        timings.splice += self.clock.now() - s2;
                    }
                    SegPoll::Pending => {}
                    SegPoll::Idle => self.pending = None,
                }
            }
            if combined && t % self.cfg.refresh_period == 0 && self.pending.is_none() {
                let s0 = self.clock.now();
                source.request(t, frame)?;
                self.pending = Some(t);
                timings.segment += self.clock.now() - s0;
            }
            let s0 = self.clock.now();
            let prev = self.prev_pyramid.as_ref().expect("previous frame is kept after frame 0");
            let tracked = self
                .current
                .iter()
                .map(|set| track_points_prepared(prev, &pyramid, set, &self.cfg.tracker))
                .collect::<Result<Vec<_>>>()?;
            self.current = tracked;
            timings.track += self.clock.now() - s0;
        }

        self.history.push(t, self.generation, self.current.clone())?;
        self.prev_pyramid = Some(pyramid);
        Ok(StepOutput { frame: t, sets: self.current.clone(), refreshed, timings })
    }
}

/// Per-frame record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLog {
    pub frame: usize,
    pub sets: Vec<PointSet>,
    pub refreshed: bool,
    pub timings: StageTimings,
}

/// Every point of every class at every frame, plus stage timings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackLog {
    pub frames: Vec<FrameLog>,
}

impl TrackLog {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Runs [`HybridTracker::step`] over a whole sequence.
pub fn run_sequence<I, S, C>(frames: I, source: &mut S, cfg: &HybridConfig, clock: C) -> Result<TrackLog>
where
    I: IntoIterator<Item = Result<RgbImage>>,
    S: SegmentationSource + ?Sized,
    C: Clock,
{
    let mut tracker = HybridTracker::with_clock(cfg.clone(), clock)?;
    let mut log = TrackLog::default();
    for frame in frames {
        let frame = frame?;
        let out = tracker.step(&frame, source)?;
        log.frames.push(FrameLog {
            frame: out.frame,
            sets: out.sets,
            refreshed: out.refreshed,
            timings: out.timings,
        });
    }
    if log.frames.is_empty() {
        return Err(Error::invalid("sequence has no frames"));
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::klt::TrackStatus;
    use alloc::vec;

    fn set(cls: LandmarkClass, pts: &[(f64, f64)], status: &[TrackStatus]) -> PointSet {
        PointSet::with_status(
            cls,
            pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            status.to_vec(),
            PointRole::Tracked,
        )
        .unwrap()
    }

    #[test]
    fn delta_stationary_and_uniform() {
        let ok = [TrackStatus::Ok; 2];
        let mut h = TrackHistory::new();
        for f in 0..4 {
            h.push(f, 0, vec![set(LandmarkClass::Lip, &[(10.0, 10.0), (20.0, 5.0)], &ok)]).unwrap();
        }
        assert_eq!(compute_delta(&h, LandmarkClass::Lip).delta, FlowVector::ZERO);

        let mut h = TrackHistory::new();
        for f in 0..4 {
            let x = 3.0 * f as f64;
            h.push(f, 0, vec![set(LandmarkClass::Lip, &[(x, 1.0), (x + 7.0, 2.0)], &ok)]).unwrap();
        }
        let d = compute_delta(&h, LandmarkClass::Lip);
        assert_eq!(d.delta, FlowVector::new(3.0, 0.0));
        assert_eq!(d.counts, [2, 2, 2]);
        assert_eq!(compute_delta(&h, LandmarkClass::Hair).delta, FlowVector::ZERO);
    }

    #[test]
    fn delta_two_speeds() {
        // Two points moving (2,0) and (4,0) per frame: every interval mean is (3,0).
        let ok = [TrackStatus::Ok; 2];
        let mut h = TrackHistory::new();
        for f in 0..4 {
            let f = f as f64;
            h.push(f as usize, 0, vec![set(LandmarkClass::Hair, &[(2.0 * f, 0.0), (50.0 + 4.0 * f, 0.0)], &ok)])
                .unwrap();
        }
        assert_eq!(compute_delta(&h, LandmarkClass::Hair).delta, FlowVector::new(3.0, 0.0));
    }

    #[test]
    fn delta_short_history_lost_points_and_generations() {
        let mut h = TrackHistory::new();
        assert_eq!(compute_delta(&h, LandmarkClass::Hair).counts, [0, 0, 0]);
        h.push(0, 0, vec![set(LandmarkClass::Hair, &[(0.0, 0.0), (5.0, 5.0)], &[TrackStatus::Ok; 2])])
            .unwrap();
        assert_eq!(compute_delta(&h, LandmarkClass::Hair).delta, FlowVector::ZERO);
        // Second point lost at frame 1: only the first contributes.
        h.push(
            1,
            0,
            vec![set(LandmarkClass::Hair, &[(1.0, 2.0), (9.0, 9.0)], &[TrackStatus::Ok, TrackStatus::LostSmallEigen])],
        )
        .unwrap();
        let d = compute_delta(&h, LandmarkClass::Hair);
        assert_eq!(d.delta, FlowVector::new(1.0, 2.0));
        assert_eq!(d.counts, [1, 0, 0]);
        // A new generation breaks correspondence with older entries.
        h.push(2, 1, vec![set(LandmarkClass::Hair, &[(40.0, 40.0)], &[TrackStatus::Ok])]).unwrap();
        let d = compute_delta(&h, LandmarkClass::Hair);
        assert_eq!(d.counts, [0, 1, 0]);
        assert_eq!(d.delta, FlowVector::new(1.0, 2.0));
        assert!(h.push(2, 1, vec![]).is_err());
    }

    #[test]
    fn history_keeps_four() {
        let mut h = TrackHistory::new();
        for f in 0..7 {
            h.push(f, 0, vec![]).unwrap();
        }
        assert_eq!(h.entries().map(|s| s.frame).collect::<Vec<_>>(), [3, 4, 5, 6]);
    }

    #[test]
    fn refresh_examples() {
        let p_s = PointSet::new(LandmarkClass::Lip, vec![Point2::new(10.0, 10.0)], PointRole::Sampled);
        let zero = MotionDelta { cls: LandmarkClass::Lip, delta: FlowVector::ZERO, counts: [0; 3] };
        let same = apply_refresh(&p_s, &zero, (224, 224), 1.0).unwrap();
        assert_eq!(same.points(), p_s.points());
        assert_eq!(same.role(), PointRole::Spliced);

        let d = MotionDelta { cls: LandmarkClass::Lip, delta: FlowVector::new(3.0, -1.0), counts: [1; 3] };
        assert_eq!(apply_refresh(&p_s, &d, (224, 224), 1.0).unwrap().points(), &[Point2::new(13.0, 9.0)]);
        assert_eq!(apply_refresh(&p_s, &d, (224, 224), 0.0).unwrap().points(), p_s.points());

        let edge = PointSet::new(LandmarkClass::Lip, vec![Point2::new(222.0, 100.0)], PointRole::Sampled);
        let d = MotionDelta { cls: LandmarkClass::Lip, delta: FlowVector::new(5.0, 0.0), counts: [1; 3] };
        assert!(apply_refresh(&edge, &d, (224, 224), 1.0).unwrap().is_empty());

        let tracked = PointSet::new(LandmarkClass::Lip, vec![], PointRole::Tracked);
        assert!(apply_refresh(&tracked, &zero, (224, 224), 1.0).is_err());
    }

    #[test]
    fn delayed_source_latency() {
        let mask = LabelMask::filled(4, 4, LandmarkClass::Background).unwrap();
        let frame = RgbImage::filled(4, 4, [0; 3]).unwrap();
        let m = mask.clone();
        let mut src = DelayedSource::new(4, move |_, _| Ok(m.clone()));
        assert_eq!(src.poll(0).unwrap(), SegPoll::Idle);
        src.request(2, &frame).unwrap();
        assert!(src.request(3, &frame).is_err());
        for f in 2..6 {
            assert_eq!(src.poll(f).unwrap(), SegPoll::Pending);
        }
        assert_eq!(src.poll(6).unwrap(), SegPoll::Ready { requested_at: 2, mask });

        let mut failing = DelayedSource::new(1, |_, _| Err(Error::invalid("boom")));
        failing.request(0, &frame).unwrap();
        assert!(matches!(failing.poll(1), Err(Error::Segmentation { frame: 0, .. })));
    }

    #[test]
    fn config_validation() {
        assert!(HybridConfig::default().validate().is_ok());
        assert!(HybridConfig { refresh_period: 0, ..Default::default() }.validate().is_err());
        assert!(HybridConfig { delta_scale: -1.0, ..Default::default() }.validate().is_err());
    }
}
