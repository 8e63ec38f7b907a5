use proptest::prelude::*;
use shapetrack_core::evaluation::*;
use shapetrack_core::imaging::canny;
use shapetrack_core::mask_codec::class_mask;
use shapetrack_core::sampling::{contour_edges, decimate, extract_contour, sample_landmark_points};
use shapetrack_core::*;

fn disk_mask(size: usize, cx: f64, cy: f64, r: f64, cls: LandmarkClass) -> LabelMask {
    let labels = (0..size * size)
        .map(|i| {
            let (x, y) = ((i % size) as f64, (i / size) as f64);
            if (x - cx).powi(2) + (y - cy).powi(2) <= r * r {
                cls
            } else {
                LandmarkClass::Background
            }
        })
        .collect();
    LabelMask::new(size, size, labels).unwrap()
}

fn circle_distance(p: Point2, c: f64, r: f64) -> f64 {
    ((p.x - c).hypot(p.y - c) - r).abs()
}

#[test]
fn disk_contour_hugs_the_circle() {
    let mask = disk_mask(101, 50.0, 50.0, 30.0, LandmarkClass::Pupil);
    let pts = extract_contour(&class_mask(&mask, LandmarkClass::Pupil), LandmarkClass::Pupil);
    assert!(!pts.is_empty());
    let forward = pts.points().iter().map(|&p| circle_distance(p, 50.0, 30.0)).fold(0.0, f64::max);
    let backward = (0..3600)
        .map(|k| {
            let a = k as f64 * std::f64::consts::TAU / 3600.0;
            let q = Point2::new(50.0 + 30.0 * a.cos(), 50.0 + 30.0 * a.sin());
            pts.points().iter().map(|p| (p.x - q.x).hypot(p.y - q.y)).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    assert!(forward <= 1.5 && backward <= 1.5, "{forward} {backward}");
}

#[test]
fn canny_on_a_rendered_disk() {
    let img = GrayImage::from_fn(101, 101, |x, y| {
        if (x as f64 - 50.0).hypot(y as f64 - 50.0) <= 30.0 { 255.0 } else { 0.0 }
    })
    .unwrap();
    let edges = canny(&img, 1.4, 0.1, 0.3).unwrap();
    for y in 0..101 {
        for x in 0..101 {
            if edges.get(x, y) {
                let d = circle_distance(Point2::new(x as f64, y as f64), 50.0, 30.0);
                assert!(d <= 1.5, "edge ({x}, {y}) is {d} off");
            }
        }
    }
}

#[test]
fn rectangle_contour_covers_the_perimeter() {
    let mask = BinaryMask::from_fn(64, 64, |x, y| (20..40).contains(&x) && (30..40).contains(&y)).unwrap();
    let pts = extract_contour(&mask, LandmarkClass::Lip);
    // Pixel-centre perimeter of the filled rectangle.
    let dist = |p: Point2| {
        let (x0, x1, y0, y1) = (19.5, 39.5, 29.5, 39.5);
        let dx = if p.x < x0 { x0 - p.x } else if p.x > x1 { p.x - x1 } else { 0.0 };
        let dy = if p.y < y0 { y0 - p.y } else if p.y > y1 { p.y - y1 } else { 0.0 };
        if dx > 0.0 || dy > 0.0 {
            dx.hypot(dy)
        } else {
            (p.x - x0).min(x1 - p.x).min(p.y - y0).min(y1 - p.y)
        }
    };
    assert!(pts.points().iter().all(|&p| dist(p) <= 1.5));
    let ring: Vec<_> = pts.points().iter().chain(pts.points().first()).collect();
    let gap = ring.windows(2).map(|w| (w[0].x - w[1].x).hypot(w[0].y - w[1].y)).fold(0.0, f64::max);
    assert!(gap <= 2.0, "gap {gap}");
}

#[test]
fn decimation_gap_on_a_disk() {
    let mask = disk_mask(101, 50.0, 50.0, 30.0, LandmarkClass::Pupil);
    let pts = extract_contour(&class_mask(&mask, LandmarkClass::Pupil), LandmarkClass::Pupil);
    let n = 100;
    let hundred = PointSet::new(LandmarkClass::Pupil, pts.points()[..n].to_vec(), PointRole::Sampled);
    let kept = decimate(&hundred, 50).unwrap();
    let idx: Vec<usize> =
        kept.points().iter().map(|p| hundred.points().iter().position(|q| q == p).unwrap()).collect();
    assert_eq!(idx.len(), 50);
    assert!(idx.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 2));
}

fn on_contour_fixture() -> (LabelMask, PointSet) {
    let mask = disk_mask(101, 50.0, 50.0, 30.0, LandmarkClass::Sclera);
    let edges = contour_edges(&class_mask(&mask, LandmarkClass::Sclera));
    let pts = (0..101 * 101)
        .filter(|&i| edges.data()[i])
        .map(|i| Point2::new((i % 101) as f64, (i / 101) as f64))
        .collect();
    (mask, PointSet::new(LandmarkClass::Sclera, pts, PointRole::Tracked))
}

#[test]
fn tracking_accuracy_fixtures() {
    let (mask, on) = on_contour_fixture();
    assert_eq!(tracking_accuracy(&on, &mask, on.len(), 3.0).unwrap(), 1.0);

    let moved: Vec<Point2> = on
        .points()
        .iter()
        .map(|p| {
            let (dx, dy) = (p.x - 50.0, p.y - 50.0);
            let k = 5.0 / dx.hypot(dy);
            Point2::new(p.x + dx * k, p.y + dy * k)
        })
        .collect();
    let moved = PointSet::new(LandmarkClass::Sclera, moved, PointRole::Tracked);
    assert_eq!(tracking_accuracy(&moved, &mask, moved.len(), 3.0).unwrap(), 0.0);

    let pts: Vec<Point2> = on.points()[..100].to_vec();
    let status = (0..100).map(|i| if i % 2 == 0 { TrackStatus::Ok } else { TrackStatus::LostOutOfBounds }).collect();
    let half = PointSet::with_status(LandmarkClass::Sclera, pts, status, PointRole::Tracked).unwrap();
    assert_eq!(tracking_accuracy(&half, &mask, 100, 3.0).unwrap(), 0.5);
}

#[test]
fn bootstrap_frame_scores_one() {
    let mask = disk_mask(96, 40.0, 50.0, 20.0, LandmarkClass::Lip);
    let sets = sample_landmark_points(&mask, 400).unwrap();
    let log = TrackLog {
        frames: vec![FrameLog { frame: 0, sets, refreshed: true, timings: StageTimings::default() }],
    };
    let curve = accuracy_curve(&log, &[mask], 3.0).unwrap();
    assert_eq!(curve.points, vec![(0, 1.0)]);
}

#[test]
fn accuracy_curve_rejects_frame_mismatch() {
    let mask = disk_mask(64, 32.0, 32.0, 10.0, LandmarkClass::Lip);
    let log = TrackLog { frames: vec![] };
    assert!(accuracy_curve(&log, &[mask], 3.0).is_err());
}

fn random_mask(w: usize, h: usize, seed: &[u8]) -> LabelMask {
    let labels = (0..w * h).map(|i| LandmarkClass::ALL[seed[i % seed.len()] as usize % 9]).collect();
    LabelMask::new(w, h, labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn confusion_rows_sum_to_one(
        w in 1usize..24,
        h in 1usize..24,
        a in prop::collection::vec(0u8..9, 1..600),
        b in prop::collection::vec(0u8..9, 1..600),
        threshold in 0usize..3,
    ) {
        let (pred, gt) = (random_mask(w, h, &a), random_mask(w, h, &b));
        let m = confusion_matrix(&pred, &gt, threshold).unwrap();
        let total: u64 = m.counts().iter().flatten().sum();
        prop_assert_eq!(total, (w * h) as u64);
        for (g, row) in m.normalized().iter().enumerate() {
            let s: f64 = row.iter().sum();
            if m.support(LandmarkClass::ALL[g]) > 0 {
                prop_assert!((s - 1.0).abs() <= 1e-9);
            } else {
                prop_assert_eq!(s, 0.0);
            }
        }
        let same = confusion_matrix(&gt, &gt, threshold).unwrap();
        for g in LandmarkClass::ALL {
            if same.support(g) > 0 {
                prop_assert_eq!(same.rate(g, g), 1.0);
            }
        }
    }

    #[test]
    fn accuracy_grows_with_threshold(
        offsets in prop::collection::vec((-8.0..8.0f64, -8.0..8.0f64), 1..60),
        t1 in 0.0..6.0f64,
        extra in 0.0..6.0f64,
    ) {
        let (mask, on) = on_contour_fixture();
        let pts = on.points().iter().cycle().zip(&offsets).map(|(p, o)| Point2::new(p.x + o.0, p.y + o.1)).collect();
        let set = PointSet::new(LandmarkClass::Sclera, pts, PointRole::Tracked);
        let a = tracking_accuracy(&set, &mask, set.len(), t1).unwrap();
        let b = tracking_accuracy(&set, &mask, set.len(), t1 + extra).unwrap();
        prop_assert!(a <= b);
    }

    #[test]
    fn max_fps_inverts_the_mean(secs in prop::collection::vec(1e-6..1.0f64, 1..50), fps in 1.0..120.0f64) {
        let records: Vec<TimingRecord> = secs
            .iter()
            .enumerate()
            .map(|(i, &s)| TimingRecord { frame: i, stage: "track".into(), seconds: s })
            .collect();
        let stats = timing_stats(&records, fps).unwrap();
        let st = stats.stage("track").unwrap();
        prop_assert!((st.max_fps() * st.mean - 1.0).abs() <= f64::EPSILON);
        prop_assert!(stats.effective_fps() <= fps);
    }
}
