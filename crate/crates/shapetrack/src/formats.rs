//! CSV files: track logs, timing sidecars and accuracy curves.

use std::io::{self, Read, Write};

use shapetrack_core::evaluation::{AccuracyCurve, TimingRecord};
use shapetrack_core::hybrid::{FrameLog, StageTimings};
use shapetrack_core::{LandmarkClass, Point2, PointRole, PointSet, TrackLog, TrackStatus};
use thiserror::Error;

pub const TRACKS_HEADER: &str = "frame,class_id,point_id,x,y,status";
pub const TIMINGS_HEADER: &str = "frame,stage,seconds";
pub const CURVE_HEADER: &str = "frame,accuracy";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn parse_err<T>(line: u64, message: impl Into<String>) -> Result<T, CsvError> {
    Err(CsvError::Parse { line, message: message.into() })
}

fn reader<R: Read>(input: R, header: &str) -> Result<csv::Reader<R>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let found = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return parse_err(1, format!("expected header `{header}`, found `{found}`"));
    }
    Ok(rdr)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, CsvError> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).unwrap_or("");
    raw.trim()
        .parse()
        .or_else(|_| parse_err(line, format!("bad {name} `{raw}`")))
}

/// One row per point per frame, coordinates with three decimals.
pub fn write_tracks<W: Write>(log: &TrackLog, out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{TRACKS_HEADER}")?;
    for f in &log.frames {
        for set in &f.sets {
            for (i, (p, s)) in set.iter().enumerate() {
                writeln!(out, "{},{},{},{:.3},{:.3},{}", f.frame, set.cls().id(), i, p.x, p.y, s.name())?;
            }
        }
    }
    out.flush()
}

/// Rebuilds a log from `tracks.csv`. Frames must appear in order starting at
/// 0; classes keep their order of first appearance within a frame.
pub fn read_tracks<R: Read>(input: R) -> Result<TrackLog, CsvError> {
    let mut rdr = reader(input, TRACKS_HEADER)?;
    let mut log = TrackLog::default();
    let mut rows: Vec<(LandmarkClass, Vec<Point2>, Vec<TrackStatus>)> = Vec::new();
    let mut current: Option<usize> = None;
    let finish = |log: &mut TrackLog, frame: usize, rows: &mut Vec<(LandmarkClass, Vec<Point2>, Vec<TrackStatus>)>| {
        let sets = rows
            .drain(..)
            .map(|(c, p, s)| PointSet::with_status(c, p, s, PointRole::Tracked).expect("equal lengths"))
            .collect();
        log.frames.push(FrameLog { frame, sets, refreshed: false, timings: StageTimings::default() });
    };
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 6 {
            return parse_err(line, format!("expected 6 fields, found {}", rec.len()));
        }
        let frame: usize = field(&rec, 0, "frame")?;
        let class_id: u8 = field(&rec, 1, "class_id")?;
        let point_id: usize = field(&rec, 2, "point_id")?;
        let x: f64 = field(&rec, 3, "x")?;
        let y: f64 = field(&rec, 4, "y")?;
        let cls = LandmarkClass::from_id(class_id)
            .map_or_else(|| parse_err(line, format!("unknown class id {class_id}")), Ok)?;
        let status = TrackStatus::from_name(rec[5].trim())
            .map_or_else(|| parse_err(line, format!("unknown status `{}`", &rec[5])), Ok)?;
        if current != Some(frame) {
            if let Some(prev) = current {
                finish(&mut log, prev, &mut rows);
            }
            if frame != log.frames.len() {
                return parse_err(line, format!("frame {frame} out of sequence, expected {}", log.frames.len()));
            }
            current = Some(frame);
        }
        let idx = match rows.iter().position(|r| r.0 == cls) {
            Some(i) if i == rows.len() - 1 => i,
            Some(_) => return parse_err(line, format!("class {cls} rows are not contiguous")),
            None => {
                rows.push((cls, Vec::new(), Vec::new()));
                rows.len() - 1
            }
        };
        let entry = &mut rows[idx];
        if point_id != entry.1.len() {
            return parse_err(line, format!("point_id {point_id}, expected {}", entry.1.len()));
        }
        entry.1.push(Point2::new(x, y));
        entry.2.push(status);
    }
    if let Some(prev) = current {
        finish(&mut log, prev, &mut rows);
    }
    Ok(log)
}

/// Four rows per frame, in stage order.
pub fn write_timings<W: Write>(log: &TrackLog, out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{TIMINGS_HEADER}")?;
    for f in &log.frames {
        for (name, v) in StageTimings::STAGES.iter().zip(f.timings.values()) {
            writeln!(out, "{},{name},{v:.9}", f.frame)?;
        }
    }
    out.flush()
}

pub fn read_timings<R: Read>(input: R) -> Result<Vec<TimingRecord>, CsvError> {
    let mut rdr = reader(input, TIMINGS_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(TimingRecord {
            frame: field(&rec, 0, "frame")?,
            stage: rec.get(1).unwrap_or("").trim().to_string(),
            seconds: field(&rec, 2, "seconds")?,
        });
    }
    Ok(out)
}

pub fn read_curve<R: Read>(input: R) -> Result<AccuracyCurve, CsvError> {
    let mut rdr = reader(input, CURVE_HEADER)?;
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let a: f64 = field(&rec, 1, "accuracy")?;
        if !(0.0..=1.0).contains(&a) {
            return parse_err(line, format!("accuracy {a} outside [0, 1]"));
        }
        points.push((field(&rec, 0, "frame")?, a));
    }
    Ok(AccuracyCurve::from_points(points))
}
