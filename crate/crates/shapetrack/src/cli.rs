//! Command-line parsing and execution.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use shapetrack_core::evaluation::{accuracy_curve, confusion_matrix, timing_stats, ConfusionMatrix, TimingRecord};
use shapetrack_core::hybrid::{run_sequence, Clock, HybridConfig, NoClock, SegmentationSource, TrackingMode};
use shapetrack_core::imaging::to_grayscale;
use shapetrack_core::klt::{track_points_prepared, TrackerConfig, TrackingPyramid};
use shapetrack_core::synth::parse_script;
use shapetrack_core::{LandmarkClass, Point2, PointRole, PointSet, TrackLog};

use crate::formats;
use crate::seqio;
use crate::sources::{mask_dir_source, CommandSource, WallClock};

#[derive(Debug, Parser)]
#[command(name = "shapetrack", version, about = "Hybrid segmentation + KLT shape tracking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Render a scene script into frames/ and masks/.
    Synth(SynthArgs),
    /// Track a frame sequence, writing tracks.csv and timings.csv.
    Track(TrackArgs),
    /// Confusion matrix of predicted masks against ground truth.
    EvalSeg(EvalSegArgs),
    /// Tracking accuracy curve of a tracks.csv against ground-truth masks.
    EvalTrack(EvalTrackArgs),
    /// Stage timing statistics, from a timing sidecar or a tracking benchmark.
    Bench(BenchArgs),
    /// SVG plot of an accuracy curve CSV.
    Plot(PlotArgs),
    /// Usage text was requested; nothing to run.
    #[command(skip)]
    Help(String),
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub script: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the script's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Combined,
    KltOnly,
}

#[derive(Debug, Clone, PartialEq, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["gt_masks", "seg_cmd"]))]
pub struct TrackArgs {
    #[arg(long)]
    pub frames: PathBuf,
    /// Directory of palette masks served as the segmentation result.
    #[arg(long)]
    pub gt_masks: Option<PathBuf>,
    /// Command run with a frame path; prints the path of its mask.
    #[arg(long)]
    pub seg_cmd: Option<String>,
    #[arg(long, value_enum, default_value = "combined")]
    pub mode: ModeArg,
    /// Refresh period in frames.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub period: u64,
    /// Segmentation latency in frames.
    #[arg(long, default_value_t = 4)]
    pub latency: usize,
    #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub global_cap: u64,
    #[arg(long, default_value_t = 1.0)]
    pub delta_scale: f64,
    /// Write zero timings so every output byte is reproducible.
    #[arg(long)]
    pub no_clock: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct EvalSegArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub threshold: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct EvalTrackArgs {
    #[arg(long)]
    pub tracks: PathBuf,
    #[arg(long)]
    pub gt_masks: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["timings", "frames"]))]
pub struct BenchArgs {
    /// Timing sidecar written by `track`.
    #[arg(long)]
    pub timings: Option<PathBuf>,
    /// Frame directory to benchmark point tracking on.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Points tracked per frame with --frames.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub points: u64,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// A rejected command line; the process exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0.trim_end())
    }
}

impl std::error::Error for UsageError {}

fn must_exist(path: &Path, flag: &str) -> Result<(), UsageError> {
    if path.exists() {
        Ok(())
    } else {
        Err(UsageError(format!("--{flag}: {} does not exist", path.display())))
    }
}

/// Parses and validates `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<Command, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion
                | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Ok(Command::Help(e.render().to_string()))
                }
                _ => Err(UsageError(e.render().to_string())),
            }
        }
    };
    let cmd = cli.command;
    match &cmd {
        Command::Synth(a) => must_exist(&a.script, "script")?,
        Command::Track(a) => {
            must_exist(&a.frames, "frames")?;
            if let Some(m) = &a.gt_masks {
                must_exist(m, "gt-masks")?;
            }
            if !(a.delta_scale >= 0.0 && a.delta_scale.is_finite()) {
                return Err(UsageError(format!("--delta-scale must be >= 0, got {}", a.delta_scale)));
            }
        }
        Command::EvalSeg(a) => {
            must_exist(&a.pred, "pred")?;
            must_exist(&a.gt, "gt")?;
        }
        Command::EvalTrack(a) => {
            must_exist(&a.tracks, "tracks")?;
            must_exist(&a.gt_masks, "gt-masks")?;
            if !(a.threshold >= 0.0 && a.threshold.is_finite()) {
                return Err(UsageError(format!("--threshold must be >= 0, got {}", a.threshold)));
            }
        }
        Command::Bench(a) => {
            if let Some(t) = &a.timings {
                must_exist(t, "timings")?;
            }
            if let Some(f) = &a.frames {
                must_exist(f, "frames")?;
            }
            if !(a.fps > 0.0 && a.fps.is_finite()) {
                return Err(UsageError(format!("--fps must be positive, got {}", a.fps)));
            }
        }
        Command::Plot(a) => must_exist(&a.curve, "curve")?,
        Command::Help(_) => {}
    }
    Ok(cmd)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).with_context(|| format!("opening {}", path.display()))
}

/// Runs a validated command. Informational output goes to stdout.
pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Help(text) => print!("{text}"),
        Command::Synth(a) => {
            let text = fs::read_to_string(&a.script).with_context(|| format!("reading {}", a.script.display()))?;
            let mut script = parse_script(&text).with_context(|| format!("{}", a.script.display()))?;
            if let Some(seed) = a.seed {
                script.seed = seed;
            }
            seqio::write_sequence(&script, &a.out)?;
            println!("wrote {} frames to {}", script.frame_count, a.out.display());
        }
        Command::Track(a) => {
            let log = track(a)?;
            fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
            let tracks = a.out.join("tracks.csv");
            formats::write_tracks(&log, fs::File::create(&tracks)?).with_context(|| format!("writing {}", tracks.display()))?;
            let timings = a.out.join("timings.csv");
            formats::write_timings(&log, fs::File::create(&timings)?)
                .with_context(|| format!("writing {}", timings.display()))?;
            println!("tracked {} frames into {}", log.len(), a.out.display());
        }
        Command::EvalSeg(a) => {
            let (pred, gt) = (seqio::count_frames(&a.pred)?, seqio::count_frames(&a.gt)?);
            if pred != gt {
                bail!("{} has {pred} masks, {} has {gt}", a.pred.display(), a.gt.display());
            }
            let mut total = ConfusionMatrix::default();
            for i in 0..gt {
                let p = seqio::read_mask(&seqio::frame_path(&a.pred, i))?;
                let g = seqio::read_mask(&seqio::frame_path(&a.gt, i))?;
                total.merge(&confusion_matrix(&p, &g, a.threshold).with_context(|| format!("frame {i}"))?);
            }
            write(&a.out, total.to_csv())?;
        }
        Command::EvalTrack(a) => {
            let log = formats::read_tracks(open(&a.tracks)?).with_context(|| format!("{}", a.tracks.display()))?;
            let masks = seqio::read_masks(&a.gt_masks)?;
            let curve = accuracy_curve(&log, &masks, a.threshold)?;
            write(&a.out, curve.to_csv())?;
            println!("mean accuracy: {:.4}", curve.mean);
        }
        Command::Bench(a) => {
            let records = match (&a.timings, &a.frames) {
                (Some(t), _) => formats::read_timings(open(t)?).with_context(|| format!("{}", t.display()))?,
                (None, Some(f)) => bench_tracking(f, a.points as usize)?,
                (None, None) => unreachable!("clap requires one input"),
            };
            let stats = timing_stats(&records, a.fps)?;
            write(&a.out, stats.to_csv())?;
            for s in &stats.stages {
                println!("{}: mean {:.6} s, max {:.6} s, max fps {:.1}", s.stage, s.mean, s.max, s.max_fps());
            }
            println!("effective fps: {:.1}", stats.effective_fps());
        }
        Command::Plot(a) => {
            let curve = formats::read_curve(open(&a.curve)?).with_context(|| format!("{}", a.curve.display()))?;
            write(&a.out, curve.to_svg())?;
        }
    }
    Ok(())
}

fn track(a: &TrackArgs) -> Result<TrackLog> {
    let cfg = HybridConfig {
        refresh_period: a.period as usize,
        budget_per_class: a.budget as usize,
        global_cap: a.global_cap as usize,
        mode: match a.mode {
            ModeArg::Combined => TrackingMode::Combined,
            ModeArg::KltOnly => TrackingMode::KltOnly,
        },
        delta_scale: a.delta_scale,
        tracker: TrackerConfig::default(),
    };
    let mut source: Box<dyn SegmentationSource> = match (&a.gt_masks, &a.seg_cmd) {
        (Some(dir), _) => Box::new(mask_dir_source(dir, a.latency)),
        (None, Some(cmd)) => Box::new(CommandSource::new(cmd.clone(), a.frames.clone(), a.latency)),
        (None, None) => unreachable!("clap requires a source"),
    };
    let frames = seqio::frames(&a.frames)?;
    let log = if a.no_clock {
        run_sequence(frames, source.as_mut(), &cfg, NoClock)?
    } else {
        run_sequence(frames, source.as_mut(), &cfg, WallClock::default())?
    };
    Ok(log)
}

/// Tracks a fixed grid of `points` points between consecutive frames and
/// times each frame (grayscale, pyramid and tracking).
fn bench_tracking(dir: &Path, points: usize) -> Result<Vec<TimingRecord>> {
    let cfg = TrackerConfig::default();
    let n = seqio::count_frames(dir)?;
    if n < 2 {
        bail!("{}: benchmarking needs at least two frames", dir.display());
    }
    let first = seqio::read_rgb(&seqio::frame_path(dir, 0))?;
    let (w, h) = (first.width() as f64, first.height() as f64);
    let margin = 4.0 * (cfg.window_radius as f64 + 1.0);
    if w <= 2.0 * margin || h <= 2.0 * margin {
        bail!("frames are too small to benchmark");
    }
    let side = (points as f64).sqrt().ceil() as usize;
    let grid: Vec<Point2> = (0..points)
        .map(|k| {
            let (i, j) = ((k % side) as f64 + 0.5, (k / side) as f64 + 0.5);
            Point2::new(margin + (w - 2.0 * margin) * i / side as f64, margin + (h - 2.0 * margin) * j / side as f64)
        })
        .collect();
    let set = PointSet::new(LandmarkClass::FaceSkin, grid, PointRole::Sampled);
    let clock = WallClock::default();
    let mut prev = TrackingPyramid::new(&to_grayscale(&first), cfg.pyramid_levels)?;
    let mut records = Vec::with_capacity(n - 1);
    for i in 1..n {
        let frame = seqio::read_rgb(&seqio::frame_path(dir, i))?;
        let t0 = clock.now();
        let next = TrackingPyramid::new(&to_grayscale(&frame), cfg.pyramid_levels)?;
        let tracked = track_points_prepared(&prev, &next, &set, &cfg)?;
        let seconds = clock.now() - t0;
        std::hint::black_box(&tracked);
        records.push(TimingRecord { frame: i, stage: "track".into(), seconds });
        prev = next;
    }
    Ok(records)
}
