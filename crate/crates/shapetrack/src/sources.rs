//! Segmentation sources backed by files and external commands.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread::JoinHandle;
use std::time::Instant;

use shapetrack_core::hybrid::{Clock, DelayedSource, SegPoll, SegmentationSource};
use shapetrack_core::{Error, LabelMask, RgbImage, Result};

use crate::seqio::{frame_path, read_mask};

fn core_err(frame: usize, e: anyhow::Error) -> Error {
    Error::Segmentation { frame, message: format!("{e:#}") }
}

/// Ground-truth masks from `dir`, delivered `latency` frames after the request.
pub fn mask_dir_source(
    dir: &Path,
    latency: usize,
) -> DelayedSource<impl FnMut(usize, &RgbImage) -> Result<LabelMask>> {
    let dir = dir.to_path_buf();
    DelayedSource::new(latency, move |t, _frame: &RgbImage| {
        read_mask(&frame_path(&dir, t)).map_err(|e| core_err(t, e))
    })
}

/// Runs `command <frame path>` through `sh`; stdout names the mask file.
fn run_command(command: &str, frames_dir: &Path, t: usize) -> Result<LabelMask> {
    let frame = frame_path(frames_dir, t);
    let out = Command::new("sh")
        .arg("-c")
        .arg(format!("{command} \"$1\""))
        .arg("sh")
        .arg(&frame)
        .output()
        .map_err(|e| Error::Segmentation { frame: t, message: format!("cannot run `{command}`: {e}") })?;
    if !out.status.success() {
        return Err(Error::Segmentation {
            frame: t,
            message: format!(
                "`{command}` exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            ),
        });
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    let path = PathBuf::from(stdout.trim());
    read_mask(&path).map_err(|e| core_err(t, e))
}

/// External segmentation command. Requests run on a worker thread; the
/// result is collected when polled `latency` frames later.
pub struct CommandSource {
    command: String,
    frames_dir: PathBuf,
    latency: usize,
    outstanding: Option<(usize, JoinHandle<Result<LabelMask>>)>,
}

impl CommandSource {
    /// `frames_dir` holds the numbered frames passed to the command.
    pub fn new(command: impl Into<String>, frames_dir: impl Into<PathBuf>, latency: usize) -> Self {
        CommandSource { command: command.into(), frames_dir: frames_dir.into(), latency, outstanding: None }
    }
}

impl SegmentationSource for CommandSource {
    fn request(&mut self, frame_index: usize, _frame: &RgbImage) -> Result<()> {
        if let Some((t, _)) = &self.outstanding {
            return Err(Error::InvalidArgument(format!("request for frame {t} still outstanding")));
        }
        let (command, dir) = (self.command.clone(), self.frames_dir.clone());
        let handle = std::thread::spawn(move || run_command(&command, &dir, frame_index));
        self.outstanding = Some((frame_index, handle));
        Ok(())
    }

    fn poll(&mut self, frame_index: usize) -> Result<SegPoll> {
        match &self.outstanding {
            None => Ok(SegPoll::Idle),
            Some((t, _)) if frame_index < t + self.latency => Ok(SegPoll::Pending),
            Some(_) => {
                let (t, handle) = self.outstanding.take().expect("checked above");
                let mask = handle
                    .join()
                    .map_err(|_| Error::Segmentation { frame: t, message: "worker panicked".into() })??;
                Ok(SegPoll::Ready { requested_at: t, mask })
            }
        }
    }

    fn segment_now(&mut self, frame_index: usize, _frame: &RgbImage) -> Result<LabelMask> {
        run_command(&self.command, &self.frames_dir, frame_index)
    }

    fn latency_frames(&self) -> usize {
        self.latency
    }
}

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl Default for WallClock {
    fn default() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
