//! Mean-shift multi-object tracking over k-means-quantized color histograms.
//!
//! Each track owns a quantizer trained on the pixels of its first window and
//! a target histogram taken at the same time. Tracks advance independently,
//! so the result does not depend on the worker count.

mod meanshift;
mod quantize;

use std::fmt::Write as _;

pub use meanshift::{bhattacharyya, histogram, histogram_with, meanshift, KernelProfile, ShiftResult};
pub use quantize::{quantize_colors, Quantizer};

use crate::error::{Error, Result};
use crate::frame_io::Frame;
use crate::runtime::Backend;
use crate::segmentation::Blob;

/// Frames a track may stay lost before it is retired.
pub const LOST_RETIRE_FRAMES: usize = 5;
/// Padding added to a blob's bounding box to form the tracking window.
pub const WINDOW_PAD: usize = 4;
/// New-blob gating radius as a multiple of the track window diagonal.
pub const GATE_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub k_clusters: usize,
    pub max_iters: usize,
    pub eps: f64,
    pub kmeans_iters: usize,
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            k_clusters: 16,
            max_iters: 20,
            eps: 0.5,
            kmeans_iters: 20,
            seed: 0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_clusters < 2 {
            return Err(Error::config("tracker.k_clusters", "must be >= 2"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("tracker.eps", "must be > 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("tracker.max_iters", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Active,
    Lost,
}

impl TrackStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrackStatus::Active => "active",
            TrackStatus::Lost => "lost",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub frame: usize,
    pub center: (f64, f64),
    pub window: (usize, usize),
    pub status: TrackStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u32,
    pub center: (f64, f64),
    pub window: (usize, usize),
    pub target: Vec<f64>,
    pub quantizer: Quantizer,
    pub status: TrackStatus,
    lost_frames: usize,
    pub history: Vec<TrackState>,
}

impl Track {
    /// Starts a track on `blob`, learning its colors from `frame`.
    pub fn from_blob(track_id: u32, frame: &Frame, blob: &Blob, cfg: &TrackerConfig) -> Result<Self> {
        let (bw, bh) = blob.bbox_size();
        let window = ((bw + WINDOW_PAD).max(3), (bh + WINDOW_PAD).max(3));
        Track::new(track_id, frame, blob.centroid, window, cfg)
    }

    pub fn new(
        track_id: u32,
        frame: &Frame,
        center: (f64, f64),
        window: (usize, usize),
        cfg: &TrackerConfig,
    ) -> Result<Self> {
        if window.0 < 3 || window.1 < 3 {
            return Err(Error::Invalid("track window must be at least 3x3".into()));
        }
        let pixels = window_rgb(frame, center, window);
        if pixels.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let k = cfg.k_clusters.min(pixels.len());
        let quantizer = quantize_colors(&pixels, k, cfg.kmeans_iters, cfg.seed.wrapping_add(track_id as u64))?;
        let mut target = histogram(frame, center, window, &quantizer)?;
        suppress_background(frame, center, window, &quantizer, &mut target);
        Ok(Track {
            track_id,
            center,
            window,
            target,
            quantizer,
            status: TrackStatus::Active,
            lost_frames: 0,
            history: vec![TrackState {
                frame: frame.index(),
                center,
                window,
                status: TrackStatus::Active,
            }],
        })
    }

    fn gate(&self) -> f64 {
        let (w, h) = (self.window.0 as f64, self.window.1 as f64);
        GATE_FACTOR * (w * w + h * h).sqrt()
    }

    fn record(&mut self, frame: usize) {
        self.history.push(TrackState {
            frame,
            center: self.center,
            window: self.window,
            status: self.status,
        });
    }
}

/// Share of the surrounding ring above which a color counts as background.
const BACKGROUND_SHARE: f64 = 0.05;

/// Drops target bins that are common in a ring around the window (twice its
/// size), then renormalizes. Left untouched if nothing would remain.
fn suppress_background(frame: &Frame, center: (f64, f64), window: (usize, usize), q: &Quantizer, target: &mut [f64]) {
    let (hx, hy) = (window.0 as f64 / 2.0, window.1 as f64 / 2.0);
    let outer = window_rgb_coords(frame, center, (window.0 * 2, window.1 * 2));
    let mut ring = vec![0usize; q.k()];
    let mut total = 0usize;
    for (x, y) in outer {
        if (x as f64 - center.0).abs() <= hx && (y as f64 - center.1).abs() <= hy {
            continue;
        }
        ring[q.assign(frame.rgb(x, y))] += 1;
        total += 1;
    }
    if total == 0 {
        return;
    }
    let kept: Vec<f64> = target
        .iter()
        .zip(&ring)
        .map(|(&t, &r)| {
            if r as f64 / total as f64 > BACKGROUND_SHARE {
                0.0
            } else {
                t
            }
        })
        .collect();
    let mass: f64 = kept.iter().sum();
    if mass > 0.0 {
        for (t, k) in target.iter_mut().zip(kept) {
            *t = k / mass;
        }
    }
}

fn window_rgb(frame: &Frame, center: (f64, f64), window: (usize, usize)) -> Vec<[u8; 3]> {
    window_rgb_coords(frame, center, window)
        .into_iter()
        .map(|(x, y)| frame.rgb(x, y))
        .collect()
}

fn window_rgb_coords(frame: &Frame, center: (f64, f64), window: (usize, usize)) -> Vec<(usize, usize)> {
    let (hx, hy) = (window.0 as f64 / 2.0, window.1 as f64 / 2.0);
    let x0 = (center.0 - hx).ceil().max(0.0) as usize;
    let y0 = (center.1 - hy).ceil().max(0.0) as usize;
    let x1 = (center.0 + hx).floor().min(frame.width() as f64 - 1.0);
    let y1 = (center.1 + hy).floor().min(frame.height() as f64 - 1.0);
    if x1 < 0.0 || y1 < 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for y in y0..=y1 as usize {
        for x in x0..=x1 as usize {
            out.push((x, y));
        }
    }
    out
}

/// Mean-shift step for a single track: returns the new center, or `None`
/// when the target no longer overlaps the window.
pub fn meanshift_step(frame: &Frame, track: &Track, cfg: &TrackerConfig) -> Result<Option<(f64, f64)>> {
    let r = meanshift(
        frame,
        track.center,
        track.window,
        &track.target,
        &track.quantizer,
        cfg.max_iters,
        cfg.eps,
    )?;
    Ok((!r.lost).then_some(r.center))
}

/// Owns the live tracks and the retired ones.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    backend: Backend,
    tracks: Vec<Track>,
    retired: Vec<Track>,
    next_id: u32,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig, backend: Backend) -> Result<Self> {
        cfg.validate()?;
        Ok(Tracker {
            cfg,
            backend,
            tracks: Vec::new(),
            retired: Vec::new(),
            next_id: 0,
        })
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Live and retired tracks ordered by id.
    pub fn all_tracks(&self) -> Vec<&Track> {
        let mut all: Vec<&Track> = self.tracks.iter().chain(&self.retired).collect();
        all.sort_by_key(|t| t.track_id);
        all
    }

    /// Advances every active track on `frame`, then matches `blobs`: a blob
    /// within the gate of a lost track revives it, a blob outside every gate
    /// starts a new track.
    pub fn track_frame(&mut self, frame: &Frame, blobs: &[Blob]) -> Result<()> {
        let cfg = &self.cfg;
        let moved = self.backend.try_map(&self.tracks, |t| match t.status {
            TrackStatus::Active => meanshift_step(frame, t, cfg),
            TrackStatus::Lost => Ok(None),
        })?;
        for (t, m) in self.tracks.iter_mut().zip(moved) {
            match m {
                Some(c) => {
                    t.center = c;
                    t.status = TrackStatus::Active;
                    t.lost_frames = 0;
                }
                None => {
                    t.status = TrackStatus::Lost;
                    t.lost_frames += 1;
                }
            }
        }

        let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        for blob in blobs {
            let near: Vec<usize> = (0..self.tracks.len())
                .filter(|&i| dist(self.tracks[i].center, blob.centroid) <= self.tracks[i].gate())
                .collect();
            if near.is_empty() {
                let id = self.next_id;
                self.next_id += 1;
                self.tracks.push(Track::from_blob(id, frame, blob, &self.cfg)?);
                continue;
            }
            if near.iter().any(|&i| self.tracks[i].status == TrackStatus::Active) {
                continue;
            }
            let &best = near
                .iter()
                .min_by(|&&a, &&b| {
                    dist(self.tracks[a].center, blob.centroid).total_cmp(&dist(self.tracks[b].center, blob.centroid))
                })
                .expect("non-empty");
            let t = &mut self.tracks[best];
            t.center = blob.centroid;
            t.status = TrackStatus::Active;
            t.lost_frames = 0;
        }

        let index = frame.index();
        for t in &mut self.tracks {
            if t.history.last().map(|s| s.frame) != Some(index) {
                t.record(index);
            }
        }
        let (keep, retire): (Vec<Track>, Vec<Track>) =
            self.tracks.drain(..).partition(|t| t.lost_frames < LOST_RETIRE_FRAMES);
        self.tracks = keep;
        self.retired.extend(retire);
        Ok(())
    }

    /// Track log lines `frame track_id x y w h status`, ordered by frame
    /// then id.
    pub fn log(&self) -> String {
        write_track_log(&self.all_tracks())
    }
}

pub fn write_track_log(tracks: &[&Track]) -> String {
    let mut rows: Vec<(usize, u32, &TrackState)> = tracks
        .iter()
        .flat_map(|t| t.history.iter().map(move |s| (s.frame, t.track_id, s)))
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));
    let mut out = String::from("# frame track_id x y w h status\n");
    for (frame, id, s) in rows {
        let _ = writeln!(
            out,
            "{frame} {id} {:.3} {:.3} {} {} {}",
            s.center.0,
            s.center.1,
            s.window.0,
            s.window.1,
            s.status.name()
        );
    }
    out
}
