//! Sliding-window background modeling and foreground detection.
//!
//! Frames are reduced to integer luma before modeling; the mean and mode
//! models are computed with integer arithmetic only, so masks are identical
//! on every backend.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::frame_io::Frame;
use crate::runtime::Backend;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mean,
    Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warp {
    Identity,
    PerFrameHomography,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionConfig {
    pub window_w: usize,
    pub histogram_bins: usize,
    pub method: Method,
    pub fg_threshold: u8,
    pub warp: Warp,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            window_w: 91,
            histogram_bins: 32,
            method: Method::Mean,
            fg_threshold: 25,
            warp: Warp::Identity,
        }
    }
}

impl MotionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_w < 2 {
            return Err(Error::config("motion.window_w", "must be >= 2"));
        }
        if !(2..=256).contains(&self.histogram_bins) {
            return Err(Error::config("motion.histogram_bins", "must be in 2..=256"));
        }
        if self.fg_threshold == 0 || self.fg_threshold == 255 {
            return Err(Error::config("motion.fg_threshold", "must be in 1..=254"));
        }
        Ok(())
    }
}

/// Foreground mask, one flag per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} bits", width * height),
                found: format!("{} bits", bits.len()),
            });
        }
        Ok(BinaryMask { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Projective transform mapping source coordinates to output coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    h: [[f64; 3]; 3],
}

impl Homography {
    pub fn new(h: [[f64; 3]; 3]) -> Result<Self> {
        if h.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHomography("non-finite entry".into()));
        }
        if h[2][2] == 0.0 {
            return Err(Error::InvalidHomography("h[2][2] is zero".into()));
        }
        Ok(Homography { h })
    }

    pub fn identity() -> Self {
        Homography {
            h: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Homography {
            h: [[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]],
        }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.h
    }

    fn inverse(&self) -> Result<[[f64; 3]; 3]> {
        let m = &self.h;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::InvalidHomography("singular matrix".into()));
        }
        let mut inv = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                inv[r][c] = adj[r][c] / det;
            }
        }
        Ok(inv)
    }
}

/// Parses one homography per line: nine whitespace-separated reals, row-major.
pub fn parse_homographies(text: &str) -> Result<Vec<Homography>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(n + 1, "bad real"))?;
        if vals.len() != 9 {
            return Err(Error::parse(n + 1, "expected 9 values"));
        }
        let h = [
            [vals[0], vals[1], vals[2]],
            [vals[3], vals[4], vals[5]],
            [vals[6], vals[7], vals[8]],
        ];
        out.push(Homography::new(h).map_err(|e| Error::parse(n + 1, e.to_string()))?);
    }
    Ok(out)
}

/// Warps by inverse mapping with bilinear interpolation; samples falling
/// outside the source are 0.
pub fn warp_frame(frame: &Frame, h: &Homography) -> Result<Frame> {
    let inv = h.inverse()?;
    let (w, hgt, c) = (frame.width(), frame.height(), frame.channels());
    let mut data = vec![0u8; w * hgt * c];
    let maxx = (w - 1) as f64;
    let maxy = (hgt - 1) as f64;
    for y in 0..hgt {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let den = inv[2][0] * xf + inv[2][1] * yf + inv[2][2];
            if den == 0.0 {
                continue;
            }
            let sx = (inv[0][0] * xf + inv[0][1] * yf + inv[0][2]) / den;
            let sy = (inv[1][0] * xf + inv[1][1] * yf + inv[1][2]) / den;
            if !(sx >= 0.0 && sy >= 0.0 && sx <= maxx && sy <= maxy) {
                continue;
            }
            let x0 = sx.floor() as usize;
            let y0 = sy.floor() as usize;
            let fx = sx - x0 as f64;
            let fy = sy - y0 as f64;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(hgt - 1);
            for ch in 0..c {
                let v = if fx == 0.0 && fy == 0.0 {
                    frame.get(x0, y0, ch) as f64
                } else {
                    let p00 = frame.get(x0, y0, ch) as f64;
                    let p10 = frame.get(x1, y0, ch) as f64;
                    let p01 = frame.get(x0, y1, ch) as f64;
                    let p11 = frame.get(x1, y1, ch) as f64;
                    let top = p00 + (p10 - p00) * fx;
                    let bot = p01 + (p11 - p01) * fx;
                    top + (bot - top) * fy
                };
                data[(y * w + x) * c + ch] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Frame::new(w, hgt, c, data, frame.index())
}

#[inline]
fn bin_of(v: u8, bins: usize) -> usize {
    v as usize * bins / 256
}

/// Integer center of histogram bin `b`.
pub fn bin_center(b: usize, bins: usize) -> u8 {
    let lo = (b * 256).div_ceil(bins);
    let hi = ((b + 1) * 256).div_ceil(bins) - 1;
    ((lo + hi) / 2) as u8
}

#[inline]
fn rounded_mean(sum: u32, n: u32) -> u8 {
    ((sum + n / 2) / n) as u8
}

fn rows_per_chunk(height: usize, backend: &Backend) -> usize {
    let w = backend.workers();
    if w <= 1 {
        height
    } else {
        (height / (w * 4)).max(1)
    }
}

pub fn background_model(window: &[Frame], cfg: &MotionConfig) -> Result<Frame> {
    background_model_on(window, cfg, &Backend::Sequential)
}

/// Per-pixel background from exactly `cfg.window_w` grayscale frames.
pub fn background_model_on(window: &[Frame], cfg: &MotionConfig, backend: &Backend) -> Result<Frame> {
    cfg.validate()?;
    if window.len() != cfg.window_w {
        return Err(Error::WindowSize {
            expected: cfg.window_w,
            got: window.len(),
        });
    }
    let first = &window[0];
    for f in window {
        if !f.is_gray() {
            return Err(Error::DimensionMismatch {
                expected: "grayscale frames".into(),
                found: f.dims_string(),
            });
        }
        if !f.same_dims(first) {
            return Err(Error::DimensionMismatch {
                expected: first.dims_string(),
                found: f.dims_string(),
            });
        }
    }
    let (w, h) = (first.width(), first.height());
    let mut out = vec![0u8; w * h];
    let chunk = rows_per_chunk(h, backend) * w;
    let bins = cfg.histogram_bins;
    let method = cfg.method;
    backend.for_each_chunk_mut(&mut out, chunk, |ci, slice| {
        let base = ci * chunk;
        let mut hist = vec![0u32; bins];
        for (k, px) in slice.iter_mut().enumerate() {
            let i = base + k;
            *px = match method {
                Method::Mean => {
                    let sum: u32 = window.iter().map(|f| f.data()[i] as u32).sum();
                    rounded_mean(sum, window.len() as u32)
                }
                Method::Mode => {
                    hist.iter_mut().for_each(|c| *c = 0);
                    for f in window {
                        hist[bin_of(f.data()[i], bins)] += 1;
                    }
                    bin_center(argmax_lowest(&hist), bins)
                }
            };
        }
    });
    Frame::new(w, h, 1, out, window[window.len() - 1].index())
}

fn argmax_lowest<T: PartialOrd + Copy>(xs: &[T]) -> usize {
    let mut best = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

pub fn detect_motion(frame: &Frame, background: &Frame, cfg: &MotionConfig) -> Result<BinaryMask> {
    detect_motion_on(frame, background, cfg, &Backend::Sequential)
}

/// Foreground iff `|frame - background| > fg_threshold`.
pub fn detect_motion_on(
    frame: &Frame,
    background: &Frame,
    cfg: &MotionConfig,
    backend: &Backend,
) -> Result<BinaryMask> {
    if !frame.is_gray() || !background.is_gray() || !frame.same_dims(background) {
        return Err(Error::DimensionMismatch {
            expected: format!("grayscale {}", background.dims_string()),
            found: frame.dims_string(),
        });
    }
    let (w, h) = (frame.width(), frame.height());
    let mut bits = vec![false; w * h];
    let chunk = rows_per_chunk(h, backend) * w;
    let thr = cfg.fg_threshold;
    let (f, b) = (frame.data(), background.data());
    backend.for_each_chunk_mut(&mut bits, chunk, |ci, slice| {
        let base = ci * chunk;
        for (k, bit) in slice.iter_mut().enumerate() {
            *bit = f[base + k].abs_diff(b[base + k]) > thr;
        }
    });
    BinaryMask::from_bits(w, h, bits)
}

/// Streaming detector holding a ring buffer of the last `window_w` warped
/// luma frames with running per-pixel sums (mean) or histograms (mode).
#[derive(Debug, Clone)]
pub struct MotionDetector {
    cfg: MotionConfig,
    backend: Backend,
    ring: VecDeque<Frame>,
    sums: Vec<u32>,
    hist: Vec<u32>,
    dims: Option<(usize, usize)>,
}

impl MotionDetector {
    pub fn new(cfg: MotionConfig, backend: Backend) -> Result<Self> {
        cfg.validate()?;
        Ok(MotionDetector {
            ring: VecDeque::with_capacity(cfg.window_w),
            cfg,
            backend,
            sums: Vec::new(),
            hist: Vec::new(),
            dims: None,
        })
    }

    pub fn config(&self) -> &MotionConfig {
        &self.cfg
    }

    /// Adds a frame; returns the newest frame's mask once the window is full.
    pub fn push(&mut self, frame: &Frame, h: Option<&Homography>) -> Result<Option<BinaryMask>> {
        let luma = frame.to_luma();
        let luma = match (self.cfg.warp, h) {
            (Warp::PerFrameHomography, Some(h)) => warp_frame(&luma, h)?,
            (Warp::PerFrameHomography, None) => {
                return Err(Error::InvalidHomography(format!(
                    "frame {} has no homography",
                    frame.index()
                )))
            }
            (Warp::Identity, _) => luma,
        };
        let (w, hgt) = (luma.width(), luma.height());
        match self.dims {
            None => {
                self.dims = Some((w, hgt));
                match self.cfg.method {
                    Method::Mean => self.sums = vec![0; w * hgt],
                    Method::Mode => self.hist = vec![0; w * hgt * self.cfg.histogram_bins],
                }
            }
            Some(d) if d != (w, hgt) => {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{}", d.0, d.1),
                    found: format!("{w}x{hgt}"),
                })
            }
            _ => {}
        }
        if self.ring.len() == self.cfg.window_w {
            let old = self.ring.pop_front().expect("ring is full");
            self.accumulate(&old, false);
        }
        self.accumulate(&luma, true);
        self.ring.push_back(luma);
        if self.ring.len() < self.cfg.window_w {
            return Ok(None);
        }
        let bg = self.current_background()?;
        let newest = self.ring.back().expect("ring is non-empty");
        detect_motion_on(newest, &bg, &self.cfg, &self.backend).map(Some)
    }

    fn accumulate(&mut self, f: &Frame, add: bool) {
        let w = f.width();
        let chunk = rows_per_chunk(f.height(), &self.backend) * w;
        let data = f.data();
        match self.cfg.method {
            Method::Mean => self.backend.for_each_chunk_mut(&mut self.sums, chunk, |ci, s| {
                let base = ci * chunk;
                for (k, v) in s.iter_mut().enumerate() {
                    let x = data[base + k] as u32;
                    if add {
                        *v += x
                    } else {
                        *v -= x
                    }
                }
            }),
            Method::Mode => {
                let bins = self.cfg.histogram_bins;
                self.backend.for_each_chunk_mut(&mut self.hist, chunk * bins, |ci, s| {
                    let base = ci * chunk;
                    for (k, px) in s.chunks_mut(bins).enumerate() {
                        let b = bin_of(data[base + k], bins);
                        if add {
                            px[b] += 1
                        } else {
                            px[b] -= 1
                        }
                    }
                })
            }
        }
    }

    fn current_background(&self) -> Result<Frame> {
        let (w, h) = self.dims.expect("dims set on first push");
        let n = self.ring.len() as u32;
        let mut out = vec![0u8; w * h];
        let chunk = rows_per_chunk(h, &self.backend) * w;
        let bins = self.cfg.histogram_bins;
        let (sums, hist) = (&self.sums, &self.hist);
        let method = self.cfg.method;
        self.backend.for_each_chunk_mut(&mut out, chunk, |ci, s| {
            let base = ci * chunk;
            for (k, v) in s.iter_mut().enumerate() {
                let i = base + k;
                *v = match method {
                    Method::Mean => rounded_mean(sums[i], n),
                    Method::Mode => bin_center(argmax_lowest(&hist[i * bins..(i + 1) * bins]), bins),
                };
            }
        });
        let idx = self.ring.back().map(|f| f.index()).unwrap_or(0);
        Frame::new(w, h, 1, out, idx)
    }
}

/// Runs a detector over a whole sequence. The first mask corresponds to
/// frame `window_w - 1`; `frames.len() - window_w + 1` masks are returned.
pub fn stream_detect(
    frames: &[Frame],
    homographies: Option<&[Homography]>,
    cfg: &MotionConfig,
    backend: &Backend,
) -> Result<Vec<BinaryMask>> {
    cfg.validate()?;
    if frames.len() < cfg.window_w {
        return Err(Error::WindowSize {
            expected: cfg.window_w,
            got: frames.len(),
        });
    }
    if let Some(hs) = homographies {
        if hs.len() != frames.len() {
            return Err(Error::InvalidHomography(format!(
                "{} homographies for {} frames",
                hs.len(),
                frames.len()
            )));
        }
    }
    let mut det = MotionDetector::new(cfg.clone(), *backend)?;
    let mut masks = Vec::with_capacity(frames.len() + 1 - cfg.window_w);
    for (i, f) in frames.iter().enumerate() {
        if let Some(m) = det.push(f, homographies.map(|hs| &hs[i]))? {
            masks.push(m);
        }
    }
    Ok(masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_io::{synth_frames, SceneSpec, ShapeMotion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gray(w: usize, h: usize, data: Vec<u8>) -> Frame {
        Frame::new(w, h, 1, data, 0).unwrap()
    }

    fn random_frame(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Frame {
        gray(w, h, (0..w * h).map(|_| rng.random()).collect())
    }

    fn cfg(w: usize, method: Method) -> MotionConfig {
        MotionConfig {
            window_w: w,
            method,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(1, Method::Mean).validate().is_err());
        let mut c = MotionConfig {
            histogram_bins: 1,
            ..MotionConfig::default()
        };
        assert!(c.validate().is_err());
        c.histogram_bins = 257;
        assert!(c.validate().is_err());
        assert!(MotionConfig::default().validate().is_ok());
    }

    #[test]
    fn identity_warp_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_frame(&mut rng, 9, 7);
        assert_eq!(warp_frame(&f, &Homography::identity()).unwrap(), f);
        let rgb = Frame::new(3, 2, 3, (0..18).collect(), 4).unwrap();
        assert_eq!(warp_frame(&rgb, &Homography::identity()).unwrap(), rgb);
    }

    #[test]
    fn translation_of_uniform_frame() {
        let f = gray(10, 6, vec![77; 60]);
        let out = warp_frame(&f, &Homography::translation(3.0, 0.0)).unwrap();
        for y in 0..6 {
            for x in 0..10 {
                let expected = if x < 3 { 0 } else { 77 };
                assert_eq!(out.get(x, y, 0), expected, "({x},{y})");
            }
        }
    }

    #[test]
    fn translation_matches_nested_loop_oracle() {
        let f = gray(8, 8, (0..64).map(|i| (i * 3) as u8).collect());
        let out = warp_frame(&f, &Homography::translation(1.0, 0.0)).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let expected = if x == 0 { 0 } else { f.get(x - 1, y, 0) };
                assert_eq!(out.get(x, y, 0), expected);
            }
        }
    }

    #[test]
    fn invalid_homographies() {
        let mut h = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(Homography::new(h).is_err());
        h[2][2] = f64::NAN;
        assert!(Homography::new(h).is_err());
        let singular = Homography::new([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let f = gray(2, 2, vec![0; 4]);
        assert!(matches!(warp_frame(&f, &singular), Err(Error::InvalidHomography(_))));
    }

    #[test]
    fn homography_file_parsing() {
        let hs = parse_homographies("1 0 0 0 1 0 0 0 1\n# c\n1 0 2.5 0 1 0 0 0 1\n").unwrap();
        assert_eq!(hs.len(), 2);
        assert_eq!(hs[1].matrix()[0][2], 2.5);
        assert!(parse_homographies("1 0 0").is_err());
        assert!(parse_homographies("1 0 0 0 1 0 0 0 0").is_err());
    }

    #[test]
    fn constant_window_is_its_own_background() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_frame(&mut rng, 5, 4);
        let window = vec![f.clone(); 6];
        let mean = background_model(&window, &cfg(6, Method::Mean)).unwrap();
        assert_eq!(mean.data(), f.data());
        // mode returns bin centers, which equal the values only with 256 bins
        let mut c = cfg(6, Method::Mode);
        c.histogram_bins = 256;
        let mode = background_model(&window, &c).unwrap();
        assert_eq!(mode.data(), f.data());
    }

    #[test]
    fn three_frame_mean_and_mode() {
        let window: Vec<Frame> = [10u8, 10, 250].iter().map(|&v| gray(1, 1, vec![v])).collect();
        assert_eq!(background_model(&window, &cfg(3, Method::Mean)).unwrap().data(), &[90]);
        let mode = background_model(&window, &cfg(3, Method::Mode)).unwrap();
        // bin of 10 with 32 bins covers 8..=15
        assert_eq!(mode.data(), &[bin_center(1, 32)]);
        assert_eq!(bin_center(1, 32), 11);
    }

    #[test]
    fn mode_ties_go_to_lower_bin() {
        let window: Vec<Frame> = [10u8, 250].iter().map(|&v| gray(1, 1, vec![v])).collect();
        let mode = background_model(&window, &cfg(2, Method::Mode)).unwrap();
        assert_eq!(mode.data(), &[11]);
    }

    #[test]
    fn window_length_is_checked() {
        let window = vec![gray(2, 2, vec![0; 4]); 4];
        assert!(matches!(
            background_model(&window, &cfg(5, Method::Mean)),
            Err(Error::WindowSize { expected: 5, got: 4 })
        ));
    }

    #[test]
    fn mean_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let window: Vec<Frame> = (0..5).map(|_| random_frame(&mut rng, 4, 4)).collect();
        let bg = background_model(&window, &cfg(5, Method::Mean)).unwrap();
        for i in 0..16 {
            let sum: u32 = window.iter().map(|f| f.data()[i] as u32).sum();
            let expected = ((sum as f64) / 5.0 + 0.5).floor() as u8;
            assert_eq!(bg.data()[i], expected);
        }
    }

    #[test]
    fn models_are_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let window: Vec<Frame> = (0..7).map(|_| random_frame(&mut rng, 6, 3)).collect();
        let mut rev = window.clone();
        rev.reverse();
        rev.swap(1, 4);
        for m in [Method::Mean, Method::Mode] {
            let a = background_model(&window, &cfg(7, m)).unwrap();
            let b = background_model(&rev, &cfg(7, m)).unwrap();
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn detect_motion_rules() {
        let c = MotionConfig::default();
        let bg = gray(3, 3, vec![0; 9]);
        assert!(detect_motion(&bg, &bg, &c).unwrap().is_empty());
        let mut data = vec![0; 9];
        data[4] = 255;
        let m = detect_motion(&gray(3, 3, data), &bg, &c).unwrap();
        assert_eq!(m.count(), 1);
        assert!(m.get(1, 1));
        assert!(detect_motion(&gray(2, 2, vec![0; 4]), &bg, &c).is_err());
    }

    #[test]
    fn detect_motion_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (f, b) = (random_frame(&mut rng, 11, 9), random_frame(&mut rng, 11, 9));
        let c = MotionConfig::default();
        let m = detect_motion_on(&f, &b, &c, &Backend::Parallel { workers: 3 }).unwrap();
        for i in 0..99 {
            let d = (f.data()[i] as i32 - b.data()[i] as i32).abs();
            assert_eq!(m.bits()[i], d > 25);
        }
    }

    #[test]
    fn stream_counts_and_static_scene() {
        let frames: Vec<Frame> = (0..12).map(|i| Frame::filled(6, 5, 40, i).unwrap()).collect();
        let masks = stream_detect(&frames, None, &cfg(5, Method::Mean), &Backend::Sequential).unwrap();
        assert_eq!(masks.len(), 8);
        assert!(masks.iter().all(|m| m.is_empty()));
        assert!(stream_detect(&frames[..3], None, &cfg(5, Method::Mean), &Backend::Sequential).is_err());
        let hs = vec![Homography::identity(); 3];
        assert!(stream_detect(&frames, Some(&hs), &cfg(5, Method::Mean), &Backend::Sequential).is_err());
    }

    #[test]
    fn default_window_flags_changed_pixels() {
        let mut frames: Vec<Frame> = (0..91).map(|i| Frame::filled(4, 4, 0, i).unwrap()).collect();
        let mut changed = Frame::filled(4, 4, 0, 91).unwrap();
        changed.data_mut()[5] = 255;
        changed.data_mut()[10] = 200;
        frames.push(changed);
        let masks = stream_detect(&frames, None, &MotionConfig::default(), &Backend::Sequential).unwrap();
        assert_eq!(masks.len(), 2);
        assert!(masks[0].is_empty());
        let set: Vec<usize> = (0..16).filter(|&i| masks[1].bits()[i]).collect();
        assert_eq!(set, vec![5, 10]);
    }

    #[test]
    fn moving_square_masks_cover_ground_truth() {
        let spec = SceneSpec::gray(
            48,
            24,
            vec![ShapeMotion {
                size: 5,
                start: (2, 8),
                velocity: (2, 0),
                color: [220; 3],
            }],
        );
        let clip = synth_frames(&spec, 20, 0).unwrap();
        for method in [Method::Mean, Method::Mode] {
            let masks = stream_detect(&clip.frames, None, &cfg(5, method), &Backend::Sequential).unwrap();
            for (k, m) in masks.iter().enumerate() {
                let (cx, cy) = clip.centers[k + 4][0];
                assert!(m.get(cx as usize, cy as usize), "{method:?} mask {k}");
            }
        }
    }

    #[test]
    fn incremental_detector_matches_batch_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let frames: Vec<Frame> = (0..15).map(|_| random_frame(&mut rng, 7, 6)).collect();
        for method in [Method::Mean, Method::Mode] {
            let c = cfg(4, method);
            let masks = stream_detect(&frames, None, &c, &Backend::Sequential).unwrap();
            for (k, m) in masks.iter().enumerate() {
                let bg = background_model(&frames[k..k + 4], &c).unwrap();
                let expected = detect_motion(&frames[k + 3], &bg, &c).unwrap();
                assert_eq!(m, &expected);
            }
        }
    }

    #[test]
    fn backends_agree_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let frames: Vec<Frame> = (0..12).map(|_| random_frame(&mut rng, 33, 17)).collect();
        for method in [Method::Mean, Method::Mode] {
            let c = cfg(5, method);
            let a = stream_detect(&frames, None, &c, &Backend::Sequential).unwrap();
            let b = stream_detect(&frames, None, &c, &Backend::Parallel { workers: 4 }).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn per_frame_homography_compensates_camera_motion() {
        // the camera pans right one pixel per frame; undoing it leaves a static scene
        let base = Frame::new(20, 6, 1, (0..120).map(|i| (i % 2 * 200) as u8).collect(), 0).unwrap();
        let mut frames = Vec::new();
        let mut hs = Vec::new();
        for t in 0..8 {
            let shifted = warp_frame(&base, &Homography::translation(-(t as f64), 0.0)).unwrap();
            let mut f = shifted;
            f.set_index(t);
            frames.push(f);
            hs.push(Homography::translation(t as f64, 0.0));
        }
        let mut c = cfg(4, Method::Mean);
        c.warp = Warp::PerFrameHomography;
        let masks = stream_detect(&frames, Some(&hs), &c, &Backend::Sequential).unwrap();
        for m in &masks {
            // columns that stayed inside the field of view never change
            for y in 0..6 {
                for x in 8..20 {
                    assert!(!m.get(x, y));
                }
            }
        }
        c.warp = Warp::Identity;
        let raw = stream_detect(&frames, None, &c, &Backend::Sequential).unwrap();
        assert!(raw.iter().any(|m| !m.is_empty()));
    }
}
