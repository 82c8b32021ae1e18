//! Kernel-weighted color histograms and the mean-shift update.

use super::Quantizer;
use crate::error::{Error, Result};
use crate::frame_io::Frame;

/// Spatial weighting profile. `Uniform` exists for tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelProfile {
    #[default]
    Epanechnikov,
    Uniform,
}

impl KernelProfile {
    /// Profile value for a squared normalized radius.
    #[inline]
    pub fn weight(self, r2: f64) -> f64 {
        if r2 > 1.0 {
            return 0.0;
        }
        match self {
            KernelProfile::Epanechnikov => 1.0 - r2,
            KernelProfile::Uniform => 1.0,
        }
    }
}

/// Pixels of a window clipped to the frame, with normalized squared radii.
pub(crate) struct WindowPixels {
    pub(crate) px: Vec<(usize, usize, usize, f64)>,
}

impl WindowPixels {
    /// Collects pixels with |x - cx| <= w/2 and |y - cy| <= h/2, each tagged
    /// with its quantizer bin.
    pub(crate) fn collect(frame: &Frame, center: (f64, f64), window: (usize, usize), q: &Quantizer) -> Result<Self> {
        let (hx, hy) = (window.0 as f64 / 2.0, window.1 as f64 / 2.0);
        let x0 = (center.0 - hx).ceil().max(0.0);
        let y0 = (center.1 - hy).ceil().max(0.0);
        let x1 = (center.0 + hx).floor().min(frame.width() as f64 - 1.0);
        let y1 = (center.1 + hy).floor().min(frame.height() as f64 - 1.0);
        if !(x0 <= x1 && y0 <= y1) {
            return Err(Error::EmptyWindow);
        }
        let mut px = Vec::with_capacity(((x1 - x0 + 1.0) * (y1 - y0 + 1.0)) as usize);
        for y in y0 as usize..=y1 as usize {
            for x in x0 as usize..=x1 as usize {
                let dx = (x as f64 - center.0) / hx;
                let dy = (y as f64 - center.1) / hy;
                px.push((x, y, q.assign(frame.rgb(x, y)), dx * dx + dy * dy));
            }
        }
        Ok(WindowPixels { px })
    }

    pub(crate) fn histogram(&self, k: usize, profile: KernelProfile) -> Result<Vec<f64>> {
        let mut h = vec![0.0; k];
        for &(_, _, b, r2) in &self.px {
            h[b] += profile.weight(r2);
        }
        let total: f64 = h.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptyWindow);
        }
        for v in &mut h {
            *v /= total;
        }
        Ok(h)
    }
}

/// K-bin histogram of the window around `center`, Epanechnikov weighted.
pub fn histogram(frame: &Frame, center: (f64, f64), window: (usize, usize), q: &Quantizer) -> Result<Vec<f64>> {
    histogram_with(frame, center, window, q, KernelProfile::Epanechnikov)
}

pub fn histogram_with(
    frame: &Frame,
    center: (f64, f64),
    window: (usize, usize),
    q: &Quantizer,
    profile: KernelProfile,
) -> Result<Vec<f64>> {
    WindowPixels::collect(frame, center, window, q)?.histogram(q.k(), profile)
}

pub fn bhattacharyya(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftResult {
    pub center: (f64, f64),
    pub iterations: usize,
    /// Similarity to the target at each accepted position, starting with the
    /// initial one.
    pub bc_trace: Vec<f64>,
    /// No window bin overlaps the target any more.
    pub lost: bool,
}

const MAX_HALVINGS: usize = 8;

/// Runs mean-shift from `start` toward the mode of similarity with `target`.
pub fn meanshift(
    frame: &Frame,
    start: (f64, f64),
    window: (usize, usize),
    target: &[f64],
    q: &Quantizer,
    max_iters: usize,
    eps: f64,
) -> Result<ShiftResult> {
    let lost = |c| ShiftResult {
        center: c,
        iterations: 0,
        bc_trace: Vec::new(),
        lost: true,
    };
    let k = q.k();
    let mut y0 = start;
    let mut win = match WindowPixels::collect(frame, y0, window, q) {
        Ok(w) => w,
        Err(Error::EmptyWindow) => return Ok(lost(start)),
        Err(e) => return Err(e),
    };
    let mut p = match win.histogram(k, KernelProfile::Epanechnikov) {
        Ok(p) => p,
        Err(_) => return Ok(lost(start)),
    };
    let mut bc0 = bhattacharyya(&p, target);
    if bc0 <= 0.0 {
        return Ok(lost(start));
    }
    let mut trace = vec![bc0];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut sw = 0.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        for &(x, y, b, r2) in &win.px {
            if r2 > 1.0 || p[b] <= 0.0 {
                continue;
            }
            let w = (target[b] / p[b]).sqrt();
            sw += w;
            sx += w * x as f64;
            sy += w * y as f64;
        }
        if sw <= 0.0 {
            break;
        }
        let mut y1 = (sx / sw, sy / sw);
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            if let Ok(w1) = WindowPixels::collect(frame, y1, window, q) {
                if let Ok(p1) = w1.histogram(k, KernelProfile::Epanechnikov) {
                    let bc1 = bhattacharyya(&p1, target);
                    if bc1 >= bc0 {
                        accepted = Some((w1, p1, bc1));
                        break;
                    }
                }
            }
            y1 = ((y0.0 + y1.0) / 2.0, (y0.1 + y1.1) / 2.0);
        }
        let Some((mut w1, mut p1, mut bc1)) = accepted else {
            break;
        };
        // Over-relax while similarity keeps improving; the plain update
        // converges slowly when background dominates the window.
        let step = (y1.0 - y0.0, y1.1 - y0.1);
        for m in [2.0, 4.0] {
            let y2 = (y0.0 + m * step.0, y0.1 + m * step.1);
            let Ok(w2) = WindowPixels::collect(frame, y2, window, q) else {
                break;
            };
            let Ok(p2) = w2.histogram(k, KernelProfile::Epanechnikov) else {
                break;
            };
            let bc2 = bhattacharyya(&p2, target);
            if bc2 <= bc1 {
                break;
            }
            (y1, w1, p1, bc1) = (y2, w2, p2, bc2);
        }
        let shift = ((y1.0 - y0.0).powi(2) + (y1.1 - y0.1).powi(2)).sqrt();
        y0 = y1;
        win = w1;
        p = p1;
        bc0 = bc1;
        trace.push(bc1);
        if shift < eps {
            break;
        }
    }
    Ok(ShiftResult {
        center: y0,
        iterations,
        bc_trace: trace,
        lost: false,
    })
}
