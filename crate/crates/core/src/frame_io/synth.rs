//! Synthetic clips of colored squares moving at constant velocity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Frame;
use crate::error::{Error, Result};
use crate::motion::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeMotion {
    /// Side length of the square in pixels.
    pub size: usize,
    /// Top-left corner at frame 0.
    pub start: (i64, i64),
    /// Pixels per frame.
    pub velocity: (i64, i64),
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// 1 (gray, the first color component is used) or 3.
    pub channels: usize,
    pub background: [u8; 3],
    pub shapes: Vec<ShapeMotion>,
    /// Uniform additive pixel noise amplitude; 0 disables it.
    pub pixel_noise: u8,
}

impl SceneSpec {
    pub fn gray(width: usize, height: usize, shapes: Vec<ShapeMotion>) -> Self {
        SceneSpec {
            width,
            height,
            channels: 1,
            background: [0; 3],
            shapes,
            pixel_noise: 0,
        }
    }
}

/// Per-frame ground truth emitted with a synthetic clip.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthClip {
    pub frames: Vec<Frame>,
    /// `centers[t][s]`: center of shape `s` at frame `t`.
    pub centers: Vec<Vec<(f64, f64)>>,
    /// Union of all shape footprints per frame.
    pub masks: Vec<BinaryMask>,
}

impl ShapeMotion {
    fn top_left(&self, t: usize) -> (i64, i64) {
        (
            self.start.0 + self.velocity.0 * t as i64,
            self.start.1 + self.velocity.1 * t as i64,
        )
    }

    fn center(&self, t: usize) -> (f64, f64) {
        let (x, y) = self.top_left(t);
        let half = (self.size as f64 - 1.0) / 2.0;
        (x as f64 + half, y as f64 + half)
    }
}

pub fn synth_frames(spec: &SceneSpec, frames: usize, seed: u64) -> Result<SynthClip> {
    if spec.channels != 1 && spec.channels != 3 {
        return Err(Error::InvalidSpec("channels must be 1 or 3".into()));
    }
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::InvalidSpec("empty frame".into()));
    }
    for t in 0..frames {
        for s in &spec.shapes {
            let (x, y) = s.top_left(t);
            let size = s.size as i64;
            if s.size == 0 || x < 0 || y < 0 || x + size > spec.width as i64 || y + size > spec.height as i64 {
                return Err(Error::OutOfBounds { frame: t });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h, c) = (spec.width, spec.height, spec.channels);
    let mut clip = SynthClip {
        frames: Vec::with_capacity(frames),
        centers: Vec::with_capacity(frames),
        masks: Vec::with_capacity(frames),
    };
    for t in 0..frames {
        let mut data = Vec::with_capacity(w * h * c);
        for _ in 0..w * h {
            data.extend_from_slice(&spec.background[..c]);
        }
        let mut mask = BinaryMask::new(w, h);
        for s in &spec.shapes {
            let (x0, y0) = s.top_left(t);
            for y in y0 as usize..y0 as usize + s.size {
                for x in x0 as usize..x0 as usize + s.size {
                    let i = (y * w + x) * c;
                    data[i..i + c].copy_from_slice(&s.color[..c]);
                    mask.set(x, y, true);
                }
            }
        }
        if spec.pixel_noise > 0 {
            let a = spec.pixel_noise as i16;
            for v in data.iter_mut() {
                let n = rng.random_range(-a..=a);
                *v = (*v as i16 + n).clamp(0, 255) as u8;
            }
        }
        clip.frames.push(Frame::new(w, h, c, data, t)?);
        clip.centers.push(spec.shapes.iter().map(|s| s.center(t)).collect());
        clip.masks.push(mask);
    }
    Ok(clip)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(start: (i64, i64), velocity: (i64, i64)) -> ShapeMotion {
        ShapeMotion {
            size: 5,
            start,
            velocity,
            color: [255, 255, 255],
        }
    }

    #[test]
    fn moving_square_centers_advance() {
        let spec = SceneSpec::gray(32, 32, vec![square((2, 10), (1, 0))]);
        let clip = synth_frames(&spec, 10, 1).unwrap();
        assert_eq!(clip.frames.len(), 10);
        for t in 1..10 {
            let (a, b) = (clip.centers[t - 1][0], clip.centers[t][0]);
            assert_eq!((b.0 - a.0, b.1 - a.1), (1.0, 0.0));
        }
        assert_eq!(clip.masks[0].count(), 25);
    }

    #[test]
    fn zero_shapes_is_black() {
        let clip = synth_frames(&SceneSpec::gray(8, 8, vec![]), 3, 0).unwrap();
        assert!(clip.frames.iter().all(|f| f.data().iter().all(|&v| v == 0)));
        assert!(clip.centers.iter().all(|c| c.is_empty()));
    }

    #[test]
    fn out_of_bounds_reports_first_frame() {
        let spec = SceneSpec::gray(16, 16, vec![square((5, 5), (2, 0))]);
        match synth_frames(&spec, 10, 0) {
            Err(Error::OutOfBounds { frame }) => assert_eq!(frame, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn noise_is_seeded() {
        let mut spec = SceneSpec::gray(8, 8, vec![]);
        spec.pixel_noise = 10;
        let a = synth_frames(&spec, 2, 9).unwrap();
        let b = synth_frames(&spec, 2, 9).unwrap();
        let c = synth_frames(&spec, 2, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.frames, c.frames);
    }
}
