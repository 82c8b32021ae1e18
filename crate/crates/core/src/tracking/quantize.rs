//! K-means color quantization (k-means++ seeding, Lloyd iterations).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    centers: Vec<[f64; 3]>,
}

fn dist2(p: [u8; 3], c: &[f64; 3]) -> f64 {
    let dr = p[0] as f64 - c[0];
    let dg = p[1] as f64 - c[1];
    let db = p[2] as f64 - c[2];
    dr * dr + dg * dg + db * db
}

impl Quantizer {
    pub fn from_centers(centers: Vec<[f64; 3]>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Invalid("quantizer needs at least one center".into()));
        }
        Ok(Quantizer { centers })
    }

    pub fn centers(&self) -> &[[f64; 3]] {
        &self.centers
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Nearest center; ties go to the lowest index.
    pub fn assign(&self, p: [u8; 3]) -> usize {
        self.nearest(p).0
    }

    fn nearest(&self, p: [u8; 3]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centers.iter().enumerate() {
            let d = dist2(p, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Sum of squared distances to the assigned centers.
    pub fn distortion(&self, pixels: &[[u8; 3]]) -> f64 {
        pixels.iter().map(|&p| self.nearest(p).1).sum()
    }
}

pub fn quantize_colors(pixels: &[[u8; 3]], k: usize, iters: usize, seed: u64) -> Result<Quantizer> {
    if k == 0 {
        return Err(Error::config("tracker.k_clusters", "must be >= 1"));
    }
    if pixels.len() < k {
        return Err(Error::TrainingData(format!(
            "{} pixels cannot seed {k} clusters",
            pixels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let to_f = |p: [u8; 3]| [p[0] as f64, p[1] as f64, p[2] as f64];

    // k-means++
    let mut centers = vec![to_f(pixels[rng.random_range(0..pixels.len())])];
    let mut d2: Vec<f64> = pixels.iter().map(|&p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random_range(0.0..total);
            let mut idx = pixels.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            rng.random_range(0..pixels.len())
        };
        let c = to_f(pixels[pick]);
        for (d, &p) in d2.iter_mut().zip(pixels) {
            *d = d.min(dist2(p, &c));
        }
        centers.push(c);
    }

    let mut q = Quantizer { centers };
    let mut assign = vec![usize::MAX; pixels.len()];
    for _ in 0..iters {
        let mut changed = false;
        for (a, &p) in assign.iter_mut().zip(pixels) {
            let n = q.assign(p);
            if *a != n {
                *a = n;
                changed = true;
            }
        }
        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (&a, &p) in assign.iter().zip(pixels) {
            counts[a] += 1;
            for c in 0..3 {
                sums[a][c] += p[c] as f64;
            }
        }
        let mut reseeded = false;
        for j in 0..k {
            if counts[j] > 0 {
                let n = counts[j] as f64;
                q.centers[j] = [sums[j][0] / n, sums[j][1] / n, sums[j][2] / n];
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                // farthest point from its current center; ties to lowest index
                let mut far = (0, -1.0);
                for (i, &p) in pixels.iter().enumerate() {
                    let d = q.nearest(p).1;
                    if d > far.1 {
                        far = (i, d);
                    }
                }
                q.centers[j] = to_f(pixels[far.0]);
                reseeded = true;
            }
        }
        if !changed && !reseeded {
            break;
        }
    }
    Ok(q)
}
