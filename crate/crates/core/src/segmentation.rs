//! Connected-component labeling of foreground masks.
//!
//! Both entry points renumber components 1..k by the raster order of each
//! component's first pixel, so the blocked algorithm produces label images
//! identical to the two-pass sequential one.

use crate::error::{Error, Result};
use crate::frame_io::Frame;
use crate::motion::BinaryMask;
use crate::runtime::Backend;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationConfig {
    pub n_blocks: usize,
    pub connectivity: Connectivity,
    pub min_area: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            n_blocks: 4,
            connectivity: Connectivity::Eight,
            min_area: 4,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_blocks == 0 {
            return Err(Error::config("segmentation.n_blocks", "must be >= 1"));
        }
        Ok(())
    }

    /// Grid shape (rows, cols) for `n_blocks`: the most square factorization
    /// with rows <= cols.
    pub fn grid(&self) -> (usize, usize) {
        let n = self.n_blocks.max(1);
        let mut rows = 1;
        let mut r = 1;
        while r * r <= n {
            if n.is_multiple_of(r) {
                rows = r;
            }
            r += 1;
        }
        (rows, n / rows)
    }
}

/// Per-pixel component labels; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Debug export: labels modulo 256 as a gray frame.
    pub fn to_frame(&self) -> Frame {
        let data = self.labels.iter().map(|&l| (l % 256) as u8).collect();
        Frame::new(self.width, self.height, 1, data, 0).expect("label image dimensions are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub label: u32,
    pub area: usize,
    /// (x_min, y_min, x_max, y_max), inclusive.
    pub bbox: (usize, usize, usize, usize),
    pub centroid: (f64, f64),
}

impl Blob {
    pub fn bbox_size(&self) -> (usize, usize) {
        (self.bbox.2 - self.bbox.0 + 1, self.bbox.3 - self.bbox.1 + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobFeatures {
    pub blob: Blob,
    pub mean_intensity: f64,
    /// Bounding-box width over height.
    pub aspect: f64,
}

impl BlobFeatures {
    /// Feature vector used by the blob classifier: area, aspect, mean intensity.
    pub fn to_vector(&self) -> Vec<f64> {
        vec![self.blob.area as f64, self.aspect, self.mean_intensity]
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Backward neighbor offsets visited by a raster scan.
fn backward_neighbors(conn: Connectivity) -> &'static [(isize, isize)] {
    match conn {
        Connectivity::Four => &[(-1, 0), (0, -1)],
        Connectivity::Eight => &[(-1, 0), (-1, -1), (0, -1), (1, -1)],
    }
}

/// Classic two-pass labeling of the sub-rectangle [x0,x1) x [y0,y1).
/// Returns provisional labels (local to the rectangle, row-major) already
/// resolved through the union-find, and the number of labels allocated.
fn two_pass(mask: &BinaryMask, conn: Connectivity, (x0, y0, x1, y1): (usize, usize, usize, usize)) -> Vec<u32> {
    let bw = x1 - x0;
    let bh = y1 - y0;
    let mut prov = vec![0u32; bw * bh];
    let mut uf = UnionFind::new(1);
    let offsets = backward_neighbors(conn);
    for y in 0..bh {
        for x in 0..bw {
            if !mask.get(x0 + x, y0 + y) {
                continue;
            }
            let mut label = 0u32;
            for &(dx, dy) in offsets {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= bw as isize {
                    continue;
                }
                let l = prov[ny as usize * bw + nx as usize];
                if l == 0 {
                    continue;
                }
                if label == 0 {
                    label = l;
                } else {
                    uf.union(label, l);
                }
            }
            if label == 0 {
                label = uf.push();
            }
            prov[y * bw + x] = label;
        }
    }
    for l in prov.iter_mut() {
        if *l != 0 {
            *l = uf.find(*l);
        }
    }
    prov
}

/// Renumbers resolved provisional labels by raster first appearance, drops
/// components smaller than `min_area` and compacts the survivors.
fn finalize(width: usize, height: usize, resolved: Vec<u32>, min_area: usize) -> (LabelImage, Vec<Blob>) {
    let max = resolved.iter().copied().max().unwrap_or(0) as usize;
    let mut first = vec![0u32; max + 1];
    let mut area = Vec::new();
    let mut next = 0u32;
    for &l in &resolved {
        if l == 0 {
            continue;
        }
        let slot = &mut first[l as usize];
        if *slot == 0 {
            next += 1;
            *slot = next;
            area.push(0usize);
        }
        area[(*slot - 1) as usize] += 1;
    }
    // compact: dense numbering over the components that survive the filter
    let mut keep = vec![0u32; next as usize + 1];
    let mut k = 0u32;
    for (i, &a) in area.iter().enumerate() {
        if a >= min_area {
            k += 1;
            keep[i + 1] = k;
        }
    }
    let mut labels = resolved;
    for l in labels.iter_mut() {
        if *l != 0 {
            *l = keep[first[*l as usize] as usize];
        }
    }
    let image = LabelImage { width, height, labels };
    let blobs = blobs_of(&image, k as usize);
    (image, blobs)
}

fn blobs_of(image: &LabelImage, k: usize) -> Vec<Blob> {
    struct Acc {
        area: usize,
        sx: f64,
        sy: f64,
        bbox: (usize, usize, usize, usize),
    }
    let mut acc: Vec<Acc> = (0..k)
        .map(|_| Acc {
            area: 0,
            sx: 0.0,
            sy: 0.0,
            bbox: (usize::MAX, usize::MAX, 0, 0),
        })
        .collect();
    for y in 0..image.height {
        for x in 0..image.width {
            let l = image.labels[y * image.width + x];
            if l == 0 {
                continue;
            }
            let a = &mut acc[l as usize - 1];
            a.area += 1;
            a.sx += x as f64;
            a.sy += y as f64;
            a.bbox.0 = a.bbox.0.min(x);
            a.bbox.1 = a.bbox.1.min(y);
            a.bbox.2 = a.bbox.2.max(x);
            a.bbox.3 = a.bbox.3.max(y);
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(i, a)| Blob {
            label: i as u32 + 1,
            area: a.area,
            bbox: a.bbox,
            centroid: (a.sx / a.area as f64, a.sy / a.area as f64),
        })
        .collect()
}

pub fn label_sequential(mask: &BinaryMask, cfg: &SegmentationConfig) -> Result<(LabelImage, Vec<Blob>)> {
    cfg.validate()?;
    let (w, h) = (mask.width(), mask.height());
    let resolved = two_pass(mask, cfg.connectivity, (0, 0, w, h));
    Ok(finalize(w, h, resolved, cfg.min_area))
}

pub fn label_blocked(mask: &BinaryMask, cfg: &SegmentationConfig) -> Result<(LabelImage, Vec<Blob>)> {
    label_blocked_on(mask, cfg, &Backend::Sequential)
}

/// Labels each grid block independently on the backend, then unifies labels
/// across block seams with a single-threaded union-find pass.
pub fn label_blocked_on(
    mask: &BinaryMask,
    cfg: &SegmentationConfig,
    backend: &Backend,
) -> Result<(LabelImage, Vec<Blob>)> {
    cfg.validate()?;
    let (w, h) = (mask.width(), mask.height());
    let (rows, cols) = cfg.grid();
    if rows > h || cols > w {
        return Err(Error::config(
            "segmentation.n_blocks",
            format!("{rows}x{cols} grid does not tile a {w}x{h} image"),
        ));
    }
    let row_start: Vec<usize> = (0..=rows).map(|i| i * h / rows).collect();
    let col_start: Vec<usize> = (0..=cols).map(|j| j * w / cols).collect();
    let rects: Vec<(usize, usize, usize, usize)> = (0..rows * cols)
        .map(|b| {
            let (i, j) = (b / cols, b % cols);
            (col_start[j], row_start[i], col_start[j + 1], row_start[i + 1])
        })
        .collect();
    let conn = cfg.connectivity;
    let local = backend.map(&rects, |&r| two_pass(mask, conn, r));

    // stitch local labels into one provisional space
    let mut global = vec![0u32; w * h];
    let mut offset = 0u32;
    for (r, labels) in rects.iter().zip(&local) {
        let bw = r.2 - r.0;
        let mut max = 0u32;
        for (k, &l) in labels.iter().enumerate() {
            if l != 0 {
                global[(r.1 + k / bw) * w + r.0 + k % bw] = offset + l;
                max = max.max(l);
            }
        }
        offset += max;
    }

    let mut block_row = vec![0usize; h];
    for i in 0..rows {
        block_row[row_start[i]..row_start[i + 1]].fill(i);
    }
    let mut block_col = vec![0usize; w];
    for j in 0..cols {
        block_col[col_start[j]..col_start[j + 1]].fill(j);
    }
    let mut uf = UnionFind::new(offset as usize + 1);
    let offsets = backward_neighbors(conn);
    let on_seam = |x: usize, y: usize| {
        (y > 0 && block_row[y - 1] != block_row[y])
            || (x > 0 && block_col[x - 1] != block_col[x])
            || (x + 1 < w && block_col[x + 1] != block_col[x])
    };
    for y in 0..h {
        for x in 0..w {
            let l = global[y * w + x];
            if l == 0 || !on_seam(x, y) {
                continue;
            }
            for &(dx, dy) in offsets {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= w as isize {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if block_row[ny] == block_row[y] && block_col[nx] == block_col[x] {
                    continue;
                }
                let m = global[ny * w + nx];
                if m != 0 {
                    uf.union(l, m);
                }
            }
        }
    }
    for l in global.iter_mut() {
        if *l != 0 {
            *l = uf.find(*l);
        }
    }
    Ok(finalize(w, h, global, cfg.min_area))
}

/// Per-blob area, bbox, centroid, mean luma and bbox aspect ratio.
pub fn extract_blob_features(labels: &LabelImage, frame: &Frame) -> Result<Vec<BlobFeatures>> {
    if labels.width != frame.width() || labels.height != frame.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", labels.width, labels.height),
            found: frame.dims_string(),
        });
    }
    let luma = frame.to_luma();
    let k = labels.max_label() as usize;
    let blobs = blobs_of(labels, k);
    let mut sums = vec![0u64; k];
    for (i, &l) in labels.labels.iter().enumerate() {
        if l != 0 {
            sums[l as usize - 1] += luma.data()[i] as u64;
        }
    }
    Ok(blobs
        .into_iter()
        .zip(sums)
        .filter(|(b, _)| b.area > 0)
        .map(|(blob, s)| {
            let (bw, bh) = blob.bbox_size();
            BlobFeatures {
                mean_intensity: s as f64 / blob.area as f64,
                aspect: bw as f64 / bh as f64,
                blob,
            }
        })
        .collect())
}
