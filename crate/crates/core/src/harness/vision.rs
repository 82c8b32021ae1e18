//! Frame-level stages: motion detection, segmentation, blob classification
//! and tracking, plus training of the blob classifier on a labeled clip.

use std::fmt::Write as _;
use std::sync::Arc;

use super::config::FrameworkConfig;
use super::dataset::Clip;
use crate::error::{Error, Result};
use crate::frame_io::Frame;
use crate::motion::{BinaryMask, MotionDetector};
use crate::runtime::{parallel_map, Backend, Execution, Pipeline, Stage, StageTiming};
use crate::segmentation::{extract_blob_features, label_blocked_on, Blob, BlobFeatures};
use crate::svm::{svm_predict, svm_train_on, SvmModel};
use crate::tracking::{TrackState, Tracker};

/// Largest distance between a blob centroid and a ground-truth center for
/// the blob to inherit that shape's class.
const MATCH_RADIUS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct VisionItem {
    pub frame: Frame,
    /// `None` while the background window is still filling.
    pub mask: Option<BinaryMask>,
    pub blobs: Vec<BlobFeatures>,
    pub classes: Vec<usize>,
    /// Snapshot of live tracks after this frame.
    pub tracks: Vec<(u32, TrackState)>,
}

impl VisionItem {
    pub fn new(frame: Frame) -> Self {
        VisionItem {
            frame,
            mask: None,
            blobs: Vec::new(),
            classes: Vec::new(),
            tracks: Vec::new(),
        }
    }
}

fn segment(item: &mut VisionItem, cfg: &FrameworkConfig, b: &Backend) -> Result<()> {
    if let Some(mask) = &item.mask {
        let (labels, _) = label_blocked_on(mask, &cfg.segmentation, b)?;
        item.blobs = extract_blob_features(&labels, &item.frame)?;
    }
    Ok(())
}

/// Blob feature vectors with classes taken from the nearest ground-truth
/// shape. Runs motion detection and segmentation sequentially.
pub fn blob_examples(cfg: &FrameworkConfig, clip: &Clip) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut det = MotionDetector::new(cfg.motion.clone(), Backend::Sequential)?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (t, frame) in clip.frames.iter().enumerate() {
        let mut item = VisionItem::new(frame.clone());
        item.mask = det.push(frame, None)?;
        segment(&mut item, cfg, &Backend::Sequential)?;
        for f in &item.blobs {
            let (cx, cy) = f.blob.centroid;
            let nearest = clip.truth[t]
                .iter()
                .map(|&((x, y), c)| ((x - cx).hypot(y - cy), c))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((d, c)) = nearest {
                if d <= MATCH_RADIUS {
                    x.push(f.to_vector());
                    y.push(c);
                }
            }
        }
    }
    Ok((x, y))
}

pub fn train_blob_classifier(cfg: &FrameworkConfig, clip: &Clip, backend: &Backend) -> Result<(SvmModel, String)> {
    let (x, y) = blob_examples(cfg, clip)?;
    if x.is_empty() {
        return Err(Error::TrainingData("no blobs matched the clip's ground truth".into()));
    }
    let model = svm_train_on(&x, &y, &cfg.svm, backend)?;
    let correct = x
        .iter()
        .zip(&y)
        .filter(|(xi, &yi)| matches!(svm_predict(&model, xi), Ok(p) if p.label == yi))
        .count();
    let line = format!(
        "svm blobs={} classes={} train_accuracy={:.4}",
        x.len(),
        model.n_classes(),
        correct as f64 / x.len() as f64
    );
    Ok((model, line))
}

/// Builds the enabled vision stages.
pub fn vision_stages(cfg: &FrameworkConfig, svm: Option<Arc<SvmModel>>, backend: Backend) -> Result<Vec<Stage>> {
    let cap = cfg.queue_capacity;
    let mut det = MotionDetector::new(cfg.motion.clone(), backend)?;
    let motion = Stage::with_backend("motion", backend, move |mut it: VisionItem, _: &Backend| {
        it.mask = det.push(&it.frame, None)?;
        Ok(it)
    })
    .capacity(cap)
    .enabled(cfg.stages.motion);

    let c = cfg.clone();
    let seg = Stage::with_backend("segmentation", backend, move |mut it: VisionItem, b: &Backend| {
        segment(&mut it, &c, b)?;
        Ok(it)
    })
    .capacity(cap)
    .enabled(cfg.stages.segmentation);

    let class = Stage::with_backend("classification", backend, move |mut it: VisionItem, b: &Backend| {
        let model = svm
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("no blob classifier loaded".into()))?;
        it.classes = parallel_map(&it.blobs, |f| svm_predict(model, &f.to_vector()).map(|p| p.label), b)?;
        Ok(it)
    })
    .capacity(cap)
    .enabled(cfg.stages.classification);

    let mut tracker = Tracker::new(cfg.tracker.clone(), backend)?;
    let track = Stage::with_backend("tracking", backend, move |mut it: VisionItem, _: &Backend| {
        if it.mask.is_some() {
            let blobs: Vec<Blob> = it.blobs.iter().map(|f| f.blob.clone()).collect();
            tracker.track_frame(&it.frame, &blobs)?;
            it.tracks = tracker
                .tracks()
                .iter()
                .filter_map(|t| t.history.last().map(|s| (t.track_id, s.clone())))
                .collect();
        }
        Ok(it)
    })
    .capacity(cap)
    .enabled(cfg.stages.tracking);

    Ok(vec![motion, seg, class, track])
}

pub fn run_vision(
    cfg: &FrameworkConfig,
    svm: Option<Arc<SvmModel>>,
    frames: Vec<Frame>,
    backend: Backend,
    execution: Execution,
) -> Result<(Vec<VisionItem>, StageTiming)> {
    let pipeline = Pipeline::new(vision_stages(cfg, svm, backend)?)?;
    let items: Vec<VisionItem> = frames.into_iter().map(VisionItem::new).collect();
    pipeline.run::<VisionItem, VisionItem, _>(items, execution)
}

/// `frame track_id x y w h status` rows from per-frame snapshots.
pub fn track_log(items: &[VisionItem]) -> String {
    let mut out = String::from("# frame track_id x y w h status\n");
    for it in items {
        for (id, s) in &it.tracks {
            let _ = writeln!(
                out,
                "{} {id} {:.3} {:.3} {} {} {}",
                s.frame,
                s.center.0,
                s.center.1,
                s.window.0,
                s.window.1,
                s.status.name()
            );
        }
    }
    out
}

/// `frame label area cx cy class` rows.
pub fn blob_log(items: &[VisionItem], class_names: &[&str]) -> String {
    let mut out = String::from("# frame label area cx cy class\n");
    for it in items {
        for (k, f) in it.blobs.iter().enumerate() {
            let class = it
                .classes
                .get(k)
                .and_then(|&c| class_names.get(c))
                .copied()
                .unwrap_or("-");
            let _ = writeln!(
                out,
                "{} {} {} {:.3} {:.3} {class}",
                it.frame.index(),
                f.blob.label,
                f.blob.area,
                f.blob.centroid.0,
                f.blob.centroid.1
            );
        }
    }
    out
}
