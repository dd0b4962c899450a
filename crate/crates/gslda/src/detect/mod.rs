//! Multi-scale sliding-window detection, window merging, ground-truth
//! matching and ROC generation.

mod matching;
mod roc;

pub use matching::{iou, match_detections, GroundTruthBox, MatchResult};
pub use roc::{roc_curve, RocMode, RocParams, RocPoint, TestSet};

use serde::{Deserialize, Serialize};

use crate::cascade::CascadeModel;
use crate::error::{Error, Result};
use crate::features::{build_integral, GrayImage};
use crate::par;

/// An accepted square window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionWindow {
    pub x: usize,
    pub y: usize,
    pub side: usize,
    /// Margin of the final node.
    pub score: f64,
    pub stages_passed: usize,
}

/// A window tagged with the image it came from; one row of a detections
/// CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: String,
    pub x: usize,
    pub y: usize,
    pub side: usize,
    pub score: f64,
}

impl Detection {
    pub fn new(image_id: impl Into<String>, w: &DetectionWindow) -> Self {
        Self {
            image_id: image_id.into(),
            x: w.x,
            y: w.y,
            side: w.side,
            score: w.score,
        }
    }
}

/// Counters accumulated while scanning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanProfile {
    pub windows_scanned: u64,
    pub features_evaluated: u64,
}

impl ScanProfile {
    pub fn add(&mut self, other: &ScanProfile) {
        self.windows_scanned += other.windows_scanned;
        self.features_evaluated += other.features_evaluated;
    }
}

/// Haar evaluations per scanned window.
pub fn avg_features_per_window(profile: &ScanProfile) -> Result<f64> {
    if profile.windows_scanned == 0 {
        return Err(Error::invalid("no windows scanned"));
    }
    Ok(profile.features_evaluated as f64 / profile.windows_scanned as f64)
}

/// Scan scales `(scale, side, step)` for an image, smallest first.
pub fn scan_scales(base: usize, width: usize, height: usize, scale_factor: f64, step: usize) -> Vec<(f64, usize, usize)> {
    let mut out = Vec::new();
    let mut s = 0;
    loop {
        let scale = scale_factor.powi(s);
        let side = (base as f64 * scale).round() as usize;
        if side > width || side > height || side == 0 {
            break;
        }
        let stride = ((step as f64 * scale).round() as usize).max(1);
        out.push((scale, side, stride));
        s += 1;
    }
    out
}

/// Windows that reach the last node. With `relax_last`, windows rejected
/// only by the last node are kept too, carrying its (negative) margin.
pub(crate) fn scan_core(
    model: &CascadeModel,
    image: &GrayImage,
    scale_factor: f64,
    step: usize,
    relax_last: bool,
) -> Result<(Vec<DetectionWindow>, ScanProfile)> {
    if !(scale_factor > 1.0) {
        return Err(Error::invalid("scale_factor must exceed 1"));
    }
    if step == 0 {
        return Err(Error::invalid("step must be at least 1"));
    }
    let scales = scan_scales(model.base_window, image.width(), image.height(), scale_factor, step);
    if scales.is_empty() {
        return Ok((Vec::new(), ScanProfile::default()));
    }
    let ii = build_integral(image)?;
    let cascades: Vec<_> = scales.iter().map(|&(scale, _, _)| model.at_scale(scale)).collect();
    let mut rows = Vec::new();
    for (k, &(_, side, stride)) in scales.iter().enumerate() {
        for y in (0..=image.height() - side).step_by(stride) {
            rows.push((k, y));
        }
    }
    let depth = model.depth();
    let results = par::map_slice(&rows, |&(k, y)| {
        let (_, side, stride) = scales[k];
        let cascade = &cascades[k];
        let mut found = Vec::new();
        let mut profile = ScanProfile::default();
        for x in (0..=image.width() - side).step_by(stride) {
            let out = cascade.classify(&ii, x, y);
            profile.windows_scanned += 1;
            profile.features_evaluated += out.evaluations as u64;
            if out.accepted || (relax_last && depth > 0 && out.stages_passed + 1 == depth) {
                found.push(DetectionWindow {
                    x,
                    y,
                    side,
                    score: out.score,
                    stages_passed: out.stages_passed,
                });
            }
        }
        (found, profile)
    });
    let mut windows = Vec::new();
    let mut profile = ScanProfile::default();
    for (found, p) in results {
        windows.extend(found);
        profile.add(&p);
    }
    Ok((windows, profile))
}

/// Scans every window of every scale through the cascade with early
/// rejection. Sides are `round(base * scale_factor^s)` and the shift is
/// `round(step * scale_factor^s)`, at least 1. Images smaller than the
/// base window yield no windows.
pub fn scan_image(
    model: &CascadeModel,
    image: &GrayImage,
    scale_factor: f64,
    step: usize,
) -> Result<(Vec<DetectionWindow>, ScanProfile)> {
    scan_core(model, image, scale_factor, step, false)
}

/// Groups windows by the transitive closure of IoU >= 0.5 and emits one
/// averaged window per group of at least `min_neighbors` members. Groups
/// appear in order of their first member.
pub fn merge_detections(windows: &[DetectionWindow], min_neighbors: usize) -> Vec<DetectionWindow> {
    let n = windows.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if window_iou(&windows[i], &windows[j]) >= 0.5 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
        .into_iter()
        .filter(|g| g.len() >= min_neighbors.max(1))
        .map(|g| {
            let k = g.len() as f64;
            let mean = |f: &dyn Fn(&DetectionWindow) -> usize| g.iter().map(|&i| f(&windows[i]) as f64).sum::<f64>() / k;
            let x0 = mean(&|w| w.x);
            let y0 = mean(&|w| w.y);
            let x1 = mean(&|w| w.x + w.side);
            let y1 = mean(&|w| w.y + w.side);
            let side = ((x1 - x0) + (y1 - y0)) / 2.0;
            DetectionWindow {
                x: x0.round() as usize,
                y: y0.round() as usize,
                side: side.round() as usize,
                score: g.iter().map(|&i| windows[i].score).fold(f64::NEG_INFINITY, f64::max),
                stages_passed: g.iter().map(|&i| windows[i].stages_passed).max().unwrap_or(0),
            }
        })
        .collect()
}

fn window_iou(a: &DetectionWindow, b: &DetectionWindow) -> f64 {
    iou((a.x, a.y, a.side, a.side), (b.x, b.y, b.side, b.side))
}
