//! Harvesting false positives of a partial cascade from background images.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CascadeModel;
use crate::error::{Error, Result};
use crate::features::{build_integral, GrayImage};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Downscale factor between pyramid levels.
    pub pyramid_factor: f64,
    pub max_levels: usize,
    /// Window shift in pixels; `None` means half the base window.
    pub step: Option<usize>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            pyramid_factor: 1.25,
            max_levels: 6,
            step: None,
        }
    }
}

/// Background images scanned in a fixed, seed-shuffled order. A cursor
/// remembers how far the scan got: windows before it were either taken or
/// rejected by a prefix of the cascade, so they never need revisiting.
#[derive(Clone, Debug)]
pub struct NegativeReservoir {
    images: Vec<GrayImage>,
    order: Vec<usize>,
    base_window: usize,
    cfg: BootstrapConfig,
    cursor_image: usize,
    cursor_window: usize,
}

impl NegativeReservoir {
    pub fn new(images: Vec<GrayImage>, base_window: usize, cfg: BootstrapConfig, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..images.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self {
            images,
            order,
            base_window,
            cfg,
            cursor_image: 0,
            cursor_window: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn is_exhausted(&self) -> bool {
        self.cursor_image >= self.order.len()
    }

    fn step(&self) -> usize {
        self.cfg.step.unwrap_or(self.base_window / 2).max(1)
    }

    /// Pyramid levels of one image that still fit a base window.
    fn levels(&self, image: &GrayImage) -> Vec<GrayImage> {
        let b = self.base_window;
        let mut out = Vec::new();
        let mut scale = 1.0;
        for _ in 0..self.cfg.max_levels.max(1) {
            let w = (image.width() as f64 / scale).floor() as usize;
            let h = (image.height() as f64 / scale).floor() as usize;
            if w < b || h < b {
                break;
            }
            let level = if out.is_empty() {
                image.clone()
            } else {
                match image.resize_nearest(w, h) {
                    Ok(l) => l,
                    Err(_) => break,
                }
            };
            out.push(level);
            scale *= self.cfg.pyramid_factor;
        }
        out
    }

    /// Scans one image from window `start`, returning up to `cap` accepted
    /// windows with their scan indices.
    fn scan(&self, model: &CascadeModel, pos: usize, start: usize, cap: usize) -> Vec<(usize, GrayImage)> {
        let b = self.base_window;
        let step = self.step();
        let scaled = model.at_scale(1.0);
        let mut hits = Vec::new();
        let mut index = 0;
        for level in self.levels(&self.images[self.order[pos]]) {
            let Ok(ii) = build_integral(&level) else { continue };
            for y in (0..=level.height() - b).step_by(step) {
                for x in (0..=level.width() - b).step_by(step) {
                    let idx = index;
                    index += 1;
                    if idx < start {
                        continue;
                    }
                    if scaled.classify(&ii, x, y).accepted {
                        if let Ok(p) = level.crop(x, y, b, b) {
                            hits.push((idx, p));
                        }
                        if hits.len() >= cap {
                            return hits;
                        }
                    }
                }
            }
        }
        hits
    }
}

/// Collects up to `count` base-window patches from the reservoir that every
/// node of `model` accepts. Fails with `BootstrapExhausted` when fewer than
/// `min_required` are found.
pub fn bootstrap_negatives(
    model: &CascadeModel,
    reservoir: &mut NegativeReservoir,
    count: usize,
    min_required: usize,
) -> Result<Vec<GrayImage>> {
    if reservoir.is_empty() && min_required > 0 {
        return Err(Error::BootstrapExhausted { found: 0, required: min_required });
    }
    if model.base_window != reservoir.base_window {
        return Err(Error::invalid("reservoir and model base windows differ"));
    }
    let mut out: Vec<GrayImage> = Vec::with_capacity(count);
    let batch = (par::current_threads() * 2).max(1);
    while out.len() < count && !reservoir.is_exhausted() {
        let first = reservoir.cursor_image;
        let last = (first + batch).min(reservoir.order.len());
        let positions: Vec<usize> = (first..last).collect();
        let remaining = count - out.len();
        let res: &NegativeReservoir = reservoir;
        let results = par::map_slice(&positions, |&pos| {
            let start = if pos == first { res.cursor_window } else { 0 };
            res.scan(model, pos, start, remaining)
        });
        let mut cursor = (last, 0);
        'merge: for (&pos, hits) in positions.iter().zip(results) {
            for (idx, patch) in hits {
                out.push(patch);
                if out.len() == count {
                    cursor = (pos, idx + 1);
                    break 'merge;
                }
            }
        }
        reservoir.cursor_image = cursor.0;
        reservoir.cursor_window = cursor.1;
    }
    if out.len() < min_required {
        return Err(Error::BootstrapExhausted {
            found: out.len(),
            required: min_required,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{Method, NodeClassifier, StageRates};
    use crate::features::{HaarFeature, HaarKind};
    use crate::weak::DecisionStump;
    use rand::Rng;

    fn noise_images(seed: u64, n: usize, size: usize) -> Vec<GrayImage> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| GrayImage::new(size, size, (0..size * size).map(|_| rng.random()).collect()).unwrap())
            .collect()
    }

    fn one_node_model(threshold: f64, node_threshold: f64) -> CascadeModel {
        let f = HaarFeature::new(HaarKind::TwoRectHorizontal, 0, 0, 8, 8, 8).unwrap();
        let mut m = CascadeModel::empty(8, vec![f], 0.0);
        m.push_stage(
            NodeClassifier {
                stumps: vec![DecisionStump { feature_id: 0, threshold, polarity: 1 }],
                coefficients: vec![1.0],
                node_threshold,
                trained_by: Method::AdaBoost,
            },
            StageRates { detection_rate: 1.0, false_positive_rate: 0.5, goal_met: true },
        );
        m
    }

    #[test]
    fn empty_model_returns_first_windows() {
        let imgs = noise_images(1, 3, 20);
        let model = CascadeModel::empty(8, vec![], 1.0);
        let mut res = NegativeReservoir::new(imgs.clone(), 8, BootstrapConfig { step: Some(4), ..Default::default() }, 0);
        let got = bootstrap_negatives(&model, &mut res, 5, 5).unwrap();
        let first = &imgs[res.order[0]];
        let expected: Vec<GrayImage> = [(0, 0), (4, 0), (8, 0), (12, 0), (0, 4)]
            .iter()
            .map(|&(x, y)| first.crop(x, y, 8, 8).unwrap())
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn rejecting_model_exhausts() {
        let imgs = noise_images(2, 2, 16);
        let model = one_node_model(0.0, -10.0);
        let mut res = NegativeReservoir::new(imgs, 8, BootstrapConfig::default(), 0);
        let err = bootstrap_negatives(&model, &mut res, 10, 1).unwrap_err();
        assert!(matches!(err, Error::BootstrapExhausted { found: 0, .. }));
    }

    #[test]
    fn returned_windows_pass_model_and_are_not_repeated() {
        let imgs = noise_images(3, 6, 32);
        let model = one_node_model(0.0, 0.0);
        let mut res = NegativeReservoir::new(imgs, 8, BootstrapConfig { step: Some(3), ..Default::default() }, 7);
        let a = bootstrap_negatives(&model, &mut res, 40, 1).unwrap();
        let b = bootstrap_negatives(&model, &mut res, 40, 1).unwrap();
        let sc = model.at_scale(1.0);
        for p in a.iter().chain(&b) {
            assert!(sc.classify(&build_integral(p).unwrap(), 0, 0).accepted);
        }
        // The second call continues past the first call's windows.
        let mut fresh = NegativeReservoir::new(noise_images(3, 6, 32), 8, BootstrapConfig { step: Some(3), ..Default::default() }, 7);
        let both = bootstrap_negatives(&model, &mut fresh, 80, 1).unwrap();
        assert_eq!(both[..40], a[..]);
        assert_eq!(both[40..], b[..]);
    }
}
