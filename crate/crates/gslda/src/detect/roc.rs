use serde::{Deserialize, Serialize};

use super::matching::{match_detections, GroundTruthBox, MatchResult};
use super::{merge_detections, scan_core, Detection, DetectionWindow};
use crate::cascade::CascadeModel;
use crate::error::{Error, Result};
use crate::features::GrayImage;

/// Images with their ground truth.
#[derive(Clone, Debug, Default)]
pub struct TestSet {
    pub images: Vec<(String, GrayImage)>,
    pub truths: Vec<GroundTruthBox>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RocMode {
    /// One point per cascade prefix.
    Depth,
    /// Final-node threshold swept over score quantiles.
    Threshold,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RocParams {
    pub scale_factor: f64,
    pub step: usize,
    pub min_neighbors: usize,
    /// Number of quantile offsets in threshold mode.
    pub quantiles: usize,
}

impl Default for RocParams {
    fn default() -> Self {
        Self {
            scale_factor: 1.2,
            step: 1,
            min_neighbors: 2,
            quantiles: 20,
        }
    }
}

/// One ROC row. False positives are counted after merging.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub operating_point: String,
    pub false_positives: usize,
    pub detection_rate: f64,
}

fn evaluate(per_image: &[(String, Vec<DetectionWindow>)], truths: &[GroundTruthBox], min_neighbors: usize) -> MatchResult {
    let dets: Vec<Detection> = per_image
        .iter()
        .flat_map(|(id, ws)| merge_detections(ws, min_neighbors).into_iter().map(move |w| Detection::new(id.clone(), &w)))
        .collect();
    match_detections(&dets, truths)
}

fn point(operating_point: String, r: &MatchResult, n_truth: usize) -> RocPoint {
    RocPoint {
        operating_point,
        false_positives: r.false_positives,
        detection_rate: if n_truth == 0 { 0.0 } else { r.true_positives as f64 / n_truth as f64 },
    }
}

/// ROC points sorted by false positives ascending (ties keep generation
/// order). Depth mode labels points `depth=k`; threshold mode labels them
/// `offset=δ`, the amount added to the final node threshold.
pub fn roc_curve(model: &CascadeModel, test: &TestSet, mode: RocMode, params: &RocParams) -> Result<Vec<RocPoint>> {
    if test.images.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    let n_truth = test.truths.len();
    let mut points = Vec::new();
    match mode {
        RocMode::Depth => {
            for k in 1..=model.depth() {
                let prefix = model.truncated(k);
                let per_image = test
                    .images
                    .iter()
                    .map(|(id, img)| Ok((id.clone(), scan_core(&prefix, img, params.scale_factor, params.step, false)?.0)))
                    .collect::<Result<Vec<_>>>()?;
                let r = evaluate(&per_image, &test.truths, params.min_neighbors);
                points.push(point(format!("depth={k}"), &r, n_truth));
            }
        }
        RocMode::Threshold => {
            let candidates = test
                .images
                .iter()
                .map(|(id, img)| Ok((id.clone(), scan_core(model, img, params.scale_factor, params.step, true)?.0)))
                .collect::<Result<Vec<_>>>()?;
            let mut margins: Vec<f64> = candidates.iter().flat_map(|(_, ws)| ws.iter().map(|w| w.score)).collect();
            margins.sort_by(f64::total_cmp);
            let mut cuts: Vec<f64> = Vec::new();
            if !margins.is_empty() {
                let q = params.quantiles.max(1);
                for i in 0..=q {
                    cuts.push(margins[i * (margins.len() - 1) / q]);
                }
            }
            cuts.push(f64::INFINITY);
            cuts.dedup();
            for cut in cuts {
                let per_image: Vec<(String, Vec<DetectionWindow>)> = candidates
                    .iter()
                    .map(|(id, ws)| (id.clone(), ws.iter().filter(|w| w.score >= cut).copied().collect()))
                    .collect();
                let r = evaluate(&per_image, &test.truths, params.min_neighbors);
                points.push(point(format!("offset={}", -cut), &r, n_truth));
            }
        }
    }
    points.sort_by_key(|p| p.false_positives);
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_test_set_is_an_error() {
        let m = CascadeModel::empty(8, vec![], 1.0);
        assert!(roc_curve(&m, &TestSet::default(), RocMode::Depth, &RocParams::default()).is_err());
    }

    #[test]
    fn infinite_cut_gives_zero() {
        let m = CascadeModel::empty(8, vec![], 1.0);
        let test = TestSet {
            images: vec![("a".into(), GrayImage::filled(10, 10, 0).unwrap())],
            truths: vec![GroundTruthBox { image_id: "a".into(), x: 0, y: 0, w: 8, h: 8 }],
        };
        let pts = roc_curve(&m, &test, RocMode::Threshold, &RocParams::default()).unwrap();
        let last = pts.iter().find(|p| p.operating_point == "offset=-inf").unwrap();
        assert_eq!(last.false_positives, 0);
        assert_eq!(last.detection_rate, 0.0);
    }
}
