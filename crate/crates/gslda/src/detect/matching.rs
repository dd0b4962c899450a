use serde::{Deserialize, Serialize};

use super::Detection;

/// A labeled object; one row of a ground-truth CSV.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub image_id: String,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub true_positives: usize,
    pub false_positives: usize,
    pub missed: usize,
}

impl MatchResult {
    pub fn add(&mut self, o: &MatchResult) {
        self.true_positives += o.true_positives;
        self.false_positives += o.false_positives;
        self.missed += o.missed;
    }
}

/// Intersection over union of two `(x, y, w, h)` boxes; 0 when either is
/// empty.
pub fn iou(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> f64 {
    let ix = (a.0 + a.2).min(b.0 + b.2).saturating_sub(a.0.max(b.0));
    let iy = (a.1 + a.3).min(b.1 + b.3).saturating_sub(a.1.max(b.1));
    let inter = (ix * iy) as f64;
    let union = (a.2 * a.3 + b.2 * b.3) as f64 - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Greedy matching in descending score order (ties keep input order). A
/// detection claims the unmatched truth of its image with the largest IoU,
/// provided it exceeds 0.5; repeated hits on a claimed truth count as false
/// positives.
pub fn match_detections(detections: &[Detection], truths: &[GroundTruthBox]) -> MatchResult {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].score.total_cmp(&detections[a].score));
    let mut taken = vec![false; truths.len()];
    let mut tp = 0;
    for &d in &order {
        let det = &detections[d];
        let dbox = (det.x, det.y, det.side, det.side);
        let mut best: Option<(usize, f64)> = None;
        for (t, truth) in truths.iter().enumerate() {
            if taken[t] || truth.image_id != det.image_id {
                continue;
            }
            let o = iou(dbox, (truth.x, truth.y, truth.w, truth.h));
            if o > 0.5 && best.is_none_or(|(_, b)| o > b) {
                best = Some((t, o));
            }
        }
        if let Some((t, _)) = best {
            taken[t] = true;
            tp += 1;
        }
    }
    MatchResult {
        true_positives: tp,
        false_positives: detections.len() - tp,
        missed: truths.len() - tp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(id: &str, x: usize, y: usize, side: usize, score: f64) -> Detection {
        Detection { image_id: id.into(), x, y, side, score }
    }

    fn truth(id: &str, x: usize, y: usize, w: usize, h: usize) -> GroundTruthBox {
        GroundTruthBox { image_id: id.into(), x, y, w, h }
    }

    #[test]
    fn identical_box_matches() {
        assert_eq!(iou((3, 4, 10, 10), (3, 4, 10, 10)), 1.0);
        let r = match_detections(&[det("a", 3, 4, 10, 1.0)], &[truth("a", 3, 4, 10, 10)]);
        assert_eq!(r, MatchResult { true_positives: 1, false_positives: 0, missed: 0 });
    }

    #[test]
    fn duplicate_detection_is_false_positive() {
        let d = det("a", 0, 0, 10, 1.0);
        let r = match_detections(&[d.clone(), d], &[truth("a", 0, 0, 10, 10)]);
        assert_eq!(r, MatchResult { true_positives: 1, false_positives: 1, missed: 0 });
    }

    #[test]
    fn disjoint_and_other_image() {
        assert_eq!(iou((0, 0, 5, 5), (10, 10, 5, 5)), 0.0);
        let r = match_detections(&[det("a", 50, 50, 10, 1.0), det("b", 0, 0, 10, 1.0)], &[truth("a", 0, 0, 10, 10)]);
        assert_eq!(r, MatchResult { true_positives: 0, false_positives: 2, missed: 1 });
    }

    #[test]
    fn exactly_half_overlap_does_not_match() {
        // IoU of 1/3 and exactly 0.5 are both rejected.
        assert!((iou((0, 0, 10, 10), (5, 0, 10, 10)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou((0, 0, 10, 10), (0, 0, 10, 5)), 0.5);
        let r = match_detections(&[det("a", 0, 0, 10, 1.0)], &[truth("a", 0, 0, 10, 5)]);
        assert_eq!(r.true_positives, 0);
    }

    #[test]
    fn higher_score_claims_first() {
        let truths = [truth("a", 0, 0, 10, 10)];
        let r = match_detections(&[det("a", 1, 0, 10, 0.1), det("a", 0, 0, 10, 0.9)], &truths);
        assert_eq!(r.true_positives, 1);
        assert_eq!(r.false_positives, 1);
    }

    fn arb_box() -> impl Strategy<Value = (usize, usize, usize, usize)> {
        (0usize..30, 0usize..30, 1usize..20, 1usize..20)
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let o = iou(a, b);
            prop_assert_eq!(o, iou(b, a));
            prop_assert!((0.0..=1.0).contains(&o));
        }

        #[test]
        fn conservation(
            dets in proptest::collection::vec((0usize..2, 0usize..40, 0usize..40, 5usize..15, -1.0f64..1.0), 0..20),
            gts in proptest::collection::vec((0usize..2, 0usize..40, 0usize..40, 5usize..15, 5usize..15), 0..8),
        ) {
            let dets: Vec<Detection> = dets.into_iter().map(|(i, x, y, s, sc)| det(&i.to_string(), x, y, s, sc)).collect();
            let gts: Vec<GroundTruthBox> = gts.into_iter().map(|(i, x, y, w, h)| truth(&i.to_string(), x, y, w, h)).collect();
            let r = match_detections(&dets, &gts);
            prop_assert_eq!(r.true_positives + r.missed, gts.len());
            prop_assert_eq!(r.true_positives + r.false_positives, dets.len());
        }
    }
}
