use gslda::boosting::{alpha, prune_stumps, reweight_adaboost, reweight_asymboost, BoostingConfig, SampleWeights};
use gslda::cascade::{train_node, tune_node_threshold, Method, NodeClassifier, NodeConfig, NodeData, NodeGoal};
use gslda::detect::{merge_detections, Detection, DetectionWindow, RocPoint};
use gslda::features::{build_integral, enumerate_haar, eval_haar, GrayImage};
use gslda::io::{
    decode_pgm, encode_pgm, model_from_str, model_to_string, read_detections, read_roc, write_detections, write_roc,
    ModelFile,
};
use gslda::scatter::{
    between_class_vector, forward_select, within_class_entry, ForwardSelector, ResponseMatrix, ScatterConfig,
    ScatterContext, ScatterState,
};
use gslda::weak::{build_table, train_stump, weighted_error, DecisionStump, FeatureValues};
use proptest::prelude::*;

/// Labels with both classes present and `m` response columns.
fn responses(max_n: usize, max_m: usize) -> impl Strategy<Value = ResponseMatrix> {
    (4..max_n, 1..max_m).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::bool::ANY, n),
            prop::collection::vec(prop::bool::ANY, n * m),
        )
            .prop_map(|(lab, data)| {
                let mut labels: Vec<i8> = lab.iter().map(|&b| if b { 1 } else { -1 }).collect();
                labels[0] = 1;
                labels[1] = -1;
                let data = data.iter().map(|&b| if b { 1 } else { -1 }).collect();
                ResponseMatrix::from_feature_major(data, labels).unwrap()
            })
    })
}

/// Spectral condition number of the restricted within-class scatter.
fn condition(ctx: &ScatterContext, idx: &[usize]) -> f64 {
    let eig = ctx.restricted_within(idx).symmetric_eigenvalues();
    eig.amax() / eig.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()))
}

/// Relative deviation of the recycled inverse from a direct Cholesky
/// inverse.
fn inverse_deviation(ctx: &ScatterContext, st: &ScatterState) -> f64 {
    let direct = ctx.restricted_within(&st.selected).cholesky().expect("restricted scatter is SPD").inverse();
    (&st.inv_sw - &direct).amax() / direct.amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalue_non_decreasing_and_cardinality_bounded(rm in responses(60, 10), k in 1usize..6) {
        let k = k.min(rm.n_features());
        let cfg = ScatterConfig { max_features: k, ..Default::default() };
        let ctx = ScatterContext::new(&rm, &cfg, None).unwrap();
        let mut sel = ForwardSelector::new(ctx);
        let mut last = 0.0;
        while sel.state().len() < k {
            if sel.step().unwrap().is_none() {
                break;
            }
            let lam = sel.state().eigenvalue;
            let slack = 1e-12f64.max(condition(sel.context(), &sel.state().selected) * 1e-14);
            prop_assert!(lam >= last - slack * lam.abs().max(1.0), "{} < {}", lam, last);
            last = lam;
        }
        if let Ok(st) = forward_select(&rm, &cfg, None) {
            prop_assert!(st.len() <= k);
        }
    }

    #[test]
    fn inverse_consistent_after_augment_and_eliminate(rm in responses(80, 10), dual in prop::bool::ANY) {
        let cfg = ScatterConfig {
            max_features: rm.n_features().min(5),
            dual_pass: dual,
            elimination_fraction: 0.5,
            ..Default::default()
        };
        let ctx = ScatterContext::new(&rm, &cfg, None).unwrap();
        let mut sel = ForwardSelector::new(ScatterContext::new(&rm, &cfg, None).unwrap());
        for _ in 0..cfg.max_features {
            if sel.step().unwrap().is_none() {
                break;
            }
            if dual {
                sel.eliminate().unwrap();
            }
            let err = inverse_deviation(&ctx, sel.state());
            prop_assert!(err < 1e-8, "{}", err);
        }
    }

    #[test]
    fn augmenting_never_lowers_eigenvalue(rm in responses(60, 8)) {
        let cfg = ScatterConfig::default();
        let ctx = ScatterContext::new(&rm, &cfg, None).unwrap();
        let base = ctx.augment(&ScatterState::empty(), 0).unwrap();
        for i in 1..rm.n_features() {
            if let Some(lam) = ctx.candidate_eigenvalue(&base, i) {
                let direct = ctx.state_for(&[0, i]).unwrap().eigenvalue;
                prop_assert!(lam >= base.eigenvalue - 1e-12);
                prop_assert!((lam - direct).abs() <= 1e-8 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn pooled_scatter_and_symmetry(rm in responses(40, 5)) {
        let cfg = ScatterConfig { ridge: 0.0, ..Default::default() };
        let n = rm.n_samples();
        let mean = |j: usize, cls: i8| {
            let idx: Vec<usize> = (0..n).filter(|&s| rm.labels()[s] == cls).collect();
            idx.iter().map(|&s| f64::from(rm.get(s, j))).sum::<f64>() / idx.len() as f64
        };
        for i in 0..rm.n_features() {
            for j in 0..rm.n_features() {
                let direct: f64 = (0..n)
                    .map(|s| {
                        let y = rm.labels()[s];
                        (f64::from(rm.get(s, i)) - mean(i, y)) * (f64::from(rm.get(s, j)) - mean(j, y))
                    })
                    .sum();
                let got = within_class_entry(&rm, &cfg, i, j, None).unwrap();
                prop_assert!((got - direct).abs() <= 1e-12 * direct.abs().max(1.0));
                prop_assert_eq!(got, within_class_entry(&rm, &cfg, j, i, None).unwrap());
            }
        }
    }

    #[test]
    fn greedy_bounded_by_exhaustive(rm in responses(40, 8)) {
        let k = rm.n_features().min(3);
        let cfg = ScatterConfig { max_features: k, ..Default::default() };
        let ctx = ScatterContext::new(&rm, &cfg, None).unwrap();
        let greedy = match forward_select(&rm, &cfg, None) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let m = rm.n_features();
        let mut best = f64::NEG_INFINITY;
        for mask in 1u32..(1 << m) {
            if mask.count_ones() as usize == greedy.len() {
                let idx: Vec<usize> = (0..m).filter(|&j| mask & (1 << j) != 0).collect();
                if let Ok(st) = ctx.state_for(&idx) {
                    best = best.max(st.eigenvalue);
                }
            }
        }
        prop_assert!(greedy.eigenvalue <= best * (1.0 + 1e-9) + 1e-12, "{} {} {}", greedy.eigenvalue, best, condition(&ctx, &greedy.selected));
        let b = between_class_vector(&rm, None).unwrap();
        let first = (0..m)
            .map(|j| b[j] * b[j] / ctx.within(j, j))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (j, s)| if s > a.1 { (j, s) } else { a });
        let chosen = b[greedy.selected[0]].powi(2) / ctx.within(greedy.selected[0], greedy.selected[0]);
        prop_assert!((chosen - first.1).abs() <= 1e-12 * first.1.abs().max(1.0));
    }

    #[test]
    fn stump_error_at_most_half_and_scale_invariant(
        values in prop::collection::vec(-5.0f64..5.0, 6..80),
        seed_w in prop::collection::vec(0.01f64..1.0, 80),
        scale in prop::sample::select(vec![0.25, 2.0, 8.0]),
    ) {
        let n = values.len();
        let mut labels: Vec<i8> = values.iter().map(|&v| if v > 0.5 { 1 } else { -1 }).collect();
        labels[0] = 1;
        labels[1] = -1;
        let raw = seed_w[..n].to_vec();
        let w = SampleWeights::from_raw(raw.clone()).unwrap();
        let scaled = SampleWeights::from_raw(raw.iter().map(|x| x * scale).collect()).unwrap();
        let (s1, e1) = train_stump(&values, &labels, &w).unwrap();
        let (s2, _) = train_stump(&values, &labels, &scaled).unwrap();
        prop_assert!(e1 <= 0.5 + 1e-15);
        prop_assert_eq!(s1, s2);
    }

    #[test]
    fn reweighting_normalizes_and_edge_identity(
        labels in prop::collection::vec(prop::bool::ANY, 4..60),
        resp in prop::collection::vec(prop::bool::ANY, 60),
        raw in prop::collection::vec(0.01f64..1.0, 60),
        k in 0.5f64..4.0,
    ) {
        let n = labels.len();
        let mut y: Vec<i8> = labels.iter().map(|&b| if b { 1 } else { -1 }).collect();
        y[0] = 1;
        y[1] = -1;
        let h: Vec<i8> = resp[..n].iter().map(|&b| if b { 1 } else { -1 }).collect();
        let w = SampleWeights::from_raw(raw[..n].to_vec()).unwrap();
        let e = weighted_error(&h, &y, &w);
        let edge: f64 = h.iter().zip(&y).zip(w.as_slice()).map(|((&a, &b), &u)| u * f64::from(a * b)).sum();
        prop_assert!((edge - (1.0 - 2.0 * e)).abs() < 1e-12);
        let a = alpha(e, 1e-8);
        for next in [reweight_adaboost(&w, &h, &y, a).unwrap(), reweight_asymboost(&w, &h, &y, a, k).unwrap()] {
            prop_assert!((next.sum() - 1.0).abs() < 1e-12);
            prop_assert!(next.as_slice().iter().all(|&u| u >= 0.0));
        }
        if e > 1e-6 && e < 1.0 - 1e-6 {
            let next = reweight_adaboost(&w, &h, &y, a).unwrap();
            prop_assert!((weighted_error(&h, &y, &next) - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn pruning_keeps_best_and_grows_with_epsilon(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 30), 2..12),
        eps in 0.0f64..0.3,
    ) {
        let labels: Vec<i8> = (0..30).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let fv = FeatureValues::from_rows(&rows).unwrap();
        let w = SampleWeights::uniform(30);
        let table = build_table(&fv, &labels, &w).unwrap();
        let best = (0..table.len()).fold(0, |b, t| if table.errors[t] < table.errors[b] { t } else { b });
        let small = prune_stumps(&table, &w, &BoostingConfig { prune_epsilon: eps, ..Default::default() }).unwrap().0;
        let large = prune_stumps(&table, &w, &BoostingConfig { prune_epsilon: eps + 0.1, ..Default::default() }).unwrap().0;
        prop_assert!(small.contains(&best));
        prop_assert!(small.iter().all(|t| large.contains(t)));
    }

    #[test]
    fn threshold_meets_detection_goal(
        scores in prop::collection::vec(-10.0f64..10.0, 1..200),
        d1 in 0.5f64..1.0,
        d2 in 0.5f64..1.0,
    ) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let accepted = |t: f64| scores.iter().filter(|&&s| s + t >= 0.0).count() as f64 / scores.len() as f64;
        let t_lo = tune_node_threshold(&scores, lo);
        let t_hi = tune_node_threshold(&scores, hi);
        prop_assert!(accepted(t_lo) >= lo);
        prop_assert!(accepted(t_hi) >= hi);
        // A higher goal never demands a stricter threshold.
        prop_assert!(t_hi >= t_lo);
    }

    #[test]
    fn merge_output_bounded(
        raw in prop::collection::vec((0usize..60, 0usize..60, 8usize..20, -1.0f64..1.0), 0..40),
        min_neighbors in 1usize..4,
    ) {
        let windows: Vec<DetectionWindow> = raw
            .iter()
            .map(|&(x, y, side, score)| DetectionWindow { x, y, side, score, stages_passed: 1 })
            .collect();
        let merged = merge_detections(&windows, min_neighbors);
        prop_assert!(merged.len() <= windows.len());
        let max_score = windows.iter().map(|w| w.score).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(merged.iter().all(|m| m.score <= max_score));
        prop_assert_eq!(merge_detections(&windows, min_neighbors), merged);
    }

    #[test]
    fn csv_round_trips(
        rows in prop::collection::vec((0usize..500, 0usize..500, 1usize..100, prop::num::f64::NORMAL), 0..30),
    ) {
        let dets: Vec<Detection> = rows
            .iter()
            .enumerate()
            .map(|(i, &(x, y, side, score))| Detection { image_id: format!("img{}", i % 3), x, y, side, score })
            .collect();
        let mut buf = Vec::new();
        write_detections(&mut buf, &dets).unwrap();
        prop_assert_eq!(read_detections(buf.as_slice()).unwrap(), dets);

        let roc: Vec<RocPoint> = rows
            .iter()
            .map(|&(x, _, side, _)| RocPoint {
                operating_point: format!("depth={side}"),
                false_positives: x,
                detection_rate: side as f64 / 100.0,
            })
            .collect();
        let mut buf = Vec::new();
        write_roc(&mut buf, &roc).unwrap();
        prop_assert_eq!(read_roc(buf.as_slice()).unwrap(), roc);
    }

    #[test]
    fn pgm_round_trips(w in 1usize..20, h in 1usize..20, seed in prop::collection::vec(any::<u8>(), 400)) {
        let img = GrayImage::new(w, h, seed[..w * h].to_vec()).unwrap();
        prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn model_floats_round_trip_bit_exactly(
        coefs in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL, 1..8),
        thresholds in prop::collection::vec(prop::num::f64::ANY.prop_filter("finite or infinite", |v| !v.is_nan()), 8),
        theta in prop::num::f64::NORMAL,
    ) {
        let pool = enumerate_haar(8, 2, 2);
        let stumps: Vec<DecisionStump> = coefs
            .iter()
            .enumerate()
            .map(|(t, _)| DecisionStump { feature_id: t, threshold: thresholds[t], polarity: if t % 2 == 0 { 1 } else { -1 } })
            .collect();
        let mut model = gslda::cascade::CascadeModel::empty(8, pool, 0.01);
        let node = NodeClassifier { stumps, coefficients: coefs, node_threshold: theta, trained_by: Method::Bgslda2 };
        model.push_stage(node, gslda::cascade::StageRates { detection_rate: 0.995, false_positive_rate: 0.3, goal_met: true });
        let text = model_to_string(&ModelFile::new(&model, None)).unwrap();
        let back = model_from_str(&text).unwrap().model();
        let bits = |m: &gslda::cascade::CascadeModel| -> Vec<u64> {
            let n = &m.nodes[0];
            n.coefficients
                .iter()
                .chain(n.stumps.iter().map(|s| &s.threshold))
                .chain(std::iter::once(&n.node_threshold))
                .map(|v| v.to_bits())
                .collect()
        };
        prop_assert_eq!(bits(&back), bits(&model));
        prop_assert_eq!(model_to_string(&ModelFile::new(&back, None)).unwrap(), text);
    }

    #[test]
    fn haar_at_unit_scale_matches_direct_sum(pixels in prop::collection::vec(any::<u8>(), 64), pick in 0usize..10_000) {
        let img = GrayImage::new(8, 8, pixels).unwrap();
        let ii = build_integral(&img).unwrap();
        let pool = enumerate_haar(8, 1, 1);
        let f = pool[pick % pool.len()];
        let mut white = 0.0;
        let mut black = 0.0;
        let (mut aw, mut ab) = (0.0, 0.0);
        for (x, y, w, h, is_white) in f.rects() {
            let s: f64 = (y..y + h).flat_map(|r| (x..x + w).map(move |c| (c, r))).map(|(c, r)| f64::from(img.get(c, r))).sum();
            if is_white {
                white += s;
                aw += (w * h) as f64;
            } else {
                black += s;
                ab += (w * h) as f64;
            }
        }
        let direct = white / aw - black / ab;
        let got = eval_haar(&f, &ii, 0, 0, 1.0).unwrap();
        prop_assert!((got - direct).abs() < 1e-9, "{} vs {}", got, direct);
    }
}

#[test]
fn gslda_node_follows_forward_selection() {
    let n = 120;
    let labels: Vec<i8> = (0..n).map(|i| if i % 4 == 0 { 1 } else { -1 }).collect();
    let rows: Vec<Vec<f64>> = (0..15)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let noise = ((i * 37 + j * 101) % 23) as f64 / 23.0;
                    noise + if labels[i] > 0 { 0.1 * (j % 4) as f64 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let fv = FeatureValues::from_rows(&rows).unwrap();
    let goal = NodeGoal { d_min: 0.99, f_max: 1e-9, max_stumps: Some(5) };
    let data = NodeData { train: &fv, labels: &labels, validation_pos: &fv };
    let report = train_node(&data, &goal, Method::Gslda, &NodeConfig::default()).unwrap();
    let w = gslda::boosting::init_weights(&labels).unwrap();
    let table = build_table(&fv, &labels, &w).unwrap();
    let cfg = ScatterConfig { max_features: 5, ..Default::default() };
    let st = forward_select(&table.responses, &cfg, None).unwrap();
    let order: Vec<usize> = report.node.stumps.iter().map(|s| s.feature_id).collect();
    assert_eq!(order, st.selected);
}

#[test]
fn adaboost_separates_two_feature_toy() {
    // Positives in the unit square's lower-left quadrant.
    let pts: Vec<(f64, f64)> = (0..100).map(|i| (((i * 7) % 10) as f64 / 10.0, ((i * 3) % 10) as f64 / 10.0)).collect();
    let labels: Vec<i8> = pts.iter().map(|&(x, y)| if x < 0.45 && y < 0.45 { 1 } else { -1 }).collect();
    let fv = FeatureValues::from_rows(&[pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect()]).unwrap();
    let mut w = gslda::boosting::init_weights(&labels).unwrap();
    let mut score = vec![0.0; pts.len()];
    let mut zero_at = None;
    for round in 1..=20 {
        let table = build_table(&fv, &labels, &w).unwrap();
        let t = (0..table.len()).fold(0, |b, t| if table.errors[t] < table.errors[b] { t } else { b });
        let a = alpha(table.errors[t], 1e-8);
        let col = table.responses.column(t);
        for (s, &h) in score.iter_mut().zip(col) {
            *s += a * f64::from(h);
        }
        w = reweight_adaboost(&w, col, &labels, a).unwrap();
        let errors = score.iter().zip(&labels).filter(|(s, &y)| (**s >= 0.0) != (y > 0)).count();
        if errors == 0 {
            zero_at = Some(round);
            break;
        }
    }
    assert!(zero_at.is_some(), "training error never reached zero");
}
