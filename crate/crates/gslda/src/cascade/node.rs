//! Training of a single cascade node.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boosting::{
    alpha, init_weights, prune_with_epsilon, reweight_adaboost, reweight_asymboost_amortized,
    BoostingConfig, SampleWeights,
};
use crate::error::{Error, Result};
use crate::par;
use crate::scatter::{lda_weights, ForwardSelector, ResponseMatrix, ScatterConfig, ScatterContext};
use crate::weak::{build_table, DecisionStump, FeatureValues, StumpTable};

/// Node training method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    AdaBoost,
    AsymBoost,
    Gslda,
    Bgslda1,
    Bgslda2,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::AdaBoost,
        Method::AsymBoost,
        Method::Gslda,
        Method::Bgslda1,
        Method::Bgslda2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::AdaBoost => "adaboost",
            Method::AsymBoost => "asymboost",
            Method::Gslda => "gslda",
            Method::Bgslda1 => "bgslda1",
            Method::Bgslda2 => "bgslda2",
        }
    }

    fn asymmetric(self) -> bool {
        matches!(self, Method::AsymBoost | Method::Bgslda2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// Weighted stump combination with a node threshold:
/// accept iff `Σ w_t h_t(x) + threshold >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeClassifier {
    pub stumps: Vec<DecisionStump>,
    pub coefficients: Vec<f64>,
    #[serde(with = "crate::io::float")]
    pub node_threshold: f64,
    pub trained_by: Method,
}

impl NodeClassifier {
    /// `Σ w_t h_t` over already computed stump responses.
    pub fn raw_score(&self, responses: &[i8]) -> f64 {
        self.coefficients
            .iter()
            .zip(responses)
            .map(|(w, &h)| w * f64::from(h))
            .sum()
    }

    /// Raw score with the stump responses computed from a value lookup.
    pub fn raw_score_with(&self, mut value: impl FnMut(usize) -> f64) -> f64 {
        self.stumps
            .iter()
            .zip(&self.coefficients)
            .map(|(s, w)| w * f64::from(s.response(value(s.feature_id))))
            .sum()
    }

    pub fn margin(&self, responses: &[i8]) -> f64 {
        self.raw_score(responses) + self.node_threshold
    }
}

/// Sign of `Σ w_t h_t + threshold`, with zero mapping to `+1`.
pub fn node_decide(node: &NodeClassifier, responses: &[i8]) -> Result<i8> {
    if responses.len() != node.stumps.len() {
        return Err(Error::DimensionMismatch {
            expected: node.stumps.len(),
            actual: responses.len(),
        });
    }
    Ok(if node.margin(responses) >= 0.0 { 1 } else { -1 })
}

/// Smallest threshold under which at least `ceil(d_min * n)` of the given
/// positive raw scores are accepted.
pub fn tune_node_threshold(positive_scores: &[f64], d_min: f64) -> f64 {
    if positive_scores.is_empty() {
        return f64::INFINITY;
    }
    let n = positive_scores.len();
    let required = ((d_min * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let mut sorted = positive_scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    -sorted[required - 1]
}

/// Per-stage goals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeGoal {
    pub d_min: f64,
    pub f_max: f64,
    pub max_stumps: Option<usize>,
}

impl Default for NodeGoal {
    fn default() -> Self {
        Self {
            d_min: 0.995,
            f_max: 0.5,
            max_stumps: None,
        }
    }
}

impl NodeGoal {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_min > 0.0 && self.d_min <= 1.0) {
            return Err(Error::invalid("d_min must lie in (0, 1]"));
        }
        if !(self.f_max > 0.0 && self.f_max < 1.0) {
            return Err(Error::invalid("f_max must lie in (0, 1)"));
        }
        if self.max_stumps == Some(0) {
            return Err(Error::invalid("max_stumps must be at least 1"));
        }
        Ok(())
    }
}

/// Knobs shared by all node trainers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeConfig {
    pub scatter: ScatterConfig,
    pub boosting: BoostingConfig,
    /// Round count over which the asymmetric multiplier is spread. Defaults
    /// to the node's stump cap.
    pub asym_rounds: Option<usize>,
    /// Stump cap used when the goal does not set one.
    pub default_stump_cap: usize,
    /// Stop adding stumps once the goal is met; otherwise train to the cap.
    pub stop_at_goal: bool,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            scatter: ScatterConfig::default(),
            boosting: BoostingConfig::default(),
            asym_rounds: None,
            default_stump_cap: 200,
            stop_at_goal: true,
        }
    }
}

/// Training samples for one node.
pub struct NodeData<'a> {
    /// Feature values of the training samples.
    pub train: &'a FeatureValues,
    pub labels: &'a [i8],
    /// Feature values of the positives used to place the threshold.
    pub validation_pos: &'a FeatureValues,
}

/// A trained node together with the rates it achieved.
#[derive(Clone, Debug)]
pub struct NodeReport {
    pub node: NodeClassifier,
    /// Accepted fraction of validation positives.
    pub detection_rate: f64,
    /// Accepted fraction of training negatives.
    pub false_positive_rate: f64,
    pub goal_met: bool,
}

/// Selected stumps with their training and validation response columns.
struct Selection {
    stumps: Vec<DecisionStump>,
    train_cols: Vec<Vec<i8>>,
    val_cols: Vec<Vec<i8>>,
}

impl Selection {
    fn new() -> Self {
        Self {
            stumps: Vec::new(),
            train_cols: Vec::new(),
            val_cols: Vec::new(),
        }
    }

    fn push(&mut self, stump: DecisionStump, train_col: Vec<i8>, data: &NodeData) {
        let vals = data.validation_pos.row(stump.feature_id);
        self.val_cols.push(vals.iter().map(|&v| stump.response(v)).collect());
        self.train_cols.push(train_col);
        self.stumps.push(stump);
    }

    fn contains(&self, s: &DecisionStump) -> bool {
        self.stumps.iter().any(|t| t == s)
    }

    fn scores(cols: &[Vec<i8>], coefs: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (col, &w) in cols.iter().zip(coefs) {
            for (o, &h) in out.iter_mut().zip(col) {
                *o += w * f64::from(h);
            }
        }
        out
    }
}

fn argmin_error(table: &StumpTable, skip: impl Fn(&DecisionStump) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (t, s) in table.stumps.iter().enumerate() {
        if skip(s) {
            continue;
        }
        if best.is_none_or(|b| table.errors[t] < table.errors[b]) {
            best = Some(t);
        }
    }
    best
}

/// Unweighted LDA coefficients over the selected columns. Falls back to
/// equal weights when the selection carries no class separation.
fn lda_coefficients(sel: &Selection, labels: &[i8], scatter: &ScatterConfig) -> Result<Vec<f64>> {
    let k = sel.stumps.len();
    let rm = ResponseMatrix::from_columns(&sel.train_cols, labels.to_vec())?;
    let ctx = ScatterContext::new(&rm, scatter, None)?;
    let all: Vec<usize> = (0..k).collect();
    match ctx.state_for(&all).and_then(|s| lda_weights(&s)) {
        Ok(w) => Ok(w),
        Err(Error::ZeroDirection) | Err(Error::SingularAugmentation(_)) => {
            Ok(vec![1.0 / (k as f64).sqrt(); k])
        }
        Err(e) => Err(e),
    }
}

/// Picks the surviving stump with the largest weighted class separation
/// given the current selection.
fn most_separating(
    sel: &Selection,
    table: &StumpTable,
    survivors: &[usize],
    labels: &[i8],
    weights: &SampleWeights,
    scatter: &ScatterConfig,
) -> Result<Option<usize>> {
    if survivors.is_empty() {
        return Ok(None);
    }
    let mut cols = sel.train_cols.clone();
    cols.extend(survivors.iter().map(|&t| table.responses.column(t).to_vec()));
    let rm = ResponseMatrix::from_columns(&cols, labels.to_vec())?;
    let ctx = ScatterContext::new(&rm, scatter, Some(weights))?;
    let k = sel.stumps.len();
    let base: Vec<usize> = (0..k).collect();
    let state = match ctx.state_for(&base) {
        Ok(s) => s,
        Err(Error::SingularAugmentation(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let scores = par::map_range(survivors.len(), |c| ctx.candidate_eigenvalue(&state, k + c));
    let mut best: Option<(usize, f64)> = None;
    for (c, s) in scores.into_iter().enumerate() {
        if let Some(s) = s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
    }
    Ok(best.map(|(c, _)| survivors[c]))
}

/// Trains one node until its false-positive rate on the training negatives
/// drops to `goal.f_max` (with the threshold placed for `goal.d_min` on the
/// validation positives) or the stump cap is reached.
pub fn train_node(data: &NodeData, goal: &NodeGoal, method: Method, cfg: &NodeConfig) -> Result<NodeReport> {
    goal.validate()?;
    cfg.boosting.validate()?;
    cfg.scatter.validate()?;
    let n = data.labels.len();
    if data.train.n_samples() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: data.train.n_samples(),
        });
    }
    if data.validation_pos.n_features() != data.train.n_features() {
        return Err(Error::DimensionMismatch {
            expected: data.train.n_features(),
            actual: data.validation_pos.n_features(),
        });
    }
    let n_val = data.validation_pos.n_samples();
    let neg_idx: Vec<usize> = (0..n).filter(|&i| data.labels[i] < 0).collect();
    let m = data.train.n_features();
    let cap = goal.max_stumps.unwrap_or(cfg.default_stump_cap).min(match method {
        Method::Gslda => m,
        _ => usize::MAX,
    });
    let asym_rounds = cfg.asym_rounds.unwrap_or(cap).max(1);
    let mut weights = init_weights(data.labels)?;

    // GSLDA trains its stumps once, under the initial weights.
    let gslda_table = match method {
        Method::Gslda => Some(build_table(data.train, data.labels, &weights)?),
        _ => None,
    };
    let mut selector = match &gslda_table {
        Some(t) => {
            let sc = ScatterConfig {
                max_features: cap.max(1),
                ..cfg.scatter
            };
            Some(ForwardSelector::new(ScatterContext::new(&t.responses, &sc, None)?))
        }
        None => None,
    };

    let mut sel = Selection::new();
    let mut coefs: Vec<f64> = Vec::new();
    let mut report: Option<NodeReport> = None;
    let mut iterations = 0;
    while sel.stumps.len() < cap && iterations < cap + m {
        iterations += 1;
        match method {
            Method::Gslda => {
                let (selector, table) = (selector.as_mut().unwrap(), gslda_table.as_ref().unwrap());
                if selector.step()?.is_none() {
                    break;
                }
                if cfg.scatter.dual_pass {
                    selector.eliminate()?;
                }
                let state = selector.state();
                sel = Selection::new();
                for &j in &state.selected {
                    sel.push(table.stumps[j], table.responses.column(j).to_vec(), data);
                }
                coefs = match lda_weights(state) {
                    Ok(w) => w,
                    Err(Error::ZeroDirection) => vec![1.0 / (state.len() as f64).sqrt(); state.len()],
                    Err(e) => return Err(e),
                };
            }
            Method::AdaBoost | Method::AsymBoost => {
                let table = build_table(data.train, data.labels, &weights)?;
                let Some(t) = argmin_error(&table, |_| false) else { break };
                let a = alpha(table.errors[t], cfg.boosting.error_floor);
                let col = table.responses.column(t);
                weights = if method.asymmetric() {
                    reweight_asymboost_amortized(&weights, col, data.labels, a, cfg.boosting.asym_k, asym_rounds)?
                } else {
                    reweight_adaboost(&weights, col, data.labels, a)?
                };
                sel.push(table.stumps[t], col.to_vec(), data);
                coefs.push(a);
            }
            Method::Bgslda1 | Method::Bgslda2 => {
                weights.normalize();
                let table = build_table(data.train, data.labels, &weights)?;
                let fresh = |t: &usize| !sel.contains(&table.stumps[*t]);
                let mut eps = cfg.boosting.prune_epsilon;
                let mut pick = None;
                for _ in 0..2 {
                    let (survivors, _) = prune_with_epsilon(&table, &weights, eps)?;
                    let survivors: Vec<usize> = survivors.into_iter().filter(fresh).collect();
                    pick = most_separating(&sel, &table, &survivors, data.labels, &weights, &cfg.scatter)?;
                    if pick.is_some() {
                        break;
                    }
                    eps *= 2.0;
                }
                let pick = pick.or_else(|| argmin_error(&table, |s| sel.contains(s)));
                let Some(t) = pick else { break };
                let a = alpha(table.errors[t], cfg.boosting.error_floor);
                let col = table.responses.column(t);
                weights = if method.asymmetric() {
                    reweight_asymboost_amortized(&weights, col, data.labels, a, cfg.boosting.asym_k, asym_rounds)?
                } else {
                    reweight_adaboost(&weights, col, data.labels, a)?
                };
                sel.push(table.stumps[t], col.to_vec(), data);
                coefs = lda_coefficients(&sel, data.labels, &cfg.scatter)?;
            }
        }

        let val_scores = Selection::scores(&sel.val_cols, &coefs, n_val);
        let threshold = tune_node_threshold(&val_scores, goal.d_min);
        let train_scores = Selection::scores(&sel.train_cols, &coefs, n);
        let detection_rate =
            val_scores.iter().filter(|&&s| s + threshold >= 0.0).count() as f64 / n_val.max(1) as f64;
        let false_positive_rate = neg_idx
            .iter()
            .filter(|&&i| train_scores[i] + threshold >= 0.0)
            .count() as f64
            / neg_idx.len() as f64;
        let goal_met = false_positive_rate <= goal.f_max;
        report = Some(NodeReport {
            node: NodeClassifier {
                stumps: sel.stumps.clone(),
                coefficients: coefs.clone(),
                node_threshold: threshold,
                trained_by: method,
            },
            detection_rate,
            false_positive_rate,
            goal_met,
        });
        if goal_met && cfg.stop_at_goal {
            break;
        }
    }
    report.ok_or(Error::NoSeparatingFeature)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(coefs: Vec<f64>, threshold: f64) -> NodeClassifier {
        let stumps = (0..coefs.len())
            .map(|j| DecisionStump { feature_id: j, threshold: 0.0, polarity: 1 })
            .collect();
        NodeClassifier { stumps, coefficients: coefs, node_threshold: threshold, trained_by: Method::Gslda }
    }

    #[test]
    fn zero_node_accepts() {
        assert_eq!(node_decide(&node(vec![0.0], 0.0), &[-1]).unwrap(), 1);
    }

    #[test]
    fn single_stump_node_follows_stump() {
        let n = node(vec![1.0], 0.0);
        assert_eq!(node_decide(&n, &[1]).unwrap(), 1);
        assert_eq!(node_decide(&n, &[-1]).unwrap(), -1);
    }

    #[test]
    fn hand_node_rejects() {
        assert_eq!(node_decide(&node(vec![0.6, 0.8], -0.5), &[1, -1]).unwrap(), -1);
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(node_decide(&node(vec![0.6, 0.8], 0.0), &[1]).is_err());
    }

    #[test]
    fn full_detection_threshold_is_negated_minimum() {
        let scores = [0.3, -1.25, 2.0, 0.0];
        assert_eq!(tune_node_threshold(&scores, 1.0), 1.25);
    }

    #[test]
    fn quantile_threshold_passes_required_count() {
        let scores: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 / 10.0 - 3.0).collect();
        let t = tune_node_threshold(&scores, 0.995);
        assert!(scores.iter().filter(|&&s| s + t >= 0.0).count() >= 199);
        let looser = tune_node_threshold(&scores, 0.999);
        assert!(looser >= t);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("boost".parse::<Method>().is_err());
    }

    #[test]
    fn separable_pool_needs_one_stump() {
        let n = 40;
        let labels: Vec<i8> = (0..n).map(|i| if i < 15 { 1 } else { -1 }).collect();
        let good: Vec<f64> = labels.iter().map(|&y| f64::from(y) * 2.0 + 0.1).collect();
        let noise: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64).collect();
        let train = FeatureValues::from_rows(&[noise.clone(), good.clone()]).unwrap();
        let val = FeatureValues::from_rows(&[noise[..15].to_vec(), good[..15].to_vec()]).unwrap();
        let data = NodeData { train: &train, labels: &labels, validation_pos: &val };
        for m in Method::ALL {
            let r = train_node(&data, &NodeGoal::default(), m, &NodeConfig::default()).unwrap();
            assert_eq!(r.node.stumps.len(), 1, "{m}");
            assert_eq!(r.false_positive_rate, 0.0, "{m}");
            assert_eq!(r.detection_rate, 1.0, "{m}");
            assert!(r.goal_met);
        }
    }
}
