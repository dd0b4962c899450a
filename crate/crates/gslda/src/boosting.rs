//! Sample-weight machinery: initialization, AdaBoost and AsymBoost
//! reweighting, and edge-based pruning of the stump pool.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::weak::StumpTable;

/// Normalized nonnegative distribution over training samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleWeights(Vec<f64>);

impl SampleWeights {
    /// Normalizes `raw` to sum to one.
    pub fn from_raw(raw: Vec<f64>) -> Result<Self> {
        if raw.iter().any(|&u| !(u >= 0.0) || !u.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let z: f64 = raw.iter().sum();
        if !(z > 0.0) {
            return Err(Error::invalid("weights sum to zero"));
        }
        Ok(Self(raw.into_iter().map(|u| u / z).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Re-normalizes in place (guards against drift across many rounds).
    pub fn normalize(&mut self) {
        let z: f64 = self.0.iter().sum();
        self.0.iter_mut().for_each(|u| *u /= z);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    AdaBoost,
    AsymBoost,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostingConfig {
    pub scheme: Scheme,
    /// Asymmetry `k`: positives gain `sqrt(k)` relative to negatives.
    pub asym_k: f64,
    /// Slack added to the pruning bound `e_k`.
    pub prune_epsilon: f64,
    /// Weighted errors are clamped to `[floor, 1 - floor]` before `alpha`.
    pub error_floor: f64,
}

impl Default for BoostingConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::AdaBoost,
            asym_k: 2.0,
            prune_epsilon: 0.1,
            error_floor: 1e-8,
        }
    }
}

impl BoostingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.asym_k > 0.0) {
            return Err(Error::invalid("asym_k must be positive"));
        }
        if !(self.prune_epsilon >= 0.0) {
            return Err(Error::invalid("prune_epsilon must be nonnegative"));
        }
        if !(self.error_floor > 0.0 && self.error_floor < 0.5) {
            return Err(Error::invalid("error_floor must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// Best edge over a stump pool and the induced error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeStats {
    pub beta_k: f64,
    pub e_k: f64,
}

impl EdgeStats {
    pub fn from_edge(beta_k: f64) -> Self {
        Self {
            beta_k,
            e_k: (1.0 - beta_k) / 2.0,
        }
    }
}

/// Positives get `0.5 / n_pos`, negatives `0.5 / n_neg`.
pub fn init_weights(labels: &[i8]) -> Result<SampleWeights> {
    let n_pos = labels.iter().filter(|&&y| y > 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateClasses);
    }
    let wp = 0.5 / n_pos as f64;
    let wn = 0.5 / n_neg as f64;
    Ok(SampleWeights(
        labels.iter().map(|&y| if y > 0 { wp } else { wn }).collect(),
    ))
}

/// `log((1 - e) / e)` with `e` clamped to `[floor, 1 - floor]`.
pub fn alpha(error: f64, floor: f64) -> f64 {
    let e = error.clamp(floor, 1.0 - floor);
    ((1.0 - e) / e).ln()
}

fn reweight_with(
    w: &SampleWeights,
    responses: &[i8],
    labels: &[i8],
    a: f64,
    class_factor: impl Fn(i8) -> f64,
) -> Result<SampleWeights> {
    if responses.len() != w.len() || labels.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            actual: responses.len().min(labels.len()),
        });
    }
    let num: Vec<f64> = w
        .0
        .iter()
        .zip(responses)
        .zip(labels)
        .map(|((&u, &h), &y)| u * (-0.5 * a * f64::from(y * h)).exp() * class_factor(y))
        .collect();
    let z: f64 = num.iter().sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::invalid("reweighting normalizer is not positive"));
    }
    Ok(SampleWeights(num.into_iter().map(|u| u / z).collect()))
}

/// AdaBoost update for a stump with coefficient `a = alpha(e)`.
///
/// `alpha` is the coefficient of a {0, 1}-output stump. With outputs in
/// {-1, +1} the equivalent update is `u_i exp(-(a / 2) y_i h_i) / Z`, which
/// leaves the chosen stump at weighted error exactly 1/2.
pub fn reweight_adaboost(
    w: &SampleWeights,
    responses: &[i8],
    labels: &[i8],
    a: f64,
) -> Result<SampleWeights> {
    reweight_with(w, responses, labels, a, |_| 1.0)
}

/// One-shot AsymBoost update: the AdaBoost numerator times
/// `exp(y_i log sqrt(k))`.
pub fn reweight_asymboost(
    w: &SampleWeights,
    responses: &[i8],
    labels: &[i8],
    a: f64,
    k: f64,
) -> Result<SampleWeights> {
    reweight_asymboost_amortized(w, responses, labels, a, k, 1)
}

/// AsymBoost update with the asymmetric multiplier spread over `rounds`
/// rounds: `exp(y_i log sqrt(k) / rounds)`.
pub fn reweight_asymboost_amortized(
    w: &SampleWeights,
    responses: &[i8],
    labels: &[i8],
    a: f64,
    k: f64,
    rounds: usize,
) -> Result<SampleWeights> {
    if !(k > 0.0) || rounds == 0 {
        return Err(Error::invalid("asymmetry k and rounds must be positive"));
    }
    let step = k.sqrt().ln() / rounds as f64;
    let up = step.exp();
    let down = (-step).exp();
    reweight_with(w, responses, labels, a, |y| if y > 0 { up } else { down })
}

/// Keeps stumps with weighted error `<= e_k + epsilon`, where
/// `e_k = (1 - beta_k) / 2` and `beta_k` is the largest edge in the table.
/// The max-edge stump always survives.
pub fn prune_stumps(
    table: &StumpTable,
    w: &SampleWeights,
    cfg: &BoostingConfig,
) -> Result<(Vec<usize>, EdgeStats)> {
    prune_with_epsilon(table, w, cfg.prune_epsilon)
}

pub(crate) fn prune_with_epsilon(
    table: &StumpTable,
    w: &SampleWeights,
    epsilon: f64,
) -> Result<(Vec<usize>, EdgeStats)> {
    let m = table.len();
    if m == 0 {
        return Err(Error::invalid("empty stump table"));
    }
    let labels = table.responses.labels();
    let u = w.as_slice();
    let edges = par::map_range(m, |t| {
        table
            .responses
            .column(t)
            .iter()
            .zip(labels)
            .zip(u)
            .map(|((&h, &y), &ui)| ui * f64::from(h * y))
            .sum::<f64>()
    });
    let mut best = 0;
    for (t, &e) in edges.iter().enumerate() {
        if e > edges[best] {
            best = t;
        }
    }
    let stats = EdgeStats::from_edge(edges[best]);
    // Edges are recomputed from responses rather than from the stored errors,
    // so allow for summation-order rounding at the boundary.
    let bound = stats.e_k + epsilon + 1e-12;
    let survivors = (0..m)
        .filter(|&t| t == best || table.errors[t] <= bound)
        .collect();
    Ok((survivors, stats))
}
