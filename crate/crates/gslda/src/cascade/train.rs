use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_negatives, BootstrapConfig, NegativeReservoir};
use super::node::{train_node, Method, NodeConfig, NodeData, NodeGoal};
use super::{CascadeModel, StageRates};
use crate::error::{Error, Result};
use crate::features::{patch_feature_values, GrayImage, HaarPoolSpec};

/// Images for cascade training. All patches share the base window size.
#[derive(Clone, Debug, Default)]
pub struct TrainingPool {
    pub positives: Vec<GrayImage>,
    /// Initial negative patches.
    pub negatives: Vec<GrayImage>,
    /// Background images from which later negatives are harvested.
    pub reservoir: Vec<GrayImage>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeConfig {
    pub goal: NodeGoal,
    /// Overall false-positive target; training stops once `F_i` reaches it.
    pub f_target: f64,
    pub method: Method,
    pub node: NodeConfig,
    pub features: HaarPoolSpec,
    /// Negatives per stage; `None` uses the size of the initial set.
    pub negatives_per_stage: Option<usize>,
    /// Fewest negatives a stage may train on; `None` means a tenth of the
    /// per-stage count.
    pub min_negatives: Option<usize>,
    pub max_stages: usize,
    /// Fraction of positives held out to place node thresholds.
    pub validation_fraction: f64,
    pub bootstrap: BootstrapConfig,
    pub seed: u64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            goal: NodeGoal::default(),
            f_target: 1e-3,
            method: Method::Bgslda1,
            node: NodeConfig::default(),
            features: HaarPoolSpec::default(),
            negatives_per_stage: None,
            min_negatives: None,
            max_stages: 30,
            validation_fraction: 0.2,
            bootstrap: BootstrapConfig::default(),
            seed: 0,
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        self.goal.validate()?;
        if !(self.f_target > 0.0) {
            return Err(Error::invalid("f_target must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid("validation_fraction must be in [0, 1)"));
        }
        if self.max_stages == 0 {
            return Err(Error::invalid("max_stages must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TargetReached,
    BootstrapExhausted,
    MaxStages,
    /// A stage rejected no negatives.
    NoProgress,
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: usize,
    pub method: Method,
    pub stumps: usize,
    pub negatives: usize,
    pub detection_rate: f64,
    pub false_positive_rate: f64,
    pub cumulative_detection_rate: f64,
    pub cumulative_false_positive_rate: f64,
    pub goal_met: bool,
    pub wall_ms: u64,
}

#[derive(Clone, Debug)]
pub struct CascadeOutcome {
    pub model: CascadeModel,
    pub logs: Vec<StageLog>,
    pub termination: Termination,
}

fn check_patches(patches: &[GrayImage], base: usize, what: &str) -> Result<()> {
    match patches.iter().find(|p| p.width() != base || p.height() != base) {
        Some(p) => Err(Error::invalid(format!(
            "{what} patch is {}x{}, expected {base}x{base}",
            p.width(),
            p.height()
        ))),
        None => Ok(()),
    }
}

/// Trains nodes one after another, refilling the negative set after each
/// stage with windows the partial cascade still accepts. `on_stage` sees
/// each log record as soon as the stage finishes.
pub fn train_cascade(
    pool: &TrainingPool,
    cfg: &CascadeConfig,
    mut on_stage: impl FnMut(&StageLog),
) -> Result<CascadeOutcome> {
    cfg.validate()?;
    let base = cfg.features.base_window;
    if pool.positives.is_empty() {
        return Err(Error::invalid("no positive patches"));
    }
    check_patches(&pool.positives, base, "positive")?;
    check_patches(&pool.negatives, base, "negative")?;
    let features = cfg.features.generate()?;
    let mut model = CascadeModel::empty(base, features, cfg.f_target);
    if cfg.f_target >= 1.0 {
        return Ok(CascadeOutcome {
            model,
            logs: Vec::new(),
            termination: Termination::TargetReached,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..pool.positives.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (pool.positives.len() as f64 * cfg.validation_fraction).round() as usize;
    let (val_idx, train_idx) = if n_val == 0 || n_val >= pool.positives.len() {
        (order.clone(), order)
    } else {
        let (v, t) = order.split_at(n_val);
        (v.to_vec(), t.to_vec())
    };
    let train_pos: Vec<GrayImage> = train_idx.iter().map(|&i| pool.positives[i].clone()).collect();
    let val_pos: Vec<GrayImage> = val_idx.iter().map(|&i| pool.positives[i].clone()).collect();
    let val_values = patch_feature_values(&model.feature_pool, &val_pos)?;

    let per_stage = cfg.negatives_per_stage.unwrap_or(pool.negatives.len());
    if per_stage == 0 {
        return Err(Error::invalid("negatives_per_stage must be positive"));
    }
    let min_negatives = cfg.min_negatives.unwrap_or((per_stage / 10).max(1)).min(per_stage);
    let mut reservoir = NegativeReservoir::new(pool.reservoir.clone(), base, cfg.bootstrap, cfg.seed);
    let mut negatives: Vec<GrayImage> = pool.negatives.iter().take(per_stage).cloned().collect();
    if negatives.len() < per_stage && !reservoir.is_empty() {
        let need = per_stage - negatives.len();
        let more = bootstrap_negatives(&model, &mut reservoir, need, min_negatives.saturating_sub(negatives.len()))?;
        negatives.extend(more);
    }
    if negatives.is_empty() {
        return Err(Error::BootstrapExhausted { found: 0, required: min_negatives });
    }

    let mut logs = Vec::new();
    let termination = loop {
        let started = Instant::now();
        let n_pos = train_pos.len();
        let mut samples = train_pos.clone();
        samples.extend(negatives.iter().cloned());
        let values = patch_feature_values(&model.feature_pool, &samples)?;
        let mut labels = vec![1i8; n_pos];
        labels.resize(samples.len(), -1);
        let data = NodeData {
            train: &values,
            labels: &labels,
            validation_pos: &val_values,
        };
        let report = train_node(&data, &cfg.goal, cfg.method, &cfg.node)?;

        let kept: Vec<GrayImage> = negatives
            .iter()
            .enumerate()
            .filter(|&(i, _)| {
                report.node.raw_score_with(|f| values.get(n_pos + i, f)) + report.node.node_threshold >= 0.0
            })
            .map(|(_, p)| p.clone())
            .collect();
        let rates = StageRates {
            detection_rate: report.detection_rate,
            false_positive_rate: report.false_positive_rate,
            goal_met: report.goal_met,
        };
        let stumps = report.node.stumps.len();
        model.push_stage(report.node, rates);
        let cum = model.current();
        let log = StageLog {
            stage: model.depth(),
            method: cfg.method,
            stumps,
            negatives: negatives.len(),
            detection_rate: rates.detection_rate,
            false_positive_rate: rates.false_positive_rate,
            cumulative_detection_rate: cum.detection_rate,
            cumulative_false_positive_rate: cum.false_positive_rate,
            goal_met: rates.goal_met,
            wall_ms: started.elapsed().as_millis() as u64,
        };
        on_stage(&log);
        logs.push(log);

        if cum.false_positive_rate <= cfg.f_target {
            break Termination::TargetReached;
        }
        if kept.len() == negatives.len() {
            break Termination::NoProgress;
        }
        if model.depth() >= cfg.max_stages {
            break Termination::MaxStages;
        }
        negatives = kept;
        let need = per_stage.saturating_sub(negatives.len());
        let required = min_negatives.saturating_sub(negatives.len());
        if need > 0 {
            match bootstrap_negatives(&model, &mut reservoir, need, required) {
                Ok(more) => negatives.extend(more),
                Err(Error::BootstrapExhausted { .. }) => break Termination::BootstrapExhausted,
                Err(e) => return Err(e),
            }
        }
        if negatives.is_empty() {
            break Termination::BootstrapExhausted;
        }
    };
    model.compact();
    Ok(CascadeOutcome {
        model,
        logs,
        termination,
    })
}
