//! Cascade models: node training, cascade training with negative
//! bootstrapping, and window classification.

mod bootstrap;
mod node;
mod train;

pub use bootstrap::{bootstrap_negatives, BootstrapConfig, NegativeReservoir};
pub use node::{
    node_decide, train_node, tune_node_threshold, Method, NodeClassifier, NodeConfig, NodeData, NodeGoal,
    NodeReport,
};
pub use train::{train_cascade, CascadeConfig, CascadeOutcome, StageLog, Termination, TrainingPool};

use serde::{Deserialize, Serialize};

use crate::features::{HaarFeature, IntegralImage, ScaledHaar};

/// Measured rates of one stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRates {
    /// Accepted fraction of the stage's validation positives.
    pub detection_rate: f64,
    /// Accepted fraction of the stage's training negatives.
    pub false_positive_rate: f64,
    pub goal_met: bool,
}

/// Running products `(D_i, F_i)` of per-stage rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cumulative {
    pub detection_rate: f64,
    pub false_positive_rate: f64,
}

/// Ordered list of nodes; a window is accepted only if every node accepts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeModel {
    pub base_window: usize,
    pub feature_pool: Vec<HaarFeature>,
    pub nodes: Vec<NodeClassifier>,
    pub stage_rates: Vec<StageRates>,
    pub cumulative: Vec<Cumulative>,
    pub f_target: f64,
}

/// Result of running one window through a cascade.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowOutcome {
    pub accepted: bool,
    pub stages_passed: usize,
    /// Margin of the last node evaluated (0 for an empty cascade).
    pub score: f64,
    /// Number of Haar features evaluated.
    pub evaluations: usize,
}

impl CascadeModel {
    pub fn empty(base_window: usize, feature_pool: Vec<HaarFeature>, f_target: f64) -> Self {
        Self {
            base_window,
            feature_pool,
            nodes: Vec::new(),
            stage_rates: Vec::new(),
            cumulative: Vec::new(),
            f_target,
        }
    }

    pub fn depth(&self) -> usize {
        self.nodes.len()
    }

    /// Current `(D_i, F_i)`, `(1, 1)` before any stage.
    pub fn current(&self) -> Cumulative {
        self.cumulative.last().copied().unwrap_or(Cumulative {
            detection_rate: 1.0,
            false_positive_rate: 1.0,
        })
    }

    /// Appends a stage and extends the running products.
    pub fn push_stage(&mut self, node: NodeClassifier, rates: StageRates) {
        let prev = self.current();
        self.nodes.push(node);
        self.stage_rates.push(rates);
        self.cumulative.push(Cumulative {
            detection_rate: prev.detection_rate * rates.detection_rate,
            false_positive_rate: prev.false_positive_rate * rates.false_positive_rate,
        });
    }

    /// The first `k` stages.
    pub fn truncated(&self, k: usize) -> CascadeModel {
        let k = k.min(self.depth());
        CascadeModel {
            base_window: self.base_window,
            feature_pool: self.feature_pool.clone(),
            nodes: self.nodes[..k].to_vec(),
            stage_rates: self.stage_rates[..k].to_vec(),
            cumulative: self.cumulative[..k].to_vec(),
            f_target: self.f_target,
        }
    }

    /// Restricts the feature pool to features some stump uses, remapping
    /// stump ids. Detection decisions are unchanged.
    pub fn compact(&mut self) {
        let mut remap = vec![usize::MAX; self.feature_pool.len()];
        let mut pool = Vec::new();
        for node in &mut self.nodes {
            for s in &mut node.stumps {
                if remap[s.feature_id] == usize::MAX {
                    remap[s.feature_id] = pool.len();
                    pool.push(self.feature_pool[s.feature_id]);
                }
                s.feature_id = remap[s.feature_id];
            }
        }
        self.feature_pool = pool;
    }

    /// Precomputes feature geometry at `scale`.
    pub fn at_scale(&self, scale: f64) -> ScaledCascade<'_> {
        ScaledCascade {
            model: self,
            features: self.feature_pool.iter().map(|f| f.scaled(scale)).collect(),
            side: (self.base_window as f64 * scale).round() as usize,
        }
    }
}

/// A cascade with its feature geometry fixed to one scale.
pub struct ScaledCascade<'a> {
    model: &'a CascadeModel,
    features: Vec<ScaledHaar>,
    side: usize,
}

impl ScaledCascade<'_> {
    /// Window side length in pixels.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn model(&self) -> &CascadeModel {
        self.model
    }

    pub fn feature_value(&self, feature: usize, ii: &IntegralImage, ox: usize, oy: usize) -> f64 {
        self.features[feature].eval_unchecked(ii, ox, oy)
    }

    /// Runs the window at `(ox, oy)` through the nodes, stopping at the
    /// first rejection. The window must fit inside the image.
    pub fn classify(&self, ii: &IntegralImage, ox: usize, oy: usize) -> WindowOutcome {
        let mut evaluations = 0;
        let mut score = 0.0;
        for (k, node) in self.model.nodes.iter().enumerate() {
            evaluations += node.stumps.len();
            score = node.raw_score_with(|f| self.feature_value(f, ii, ox, oy)) + node.node_threshold;
            if score < 0.0 {
                return WindowOutcome {
                    accepted: false,
                    stages_passed: k,
                    score,
                    evaluations,
                };
            }
        }
        WindowOutcome {
            accepted: true,
            stages_passed: self.model.nodes.len(),
            score,
            evaluations,
        }
    }

    /// Per-node margins without early exit.
    pub fn all_margins(&self, ii: &IntegralImage, ox: usize, oy: usize) -> Vec<f64> {
        self.model
            .nodes
            .iter()
            .map(|node| node.raw_score_with(|f| self.feature_value(f, ii, ox, oy)) + node.node_threshold)
            .collect()
    }
}
