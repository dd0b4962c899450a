//! Greedy sparse LDA over binary weak-classifier responses.
//!
//! For two classes the between-class scatter is rank one, `S_b = b b^T`, so
//! the only finite generalized eigenvalue of `(S_b, S_w)` restricted to a
//! feature subset `l` is `b_l^T (S_w^l)^{-1} b_l`. Forward selection grows
//! `l` one feature at a time and recycles the previous inverse through a
//! block (rank-one) update, so scoring a candidate costs `O(|l|^2)` once the
//! cross-scatter column `S_w(l, i)` is known. Cross-scatter columns are
//! cached per candidate and extended by one entry per step; the full `M x M`
//! within-class matrix is never formed.

use nalgebra::{DMatrix, DVector};

use crate::boosting::SampleWeights;
use crate::error::{Error, Result};
use crate::par;

/// A denominator `a_i^{-1}` at or below this fraction of `max(S_ii, 1)` is
/// treated as a singular augmentation.
const SINGULAR_TOL: f64 = 1e-10;

/// Largest estimated relative error of the block-update denominator,
/// `|S_l^{-1}| S_ii^2 eps / a_i^{-1}`, accepted before the augmented state
/// is rebuilt by direct factorization instead.
const REFRESH_TOL: f64 = 1e-10;

/// Per-sample outputs (`-1` / `+1`) of every candidate weak classifier.
///
/// Stored feature-major: column `j` holds the responses of classifier `j`
/// over all samples, contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMatrix {
    n_samples: usize,
    n_features: usize,
    data: Vec<i8>,
    labels: Vec<i8>,
    n_pos: usize,
    n_neg: usize,
}

impl ResponseMatrix {
    /// Builds a matrix from feature-major data (`n_features * n_samples`).
    pub fn from_feature_major(data: Vec<i8>, labels: Vec<i8>) -> Result<Self> {
        let n_samples = labels.len();
        if n_samples == 0 || data.len() % n_samples != 0 {
            return Err(Error::DimensionMismatch {
                expected: n_samples,
                actual: data.len(),
            });
        }
        if data.iter().chain(labels.iter()).any(|&v| v != 1 && v != -1) {
            return Err(Error::invalid("responses and labels must be -1 or +1"));
        }
        let n_pos = labels.iter().filter(|&&y| y > 0).count();
        let n_neg = n_samples - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::DegenerateClasses);
        }
        Ok(Self {
            n_samples,
            n_features: data.len() / n_samples,
            data,
            labels,
            n_pos,
            n_neg,
        })
    }

    /// Builds a matrix from one response vector per feature.
    pub fn from_columns(columns: &[Vec<i8>], labels: Vec<i8>) -> Result<Self> {
        let n = labels.len();
        let mut data = Vec::with_capacity(columns.len() * n);
        for col in columns {
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: col.len(),
                });
            }
            data.extend_from_slice(col);
        }
        Self::from_feature_major(data, labels)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn column(&self, feature: usize) -> &[i8] {
        &self.data[feature * self.n_samples..(feature + 1) * self.n_samples]
    }

    pub fn get(&self, sample: usize, feature: usize) -> i8 {
        self.data[feature * self.n_samples + sample]
    }

    /// A new matrix holding only the listed columns, in the given order.
    pub fn select_columns(&self, features: &[usize]) -> ResponseMatrix {
        let mut data = Vec::with_capacity(features.len() * self.n_samples);
        for &j in features {
            data.extend_from_slice(self.column(j));
        }
        ResponseMatrix {
            n_samples: self.n_samples,
            n_features: features.len(),
            data,
            labels: self.labels.clone(),
            n_pos: self.n_pos,
            n_neg: self.n_neg,
        }
    }
}

/// Scatter and selection parameters.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterConfig {
    /// Weight on the negative-class within-class scatter.
    pub gamma: f64,
    /// Added to the within-class diagonal.
    pub ridge: f64,
    /// Cardinality bound on the selected subset.
    pub max_features: usize,
    /// Run backward elimination after forward steps.
    pub dual_pass: bool,
    /// A feature is eliminated when removing it lowers the eigenvalue by
    /// less than this fraction of the current eigenvalue.
    pub elimination_fraction: f64,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            ridge: 1e-6,
            max_features: 10,
            dual_pass: false,
            elimination_fraction: 0.05,
        }
    }
}

impl ScatterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma must be positive"));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::invalid("ridge must be nonnegative"));
        }
        if self.max_features == 0 {
            return Err(Error::invalid("max_features must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.elimination_fraction) {
            return Err(Error::invalid("elimination_fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Selected subset together with the recycled inverse of its restricted
/// within-class scatter.
#[derive(Clone, Debug)]
pub struct ScatterState {
    pub selected: Vec<usize>,
    pub inv_sw: DMatrix<f64>,
    pub b_restricted: Vec<f64>,
    pub eigenvalue: f64,
}

impl ScatterState {
    pub fn empty() -> Self {
        Self {
            selected: Vec::new(),
            inv_sw: DMatrix::zeros(0, 0),
            b_restricted: Vec::new(),
            eigenvalue: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    fn contains(&self, feature: usize) -> bool {
        self.selected.contains(&feature)
    }
}

/// Class statistics of a response matrix under optional sample weights.
///
/// With weights `u` (summing to one) every sample counts with multiplicity
/// `N * u_i`, so uniform weights reproduce the unweighted scatter exactly in
/// scale.
pub struct ScatterContext<'a> {
    rm: &'a ResponseMatrix,
    cfg: ScatterConfig,
    /// Per-sample factor in the within-class sum: multiplicity, times gamma
    /// for negatives.
    within_coef: Vec<f64>,
    mass_pos: f64,
    mass_neg: f64,
    sum_pos: Vec<f64>,
    sum_neg: Vec<f64>,
    b: Vec<f64>,
}

impl<'a> ScatterContext<'a> {
    pub fn new(
        rm: &'a ResponseMatrix,
        cfg: &ScatterConfig,
        weights: Option<&SampleWeights>,
    ) -> Result<Self> {
        cfg.validate()?;
        let n = rm.n_samples();
        let mult: Vec<f64> = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: w.len(),
                    });
                }
                w.as_slice().iter().map(|&u| u * n as f64).collect()
            }
            None => vec![1.0; n],
        };
        let labels = rm.labels();
        let mut mass_pos = 0.0;
        let mut mass_neg = 0.0;
        for (&m, &y) in mult.iter().zip(labels) {
            if y > 0 {
                mass_pos += m;
            } else {
                mass_neg += m;
            }
        }
        if !(mass_pos > 0.0 && mass_neg > 0.0) {
            return Err(Error::DegenerateClasses);
        }
        let within_coef: Vec<f64> = mult
            .iter()
            .zip(labels)
            .map(|(&m, &y)| if y > 0 { m } else { cfg.gamma * m })
            .collect();

        let sums = par::map_range(rm.n_features(), |j| {
            let mut sp = 0.0;
            let mut sn = 0.0;
            for ((&x, &m), &y) in rm.column(j).iter().zip(&mult).zip(labels) {
                if y > 0 {
                    sp += m * f64::from(x);
                } else {
                    sn += m * f64::from(x);
                }
            }
            (sp, sn)
        });
        let (sum_pos, sum_neg): (Vec<f64>, Vec<f64>) = sums.into_iter().unzip();
        let scale = (mass_pos * mass_neg / (mass_pos + mass_neg)).sqrt();
        let b = sum_pos
            .iter()
            .zip(&sum_neg)
            .map(|(&sp, &sn)| scale * (sp / mass_pos - sn / mass_neg))
            .collect();

        Ok(Self {
            rm,
            cfg: *cfg,
            within_coef,
            mass_pos,
            mass_neg,
            sum_pos,
            sum_neg,
            b,
        })
    }

    pub fn config(&self) -> &ScatterConfig {
        &self.cfg
    }

    pub fn responses(&self) -> &ResponseMatrix {
        self.rm
    }

    /// Rank-one factor of the between-class scatter.
    pub fn between_class(&self) -> &[f64] {
        &self.b
    }

    /// One entry of the gamma-weighted within-class scatter (ridge on the
    /// diagonal).
    pub fn within(&self, i: usize, j: usize) -> f64 {
        let ci = self.rm.column(i);
        let cj = self.rm.column(j);
        let mut raw = 0.0;
        for ((&a, &b), &c) in ci.iter().zip(cj).zip(&self.within_coef) {
            raw += c * f64::from(a * b);
        }
        let pos = self.sum_pos[i] * self.sum_pos[j] / self.mass_pos;
        let neg = self.sum_neg[i] * self.sum_neg[j] / self.mass_neg;
        let mut value = raw - pos - self.cfg.gamma * neg;
        if i == j {
            value += self.cfg.ridge;
        }
        value
    }

    /// Restricted within-class scatter over `features`.
    pub fn restricted_within(&self, features: &[usize]) -> DMatrix<f64> {
        let k = features.len();
        let mut s = DMatrix::zeros(k, k);
        for a in 0..k {
            for c in a..k {
                let v = self.within(features[a], features[c]);
                s[(a, c)] = v;
                s[(c, a)] = v;
            }
        }
        s
    }

    /// State for an explicit subset, inverted directly.
    pub fn state_for(&self, features: &[usize]) -> Result<ScatterState> {
        let s = self.restricted_within(features);
        let inv = match s.clone().cholesky() {
            Some(ch) => ch.inverse(),
            None => s
                .try_inverse()
                .ok_or(Error::SingularAugmentation(*features.last().unwrap_or(&0)))?,
        };
        let b: Vec<f64> = features.iter().map(|&j| self.b[j]).collect();
        let bv = DVector::from_column_slice(&b);
        let eigenvalue = (bv.transpose() * &inv * &bv)[(0, 0)];
        Ok(ScatterState {
            selected: features.to_vec(),
            inv_sw: inv,
            b_restricted: b,
            eigenvalue,
        })
    }

    /// Cross-scatter column `S_w(l, i)` for the current subset.
    pub fn cross_column(&self, state: &ScatterState, i: usize) -> Vec<f64> {
        state.selected.iter().map(|&j| self.within(j, i)).collect()
    }

    /// Eigenvalue for `l ∪ {i}` given the cached cross column, or `None` when
    /// the augmentation is singular.
    fn score_with_cross(&self, state: &ScatterState, i: usize, cross: &[f64]) -> Option<f64> {
        let (u, denom) = self.schur(state, i, cross)?;
        let ub: f64 = u.iter().zip(&state.b_restricted).map(|(a, b)| a * b).sum();
        let r = self.b[i] - ub;
        Some(state.eigenvalue + r * r / denom)
    }

    fn schur(&self, state: &ScatterState, i: usize, cross: &[f64]) -> Option<(Vec<f64>, f64)> {
        let k = state.len();
        let sii = self.within(i, i);
        let mut u = vec![0.0; k];
        for (r, ur) in u.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (c, &x) in cross.iter().enumerate() {
                acc += state.inv_sw[(r, c)] * x;
            }
            *ur = acc;
        }
        let denom = sii - cross.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        if !(denom > SINGULAR_TOL * sii.abs().max(1.0)) {
            return None;
        }
        Some((u, denom))
    }

    /// Closed-form eigenvalue for `l ∪ {i}` without mutating `state`.
    pub fn candidate_eigenvalue(&self, state: &ScatterState, i: usize) -> Option<f64> {
        if state.contains(i) {
            return None;
        }
        let cross = self.cross_column(state, i);
        self.score_with_cross(state, i, &cross)
    }

    /// Extends the subset by `i`, recycling the inverse through the block
    /// update.
    pub fn augment(&self, state: &ScatterState, i: usize) -> Result<ScatterState> {
        if state.contains(i) {
            return Err(Error::invalid(format!("feature {i} already selected")));
        }
        let cross = self.cross_column(state, i);
        self.augment_with_cross(state, i, &cross)
    }

    fn augment_with_cross(
        &self,
        state: &ScatterState,
        i: usize,
        cross: &[f64],
    ) -> Result<ScatterState> {
        let (u, denom) = self
            .schur(state, i, cross)
            .ok_or(Error::SingularAugmentation(i))?;
        let sii = self.within(i, i).abs().max(1.0);
        let inv_norm = if state.len() > 0 { state.inv_sw.amax() } else { 0.0 };
        if inv_norm * sii * sii * f64::EPSILON > REFRESH_TOL * denom {
            let mut selected = state.selected.clone();
            selected.push(i);
            return self.state_for(&selected);
        }
        let a = 1.0 / denom;
        let k = state.len();
        let mut inv = DMatrix::zeros(k + 1, k + 1);
        for r in 0..k {
            for c in 0..k {
                inv[(r, c)] = state.inv_sw[(r, c)] + a * u[r] * u[c];
            }
            inv[(r, k)] = -a * u[r];
            inv[(k, r)] = -a * u[r];
        }
        inv[(k, k)] = a;
        let ub: f64 = u.iter().zip(&state.b_restricted).map(|(x, y)| x * y).sum();
        let resid = self.b[i] - ub;
        let mut selected = state.selected.clone();
        selected.push(i);
        let mut b_restricted = state.b_restricted.clone();
        b_restricted.push(self.b[i]);
        Ok(ScatterState {
            selected,
            inv_sw: inv,
            b_restricted,
            eigenvalue: state.eigenvalue + resid * resid * a,
        })
    }

    /// Repeatedly drops the selected feature whose removal costs the least
    /// eigenvalue, while that cost is below `elimination_fraction * λ`.
    pub fn backward_eliminate(&self, state: &ScatterState) -> Result<ScatterState> {
        let mut current = state.clone();
        while let Some(pos) = self.elimination_candidate(&current) {
            let mut keep = current.selected.clone();
            keep.remove(pos);
            current = self.state_for(&keep)?;
        }
        Ok(current)
    }

    /// Position (in selection order) of the feature backward elimination
    /// would remove next, if any qualifies.
    fn elimination_candidate(&self, state: &ScatterState) -> Option<usize> {
        let k = state.len();
        if k < 2 {
            return None;
        }
        let b = DVector::from_column_slice(&state.b_restricted);
        let v = &state.inv_sw * b;
        let mut best: Option<(usize, f64)> = None;
        for p in 0..k {
            let d = v[p] * v[p] / state.inv_sw[(p, p)];
            // Ties go to the later-selected feature.
            if best.is_none_or(|(_, bd)| d <= bd) {
                best = Some((p, d));
            }
        }
        let (pos, decrease) = best?;
        (decrease < self.cfg.elimination_fraction * state.eigenvalue).then_some(pos)
    }
}

/// Rank-one between-class factor `b` with `S_b = b b^T`.
pub fn between_class_vector(
    rm: &ResponseMatrix,
    weights: Option<&SampleWeights>,
) -> Result<Vec<f64>> {
    let cfg = ScatterConfig::default();
    Ok(ScatterContext::new(rm, &cfg, weights)?.b)
}

/// One entry of the within-class scatter.
pub fn within_class_entry(
    rm: &ResponseMatrix,
    cfg: &ScatterConfig,
    i: usize,
    j: usize,
    weights: Option<&SampleWeights>,
) -> Result<f64> {
    if i >= rm.n_features() || j >= rm.n_features() {
        return Err(Error::invalid("feature index out of range"));
    }
    Ok(ScatterContext::new(rm, cfg, weights)?.within(i, j))
}

/// Incremental forward selection with cached cross-scatter columns.
pub struct ForwardSelector<'a> {
    ctx: ScatterContext<'a>,
    state: ScatterState,
    cross: Vec<Vec<f64>>,
    excluded: Vec<bool>,
}

impl<'a> ForwardSelector<'a> {
    pub fn new(ctx: ScatterContext<'a>) -> Self {
        let m = ctx.rm.n_features();
        Self {
            ctx,
            state: ScatterState::empty(),
            cross: vec![Vec::new(); m],
            excluded: vec![false; m],
        }
    }

    pub fn context(&self) -> &ScatterContext<'a> {
        &self.ctx
    }

    pub fn state(&self) -> &ScatterState {
        &self.state
    }

    /// Prevents `feature` from being chosen by later steps.
    pub fn exclude(&mut self, feature: usize) {
        self.excluded[feature] = true;
    }

    /// Scores of every candidate for the next step; `None` for selected,
    /// excluded or singular candidates.
    pub fn candidate_scores(&self) -> Vec<Option<f64>> {
        let state = &self.state;
        par::map_range(self.cross.len(), |j| {
            if self.excluded[j] || state.contains(j) {
                None
            } else {
                self.ctx.score_with_cross(state, j, &self.cross[j])
            }
        })
    }

    /// Adds the best admissible candidate. Returns its index, or `None` when
    /// no candidate is admissible.
    pub fn step(&mut self) -> Result<Option<usize>> {
        let scores = self.candidate_scores();
        let mut best: Option<(usize, f64)> = None;
        for (j, s) in scores.into_iter().enumerate() {
            if let Some(s) = s {
                if best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((j, s));
                }
            }
        }
        let Some((j, _)) = best else {
            return Ok(None);
        };
        self.add(j)?;
        Ok(Some(j))
    }

    /// Adds a specific feature (used when a caller picks the candidate).
    pub fn add(&mut self, j: usize) -> Result<()> {
        self.state = self.ctx.augment_with_cross(&self.state, j, &self.cross[j])?;
        let ctx = &self.ctx;
        let mut cross = std::mem::take(&mut self.cross);
        par::for_each_chunk_mut(&mut cross, 1, |c, col| {
            col[0].push(ctx.within(j, c));
        });
        self.cross = cross;
        Ok(())
    }

    /// Runs backward elimination on the current state; removed features are
    /// excluded from later steps. Returns the removed features.
    pub fn eliminate(&mut self) -> Result<Vec<usize>> {
        let mut removed = Vec::new();
        while let Some(pos) = self.ctx.elimination_candidate(&self.state) {
            let mut keep = self.state.selected.clone();
            let gone = keep.remove(pos);
            self.state = self.ctx.state_for(&keep)?;
            for col in &mut self.cross {
                col.remove(pos);
            }
            self.excluded[gone] = true;
            removed.push(gone);
        }
        Ok(removed)
    }

    pub fn into_state(self) -> ScatterState {
        self.state
    }
}

/// Greedy forward (optionally forward + backward) selection of up to
/// `cfg.max_features` columns maximizing the two-class eigenvalue.
pub fn forward_select(
    rm: &ResponseMatrix,
    cfg: &ScatterConfig,
    weights: Option<&SampleWeights>,
) -> Result<ScatterState> {
    if cfg.max_features > rm.n_features() {
        return Err(Error::invalid("max_features exceeds candidate count"));
    }
    let ctx = ScatterContext::new(rm, cfg, weights)?;
    let mut sel = ForwardSelector::new(ctx);
    // Each elimination permanently excludes a feature, so this bounds the loop.
    let budget = cfg.max_features + rm.n_features();
    for _ in 0..budget {
        if sel.state().len() >= cfg.max_features {
            break;
        }
        match sel.step()? {
            Some(_) => {
                if cfg.dual_pass {
                    sel.eliminate()?;
                }
            }
            None if sel.state().is_empty() => return Err(Error::NoSeparatingFeature),
            None => break,
        }
    }
    Ok(sel.into_state())
}

/// Backward elimination on an existing state.
pub fn backward_eliminate(
    state: &ScatterState,
    rm: &ResponseMatrix,
    cfg: &ScatterConfig,
    weights: Option<&SampleWeights>,
) -> Result<ScatterState> {
    ScatterContext::new(rm, cfg, weights)?.backward_eliminate(state)
}

/// Unit-norm LDA direction `inv_sw * b` over the selected subset.
pub fn lda_weights(state: &ScatterState) -> Result<Vec<f64>> {
    if state.b_restricted.iter().all(|&b| b == 0.0) {
        return Err(Error::ZeroDirection);
    }
    let b = DVector::from_column_slice(&state.b_restricted);
    let w = &state.inv_sw * b;
    let norm = w.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroDirection);
    }
    Ok(w.iter().map(|&x| x / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rm(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ResponseMatrix {
        let mut labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.4) { 1 } else { -1 }).collect();
        labels[0] = 1;
        labels[1] = -1;
        let data = (0..n * m)
            .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
            .collect();
        ResponseMatrix::from_feature_major(data, labels).unwrap()
    }

    #[test]
    fn rejects_single_class() {
        let err = ResponseMatrix::from_feature_major(vec![1, -1], vec![1, 1]).unwrap_err();
        assert!(matches!(err, Error::DegenerateClasses));
    }

    #[test]
    fn identical_class_means_give_zero_b() {
        // Both classes have column mean 0.
        let rm = ResponseMatrix::from_columns(&[vec![1, -1, 1, -1]], vec![1, 1, -1, -1]).unwrap();
        let b = between_class_vector(&rm, None).unwrap();
        assert_eq!(b, vec![0.0]);
    }

    #[test]
    fn perfect_feature_b_is_sqrt_n() {
        let n = 10;
        let labels: Vec<i8> = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
        let rm = ResponseMatrix::from_columns(&[labels.clone()], labels).unwrap();
        let b = between_class_vector(&rm, None).unwrap();
        assert!((b[0] - (n as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_column_within_is_ridge() {
        let rm = ResponseMatrix::from_columns(&[vec![1, 1, 1, 1]], vec![1, -1, 1, -1]).unwrap();
        let cfg = ScatterConfig { ridge: 0.25, ..Default::default() };
        assert_eq!(within_class_entry(&rm, &cfg, 0, 0, None).unwrap(), 0.25);
    }

    #[test]
    fn within_entry_gamma_two_hand_dataset() {
        // pos: (1,1), (-1,1); neg: (1,-1), (1,1).
        // pos means (0, 1): centered (1,0), (-1,0) -> S_pos = [[2,0],[0,0]].
        // neg means (1, 0): centered (0,-1), (0,1) -> S_neg = [[0,0],[0,2]].
        let rm = ResponseMatrix::from_columns(&[vec![1, -1, 1, 1], vec![1, 1, -1, 1]], vec![1, 1, -1, -1])
            .unwrap();
        let cfg = ScatterConfig { gamma: 2.0, ridge: 0.0, ..Default::default() };
        assert_eq!(within_class_entry(&rm, &cfg, 0, 0, None).unwrap(), 2.0);
        assert_eq!(within_class_entry(&rm, &cfg, 1, 1, None).unwrap(), 4.0);
        assert_eq!(within_class_entry(&rm, &cfg, 0, 1, None).unwrap(), 0.0);
    }

    #[test]
    fn within_entry_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rm = random_rm(&mut rng, 40, 6);
        let cfg = ScatterConfig { gamma: 1.7, ..Default::default() };
        let ctx = ScatterContext::new(&rm, &cfg, None).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(ctx.within(i, j), ctx.within(j, i));
            }
        }
    }

    #[test]
    fn base_augment_is_reciprocal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rm = random_rm(&mut rng, 30, 4);
        let ctx = ScatterContext::new(&rm, &ScatterConfig::default(), None).unwrap();
        let s = ctx.augment(&ScatterState::empty(), 2).unwrap();
        assert_eq!(s.selected, vec![2]);
        assert!((s.inv_sw[(0, 0)] - 1.0 / ctx.within(2, 2)).abs() < 1e-15);
    }

    #[test]
    fn ridge_only_subsets_match_direct_inverse() {
        // Four samples: within-class scatter has rank two, so the last two
        // augmentations are held up by the ridge alone.
        let data = vec![-1, -1, 1, -1, -1, -1, 1, 1, -1, 1, -1, -1, -1, 1, -1, 1];
        let rm = ResponseMatrix::from_feature_major(data, vec![1, -1, -1, 1]).unwrap();
        let ctx = ScatterContext::new(&rm, &ScatterConfig::default(), None).unwrap();
        let mut s = ScatterState::empty();
        for i in [0, 2, 1, 3] {
            s = ctx.augment(&s, i).unwrap();
        }
        let direct = ctx.state_for(&s.selected).unwrap();
        assert!((&s.inv_sw - &direct.inv_sw).amax() <= 1e-8 * direct.inv_sw.amax());
        assert!((s.eigenvalue - direct.eigenvalue).abs() <= 1e-8 * direct.eigenvalue);
    }

    #[test]
    fn duplicate_column_is_singular_without_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = random_rm(&mut rng, 30, 1);
        let col = base.column(0).to_vec();
        let rm = ResponseMatrix::from_columns(&[col.clone(), col], base.labels().to_vec()).unwrap();
        let cfg = ScatterConfig { ridge: 0.0, ..Default::default() };
        let ctx = ScatterContext::new(&rm, &cfg, None).unwrap();
        let s = ctx.augment(&ScatterState::empty(), 0).unwrap();
        assert!(matches!(ctx.augment(&s, 1), Err(Error::SingularAugmentation(1))));
        assert_eq!(ctx.candidate_eigenvalue(&s, 1), None);
    }

    #[test]
    fn duplicate_best_column_prefers_lower_index() {
        let labels: Vec<i8> = vec![1, 1, 1, -1, -1, -1, -1];
        let good = vec![1, 1, -1, -1, -1, -1, 1];
        let noise = vec![1, -1, 1, -1, 1, -1, 1];
        let rm = ResponseMatrix::from_columns(&[noise, good.clone(), good], labels).unwrap();
        let cfg = ScatterConfig { max_features: 1, ..Default::default() };
        let s = forward_select(&rm, &cfg, None).unwrap();
        assert_eq!(s.selected, vec![1]);
    }

    #[test]
    fn identity_scatter_eigenvalue_is_squared_norm() {
        // Zero-variance columns: S_w reduces to ridge * I.
        let labels = vec![1, 1, -1, -1];
        let c0 = vec![1, 1, -1, -1];
        let c1 = vec![-1, -1, 1, 1];
        let rm = ResponseMatrix::from_columns(&[c0, c1], labels).unwrap();
        let cfg = ScatterConfig { ridge: 1.0, ..Default::default() };
        let ctx = ScatterContext::new(&rm, &cfg, None).unwrap();
        let s = ctx.augment(&ScatterState::empty(), 0).unwrap();
        let lam = ctx.candidate_eigenvalue(&s, 1).unwrap();
        let b = ctx.between_class();
        assert!((lam - (b[0] * b[0] + b[1] * b[1])).abs() < 1e-12);
    }

    #[test]
    fn lda_weights_single_feature_is_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rm = random_rm(&mut rng, 50, 3);
        let cfg = ScatterConfig { max_features: 1, ..Default::default() };
        let s = forward_select(&rm, &cfg, None).unwrap();
        let w = lda_weights(&s).unwrap();
        assert_eq!(w.len(), 1);
        assert!((w[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lda_weights_scale_invariant_in_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rm = random_rm(&mut rng, 60, 5);
        let cfg = ScatterConfig { max_features: 3, ..Default::default() };
        let s = forward_select(&rm, &cfg, None).unwrap();
        let mut scaled = s.clone();
        scaled.b_restricted.iter_mut().for_each(|b| *b *= 7.5);
        let w1 = lda_weights(&s).unwrap();
        let w2 = lda_weights(&scaled).unwrap();
        for (a, b) in w1.iter().zip(&w2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_direction_rejected() {
        let s = ScatterState {
            selected: vec![0],
            inv_sw: DMatrix::identity(1, 1),
            b_restricted: vec![0.0],
            eigenvalue: 0.0,
        };
        assert!(matches!(lda_weights(&s), Err(Error::ZeroDirection)));
    }

    #[test]
    fn essential_features_survive_elimination() {
        // Two independent perfect-ish features with identity-like scatter:
        // removing either halves the eigenvalue.
        let labels = vec![1, 1, -1, -1];
        let c0 = vec![1, 1, -1, -1];
        let c1 = vec![1, 1, -1, -1];
        let rm = ResponseMatrix::from_columns(&[c0, c1], labels).unwrap();
        let cfg = ScatterConfig { ridge: 1.0, ..Default::default() };
        let ctx = ScatterContext::new(&rm, &cfg, None).unwrap();
        let s = ctx.state_for(&[0, 1]).unwrap();
        let out = ctx.backward_eliminate(&s).unwrap();
        assert_eq!(out.selected, vec![0, 1]);
    }
}
