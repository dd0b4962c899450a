//! Projection of multi-dimensional features onto one dimension by two-class
//! LDA, so that scalar decision stumps can be trained on them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par;
use crate::weak::FeatureValues;

/// Unit-norm LDA direction for one multi-dimensional feature. `bias` places
/// the midpoint of the projected class means at zero.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProjectionVector {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ProjectionVector {
    pub fn project(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum()
    }
}

/// Relative ridge on the within-class scatter diagonal.
const RIDGE: f64 = 1e-9;

/// Fits the LDA direction on an `N x d` sample matrix and returns it with
/// the `N` projected values.
pub fn project_multidim(features: &DMatrix<f64>, labels: &[i8]) -> Result<(ProjectionVector, Vec<f64>)> {
    let (n, d) = features.shape();
    if d == 0 {
        return Err(Error::invalid("feature dimension must be at least 1"));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: labels.len() });
    }
    let pos: Vec<usize> = (0..n).filter(|&i| labels[i] > 0).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| labels[i] <= 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateClasses);
    }
    let mean = |idx: &[usize]| {
        let mut m = DVector::zeros(d);
        for &i in idx {
            m += features.row(i).transpose();
        }
        m / idx.len() as f64
    };
    let mu_p = mean(&pos);
    let mu_n = mean(&neg);
    let mut sw = DMatrix::zeros(d, d);
    for (idx, mu) in [(&pos, &mu_p), (&neg, &mu_n)] {
        for &i in idx.iter() {
            let c = features.row(i).transpose() - mu;
            sw += &c * c.transpose();
        }
    }
    let scale = (sw.trace() / d as f64).max(1.0);
    for k in 0..d {
        sw[(k, k)] += RIDGE * scale;
    }
    let diff = &mu_p - &mu_n;
    let dir = match sw.clone().cholesky() {
        Some(ch) => ch.solve(&diff),
        None => sw.lu().solve(&diff).ok_or(Error::ZeroDirection)?,
    };
    let norm = dir.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroDirection);
    }
    let w = dir / norm;
    let values: Vec<f64> = (0..n).map(|i| features.row(i).transpose().dot(&w)).collect();
    let bias = -w.dot(&(&mu_p + &mu_n)) / 2.0;
    Ok((
        ProjectionVector {
            dim: d,
            weights: w.iter().copied().collect(),
            bias,
        },
        values,
    ))
}

/// Projects every multi-dimensional feature in `bank` (one `N x d_j` matrix
/// each) and stacks the projected values as scalar feature rows ready for
/// stump training.
pub fn project_feature_bank(
    bank: &[DMatrix<f64>],
    labels: &[i8],
) -> Result<(Vec<ProjectionVector>, FeatureValues)> {
    let fitted = par::map_slice(bank, |m| project_multidim(m, labels));
    let mut projections = Vec::with_capacity(bank.len());
    let mut rows = Vec::with_capacity(bank.len());
    for r in fitted {
        let (p, v) = r?;
        projections.push(p);
        rows.push(v);
    }
    Ok((projections, FeatureValues::from_rows(&rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn fisher_ratio(values: &[f64], labels: &[i8]) -> f64 {
        let stats = |sign: i8| {
            let v: Vec<f64> = values.iter().zip(labels).filter(|(_, &y)| y == sign).map(|(&x, _)| x).collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
            (m, var)
        };
        let (mp, vp) = stats(1);
        let (mn, vn) = stats(-1);
        (mp - mn).powi(2) / (vp + vn)
    }

    fn gaussian_classes(seed: u64, n: usize, d: usize, shift: f64) -> (DMatrix<f64>, Vec<i8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let labels: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let m = DMatrix::from_fn(n, d, |i, j| {
            let base = normal.sample(&mut rng);
            if j == 0 && labels[i] > 0 { base + shift } else { base }
        });
        (m, labels)
    }

    #[test]
    fn one_dimensional_is_sign_flip() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, -1.0, 0.5]);
        let (p, v) = project_multidim(&x, &[1, 1, -1, -1]).unwrap();
        assert!((p.weights[0].abs() - 1.0).abs() < 1e-15);
        for (a, b) in v.iter().zip(x.iter()) {
            assert!((a - p.weights[0] * b).abs() < 1e-15);
        }
    }

    #[test]
    fn separated_axis_dominates() {
        let (x, y) = gaussian_classes(3, 2000, 4, 4.0);
        let (p, _) = project_multidim(&x, &y).unwrap();
        assert!(p.weights[0].abs() > 0.99);
    }

    #[test]
    fn projection_beats_every_axis() {
        let (x, y) = gaussian_classes(4, 600, 5, 1.5);
        let (_, v) = project_multidim(&x, &y).unwrap();
        let best = fisher_ratio(&v, &y);
        for j in 0..5 {
            let axis: Vec<f64> = x.column(j).iter().copied().collect();
            assert!(best >= fisher_ratio(&axis, &y) - 1e-12);
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        assert!(matches!(project_multidim(&x, &[1, 1]), Err(Error::DegenerateClasses)));
    }

    #[test]
    fn bank_rows_match_individual_projections() {
        let (a, y) = gaussian_classes(5, 50, 3, 1.0);
        let (b, _) = gaussian_classes(6, 50, 2, 2.0);
        let (projs, fv) = project_feature_bank(&[a.clone(), b], &y).unwrap();
        assert_eq!(projs.len(), 2);
        let (_, va) = project_multidim(&a, &y).unwrap();
        assert_eq!(fv.row(0), va.as_slice());
    }
}
