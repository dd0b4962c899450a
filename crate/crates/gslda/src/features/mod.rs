//! Integral images, Haar-like rectangle features and multi-dimensional
//! feature projection.

mod haar;
mod image;
mod integral;
mod projection;

pub use haar::{enumerate_haar, enumerate_kinds, eval_haar, HaarFeature, HaarKind, HaarPoolSpec, ScaledHaar, ScaledRect};
pub use image::GrayImage;
pub use integral::{build_integral, IntegralImage};
pub use projection::{project_feature_bank, project_multidim, ProjectionVector};

use crate::error::Result;
use crate::par;
use crate::weak::FeatureValues;

/// Evaluates every pool feature on every base-window patch (scale 1,
/// offset 0). Output is feature-major.
pub fn patch_feature_values(pool: &[HaarFeature], patches: &[GrayImage]) -> Result<FeatureValues> {
    let scaled: Vec<ScaledHaar> = pool.iter().map(|f| f.scaled(1.0)).collect();
    let per_patch = par::map_slice(patches, |p| -> Result<Vec<f64>> {
        let ii = build_integral(p)?;
        scaled
            .iter()
            .map(|s| {
                if s.fits(&ii, 0, 0) {
                    Ok(s.eval_unchecked(&ii, 0, 0))
                } else {
                    Err(crate::Error::OutOfBounds)
                }
            })
            .collect()
    });
    let n = patches.len();
    let m = pool.len();
    let mut values = vec![0.0; n * m];
    for (i, row) in per_patch.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            values[j * n + i] = v;
        }
    }
    FeatureValues::new(n, values)
}
