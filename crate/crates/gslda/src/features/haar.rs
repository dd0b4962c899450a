//! Haar-like rectangle features.
//!
//! A feature is stored by its full footprint `(x, y, w, h)` inside the base
//! window; the kind fixes how the footprint splits into white and black
//! sub-rectangles. The response is `mean(white) - mean(black)`, which keeps
//! values comparable across detection scales and makes any constant image
//! evaluate to exactly zero.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::IntegralImage;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaarKind {
    /// White left half, black right half.
    TwoRectHorizontal,
    /// White top half, black bottom half.
    TwoRectVertical,
    /// White outer thirds, black middle third (left to right).
    ThreeRectHorizontal,
    /// White outer thirds, black middle third (top to bottom).
    ThreeRectVertical,
    /// White top-left and bottom-right quadrants.
    FourRectDiagonal,
}

impl HaarKind {
    pub const ALL: [HaarKind; 5] = [
        HaarKind::TwoRectHorizontal,
        HaarKind::TwoRectVertical,
        HaarKind::ThreeRectHorizontal,
        HaarKind::ThreeRectVertical,
        HaarKind::FourRectDiagonal,
    ];

    /// Number of sub-rectangle columns and rows.
    pub fn grid(self) -> (usize, usize) {
        match self {
            HaarKind::TwoRectHorizontal => (2, 1),
            HaarKind::TwoRectVertical => (1, 2),
            HaarKind::ThreeRectHorizontal => (3, 1),
            HaarKind::ThreeRectVertical => (1, 3),
            HaarKind::FourRectDiagonal => (2, 2),
        }
    }

    fn is_white(self, col: usize, row: usize) -> bool {
        match self {
            HaarKind::TwoRectHorizontal => col == 0,
            HaarKind::TwoRectVertical => row == 0,
            HaarKind::ThreeRectHorizontal => col != 1,
            HaarKind::ThreeRectVertical => row != 1,
            HaarKind::FourRectDiagonal => col == row,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaarFeature {
    pub kind: HaarKind,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub base_window: usize,
}

impl HaarFeature {
    pub fn new(kind: HaarKind, x: usize, y: usize, w: usize, h: usize, base_window: usize) -> Result<Self> {
        let f = Self { kind, x, y, w, h, base_window };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let (gx, gy) = self.kind.grid();
        if self.w == 0 || self.h == 0 || self.w % gx != 0 || self.h % gy != 0 {
            return Err(Error::invalid(format!("{self:?}: size does not subdivide")));
        }
        if self.x + self.w > self.base_window || self.y + self.h > self.base_window {
            return Err(Error::invalid(format!("{self:?}: outside base window")));
        }
        Ok(())
    }

    /// Sub-rectangles `(x, y, w, h, white)` in base-window coordinates.
    pub fn rects(&self) -> Vec<(usize, usize, usize, usize, bool)> {
        let (gx, gy) = self.kind.grid();
        let (cw, ch) = (self.w / gx, self.h / gy);
        let mut out = Vec::with_capacity(gx * gy);
        for row in 0..gy {
            for col in 0..gx {
                out.push((
                    self.x + col * cw,
                    self.y + row * ch,
                    cw,
                    ch,
                    self.kind.is_white(col, row),
                ));
            }
        }
        out
    }

    /// Geometry at `scale`, each corner rounded to the nearest pixel.
    pub fn scaled(&self, scale: f64) -> ScaledHaar {
        let r = |v: usize| (v as f64 * scale).round() as usize;
        let mut rects = Vec::with_capacity(4);
        let mut area_white = 0i64;
        let mut area_black = 0i64;
        for (x, y, w, h, white) in self.rects() {
            let (x0, y0, x1, y1) = (r(x), r(y), r(x + w), r(y + h));
            let area = ((x1 - x0) * (y1 - y0)) as i64;
            if white {
                area_white += area;
            } else {
                area_black += area;
            }
            rects.push(ScaledRect { x0, y0, x1, y1, white });
        }
        ScaledHaar {
            rects,
            area_white: area_white as f64,
            area_black: area_black as f64,
            extent_x: r(self.x + self.w),
            extent_y: r(self.y + self.h),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ScaledRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub white: bool,
}

/// A feature's pixel geometry at one scale, ready for repeated evaluation.
#[derive(Clone, Debug)]
pub struct ScaledHaar {
    pub rects: Vec<ScaledRect>,
    pub area_white: f64,
    pub area_black: f64,
    extent_x: usize,
    extent_y: usize,
}

impl ScaledHaar {
    /// Evaluates at window offset `(ox, oy)`; the caller guarantees the
    /// footprint is inside the image.
    #[inline]
    pub fn eval_unchecked(&self, ii: &IntegralImage, ox: usize, oy: usize) -> f64 {
        let mut white = 0i64;
        let mut black = 0i64;
        for r in &self.rects {
            let s = ii.sum(ox + r.x0, oy + r.y0, ox + r.x1, oy + r.y1);
            if r.white {
                white += s;
            } else {
                black += s;
            }
        }
        white as f64 / self.area_white - black as f64 / self.area_black
    }

    pub fn fits(&self, ii: &IntegralImage, ox: usize, oy: usize) -> bool {
        ox + self.extent_x <= ii.width() && oy + self.extent_y <= ii.height()
    }
}

/// Evaluates `f` on the window at `(ox, oy)` scaled by `scale`.
pub fn eval_haar(f: &HaarFeature, ii: &IntegralImage, ox: usize, oy: usize, scale: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::invalid("scale must be positive"));
    }
    let s = f.scaled(scale);
    if s.area_white == 0.0 || s.area_black == 0.0 {
        return Err(Error::invalid("scaled feature has an empty region"));
    }
    if !s.fits(ii, ox, oy) {
        return Err(Error::OutOfBounds);
    }
    Ok(s.eval_unchecked(ii, ox, oy))
}

/// Every placement of the given kinds, ordered by kind then `(y, x, h, w)`.
pub fn enumerate_kinds(base_window: usize, stride: usize, min_size: usize, kinds: &[HaarKind]) -> Vec<HaarFeature> {
    let stride = stride.max(1);
    let min_size = min_size.max(1);
    let mut out = Vec::new();
    for &kind in kinds {
        let (gx, gy) = kind.grid();
        for y in (0..base_window).step_by(stride) {
            for x in (0..base_window).step_by(stride) {
                for h in (min_size..=base_window - y).filter(|h| h % gy == 0) {
                    for w in (min_size..=base_window - x).filter(|w| w % gx == 0) {
                        out.push(HaarFeature { kind, x, y, w, h, base_window });
                    }
                }
            }
        }
    }
    out
}

/// All five kinds.
pub fn enumerate_haar(base_window: usize, stride: usize, min_size: usize) -> Vec<HaarFeature> {
    enumerate_kinds(base_window, stride, min_size, &HaarKind::ALL)
}

/// Enumeration parameters plus optional seeded subsampling of the
/// over-complete set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HaarPoolSpec {
    pub base_window: usize,
    pub stride: usize,
    pub min_size: usize,
    pub limit: Option<usize>,
    pub seed: u64,
}

impl Default for HaarPoolSpec {
    fn default() -> Self {
        Self {
            base_window: 24,
            stride: 1,
            min_size: 1,
            limit: None,
            seed: 0,
        }
    }
}

impl HaarPoolSpec {
    /// Generates the pool; subsampling keeps enumeration order.
    pub fn generate(&self) -> Result<Vec<HaarFeature>> {
        if self.base_window == 0 || self.min_size > self.base_window {
            return Err(Error::invalid("need base_window >= min_size >= 1"));
        }
        let all = enumerate_haar(self.base_window, self.stride, self.min_size);
        match self.limit {
            Some(limit) if limit < all.len() => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut idx = sample(&mut rng, all.len(), limit).into_vec();
                idx.sort_unstable();
                Ok(idx.into_iter().map(|i| all[i]).collect())
            }
            _ => Ok(all),
        }
    }
}
