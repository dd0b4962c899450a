//! Seeded synthetic stand-in for a face corpus: "faces" are two dark dots
//! over a dark bar on a lighter patch, negatives are textured noise.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::detect::GroundTruthBox;
use crate::error::{Error, Result};
use crate::features::GrayImage;
use crate::io::{write_ground_truth, write_pgm, DatasetManifest};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Patch side; at least 8.
    pub size: usize,
    pub n_reservoir: usize,
    pub reservoir_side: usize,
    pub n_test: usize,
    pub test_side: usize,
    /// Faces planted in each test image.
    pub faces_per_test: usize,
    /// Pixel noise standard deviation.
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_pos: 1000,
            n_neg: 1000,
            size: 16,
            n_reservoir: 40,
            reservoir_side: 96,
            n_test: 10,
            test_side: 96,
            faces_per_test: 2,
            noise: 20.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size < 8 {
            return Err(Error::invalid("size must be at least 8"));
        }
        if self.n_reservoir > 0 && self.reservoir_side < self.size {
            return Err(Error::invalid("reservoir images must fit a patch"));
        }
        if self.n_test > 0 && self.test_side < 2 * self.size {
            return Err(Error::invalid("test images must be at least twice the patch size"));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::invalid("noise must be non-negative"));
        }
        Ok(())
    }
}

/// In-memory corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub positives: Vec<GrayImage>,
    pub negatives: Vec<GrayImage>,
    pub reservoir: Vec<GrayImage>,
    pub test_images: Vec<(String, GrayImage)>,
    pub truths: Vec<GroundTruthBox>,
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Float canvas that is quantized once at the end.
struct Canvas {
    w: usize,
    h: usize,
    px: Vec<f64>,
}

impl Canvas {
    fn new(w: usize, h: usize, v: f64) -> Self {
        Self { w, h, px: vec![v; w * h] }
    }

    fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, v: f64) {
        let xa = x0.max(0.0).round() as usize;
        let ya = y0.max(0.0).round() as usize;
        let xb = (x1.round().max(0.0) as usize).min(self.w);
        let yb = (y1.round().max(0.0) as usize).min(self.h);
        for y in ya..yb {
            for x in xa..xb {
                self.px[y * self.w + x] = v;
            }
        }
    }

    fn fill_disc(&mut self, cx: f64, cy: f64, r: f64, v: f64) {
        for y in 0..self.h {
            for x in 0..self.w {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= r * r {
                    self.px[y * self.w + x] = v;
                }
            }
        }
    }

    fn add_noise(&mut self, rng: &mut ChaCha8Rng, sigma: f64) {
        if sigma > 0.0 {
            let n = Normal::new(0.0, sigma).expect("finite sigma");
            for p in &mut self.px {
                *p += n.sample(rng);
            }
        }
    }

    fn into_image(self) -> GrayImage {
        GrayImage::new(self.w, self.h, self.px.into_iter().map(to_u8).collect()).expect("non-empty canvas")
    }
}

/// Draws a face into an `s x s` canvas.
fn face(rng: &mut ChaCha8Rng, s: usize, noise: f64) -> GrayImage {
    let sf = s as f64;
    let bg = rng.random_range(90.0..210.0);
    let dark = bg - rng.random_range(30.0..90.0);
    let mut c = Canvas::new(s, s, bg);
    let j = sf / 16.0;
    let (jx, jy) = (rng.random_range(-j..=j), rng.random_range(-j..=j));
    let eye_r = sf * rng.random_range(0.10..0.14);
    let eye_y = sf * 0.35 + jy;
    c.fill_disc(sf * 0.3 + jx, eye_y, eye_r, dark);
    c.fill_disc(sf * 0.7 + jx, eye_y, eye_r, dark);
    let bar_y = sf * rng.random_range(0.66..0.74) + jy;
    let half_w = sf * rng.random_range(0.18..0.24);
    c.fill_rect(sf * 0.5 - half_w + jx, bar_y, sf * 0.5 + half_w + jx, bar_y + sf * 0.1, dark + 10.0);
    c.add_noise(rng, noise);
    c.into_image()
}

/// Textured clutter: a smooth gradient with random blobs, bars and
/// stripes.
fn texture(rng: &mut ChaCha8Rng, w: usize, h: usize, noise: f64) -> GrayImage {
    let base = rng.random_range(40.0..220.0);
    let (gx, gy) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let mut c = Canvas::new(w, h, base);
    for y in 0..h {
        for x in 0..w {
            c.px[y * w + x] += gx * x as f64 * 16.0 / w as f64 + gy * y as f64 * 16.0 / h as f64;
        }
    }
    let scale = w.min(h) as f64;
    let shapes = 1 + (w * h / 256).min(40);
    for _ in 0..rng.random_range(0..=shapes) {
        let v = rng.random_range(0.0..255.0);
        let (cx, cy) = (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64));
        match rng.random_range(0..3) {
            0 => c.fill_disc(cx, cy, rng.random_range(0.05..0.25) * scale.min(32.0), v),
            1 => {
                let (bw, bh) = (rng.random_range(0.1..0.8) * scale.min(32.0), rng.random_range(0.05..0.3) * scale.min(32.0));
                c.fill_rect(cx, cy, cx + bw, cy + bh, v)
            }
            _ => {
                let period = rng.random_range(2.0..8.0);
                let amp = rng.random_range(5.0..40.0);
                let vertical = rng.random_bool(0.5);
                for y in 0..h {
                    for x in 0..w {
                        let t = if vertical { x } else { y } as f64;
                        c.px[y * w + x] += amp * (t * std::f64::consts::TAU / period).sin();
                    }
                }
            }
        }
    }
    if rng.random_bool(0.3) {
        face_part(rng, &mut c);
    }
    let sigma = noise * rng.random_range(0.5..2.0);
    c.add_noise(rng, sigma);
    c.into_image()
}

/// A lone pair of dots or a lone bar somewhere in the canvas.
fn face_part(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    let s = c.w.min(c.h).min(32) as f64;
    let x = rng.random_range(0.0..(c.w as f64 - s * 0.5).max(1.0));
    let y = rng.random_range(0.0..(c.h as f64 - s * 0.5).max(1.0));
    let v = rng.random_range(0.0..90.0);
    if rng.random_bool(0.5) {
        let r = s * rng.random_range(0.08..0.14);
        let gap = s * rng.random_range(0.25..0.5);
        c.fill_disc(x + r, y + r, r, v);
        c.fill_disc(x + r + gap, y + r, r, v);
    } else {
        c.fill_rect(x, y, x + s * rng.random_range(0.3..0.5), y + s * 0.1, v);
    }
}

fn paste(dst: &mut GrayImage, src: &GrayImage, x0: usize, y0: usize) {
    for y in 0..src.height() {
        for x in 0..src.width() {
            dst.set(x0 + x, y0 + y, src.get(x, y));
        }
    }
}

/// Generates the full corpus from `spec.seed`. Each part uses its own
/// stream so changing one count leaves the others unchanged.
pub fn synth_corpus(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let stream = |k: u64| ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k));
    let mut rng = stream(1);
    let positives = (0..spec.n_pos).map(|_| face(&mut rng, spec.size, spec.noise)).collect();
    let mut rng = stream(2);
    let negatives = (0..spec.n_neg).map(|_| texture(&mut rng, spec.size, spec.size, spec.noise)).collect();
    let mut rng = stream(3);
    let reservoir = (0..spec.n_reservoir)
        .map(|_| texture(&mut rng, spec.reservoir_side, spec.reservoir_side, spec.noise))
        .collect();

    let mut rng = stream(4);
    let mut test_images = Vec::new();
    let mut truths = Vec::new();
    for t in 0..spec.n_test {
        let id = format!("test_{t:04}");
        let mut img = texture(&mut rng, spec.test_side, spec.test_side, spec.noise);
        let mut placed: Vec<(usize, usize, usize)> = Vec::new();
        for _ in 0..spec.faces_per_test {
            for _attempt in 0..50 {
                let side = rng.random_range(spec.size..=(spec.size * 2).min(spec.test_side / 2));
                let x = rng.random_range(0..=spec.test_side - side);
                let y = rng.random_range(0..=spec.test_side - side);
                let clear = placed
                    .iter()
                    .all(|&(px, py, ps)| x + side <= px || px + ps <= x || y + side <= py || py + ps <= y);
                if clear {
                    paste(&mut img, &face(&mut rng, side, spec.noise), x, y);
                    placed.push((x, y, side));
                    truths.push(GroundTruthBox { image_id: id.clone(), x, y, w: side, h: side });
                    break;
                }
            }
        }
        test_images.push((id, img));
    }
    Ok(SynthCorpus { positives, negatives, reservoir, test_images, truths })
}

/// Writes the corpus as PGM files plus `ground_truth.csv` and
/// `manifest.json` under `dir`, returning the manifest.
pub fn generate_synthetic_faces(spec: &SynthSpec, dir: &Path) -> Result<DatasetManifest> {
    let corpus = synth_corpus(spec)?;
    let write_set = |sub: &str, prefix: &str, imgs: &[GrayImage]| -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir.join(sub)).map_err(|e| Error::file(dir.join(sub), e))?;
        imgs.iter()
            .enumerate()
            .map(|(i, img)| {
                let rel = PathBuf::from(sub).join(format!("{prefix}_{i:05}.pgm"));
                write_pgm(&dir.join(&rel), img)?;
                Ok(rel)
            })
            .collect()
    };
    let positives = write_set("pos", "pos", &corpus.positives)?;
    let negatives = write_set("neg", "neg", &corpus.negatives)?;
    let negative_reservoir = write_set("reservoir", "bg", &corpus.reservoir)?;
    fs::create_dir_all(dir.join("test")).map_err(|e| Error::file(dir.join("test"), e))?;
    let mut test_images = Vec::new();
    for (id, img) in &corpus.test_images {
        let rel = PathBuf::from("test").join(format!("{id}.pgm"));
        write_pgm(&dir.join(&rel), img)?;
        test_images.push(rel);
    }
    let gt = dir.join("ground_truth.csv");
    let f = fs::File::create(&gt).map_err(|e| Error::file(&gt, e))?;
    write_ground_truth(f, &corpus.truths)?;
    let manifest = DatasetManifest {
        root: PathBuf::new(),
        positives,
        negatives,
        negative_reservoir,
        test_images,
        ground_truth: Some("ground_truth.csv".into()),
    };
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}
