use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::csvio::read_ground_truth;
use super::pgm::read_pgm;
use crate::detect::TestSet;
use crate::error::{Error, Result};
use crate::features::GrayImage;

/// Lists the files of a dataset. Relative paths resolve against `root`,
/// which itself resolves against the manifest's directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default)]
    pub root: PathBuf,
    /// Base-window-sized patches.
    #[serde(default)]
    pub positives: Vec<PathBuf>,
    #[serde(default)]
    pub negatives: Vec<PathBuf>,
    /// Full background images for bootstrapping.
    #[serde(default)]
    pub negative_reservoir: Vec<PathBuf>,
    /// Detection test images; their file stems are the image ids.
    #[serde(default)]
    pub test_images: Vec<PathBuf>,
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut m: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::file(path, e))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        m.root = dir.join(&m.root);
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(path, s).map_err(|e| Error::file(path, e))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.root.join(p)
    }

    fn load_all(&self, files: &[PathBuf]) -> Result<Vec<GrayImage>> {
        files.iter().map(|f| read_pgm(&self.resolve(f))).collect()
    }

    /// Positive patches; all must share one square size.
    pub fn load_positives(&self) -> Result<Vec<GrayImage>> {
        let Some(first) = self.positives.first() else {
            return Err(Error::invalid("manifest lists no positives"));
        };
        let imgs = self.load_all(&self.positives)?;
        let side = imgs[0].width();
        if imgs[0].height() != side {
            return Err(Error::file(self.resolve(first), "positive patch is not square"));
        }
        for (img, f) in imgs.iter().zip(&self.positives) {
            if img.width() != side || img.height() != side {
                return Err(Error::file(
                    self.resolve(f),
                    format!("positive is {}x{}, expected {side}x{side}", img.width(), img.height()),
                ));
            }
        }
        Ok(imgs)
    }

    pub fn load_negatives(&self) -> Result<Vec<GrayImage>> {
        self.load_all(&self.negatives)
    }

    pub fn load_reservoir(&self) -> Result<Vec<GrayImage>> {
        self.load_all(&self.negative_reservoir)
    }

    pub fn image_id(path: &Path) -> String {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    }

    /// Test images with their ground truth; fails if no ground truth is
    /// listed.
    pub fn load_test_set(&self) -> Result<TestSet> {
        let gt = self
            .ground_truth
            .as_ref()
            .ok_or_else(|| Error::invalid("manifest lists no ground truth"))?;
        let gt_path = self.resolve(gt);
        let file = fs::File::open(&gt_path).map_err(|e| Error::file(&gt_path, e))?;
        let truths = read_ground_truth(file).map_err(|e| Error::file(&gt_path, e))?;
        let images = self
            .test_images
            .iter()
            .map(|f| Ok((Self::image_id(f), read_pgm(&self.resolve(f))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TestSet { images, truths })
    }
}
