//! File formats: PGM images, CSV tables, JSON models and dataset manifests.

mod csvio;
pub mod float;
mod manifest;
mod model;
mod pgm;

pub use csvio::{
    read_detections, read_ground_truth, read_roc, write_detections, write_ground_truth, write_roc,
};
pub use manifest::DatasetManifest;
pub use model::{load_model, model_from_str, model_to_string, save_model, ModelFile, TrainingMetadata, FORMAT_VERSION};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
