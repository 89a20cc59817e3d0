//! Dataset bundles on disk and synthetic stochastic-block-model graphs.

mod bundle;
mod sbm;

pub use bundle::{
    load_dataset, load_dataset_with_meta, save_dataset, FeatureFormat, LoadReport, Meta,
};
pub use sbm::{generate_sbm, sbm_probabilities, SbmSpec};
