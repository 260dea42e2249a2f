//! Evaluation harness: manifests, sampling, metrics, published-table
//! oracles, the synthetic dataset generator and the experiment runner.

mod experiment;
mod manifest;
mod metrics;
mod published;
pub mod synth;

use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::features::FeatureError;
use crate::imaging::ImagingError;

pub use experiment::{
    extract_manifest, run_experiment, run_experiment_on, write_report, ExperimentKind,
    ExperimentReport, ExperimentSpec, LabeledFeatures,
};
pub use manifest::{balanced_subsample, Manifest, ManifestRow};
pub use metrics::{confusion, pr_curve, write_pr_csv, ConfusionMatrix, PrCurve, PrPoint};
pub use published::{
    accuracy_from_published, tag_scan_rates, PublishedCheck, PublishedMatrix, TagScanRates,
    PUBLISHED,
};
pub use synth::{synth_generate, synth_sample, DegradationRanges, SynthConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no records to evaluate")]
    EmptyInput,
    #[error("no positive examples")]
    NoPositives,
    #[error("class '{0}' has no examples")]
    MissingClass(String),
    #[error("label '{0}' is not one of the evaluated classes")]
    UnknownClass(String),
    #[error("manifest {path}, line {line}: {reason}")]
    BadManifest {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    }
}
