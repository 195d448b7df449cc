//! Experiment plumbing: data files, labeled-subset sampling, a linear
//! classifier for the low-rank features, and end-to-end runs with reports.

pub mod config;
pub mod dataset;
pub mod experiment;
pub mod linear;
pub mod sampling;
pub mod synth;

pub use config::{parse_config, parse_grid, ConfigFile};
pub use dataset::{load_dataset, parse_csv, parse_svmlight, DataFormat, Dataset};
pub use experiment::{
    classify, default_landmark_count, emit_report, kernel_for, repeat_seed, CSV_HEADER, learn, prepare, run_experiment, Bandwidth,
    ExperimentConfig, LambdaChoice, Learned, Method, PhaseTimes, Prepared, RepeatResult,
    ReportFormat, RunReport,
};
pub use linear::{error_rate, train_linear, LinearModel, LinearSvmConfig};
pub use sampling::sample_labeled;
pub use synth::{gaussian_blobs, two_moons, xor, BlobSpec, Generator};
