//! Linearization of nonlinear scalar sensors with a functional-link network
//! inverse model, plus a bit-accurate emulation of an 18-bit floating-point
//! inference pipeline to check hardware realizability.
//!
//! The flow: ingest a calibration sweep ([`dataset`]), train a trigonometric
//! functional-link compensator by LMS or solve it directly by least squares
//! ([`training`]), score linearity ([`metrics`]), then re-run inference
//! through the staged 18-bit pipeline ([`pipeline`], [`qfloat`]) and compare
//! against the double-precision reference.

pub mod dataset;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod qfloat;
pub mod training;
mod util;

pub use dataset::{lvdt_table1, CalibrationDataset, CalibrationSample};
pub use error::{Error, Result};
pub use metrics::{
    error_curve, linearity, raw_sensor_linearity, ErrorCurve, LinearityReport,
    DEFAULT_TOLERANCE_MM,
};
pub use model::{expand, ExpansionSpec, FeatureVector, FlannModel, Normalizer};
pub use pipeline::{
    build_lookup, pipeline_infer, pipeline_infer_exact, LookupTable, PipelineConfig,
    PipelineTrace,
};
pub use qfloat::{q18_add, q18_from_real, q18_mul, q18_to_real, Q18};
pub use training::{
    init_weights, lms_step, solve_least_squares, train_lms, TrainingConfig, TrainingTrace,
};
