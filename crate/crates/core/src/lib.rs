//! Distribution-shift-robust forecasting of a univariate target with
//! exogenous features.
//!
//! The pipeline normalizes each lookback window per channel (reversible
//! instance normalization with a learnable affine), forecasts both the
//! target and a *surrogate* of the exogenous features, and corrects the
//! target forecast with a small aggregation network fed by that surrogate.
//! The surrogate is a learned, sparse convex combination of the `L + 1`
//! horizon-length slices of the concatenated lookback and horizon exogenous
//! series, selected by a soft attention mask.
//!
//! Module map:
//! - [`gradcore`]: tensors, reverse-mode tape, Adam, checkpoints
//! - [`dataio`]: CSV loading, chronological split, standardization, windows
//! - [`revin`]: per-window reversible normalization
//! - [`sam`]: slicing, the attention-mask transform and the surrogate feature
//! - [`models`]: linear / MLP backbones and the aggregation network
//! - [`trainer`]: joint training, early stopping and inference
//! - [`eval`]: metrics, mutual-information diagnostic, ablation harness
//! - [`synth`]: planted-pattern synthetic benchmark generator
//! - [`cli`]: the `shifts` command-line front end

pub mod cli;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod gradcore;
pub mod models;
pub mod revin;
pub mod sam;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
