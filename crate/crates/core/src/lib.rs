//! Learning-curve extrapolation toolkit.
//!
//! Fits parametric curve families to (training-set-size, accuracy)
//! measurements collected at low resource levels, then predicts achievable
//! model performance, saturation points, and the sample size required to
//! reach a target accuracy.
//!
//! Modules:
//! - [`curves`] — the curve families, their evaluation, gradients and
//!   asymptotes, and the ensemble combiner.
//! - [`fit`] — parameter estimation by Levenberg-Marquardt or Adam, with
//!   optional size-proportional data weighting and multi-restart
//!   initialization.
//! - [`analysis`] — extrapolated predictions, MAE against held-out points,
//!   saturation detection and required-size queries.
//! - [`dataio`] — CSV/JSONL ingestion and emission, split schedules, fit
//!   reports, and the external measurement-probe interface.
//! - [`synth`] — seeded synthetic dataset generation and brute-force
//!   fitting oracles for tests.

pub mod analysis;
pub mod curves;
pub mod dataio;
pub mod fit;
pub mod synth;

pub use curves::{combine_ensemble, Asymptote, CurveModel, EnsembleWeights, ModelError, ModelKind};
pub use fit::{fit, fit_gd, fit_nls, FitConfig, FitError, FitResult, OptimizerKind, Weighting};
