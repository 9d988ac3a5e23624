//! Conditional prediction of coherent system failure times from early
//! failure information.
//!
//! A system with identically distributed, possibly dependent components is
//! described by its minimal path sets and a survival copula. Observing the
//! lifetime of a smaller system built from the same components (for instance
//! the first component failure) gives a conditional distribution for the
//! system lifetime, from which point predictors and prediction bands follow.

pub mod copula;
pub mod distortion;
pub mod marginal;
pub mod montecarlo;
pub mod numeric;
pub mod predictor;
pub mod qr;
pub mod structure;

pub use copula::{Copula, CopulaError, Slot, SurvivalCopula};
pub use distortion::{
    build_bivariate, build_trivariate, build_univariate, BivariateDistortion, DistortionError,
    OrderingMode, TrivariateDistortion, UnivariateDistortion,
};
pub use marginal::{Marginal, MarginalError};
pub use predictor::{
    kofn_quantile_factor, kofn_survival, mean_lifetime, system_mean, BandKind, Case,
    ConditionalPredictor, Given, Interval, PredictionBand, PredictorError,
};
pub use qr::{fit_lqr, fit_lqr_levels, fit_ols, FittedLine, QrError, QuantileFits};
pub use structure::{ComponentSet, StructureError, SystemStructure};
