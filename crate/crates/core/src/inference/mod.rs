//! Marginal standardization, threshold selection, spectral likelihood and fitting.

pub mod data;
pub mod fit;
pub mod likelihood;
pub mod optim;
pub mod threshold;

pub use data::{marginal_transform, Margins, ObservationSet, ZeroPolicy};
pub use fit::{fit, loglik_at, FitOptions, FitResult, FitSpec, Family, SkewBasis};
pub use likelihood::{exceedances, lp_threshold_guard, risk_values, spectral_loglik, Exceedances};
pub use optim::{nelder_mead, SimplexOptions, SimplexResult};
pub use threshold::{fit_gpd, quantile_type7, select_threshold, GpdFit, ThresholdChoice, ThresholdMethod};
