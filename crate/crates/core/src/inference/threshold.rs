//! Empirical quantiles, generalized Pareto fits and threshold selection.

use serde::{Deserialize, Serialize};

use super::optim::{nelder_mead, SimplexOptions};
use crate::error::{Error, Result};

/// Fewest exceedances for which a GPD fit is attempted.
pub const MIN_GPD_EXCEEDANCES: usize = 10;
/// Fewest values accepted by the stability rule.
pub const MIN_STABILITY_VALUES: usize = 50;
/// Open bounds of the GPD shape.
pub const SHAPE_BOUNDS: (f64, f64) = (-0.5, 1.5);

/// Sample quantile by linear interpolation between order statistics
/// (`h = (n − 1)q`, the "type 7" convention).
pub fn quantile_type7(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile {q} of {} values", values.len())));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// GPD fit of the excesses over one threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpdFit {
    pub threshold: f64,
    pub n_exceed: usize,
    pub shape: f64,
    pub scale: f64,
    /// Observed-information standard errors; `NaN` when the information is not positive definite.
    pub shape_se: f64,
    pub scale_se: f64,
    pub loglik: f64,
}

fn gpd_loglik(y: &[f64], scale: f64, shape: f64) -> f64 {
    if !(scale > 0.0) {
        return f64::NEG_INFINITY;
    }
    let n = y.len() as f64;
    if shape.abs() < 1e-9 {
        return -n * scale.ln() - y.iter().sum::<f64>() / scale;
    }
    let mut s = 0.0;
    for &v in y {
        let t = 1.0 + shape * v / scale;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        s += t.ln();
    }
    -n * scale.ln() - (1.0 + 1.0 / shape) * s
}

fn shape_of(t: f64) -> f64 {
    let (lo, hi) = SHAPE_BOUNDS;
    lo + (hi - lo) / (1.0 + (-t).exp())
}

/// Maximum-likelihood GPD fit of positive excesses with the shape kept inside [`SHAPE_BOUNDS`].
pub fn fit_gpd(excesses: &[f64], threshold: f64) -> Result<GpdFit> {
    if excesses.len() < MIN_GPD_EXCEEDANCES {
        return Err(Error::InsufficientData(format!(
            "{} exceedances; a GPD fit needs at least {MIN_GPD_EXCEEDANCES}",
            excesses.len()
        )));
    }
    let mean = excesses.iter().sum::<f64>() / excesses.len() as f64;
    let (lo, hi) = SHAPE_BOUNDS;
    let t0 = -((hi - lo) / (0.1 - lo) - 1.0).ln();
    let opts = SimplexOptions { max_evals: 4000, f_tol: 1e-11, x_tol: 1e-8, step: 0.5 };
    let r = nelder_mead(|p| -gpd_loglik(excesses, p[0].exp(), shape_of(p[1])), &[mean.ln(), t0], &opts);
    let (scale, shape) = (r.x[0].exp(), shape_of(r.x[1]));
    let (scale_se, shape_se) = gpd_standard_errors(excesses, scale, shape);
    Ok(GpdFit { threshold, n_exceed: excesses.len(), shape, scale, shape_se, scale_se, loglik: -r.value })
}

/// Inverse observed information from a central-difference Hessian.
fn gpd_standard_errors(y: &[f64], scale: f64, shape: f64) -> (f64, f64) {
    let h = [1e-4 * scale, 1e-4];
    let f = |a: f64, b: f64| gpd_loglik(y, scale + a, shape + b);
    let f0 = f(0.0, 0.0);
    let haa = (f(h[0], 0.0) - 2.0 * f0 + f(-h[0], 0.0)) / (h[0] * h[0]);
    let hbb = (f(0.0, h[1]) - 2.0 * f0 + f(0.0, -h[1])) / (h[1] * h[1]);
    let hab = (f(h[0], h[1]) - f(h[0], -h[1]) - f(-h[0], h[1]) + f(-h[0], -h[1])) / (4.0 * h[0] * h[1]);
    let (ia, ib, iab) = (-haa, -hbb, -hab);
    let det = ia * ib - iab * iab;
    if !(ia > 0.0 && det > 0.0) {
        return (f64::NAN, f64::NAN);
    }
    ((ib / det).sqrt(), (ia / det).sqrt())
}

/// Threshold rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThresholdMethod {
    /// Type-7 empirical `q`-quantile.
    Quantile { q: f64 },
    /// Smallest grid threshold after which successive GPD shape estimates differ by less than `tol`.
    GpdStability {
        #[serde(default = "default_grid")]
        probs: Vec<f64>,
        #[serde(default = "default_stability_tol")]
        tol: f64,
    },
    /// A fixed threshold.
    Fixed { u: f64 },
}

fn default_grid() -> Vec<f64> {
    (0..20).map(|i| 0.5 + 0.025 * i as f64).collect()
}

fn default_stability_tol() -> f64 {
    0.05
}

/// Selected threshold with the per-threshold GPD table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdChoice {
    pub u: f64,
    pub table: Vec<GpdFit>,
}

/// Chooses a threshold for the risk values by `method`.
pub fn select_threshold(values: &[f64], method: &ThresholdMethod) -> Result<ThresholdChoice> {
    match method {
        ThresholdMethod::Fixed { u } => Ok(ThresholdChoice { u: *u, table: gpd_table(values, &[*u]) }),
        ThresholdMethod::Quantile { q } => {
            let u = quantile_type7(values, *q)?;
            Ok(ThresholdChoice { u, table: gpd_table(values, &[u]) })
        }
        ThresholdMethod::GpdStability { probs, tol } => {
            if values.len() < MIN_STABILITY_VALUES {
                return Err(Error::InsufficientData(format!(
                    "{} values; the stability rule needs at least {MIN_STABILITY_VALUES}",
                    values.len()
                )));
            }
            let grid = probs.iter().map(|&p| quantile_type7(values, p)).collect::<Result<Vec<_>>>()?;
            let table = gpd_table(values, &grid);
            if table.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "fewer than {MIN_GPD_EXCEEDANCES} exceedances at every grid threshold"
                )));
            }
            let m = table.len();
            let stable_from = (0..m)
                .find(|&i| (i..m - 1).all(|k| (table[k + 1].shape - table[k].shape).abs() < *tol))
                .unwrap_or(m - 1);
            Ok(ThresholdChoice { u: table[stable_from].threshold, table })
        }
    }
}

fn gpd_table(values: &[f64], thresholds: &[f64]) -> Vec<GpdFit> {
    thresholds
        .iter()
        .filter_map(|&u| {
            let exc: Vec<f64> = values.iter().filter(|&&v| v > u).map(|v| v - u).collect();
            fit_gpd(&exc, u).ok()
        })
        .collect()
}
