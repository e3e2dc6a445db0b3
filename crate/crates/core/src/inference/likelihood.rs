//! Threshold exceedances and the spectral log-likelihood.

use rayon::prelude::*;
use serde::Serialize;

use super::data::ObservationSet;
use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::simulate::RiskSpec;

/// Rows whose risk exceeds a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exceedances {
    pub rows: Vec<usize>,
    pub u: f64,
    pub risk: RiskSpec,
    pub risk_values: Vec<f64>,
}

impl Exceedances {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Risk of every row, evaluated on its observed coordinates.
pub fn risk_values(data: &ObservationSet, risk: &RiskSpec) -> Vec<f64> {
    (0..data.n_rows())
        .map(|i| match risk {
            RiskSpec::Linear { weights } => {
                let (idx, v) = data.observed(i);
                idx.iter().zip(&v).map(|(&j, x)| weights[j] * x).sum()
            }
            _ => risk.eval(&data.observed(i).1),
        })
        .collect()
}

/// Rows with `r(x) > u`.
pub fn exceedances(data: &ObservationSet, risk: &RiskSpec, u: f64) -> Result<Exceedances> {
    let all = risk_values(data, risk);
    let rows: Vec<usize> = (0..data.n_rows()).filter(|&i| all[i] > u).collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("no row has risk above {u}")));
    }
    let risk_values = rows.iter().map(|&i| all[i]).collect();
    Ok(Exceedances { rows, u, risk: risk.clone(), risk_values })
}

/// Smallest L1-scale threshold admissible for an Lp risk: `D^{1−1/p}` (1 for other risks).
pub fn lp_threshold_guard(risk: &RiskSpec, d: usize) -> f64 {
    match risk {
        RiskSpec::Lp { p } => (d as f64).powf(1.0 - 1.0 / p),
        _ => 1.0,
    }
}

/// `Σ ln κ(x_i)` over the exceedances. Rows with missing sites use the
/// intensity of the observed coordinates (the others integrated out).
pub fn spectral_loglik<M: SpectralModel + ?Sized>(model: &M, data: &ObservationSet, exc: &Exceedances) -> Result<f64> {
    let terms = exc
        .rows
        .par_iter()
        .map(|&i| {
            if data.is_complete_row(i) {
                model.ln_intensity(data.row(i))
            } else {
                let (idx, v) = data.observed(i);
                model.ln_marginal_intensity(&v, &idx)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}
