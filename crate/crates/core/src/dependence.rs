//! Bivariate extremal coefficients: closed forms for each family, empirical
//! estimators, and maps of the coefficient against a reference site.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::bvn::bvn_rect;
use crate::dist::normal::{cdf as norm_cdf, ln_cdf};
use crate::dist::student::t_cdf;
use crate::error::{Error, Result};
use crate::inference::data::{average_ranks, ObservationSet};
use crate::model::{Model, SiteSet, SpectralModel};
use crate::simulate::RiskSpec;

/// Minimum number of complete pairs for an empirical coefficient.
pub const MIN_PAIRS: usize = 30;

/// Brown–Resnick coefficient `2Φ(√(γ₁₂/2))` for `γ₁₂ = Var(Y₁ − Y₂)/2`.
pub fn theta2_br(gamma12: f64) -> Result<f64> {
    if !(gamma12 >= 0.0) {
        return Err(Error::Domain(format!("semivariogram value must be nonnegative, got {gamma12}")));
    }
    Ok(2.0 * norm_cdf((0.5 * gamma12).sqrt()))
}

/// Skewed Brown–Resnick coefficient for a 2×2 covariance and latent covariance `ξ`.
///
/// `Σ_{i≠j} Φ₂((ln(Φ(ξ_j)/Φ(ξ_i)) + γ₁₂, ξ_i); [[2γ₁₂, ξ_i − ξ_j], [·, 1]]) / Φ(ξ_i)`.
pub fn theta2_sbr(sigma2: &DMatrix<f64>, xi2: [f64; 2]) -> Result<f64> {
    if sigma2.nrows() != 2 || sigma2.ncols() != 2 {
        return Err(Error::Dimension("pairwise covariance must be 2×2".into()));
    }
    let det = sigma2[(0, 0)] * sigma2[(1, 1)] - sigma2[(0, 1)] * sigma2[(1, 0)];
    if !(sigma2[(0, 0)] > 0.0 && det > 0.0) || (sigma2[(0, 1)] - sigma2[(1, 0)]).abs() > 1e-12 {
        return Err(Error::NotPositiveDefinite("pairwise covariance".into()));
    }
    let g = 0.5 * (sigma2[(0, 0)] + sigma2[(1, 1)] - 2.0 * sigma2[(0, 1)]);
    let mut theta = 0.0;
    for (i, j) in [(0, 1), (1, 0)] {
        let (xi_i, xi_j) = (xi2[i], xi2[j]);
        let h = ln_cdf(xi_j) - ln_cdf(xi_i) + g;
        let sd = (2.0 * g).sqrt();
        let rho = (xi_i - xi_j) / sd;
        if !(rho.abs() < 1.0) {
            return Err(Error::Domain("latent covariance is incompatible with the pairwise covariance".into()));
        }
        let p = bvn_rect([f64::NEG_INFINITY; 2], [h / sd, xi_i], rho);
        theta += p / norm_cdf(xi_i);
    }
    Ok(theta)
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::Domain(format!("correlation must lie in [−1, 1], got {rho}")));
    }
    Ok(())
}

/// Truncated extremal-t coefficient; `ρ = 1` is the full-dependence limit 1.
pub fn theta2_tet(rho: f64, nu: f64) -> Result<f64> {
    check_rho(rho)?;
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {nu}")));
    }
    if rho == 1.0 {
        return Ok(1.0);
    }
    let s = ((nu + 1.0) / (1.0 - rho * rho)).sqrt();
    let lo = t_cdf(-rho * s, nu + 1.0);
    Ok(2.0 * (t_cdf((1.0 - rho) * s, nu + 1.0) - lo) / (1.0 - lo))
}

/// Extremal-t coefficient `2T_{ν+1}((1−ρ)√((ν+1)/(1−ρ²)))`.
pub fn theta2_et(rho: f64, nu: f64) -> Result<f64> {
    check_rho(rho)?;
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {nu}")));
    }
    if rho == 1.0 {
        return Ok(1.0);
    }
    Ok(2.0 * t_cdf((1.0 - rho) * ((nu + 1.0) / (1.0 - rho * rho)).sqrt(), nu + 1.0))
}

/// Pairwise coefficient between sites `i` and `j` of a model.
///
/// The Gaussian families use their pairwise closed forms. For the truncated
/// extremal-t family the truncation couples every site, so with more than two
/// sites the coefficient is the exponent function at ones on `{i, j}` and `∞` elsewhere.
pub fn model_theta2(model: &Model, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Ok(1.0);
    }
    match model {
        Model::Br(m) => {
            let s = m.sigma();
            theta2_br(0.5 * (s[(i, i)] + s[(j, j)] - 2.0 * s[(i, j)]))
        }
        Model::Sbr(m) => {
            let s = m.sigma();
            let s2 = DMatrix::from_row_slice(2, 2, &[s[(i, i)], s[(i, j)], s[(j, i)], s[(j, j)]]);
            theta2_sbr(&s2, [m.xi()[i], m.xi()[j]])
        }
        Model::Tet(m) if m.dim() == 2 => theta2_tet(m.corr()[(i, j)], m.df()),
        Model::Tet(m) => {
            let mut x = vec![f64::INFINITY; m.dim()];
            x[i] = 1.0;
            x[j] = 1.0;
            m.exponent(&x)
        }
    }
}

/// Estimator behind an empirical coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EmpiricalMode {
    /// Rank-based F-madogram `θ = (1 + 2ν_F)/(1 − 2ν_F)` for block maxima.
    Madogram,
    /// `2 − Pr(X_i > u | X_j > u, r(X) > 1)` for threshold exceedances; `r` uses the observed coordinates.
    Exceedance { u: f64, risk: RiskSpec },
}

/// Empirical pairwise coefficient between sites `i` and `j`, clipped to `[1, 2]`.
pub fn empirical_theta2(data: &ObservationSet, i: usize, j: usize, mode: &EmpiricalMode) -> Result<f64> {
    let d = data.dim();
    if i >= d || j >= d {
        return Err(Error::Dimension(format!("site index out of range for {d} sites")));
    }
    let rows: Vec<usize> = (0..data.n_rows()).filter(|&r| !data.is_missing(r, i) && !data.is_missing(r, j)).collect();
    if rows.len() < MIN_PAIRS {
        return Err(Error::InsufficientData(format!(
            "{} complete pairs for sites {i} and {j}; at least {MIN_PAIRS} needed",
            rows.len()
        )));
    }
    let theta = match mode {
        EmpiricalMode::Madogram => {
            let a: Vec<f64> = rows.iter().map(|&r| data.row(r)[i]).collect();
            let b: Vec<f64> = rows.iter().map(|&r| data.row(r)[j]).collect();
            let n1 = rows.len() as f64 + 1.0;
            let (ra, rb) = (average_ranks(&a), average_ranks(&b));
            let nu = 0.5 * ra.iter().zip(&rb).map(|(x, y)| (x - y).abs() / n1).sum::<f64>() / rows.len() as f64;
            (1.0 + 2.0 * nu) / (1.0 - 2.0 * nu)
        }
        EmpiricalMode::Exceedance { u, risk } => {
            let mut cond = 0usize;
            let mut joint = 0usize;
            for &r in &rows {
                let (_, obs) = data.observed(r);
                let row = data.row(r);
                if risk.eval(&obs) > 1.0 && row[j] > *u {
                    cond += 1;
                    if row[i] > *u {
                        joint += 1;
                    }
                }
            }
            if cond == 0 {
                return Err(Error::InsufficientData(format!("no exceedance of {u} at site {j}")));
            }
            2.0 - joint as f64 / cond as f64
        }
    };
    Ok(theta.clamp(1.0, 2.0))
}

/// Origin of a dependence map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapSource {
    AnalyticBr,
    AnalyticSbr,
    AnalyticTet,
    Empirical,
}

impl MapSource {
    pub fn label(&self) -> &'static str {
        match self {
            MapSource::AnalyticBr => "analytic-br",
            MapSource::AnalyticSbr => "analytic-sbr",
            MapSource::AnalyticTet => "analytic-tet",
            MapSource::Empirical => "empirical",
        }
    }
}

/// Pairwise coefficients of every site against one reference site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepMap {
    pub reference: usize,
    pub coords: Vec<[f64; 2]>,
    pub theta2: Vec<f64>,
    pub source: MapSource,
}

/// Closed-form map against site `reference`.
pub fn depmap_model(model: &Model, sites: &SiteSet, reference: usize) -> Result<DepMap> {
    let d = sites.len();
    if reference >= d {
        return Err(Error::Dimension(format!("reference {reference} out of range for {d} sites")));
    }
    let theta2 = (0..d).into_par_iter().map(|j| model_theta2(model, reference, j)).collect::<Result<Vec<_>>>()?;
    let source = match model {
        Model::Br(_) => MapSource::AnalyticBr,
        Model::Sbr(_) => MapSource::AnalyticSbr,
        Model::Tet(_) => MapSource::AnalyticTet,
    };
    Ok(DepMap { reference, coords: sites.coords().to_vec(), theta2, source })
}

/// Empirical map against site `reference`.
pub fn depmap_data(data: &ObservationSet, reference: usize, mode: &EmpiricalMode) -> Result<DepMap> {
    let d = data.dim();
    if reference >= d {
        return Err(Error::Dimension(format!("reference {reference} out of range for {d} sites")));
    }
    let theta2 =
        (0..d).into_par_iter().map(|j| empirical_theta2(data, j, reference, mode)).collect::<Result<Vec<_>>>()?;
    Ok(DepMap { reference, coords: data.sites().coords().to_vec(), theta2, source: MapSource::Empirical })
}

/// Largest difference between two maps after aligning their references by translation.
///
/// Compares `a` at site `s` with `b` at `s − ref_a + ref_b` wherever that site exists.
/// Zero for a stationary model; `None` when no translated site overlaps.
pub fn translation_discrepancy(a: &DepMap, b: &DepMap) -> Option<f64> {
    let (ra, rb) = (a.coords[a.reference], b.coords[b.reference]);
    let mut worst: Option<f64> = None;
    for (s, &ta) in a.coords.iter().zip(&a.theta2) {
        let target = [s[0] - ra[0] + rb[0], s[1] - ra[1] + rb[1]];
        let hit = b.coords.iter().position(|c| (c[0] - target[0]).abs() < 1e-9 && (c[1] - target[1]).abs() < 1e-9);
        if let Some(k) = hit {
            let diff = (ta - b.theta2[k]).abs();
            worst = Some(worst.map_or(diff, |w| w.max(diff)));
        }
    }
    worst
}
