//! Radial integration shared by the log-Gaussian spectral families.
//!
//! For `W = exp(Y − a)` the partial derivative of the exponent function over
//! a coordinate set `B` reduces to a Gaussian density in the log-radius times
//! a Gaussian probability for the remaining constraints. The helpers below
//! compute both pieces from a covariance that may carry one extra latent
//! coordinate (the skewing variable).

use nalgebra::{DMatrix, DVector};

use crate::dist::{mvn_cdf, CdfOptions};
use crate::dist::normal::{ln_cdf, LN_SQRT_2PI};
use crate::error::Result;
use crate::linalg::{self, Chol};

/// Log-radius marginalization of `exp(u) φ_B(l_B + u1)`.
pub(crate) struct Projection {
    /// `ln[(2π)^{-(k-1)/2} |Σ_BB|^{-1/2} c^{-1/2}] − ½(lᵀPl − (qᵀl − 1)²/c)`
    pub ln_core: f64,
    /// Mean of the log-radius variable.
    pub mu_u: f64,
    /// `c = 1ᵀΣ_BB⁻¹1`, the precision of the log-radius variable.
    pub c: f64,
}

pub(crate) fn project(chol_bb: &Chol, ln_det_bb: f64, l_b: &DVector<f64>) -> Projection {
    let k = l_b.len();
    let ones = DVector::from_element(k, 1.0);
    let pl = chol_bb.solve(l_b);
    let p1 = chol_bb.solve(&ones);
    let c = p1.sum();
    let ql = pl.sum();
    let quad = l_b.dot(&pl) - (ql - 1.0) * (ql - 1.0) / c;
    let ln_core = -((k as f64) - 1.0) * LN_SQRT_2PI - 0.5 * ln_det_bb - 0.5 * c.ln() - 0.5 * quad;
    Projection { ln_core, mu_u: (1.0 - ql) / c, c }
}

/// One constrained coordinate of the augmented vector.
#[derive(Clone, Copy)]
pub(crate) enum Constraint {
    /// `X_j − u ≤ l_j`
    Site(usize, f64),
    /// `−U₀ ≤ 0`, the latent variable at index `idx` of the augmented covariance.
    Latent(usize),
}

/// `ln Pr(constraints)` after integrating the log-radius variable.
///
/// A single constraint is evaluated on the log scale so deep tails stay finite.
pub(crate) fn ln_constraint_probability(
    aug: &DMatrix<f64>,
    chol_bb: &Chol,
    b: &[usize],
    l_b: &DVector<f64>,
    proj: &Projection,
    rows: &[Constraint],
    opts: &CdfOptions,
) -> Result<f64> {
    let r = rows.len();
    if r == 0 {
        return Ok(0.0);
    }
    let idx: Vec<usize> = rows
        .iter()
        .map(|c| match *c {
            Constraint::Site(j, _) => j,
            Constraint::Latent(j) => j,
        })
        .collect();
    let c_br = linalg::select(aug, b, &idx);
    let c_rr = linalg::select(aug, &idx, &idx);
    let pc = chol_bb.solve(&c_br);
    let lmat = pc.transpose();
    let s = &c_rr - &lmat * &c_br;
    let l1: DVector<f64> = DVector::from_fn(r, |i, _| lmat.row(i).sum());
    let ll = &lmat * l_b;
    let sign: Vec<f64> = rows.iter().map(|c| if matches!(c, Constraint::Latent(_)) { -1.0 } else { 1.0 }).collect();
    let e: Vec<f64> = rows.iter().map(|c| if matches!(c, Constraint::Latent(_)) { 0.0 } else { 1.0 }).collect();
    let g: Vec<f64> = (0..r).map(|i| sign[i] * l1[i] - e[i]).collect();
    let mean: Vec<f64> = (0..r).map(|i| sign[i] * ll[i] + proj.mu_u * g[i]).collect();
    let cov = DMatrix::from_fn(r, r, |i, j| sign[i] * sign[j] * s[(i, j)] + g[i] * g[j] / proj.c);
    let cov = 0.5 * (&cov + cov.transpose());
    let upper: Vec<f64> = rows
        .iter()
        .map(|c| match *c {
            Constraint::Site(_, lj) => lj,
            Constraint::Latent(_) => 0.0,
        })
        .collect();
    if r == 1 {
        return Ok(ln_cdf((upper[0] - mean[0]) / cov[(0, 0)].sqrt()));
    }
    let lower = vec![f64::NEG_INFINITY; r];
    Ok(mvn_cdf(&lower, &upper, &mean, &cov, opts)?.value.ln())
}
