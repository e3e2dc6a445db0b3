//! Brown–Resnick spectral model: `W = exp(Y − diag(Σ)/2)` with `Y ~ N(0, Σ)`.

use nalgebra::{DMatrix, DVector};

use super::gauss::{ln_constraint_probability, project, Constraint};
use super::sites::SiteSet;
use super::variogram::{build_br_cov, VariogramSpec};
use super::{check_point, check_subset, SpectralModel};
use crate::dist::{mvn_cdf, CdfOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, Chol};

/// Brown–Resnick model with cached factorization of `Σ`.
#[derive(Debug, Clone)]
pub struct BrModel {
    sigma: DMatrix<f64>,
    chol: Chol,
    ln_det: f64,
    a: DVector<f64>,
    opts: CdfOptions,
}

impl BrModel {
    pub fn new(sites: &SiteSet, vario: &VariogramSpec, anchor: [f64; 2], opts: CdfOptions) -> Result<Self> {
        Self::from_cov(build_br_cov(sites, vario, anchor)?, opts)
    }

    /// From a positive-definite covariance of the log-spectral field.
    pub fn from_cov(sigma: DMatrix<f64>, opts: CdfOptions) -> Result<Self> {
        linalg::check_square_symmetric(&sigma, "covariance")?;
        let chol = linalg::cholesky(&sigma, "covariance")?;
        let ln_det = linalg::log_det(&chol);
        let a = DVector::from_fn(sigma.nrows(), |i, _| 0.5 * sigma[(i, i)]);
        Ok(BrModel { sigma, chol, ln_det, a, opts })
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Centring constants `a_j = ln E exp(Y_j)`.
    pub fn centring(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn cdf_options(&self) -> &CdfOptions {
        &self.opts
    }

    pub fn set_cdf_options(&mut self, opts: CdfOptions) {
        self.opts = opts;
    }

    fn log_shift(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| x[i].ln() + self.a[i])
    }
}

impl SpectralModel for BrModel {
    fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    fn exponent(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        check_point(x, d, true)?;
        let s = &self.sigma;
        let mut v = 0.0;
        for k in 0..d {
            if x[k].is_infinite() {
                continue;
            }
            let others: Vec<usize> = (0..d).filter(|&j| j != k && x[j].is_finite()).collect();
            if others.is_empty() {
                v += 1.0 / x[k];
                continue;
            }
            let m = others.len();
            // Y_j − Y_k given the tilt toward site k: mean −γ_jk, covariance Σ_k.
            let upper: Vec<f64> = others
                .iter()
                .map(|&j| (x[j] / x[k]).ln() + 0.5 * (s[(j, j)] + s[(k, k)]) - s[(j, k)])
                .collect();
            let cov = DMatrix::from_fn(m, m, |p, q| {
                let (i, j) = (others[p], others[q]);
                s[(i, j)] - s[(i, k)] - s[(j, k)] + s[(k, k)]
            });
            let lower = vec![f64::NEG_INFINITY; m];
            let p = mvn_cdf(&lower, &upper, &vec![0.0; m], &cov, &self.opts)?;
            v += p.value / x[k];
        }
        Ok(v)
    }

    fn ln_intensity(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        check_point(x, d, false)?;
        let l = self.log_shift(x);
        let proj = project(&self.chol, self.ln_det, &l);
        Ok(proj.ln_core - x.iter().map(|v| v.ln()).sum::<f64>())
    }

    fn partial(&self, x: &[f64], subset: &[usize]) -> Result<f64> {
        let d = self.dim();
        check_point(x, d, false)?;
        let b = check_subset(subset, d)?;
        if b.len() == d {
            return self.intensity(x);
        }
        let l = self.log_shift(x);
        let s_bb = linalg::select(&self.sigma, &b, &b);
        let chol_bb = linalg::cholesky(&s_bb, "covariance block")?;
        let l_b = linalg::select_vec(&l, &b);
        let proj = project(&chol_bb, linalg::log_det(&chol_bb), &l_b);
        let rows: Vec<Constraint> = linalg::complement(d, &b).into_iter().map(|j| Constraint::Site(j, l[j])).collect();
        let ln_prob = ln_constraint_probability(&self.sigma, &chol_bb, &b, &l_b, &proj, &rows, &self.opts)?;
        let ln_xb: f64 = b.iter().map(|&i| x[i].ln()).sum();
        Ok((proj.ln_core - ln_xb + ln_prob).exp())
    }

    fn ln_marginal_intensity(&self, x_obs: &[f64], observed: &[usize]) -> Result<f64> {
        let d = self.dim();
        let o = check_subset(observed, d)?;
        if o != observed {
            return Err(Error::Domain("observed indices must be strictly increasing".into()));
        }
        check_point(x_obs, o.len(), false)?;
        let l_o = DVector::from_fn(o.len(), |p, _| x_obs[p].ln() + self.a[o[p]]);
        let proj = if o.len() == d {
            project(&self.chol, self.ln_det, &l_o)
        } else {
            let c = linalg::cholesky(&linalg::select(&self.sigma, &o, &o), "covariance block")?;
            project(&c, linalg::log_det(&c), &l_o)
        };
        Ok(proj.ln_core - x_obs.iter().map(|v| v.ln()).sum::<f64>())
    }
}
