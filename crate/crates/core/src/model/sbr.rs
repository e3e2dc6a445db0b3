//! Skewed Brown–Resnick spectral model.
//!
//! `Y = X | U₀ > 0` where `(X, U₀)` is jointly Gaussian with `Var X = Σ`,
//! `Var U₀ = 1` and `Cov(X, U₀) = ξ`, and `W = exp(Y − a)` with
//! `a_j = ln 2 + Σ_jj/2 + ln Φ(ξ_j)` so that `E W_j = 1`.

use nalgebra::{DMatrix, DVector};

use super::gauss::{ln_constraint_probability, project, Constraint};
use super::sites::SiteSet;
use super::skew::{eta_from_kernels, eta_from_xi, xi_from_eta, SkewFieldSpec};
use super::variogram::{build_br_cov, VariogramSpec};
use super::{check_point, check_subset, SpectralModel};
use crate::dist::normal::{cdf as norm_cdf, ln_cdf};
use crate::dist::{mvn_cdf, CdfOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, Chol};

/// Skewed Brown–Resnick model with cached factorizations.
#[derive(Debug, Clone)]
pub struct SbrModel {
    sigma: DMatrix<f64>,
    chol: Chol,
    ln_det: f64,
    xi: DVector<f64>,
    /// `[[Σ, ξ], [ξᵀ, 1]]`
    aug: DMatrix<f64>,
    a: DVector<f64>,
    opts: CdfOptions,
}

impl SbrModel {
    pub fn new(
        sites: &SiteSet,
        vario: &VariogramSpec,
        skew: &SkewFieldSpec,
        anchor: [f64; 2],
        opts: CdfOptions,
    ) -> Result<Self> {
        let sigma = build_br_cov(sites, vario, anchor)?;
        let eta = eta_from_kernels(sites, skew)?;
        let xi = xi_from_eta(&eta, &sigma)?;
        Self::from_cov_xi(sigma, xi, opts)
    }

    /// From `Σ` and the slant vector `η`.
    pub fn from_cov_eta(sigma: DMatrix<f64>, eta: &DVector<f64>, opts: CdfOptions) -> Result<Self> {
        let xi = xi_from_eta(eta, &sigma)?;
        Self::from_cov_xi(sigma, xi, opts)
    }

    /// From `Σ` and the latent cross-covariance `ξ`; requires `ξᵀΣ⁻¹ξ < 1`.
    pub fn from_cov_xi(sigma: DMatrix<f64>, xi: DVector<f64>, opts: CdfOptions) -> Result<Self> {
        linalg::check_square_symmetric(&sigma, "covariance")?;
        let d = sigma.nrows();
        if xi.len() != d {
            return Err(Error::Dimension(format!("latent covariance has length {}, expected {d}", xi.len())));
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("latent covariance must be finite".into()));
        }
        let chol = linalg::cholesky(&sigma, "covariance")?;
        let ln_det = linalg::log_det(&chol);
        let mut aug = DMatrix::zeros(d + 1, d + 1);
        aug.view_mut((0, 0), (d, d)).copy_from(&sigma);
        for i in 0..d {
            aug[(i, d)] = xi[i];
            aug[(d, i)] = xi[i];
        }
        aug[(d, d)] = 1.0;
        let pxi = chol.solve(&xi);
        if xi.dot(&pxi) >= 1.0 {
            return Err(Error::Domain("latent covariance violates ξᵀΣ⁻¹ξ < 1".into()));
        }
        let a = DVector::from_fn(d, |i, _| std::f64::consts::LN_2 + 0.5 * sigma[(i, i)] + ln_cdf(xi[i]));
        Ok(SbrModel { sigma, chol, ln_det, xi, aug, a, opts })
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Latent cross-covariance `ξ = Cov(X, U₀)`.
    pub fn xi(&self) -> &DVector<f64> {
        &self.xi
    }

    /// Slant vector `η` recovered from `ξ`.
    pub fn eta(&self) -> Result<DVector<f64>> {
        eta_from_xi(&self.xi, &self.sigma)
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

    fn gaussian_part(&self, b: &[usize], l_b: &DVector<f64>, rows: &[Constraint]) -> Result<(f64, f64)> {
        let d = self.dim();
        let (chol_bb, ln_det_bb) = if b.len() == d {
            (None, self.ln_det)
        } else {
            let c = linalg::cholesky(&linalg::select(&self.sigma, b, b), "covariance block")?;
            let ld = linalg::log_det(&c);
            (Some(c), ld)
        };
        let chol = chol_bb.as_ref().unwrap_or(&self.chol);
        let proj = project(chol, ln_det_bb, l_b);
        let ln_prob = ln_constraint_probability(&self.aug, chol, b, l_b, &proj, rows, &self.opts)?;
        Ok((proj.ln_core, ln_prob))
    }
}

impl SpectralModel for SbrModel {
    fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    fn exponent(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        check_point(x, d, true)?;
        let s = &self.sigma;
        let xi = &self.xi;
        let mut v = 0.0;
        for k in 0..d {
            if x[k].is_infinite() {
                continue;
            }
            let others: Vec<usize> = (0..d).filter(|&j| j != k && x[j].is_finite()).collect();
            let m = others.len();
            // Coordinates X_j − X_k (j ≠ k) and −U₀ under the law tilted toward site k.
            let mut upper: Vec<f64> = others
                .iter()
                .map(|&j| x[j].ln() - x[k].ln() + self.a[j] - self.a[k] + s[(k, k)] - s[(j, k)])
                .collect();
            upper.push(xi[k]);
            let mut cov = DMatrix::zeros(m + 1, m + 1);
            for (p, &i) in others.iter().enumerate() {
                for (q, &j) in others.iter().enumerate() {
                    cov[(p, q)] = s[(i, j)] - s[(i, k)] - s[(j, k)] + s[(k, k)];
                }
                cov[(p, m)] = -(xi[i] - xi[k]);
                cov[(m, p)] = cov[(p, m)];
            }
            cov[(m, m)] = 1.0;
            let lower = vec![f64::NEG_INFINITY; m + 1];
            let p = mvn_cdf(&lower, &upper, &vec![0.0; m + 1], &cov, &self.opts)?;
            v += p.value / (x[k] * norm_cdf(xi[k]));
        }
        Ok(v)
    }

    fn ln_intensity(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        check_point(x, d, false)?;
        let l = self.log_shift(x);
        let b: Vec<usize> = (0..d).collect();
        let (ln_core, ln_prob) = self.gaussian_part(&b, &l, &[Constraint::Latent(d)])?;
        Ok(std::f64::consts::LN_2 + ln_prob + ln_core - x.iter().map(|v| v.ln()).sum::<f64>())
    }

    fn partial(&self, x: &[f64], subset: &[usize]) -> Result<f64> {
        let d = self.dim();
        check_point(x, d, false)?;
        let b = check_subset(subset, d)?;
        let l = self.log_shift(x);
        let l_b = linalg::select_vec(&l, &b);
        let mut rows: Vec<Constraint> =
            linalg::complement(d, &b).into_iter().map(|j| Constraint::Site(j, l[j])).collect();
        rows.push(Constraint::Latent(d));
        let (ln_core, ln_prob) = self.gaussian_part(&b, &l_b, &rows)?;
        let ln_xb: f64 = b.iter().map(|&i| x[i].ln()).sum();
        Ok(2.0 * (ln_core - ln_xb + ln_prob).exp())
    }

    fn ln_marginal_intensity(&self, x_obs: &[f64], observed: &[usize]) -> Result<f64> {
        let d = self.dim();
        let o = check_subset(observed, d)?;
        if o != observed {
            return Err(Error::Domain("observed indices must be strictly increasing".into()));
        }
        check_point(x_obs, o.len(), false)?;
        let l_o = DVector::from_fn(o.len(), |p, _| x_obs[p].ln() + self.a[o[p]]);
        let (ln_core, ln_prob) = self.gaussian_part(&o, &l_o, &[Constraint::Latent(d)])?;
        Ok(std::f64::consts::LN_2 + ln_prob + ln_core - x_obs.iter().map(|v| v.ln()).sum::<f64>())
    }
}
