//! Truncated extremal-t spectral model.
//!
//! `Y ~ N(0, Σ)` conditioned on `Y ≥ 0` with `Σ` a correlation matrix, and
//! `W_j = Y_j^ν / a_j` with `a_j = E Y_j^ν` so that `E W_j = 1`.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use super::sites::SiteSet;
use super::variogram::{build_corr, VariogramSpec};
use super::{check_point, check_subset, SpectralModel};
use crate::dist::{mvn_cdf, mvt_rect, CdfOptions, ProbResult};
use crate::error::{Error, Result};
use crate::linalg::{self, Chol};

/// Relative accuracy targeted for the normalizing orthant probabilities.
const NORMALIZER_REL_TOL: f64 = 1e-3;

/// Law of `Y_{−k} / Y_k` under the spectral measure tilted toward site `k`:
/// `μ_k + T ≥ 0` with `T ~ t_{ν+1}(0, R_k/(ν+1))`.
#[derive(Debug, Clone)]
pub struct TiltedLaw {
    pub others: Vec<usize>,
    pub mean: Vec<f64>,
    pub scale: DMatrix<f64>,
    /// `Pr(μ_k + T ≥ 0)`.
    pub mass: f64,
}

/// Truncated extremal-t model with cached normalizers.
#[derive(Debug, Clone)]
pub struct TetModel {
    corr: DMatrix<f64>,
    chol: Chol,
    ln_det: f64,
    df: f64,
    p0: f64,
    a: DVector<f64>,
    tilted: Vec<TiltedLaw>,
    opts: CdfOptions,
}

/// Re-runs a probability with a tighter absolute tolerance until its
/// error estimate is small relative to its value.
fn relative_prob<F: Fn(&CdfOptions) -> Result<ProbResult>>(opts: &CdfOptions, f: F) -> Result<f64> {
    let mut o = *opts;
    let mut r = f(&o)?;
    for _ in 0..4 {
        if r.error_estimate <= NORMALIZER_REL_TOL * r.value || r.value <= 0.0 {
            break;
        }
        o.abs_tol = Some(0.5 * NORMALIZER_REL_TOL * r.value);
        r = f(&o)?;
    }
    Ok(r.value)
}

/// `2^{(ν−2)/2} Γ((ν+1)/2) / √π`.
fn ln_c_nu(nu: f64) -> f64 {
    0.5 * (nu - 2.0) * std::f64::consts::LN_2 + ln_gamma(0.5 * (nu + 1.0)) - 0.5 * std::f64::consts::PI.ln()
}

impl TetModel {
    pub fn new(sites: &SiteSet, vario: &VariogramSpec, df: f64, opts: CdfOptions) -> Result<Self> {
        Self::from_corr(build_corr(sites, vario)?, df, opts)
    }

    /// From a positive-definite correlation matrix and `ν > 0`.
    pub fn from_corr(corr: DMatrix<f64>, df: f64, opts: CdfOptions) -> Result<Self> {
        if !(df > 0.0 && df.is_finite()) {
            return Err(Error::Domain(format!("degrees of freedom must be positive and finite, got {df}")));
        }
        linalg::check_square_symmetric(&corr, "correlation matrix")?;
        let d = corr.nrows();
        if (0..d).any(|i| (corr[(i, i)] - 1.0).abs() > 1e-12) {
            return Err(Error::Domain("correlation matrix must have unit diagonal".into()));
        }
        let chol = linalg::cholesky(&corr, "correlation matrix")?;
        let ln_det = linalg::log_det(&chol);
        let p0 = if d == 1 {
            0.5
        } else {
            let lower = vec![0.0; d];
            let upper = vec![f64::INFINITY; d];
            let mean = vec![0.0; d];
            relative_prob(&opts, |o| mvn_cdf(&lower, &upper, &mean, &corr, o))?
        };
        if !(p0 > 0.0) {
            return Err(Error::Underflow("orthant probability of the correlation matrix underflows".into()));
        }
        let mut tilted = Vec::with_capacity(d);
        for k in 0..d {
            tilted.push(tilted_law(&corr, k, df, &opts)?);
        }
        let ln_c = ln_c_nu(df);
        let a = DVector::from_fn(d, |k, _| (ln_c + tilted[k].mass.ln() - p0.ln()).exp());
        Ok(TetModel { corr, chol, ln_det, df, p0, a, tilted, opts })
    }

    pub fn corr(&self) -> &DMatrix<f64> {
        &self.corr
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    /// `Pr(Y ≥ 0)` for `Y ~ N(0, Σ)`.
    pub fn orthant_probability(&self) -> f64 {
        self.p0
    }

    /// Normalizers `a_j = E Y_j^ν`.
    pub fn normalizers(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn tilted_law(&self, k: usize) -> &TiltedLaw {
        &self.tilted[k]
    }

    pub fn cdf_options(&self) -> &CdfOptions {
        &self.opts
    }

    pub fn set_cdf_options(&mut self, opts: CdfOptions) {
        self.opts = opts;
    }

    /// `ln[−V_B]` given `ln x_B`. The complement is constrained to
    /// `[0, z_C]` when `ln_x_c` is given and to `[0, ∞)` otherwise (marginal).
    fn ln_partial_core(&self, b: &[usize], ln_x: &[f64], ln_x_c: Option<&[f64]>) -> Result<f64> {
        let d = self.dim();
        let nu = self.df;
        let k = b.len();
        let ln_z: Vec<f64> = b.iter().zip(ln_x).map(|(&i, &lx)| (self.a[i].ln() + lx) / nu).collect();
        let shift = ln_z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z_b = DVector::from_fn(k, |p, _| (ln_z[p] - shift).exp());
        let (chol_bb, ln_det_bb) = if k == d {
            (None, self.ln_det)
        } else {
            let c = linalg::cholesky(&linalg::select(&self.corr, b, b), "correlation block")?;
            let ld = linalg::log_det(&c);
            (Some(c), ld)
        };
        let chol = chol_bb.as_ref().unwrap_or(&self.chol);
        let pz = chol.solve(&z_b);
        let q = z_b.dot(&pz).sqrt();
        let ln_q = q.ln() + shift;
        let kf = k as f64;
        let mut ln_v = b.iter().zip(ln_x).map(|(&i, &lx)| (self.a[i].ln() + (1.0 - nu) * lx) / nu).sum::<f64>()
            + (1.0 - kf) * nu.ln()
            - 0.5 * kf * std::f64::consts::PI.ln()
            + 0.5 * (nu - 2.0) * std::f64::consts::LN_2
            + ln_gamma(0.5 * (kf + nu))
            - self.p0.ln()
            - 0.5 * ln_det_bb
            - (kf + nu) * ln_q;
        if k < d {
            let c = linalg::complement(d, b);
            let s_cb = linalg::select(&self.corr, &c, b);
            let m = &s_cb * &pz;
            let pc = chol.solve(&s_cb.transpose());
            let r = linalg::select(&self.corr, &c, &c) - &s_cb * pc;
            let dof = kf + nu;
            let scale = 0.5 * (&r + r.transpose()) / dof;
            let mean: Vec<f64> = m.iter().map(|v| v / q).collect();
            let lower = vec![0.0; c.len()];
            let upper: Vec<f64> = match ln_x_c {
                Some(lxc) => c
                    .iter()
                    .zip(lxc)
                    .map(|(&j, &lx)| (((self.a[j].ln() + lx) / nu) - shift).exp() / q)
                    .collect(),
                None => vec![f64::INFINITY; c.len()],
            };
            let p = mvt_rect(&lower, &upper, &mean, &scale, dof, &self.opts)?;
            ln_v += p.value.ln();
        }
        Ok(ln_v)
    }
}

fn tilted_law(corr: &DMatrix<f64>, k: usize, nu: f64, opts: &CdfOptions) -> Result<TiltedLaw> {
    let d = corr.nrows();
    let others: Vec<usize> = (0..d).filter(|&j| j != k).collect();
    let m = others.len();
    let mean: Vec<f64> = others.iter().map(|&j| corr[(j, k)]).collect();
    let scale = DMatrix::from_fn(m, m, |p, q| {
        let (i, j) = (others[p], others[q]);
        (corr[(i, j)] - corr[(i, k)] * corr[(j, k)]) / (nu + 1.0)
    });
    let mass = if m == 0 {
        1.0
    } else {
        let lower = vec![0.0; m];
        let upper = vec![f64::INFINITY; m];
        relative_prob(opts, |o| mvt_rect(&lower, &upper, &mean, &scale, nu + 1.0, o))?
    };
    if !(mass > 0.0) {
        return Err(Error::Underflow(format!("tilted orthant probability at site {k} underflows")));
    }
    Ok(TiltedLaw { others, mean, scale, mass })
}

impl SpectralModel for TetModel {
    fn dim(&self) -> usize {
        self.corr.nrows()
    }

    fn exponent(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        check_point(x, d, true)?;
        let nu = self.df;
        let mut v = 0.0;
        for k in 0..d {
            if x[k].is_infinite() {
                continue;
            }
            let law = &self.tilted[k];
            if law.others.is_empty() {
                v += 1.0 / x[k];
                continue;
            }
            let upper: Vec<f64> = law
                .others
                .iter()
                .map(|&j| ((self.a[j] * x[j]) / (self.a[k] * x[k])).powf(1.0 / nu))
                .collect();
            let lower = vec![0.0; upper.len()];
            let p = mvt_rect(&lower, &upper, &law.mean, &law.scale, nu + 1.0, &self.opts)?;
            v += p.value / (x[k] * law.mass);
        }
        Ok(v)
    }

    fn ln_intensity(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        check_point(x, d, false)?;
        let b: Vec<usize> = (0..d).collect();
        let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        self.ln_partial_core(&b, &ln_x, None)
    }

    fn partial(&self, x: &[f64], subset: &[usize]) -> Result<f64> {
        let d = self.dim();
        check_point(x, d, false)?;
        let b = check_subset(subset, d)?;
        let ln_x: Vec<f64> = b.iter().map(|&i| x[i].ln()).collect();
        let ln_xc: Vec<f64> = linalg::complement(d, &b).iter().map(|&j| x[j].ln()).collect();
        Ok(self.ln_partial_core(&b, &ln_x, Some(&ln_xc))?.exp())
    }

    fn ln_marginal_intensity(&self, x_obs: &[f64], observed: &[usize]) -> Result<f64> {
        let d = self.dim();
        let o = check_subset(observed, d)?;
        if o != observed {
            return Err(Error::Domain("observed indices must be strictly increasing".into()));
        }
        check_point(x_obs, o.len(), false)?;
        let ln_x: Vec<f64> = x_obs.iter().map(|v| v.ln()).collect();
        self.ln_partial_core(&o, &ln_x, None)
    }
}
