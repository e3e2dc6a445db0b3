//! Spectral models: parametrization, exponent functions, intensities and
//! partial derivatives of the exponent function.

pub mod br;
pub(crate) mod gauss;
pub mod sbr;
pub mod sites;
pub mod skew;
pub mod tet;
pub mod variogram;

use serde::{Deserialize, Serialize};

pub use br::BrModel;
pub use sbr::SbrModel;
pub use sites::SiteSet;
pub use skew::{eta_from_kernels, eta_from_xi, kernel_basis, xi_from_eta, SkewFieldSpec};
pub use tet::TetModel;
pub use variogram::{build_br_cov, build_corr, semivariogram, VariogramSpec};

use crate::dist::CdfOptions;
use crate::error::{Error, Result};

/// Exponent function, intensity and partial derivatives of a simple max-stable law.
pub trait SpectralModel: Send + Sync {
    fn dim(&self) -> usize;

    /// `V(x)`; entries may be `+∞` (that coordinate drops out).
    fn exponent(&self, x: &[f64]) -> Result<f64>;

    /// `ln κ(x)`, the log of the full mixed partial derivative `−V_{1..D}`.
    fn ln_intensity(&self, x: &[f64]) -> Result<f64>;

    fn intensity(&self, x: &[f64]) -> Result<f64> {
        self.ln_intensity(x).map(f64::exp)
    }

    /// `−V_B(x)`, the mixed partial derivative over the coordinates in `subset`.
    fn partial(&self, x: &[f64], subset: &[usize]) -> Result<f64>;

    /// `ln[−V_B(x_B, ∞)]` for `B = observed`, evaluated at the observed sub-vector.
    fn ln_marginal_intensity(&self, x_obs: &[f64], observed: &[usize]) -> Result<f64>;

    /// Extremal coefficient `V(1, …, 1)`.
    fn theta(&self) -> Result<f64> {
        self.exponent(&vec![1.0; self.dim()])
    }
}

/// Serializable parameter bundle of one of the three families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelParams {
    /// Brown–Resnick.
    Br(BrParams),
    /// Skewed Brown–Resnick.
    Sbr(SbrParams),
    /// Truncated extremal-t.
    Tet(TetParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrParams {
    pub variogram: VariogramSpec,
    #[serde(default)]
    pub anchor: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbrParams {
    pub variogram: VariogramSpec,
    pub skew: SkewFieldSpec,
    #[serde(default)]
    pub anchor: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TetParams {
    pub variogram: VariogramSpec,
    pub df: f64,
}

impl ModelParams {
    pub fn family(&self) -> &'static str {
        match self {
            ModelParams::Br(_) => "br",
            ModelParams::Sbr(_) => "sbr",
            ModelParams::Tet(_) => "tet",
        }
    }

    pub fn variogram(&self) -> &VariogramSpec {
        match self {
            ModelParams::Br(p) => &p.variogram,
            ModelParams::Sbr(p) => &p.variogram,
            ModelParams::Tet(p) => &p.variogram,
        }
    }
}

/// A model with its derived caches built for a site set.
#[derive(Debug, Clone)]
pub enum Model {
    Br(BrModel),
    Sbr(SbrModel),
    Tet(TetModel),
}

impl Model {
    pub fn build(params: &ModelParams, sites: &SiteSet, opts: CdfOptions) -> Result<Model> {
        Ok(match params {
            ModelParams::Br(p) => Model::Br(BrModel::new(sites, &p.variogram, p.anchor, opts)?),
            ModelParams::Sbr(p) => Model::Sbr(SbrModel::new(sites, &p.variogram, &p.skew, p.anchor, opts)?),
            ModelParams::Tet(p) => Model::Tet(TetModel::new(sites, &p.variogram, p.df, opts)?),
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            Model::Br(_) => "br",
            Model::Sbr(_) => "sbr",
            Model::Tet(_) => "tet",
        }
    }

    fn inner(&self) -> &dyn SpectralModel {
        match self {
            Model::Br(m) => m,
            Model::Sbr(m) => m,
            Model::Tet(m) => m,
        }
    }
}

impl SpectralModel for Model {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn exponent(&self, x: &[f64]) -> Result<f64> {
        self.inner().exponent(x)
    }
    fn ln_intensity(&self, x: &[f64]) -> Result<f64> {
        self.inner().ln_intensity(x)
    }
    fn partial(&self, x: &[f64], subset: &[usize]) -> Result<f64> {
        self.inner().partial(x, subset)
    }
    fn ln_marginal_intensity(&self, x_obs: &[f64], observed: &[usize]) -> Result<f64> {
        self.inner().ln_marginal_intensity(x_obs, observed)
    }
}

/// Checks `x > 0` with the right length; `+∞` only when `allow_inf`.
pub(crate) fn check_point(x: &[f64], d: usize, allow_inf: bool) -> Result<()> {
    if x.len() != d {
        return Err(Error::Dimension(format!("point has {} coordinates, model {d}", x.len())));
    }
    for (i, &v) in x.iter().enumerate() {
        if !(v > 0.0) || (v.is_infinite() && !allow_inf) {
            return Err(Error::Domain(format!("coordinate {i} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

/// Sorted, de-duplicated, in-range, nonempty index subset.
pub(crate) fn check_subset(subset: &[usize], d: usize) -> Result<Vec<usize>> {
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() || s.len() != subset.len() || *s.last().unwrap() >= d {
        return Err(Error::Domain(format!("index subset {subset:?} must be nonempty, distinct and below {d}")));
    }
    Ok(s)
}
