//! Anisotropic power-law semivariogram and the covariance and correlation
//! matrices built from it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sites::SiteSet;
use crate::error::{Error, Result};
use crate::linalg;

/// Power-law semivariogram `γ(h) = (‖V h‖ / λ)^ϑ` with
/// `V = [[cos ζ, −sin ζ], [m sin ζ, m cos ζ]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariogramSpec {
    /// λ > 0
    pub range: f64,
    /// ϑ ∈ (0, 2]
    pub smoothness: f64,
    /// ζ ∈ (−π/4, π/4)
    #[serde(default)]
    pub rotation: f64,
    /// m > 0
    #[serde(default = "one")]
    pub stretch: f64,
}

fn one() -> f64 {
    1.0
}

impl VariogramSpec {
    pub fn isotropic(range: f64, smoothness: f64) -> Self {
        VariogramSpec { range, smoothness, rotation: 0.0, stretch: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.range > 0.0
            && self.range.is_finite()
            && self.smoothness > 0.0
            && self.smoothness <= 2.0
            && self.stretch > 0.0
            && self.stretch.is_finite()
            && self.rotation.abs() < std::f64::consts::FRAC_PI_4;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "variogram needs range > 0, smoothness in (0, 2], stretch > 0, |rotation| < π/4; got {self:?}"
            )))
        }
    }

    /// `‖V h‖ / λ`
    pub fn scaled_norm(&self, h: [f64; 2]) -> f64 {
        let (s, c) = self.rotation.sin_cos();
        let u = c * h[0] - s * h[1];
        let v = self.stretch * (s * h[0] + c * h[1]);
        u.hypot(v) / self.range
    }

    /// `γ(h)`
    pub fn gamma(&self, h: [f64; 2]) -> f64 {
        let r = self.scaled_norm(h);
        if r == 0.0 {
            0.0
        } else {
            r.powf(self.smoothness)
        }
    }

    /// Powered-exponential correlation `exp(−γ(h))`.
    pub fn correlation(&self, h: [f64; 2]) -> f64 {
        (-self.gamma(h)).exp()
    }
}

/// `γ(h)` for a validated spec.
pub fn semivariogram(spec: &VariogramSpec, h: [f64; 2]) -> f64 {
    spec.gamma(h)
}

fn lag(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Covariance of the anchored Gaussian field,
/// `Σ_ij = γ(s_i − s₀) + γ(s_j − s₀) − γ(s_i − s_j)`.
///
/// Then `Var(Y_i − Y_j) = 2γ(s_i − s_j)`. A site on the anchor has zero variance and is rejected.
pub fn build_br_cov(sites: &SiteSet, vario: &VariogramSpec, anchor: [f64; 2]) -> Result<DMatrix<f64>> {
    vario.validate()?;
    let d = sites.len();
    let g0: Vec<f64> = sites.coords().iter().map(|&s| vario.gamma(lag(s, anchor))).collect();
    for (i, &g) in g0.iter().enumerate() {
        if g <= 0.0 {
            return Err(Error::Domain(format!(
                "site {} coincides with the variogram anchor ({}, {})",
                sites.ids()[i],
                anchor[0],
                anchor[1]
            )));
        }
    }
    let sigma = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            2.0 * g0[i]
        } else {
            g0[i] + g0[j] - vario.gamma(lag(sites.coord(i), sites.coord(j)))
        }
    });
    linalg::cholesky(&sigma, "variogram covariance")?;
    Ok(sigma)
}

/// Unit-diagonal powered-exponential correlation matrix.
pub fn build_corr(sites: &SiteSet, vario: &VariogramSpec) -> Result<DMatrix<f64>> {
    vario.validate()?;
    let d = sites.len();
    let c = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0
        } else {
            vario.correlation(lag(sites.coord(i), sites.coord(j)))
        }
    });
    linalg::cholesky(&c, "correlation matrix")?;
    Ok(c)
}
