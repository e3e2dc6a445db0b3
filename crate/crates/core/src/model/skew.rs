//! Kernel-spline slant fields and the slant/latent-covariance maps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::sites::SiteSet;
use crate::error::{Error, Result};
use crate::linalg;

/// Gaussian-kernel basis for the slant field: `η = Σ_j b_j K_j + background`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewFieldSpec {
    pub centers: Vec<[f64; 2]>,
    pub coefficients: Vec<f64>,
    pub bandwidth: f64,
    /// Per-site additive term; zero when absent.
    #[serde(default)]
    pub background: Option<Vec<f64>>,
}

/// Centred and normalized kernels: column `j` sums to 0 and has unit sum of squares.
pub fn kernel_basis(sites: &SiteSet, centers: &[[f64; 2]], bandwidth: f64) -> Result<DMatrix<f64>> {
    if !(bandwidth > 0.0) {
        return Err(Error::Domain(format!("kernel bandwidth must be positive, got {bandwidth}")));
    }
    let d = sites.len();
    let mut k = DMatrix::zeros(d, centers.len());
    for (j, c) in centers.iter().enumerate() {
        let raw: Vec<f64> = sites
            .coords()
            .iter()
            .map(|s| {
                let r2 = (s[0] - c[0]).powi(2) + (s[1] - c[1]).powi(2);
                (-0.5 * r2 / (bandwidth * bandwidth)).exp()
            })
            .collect();
        let mean = raw.iter().sum::<f64>() / d as f64;
        let centred: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        let norm = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 1e-12 * mean.abs().max(1e-300)) {
            return Err(Error::Domain(format!(
                "kernel centred at ({}, {}) is constant over the sites",
                c[0], c[1]
            )));
        }
        for i in 0..d {
            k[(i, j)] = centred[i] / norm;
        }
    }
    Ok(k)
}

/// Slant vector from the kernel-spline spec.
pub fn eta_from_kernels(sites: &SiteSet, skew: &SkewFieldSpec) -> Result<DVector<f64>> {
    if skew.centers.len() != skew.coefficients.len() {
        return Err(Error::Dimension(format!(
            "{} kernel centres for {} coefficients",
            skew.centers.len(),
            skew.coefficients.len()
        )));
    }
    let k = kernel_basis(sites, &skew.centers, skew.bandwidth)?;
    let mut eta = k * DVector::from_column_slice(&skew.coefficients);
    if let Some(bg) = &skew.background {
        if bg.len() != sites.len() {
            return Err(Error::Dimension(format!("background has {} entries for {} sites", bg.len(), sites.len())));
        }
        eta += DVector::from_column_slice(bg);
    }
    Ok(eta)
}

/// `ξ = Σ η / √(1 + ηᵀΣη)`.
pub fn xi_from_eta(eta: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<DVector<f64>> {
    if eta.len() != sigma.nrows() {
        return Err(Error::Dimension(format!("slant has {} entries, matrix {}", eta.len(), sigma.nrows())));
    }
    let se = sigma * eta;
    Ok(&se / (1.0 + eta.dot(&se)).sqrt())
}

/// Inverse map `η = Σ⁻¹ξ / √(1 − ξᵀΣ⁻¹ξ)`.
pub fn eta_from_xi(xi: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<DVector<f64>> {
    let chol = linalg::cholesky(sigma, "covariance")?;
    let p = chol.solve(xi);
    let s = 1.0 - xi.dot(&p);
    if !(s > 0.0) {
        return Err(Error::Domain(format!("ξᵀΣ⁻¹ξ = {} must be below 1", 1.0 - s)));
    }
    Ok(p / s.sqrt())
}
