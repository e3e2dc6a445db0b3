//! Samplers of the spectral process under the measure tilted toward one site.
//!
//! A draw for site `k` returns `W / W_k` under `P_k(·) = E[1{W/W_k ∈ ·} W_k]`,
//! so its `k`-th entry is exactly 1.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dist::trunc::{trunc_std_normal, ChainState};
use crate::dist::{OrthantSampler, TruncMethod};
use crate::error::Result;
use crate::linalg;
use crate::model::{Model, SpectralModel};

#[derive(Debug, Clone)]
enum Kind {
    Br {
        chol_l: DMatrix<f64>,
        /// `γ̃_jk = Var(G_j − G_k)/2`
        half_var: DMatrix<f64>,
    },
    Sbr {
        sigma: DMatrix<f64>,
        xi: DVector<f64>,
        a: DVector<f64>,
        /// Cholesky factor of `Σ − ξξᵀ`.
        chol_l: DMatrix<f64>,
    },
    Tet {
        df: f64,
        a: DVector<f64>,
        others: Vec<Vec<usize>>,
        samplers: Vec<OrthantSampler>,
    },
}

/// Per-site tilted samplers for one model.
#[derive(Debug, Clone)]
pub struct TiltedSampler {
    dim: usize,
    kind: Kind,
}

/// Per-sample scratch state (Gibbs chains of the truncated-t laws).
#[derive(Debug, Clone, Default)]
pub struct TiltState {
    chains: Vec<Option<ChainState>>,
}

impl TiltedSampler {
    /// `method` selects the truncated-t sampler for the extremal-t family.
    pub fn new(model: &Model, method: TruncMethod) -> Result<Self> {
        let dim = model.dim();
        let kind = match model {
            Model::Br(m) => {
                let s = m.sigma();
                let chol_l = linalg::cholesky(s, "covariance")?.l();
                let half_var = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (s[(i, i)] + s[(j, j)] - 2.0 * s[(i, j)]));
                Kind::Br { chol_l, half_var }
            }
            Model::Sbr(m) => {
                let s = m.sigma().clone();
                let xi = m.xi().clone();
                let cond = &s - &xi * xi.transpose();
                let chol_l = linalg::cholesky(&cond, "conditional covariance")?.l();
                Kind::Sbr { sigma: s, xi, a: m.centring().clone(), chol_l }
            }
            Model::Tet(m) => {
                let mut others = Vec::with_capacity(dim);
                let mut samplers = Vec::with_capacity(dim);
                for k in 0..dim {
                    let law = m.tilted_law(k);
                    others.push(law.others.clone());
                    if !law.others.is_empty() {
                        samplers.push(OrthantSampler::new(
                            &law.mean,
                            &law.scale,
                            Some(m.df() + 1.0),
                            method,
                            Some(law.mass),
                        )?);
                    }
                }
                Kind::Tet { df: m.df(), a: m.normalizers().clone(), others, samplers }
            }
        };
        Ok(TiltedSampler { dim, kind })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn new_state(&self) -> TiltState {
        TiltState { chains: vec![None; self.dim] }
    }

    /// One draw of `W / W_k` under `P_k`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, k: usize, state: &mut TiltState) -> Vec<f64> {
        let d = self.dim;
        match &self.kind {
            Kind::Br { chol_l, half_var } => {
                let g = gaussian(rng, chol_l);
                (0..d).map(|j| if j == k { 1.0 } else { (g[j] - g[k] - half_var[(j, k)]).exp() }).collect()
            }
            Kind::Sbr { sigma, xi, a, chol_l } => {
                let u0 = trunc_std_normal(rng, -xi[k], f64::INFINITY);
                let g = gaussian(rng, chol_l);
                let y: Vec<f64> = (0..d).map(|j| sigma[(j, k)] + xi[j] * u0 + g[j]).collect();
                (0..d).map(|j| if j == k { 1.0 } else { (y[j] - y[k] - a[j] + a[k]).exp() }).collect()
            }
            Kind::Tet { df, a, others, samplers } => {
                let mut w = vec![1.0; d];
                if d == 1 {
                    return w;
                }
                let v = samplers[k].draw(rng, &mut state.chains[k]);
                for (p, &j) in others[k].iter().enumerate() {
                    w[j] = a[k] * v[p].powf(*df) / a[j];
                }
                w
            }
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, chol_l: &DMatrix<f64>) -> DVector<f64> {
    let z = DVector::from_fn(chol_l.nrows(), |_, _| StandardNormal.sample(rng));
    chol_l * z
}
