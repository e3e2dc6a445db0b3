//! Brute-force references for the closed forms: radial quadrature of the
//! intensity, Monte Carlo of the exponent function, finite differences of the
//! exponent function and an inclusion–exclusion expansion of truncated cdfs.
//!
//! Every routine here works from model parameters only (covariances, slants,
//! degrees of freedom) and never calls the closed-form evaluators it is meant
//! to check.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::dist::bvn::{bvn_rect, tvn_rect, uvn_rect};
use crate::dist::normal;
use crate::dist::quad;
use crate::dist::student::{t_rect_lowdim, uvt_rect};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Model;
use crate::rng::substream;

/// Largest dimension accepted by the quadrature-based oracles.
pub const MAX_QUAD_DIM: usize = 4;
/// Largest subset size accepted by [`finite_diff_partial`].
pub const MAX_FD_ORDER: usize = 3;
/// Default relative finite-difference step.
pub const FD_REL_STEP: f64 = 1e-4;
/// Monte Carlo draws per parallel chunk; chunk `c` uses substream `c`.
const MC_CHUNK: usize = 1 << 14;
/// Log-integrand drop that bounds the radial support.
const SUPPORT_DROP: f64 = 60.0;

/// Result of an oracle evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub value: f64,
    /// Absolute error estimate, always nonnegative.
    pub error: f64,
    pub method: String,
    pub evals: usize,
    /// False when the method could not meet its own accuracy check.
    pub converged: bool,
    /// Inputs needed to reproduce the value exactly (tolerance, step, draws, seed).
    pub metadata: BTreeMap<String, f64>,
}

fn check_quad_dim(d: usize, what: &str) -> Result<()> {
    if d == 0 || d > MAX_QUAD_DIM {
        return Err(Error::Domain(format!("{what} supports dimensions 1..={MAX_QUAD_DIM}, got {d}")));
    }
    Ok(())
}

fn ln_mvn_pdf_centered(y: &DVector<f64>, chol: &linalg::Chol, ln_det: f64) -> f64 {
    let z = chol.l().solve_lower_triangular(y).expect("triangular solve of a factorized matrix");
    let d = y.len() as f64;
    -0.5 * d * (2.0 * std::f64::consts::PI).ln() - 0.5 * ln_det - 0.5 * z.norm_squared()
}

/// Orthant probability `Pr(X_S ≥ 0)` of a centred normal with covariance `c` (dimension ≤ 3).
fn orthant_lowdim(mean: &[f64], c: &DMatrix<f64>) -> f64 {
    let k = mean.len();
    let sd: Vec<f64> = (0..k).map(|i| c[(i, i)].sqrt()).collect();
    let lo: Vec<f64> = (0..k).map(|i| -mean[i] / sd[i]).collect();
    match k {
        0 => 1.0,
        1 => uvn_rect(lo[0], f64::INFINITY),
        2 => bvn_rect([lo[0], lo[1]], [f64::INFINITY; 2], c[(0, 1)] / (sd[0] * sd[1])),
        _ => {
            let mut r = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    r[i][j] = c[(i, j)] / (sd[i] * sd[j]);
                }
            }
            tvn_rect([lo[0], lo[1], lo[2]], [f64::INFINITY; 3], r)
        }
    }
}

/// Density of the spectral vector `W` of one of the three families.
#[derive(Debug, Clone)]
pub enum SpectralDensity {
    /// `W = exp(G − diag(Σ)/2)`, `G ~ N(0, Σ)`.
    Br { sigma: DMatrix<f64> },
    /// `W = exp(Y − a)`, `Y` skew-normal with latent cross-covariance `ξ`.
    Sbr { sigma: DMatrix<f64>, xi: DVector<f64> },
    /// `W_j = X_j^ν / a_j`, `X ~ N(0, R)` restricted to the nonnegative orthant.
    Tet { corr: DMatrix<f64>, df: f64 },
}

/// Precomputed pieces of a [`SpectralDensity`].
struct Prepared {
    kind: SpectralDensity,
    chol: linalg::Chol,
    ln_det: f64,
    /// Log centring constants: `ln E e^{Y_j}` for the Gaussian families, `ln a_j` for tET.
    ln_a: Vec<f64>,
    /// sBR: `Σ⁻¹ξ / √(1 − ξᵀΣ⁻¹ξ)`; tET: `ln P0` in entry 0.
    aux: DVector<f64>,
}

impl SpectralDensity {
    /// Parameters of `model`, read from its public accessors.
    pub fn from_model(model: &Model) -> Self {
        match model {
            Model::Br(m) => SpectralDensity::Br { sigma: m.sigma().clone() },
            Model::Sbr(m) => SpectralDensity::Sbr { sigma: m.sigma().clone(), xi: m.xi().clone() },
            Model::Tet(m) => SpectralDensity::Tet { corr: m.corr().clone(), df: m.df() },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SpectralDensity::Br { sigma } | SpectralDensity::Sbr { sigma, .. } => sigma.nrows(),
            SpectralDensity::Tet { corr, .. } => corr.nrows(),
        }
    }

    fn prepare(&self) -> Result<Prepared> {
        let d = self.dim();
        match self {
            SpectralDensity::Br { sigma } => {
                let chol = linalg::cholesky(sigma, "oracle covariance")?;
                let ln_det = linalg::log_det(&chol);
                let ln_a = (0..d).map(|j| 0.5 * sigma[(j, j)]).collect();
                Ok(Prepared { kind: self.clone(), chol, ln_det, ln_a, aux: DVector::zeros(0) })
            }
            SpectralDensity::Sbr { sigma, xi } => {
                let chol = linalg::cholesky(sigma, "oracle covariance")?;
                let ln_det = linalg::log_det(&chol);
                let s_inv_xi = chol.solve(xi);
                let q = xi.dot(&s_inv_xi);
                if !(q < 1.0) {
                    return Err(Error::Domain("latent cross-covariance violates ξᵀΣ⁻¹ξ < 1".into()));
                }
                let alpha = s_inv_xi / (1.0 - q).sqrt();
                // E e^{Y_j} = 2 e^{Σ_jj/2} Φ(ξ_j)
                let ln_a = (0..d)
                    .map(|j| std::f64::consts::LN_2 + 0.5 * sigma[(j, j)] + normal::cdf(xi[j]).ln())
                    .collect();
                Ok(Prepared { kind: self.clone(), chol, ln_det, ln_a, aux: alpha })
            }
            SpectralDensity::Tet { corr, df } => {
                check_quad_dim(d, "tET spectral density")?;
                let chol = linalg::cholesky(corr, "oracle correlation")?;
                let ln_det = linalg::log_det(&chol);
                let p0 = orthant_probability_by_conditioning(corr)?;
                let ln_a = (0..d)
                    .map(|k| Ok((truncated_moment(corr, k, *df)? / p0).ln()))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(Prepared { kind: self.clone(), chol, ln_det, ln_a, aux: DVector::from_element(1, p0.ln()) })
            }
        }
    }
}

/// `Pr(X ≥ 0)` for `X ~ N(0, R)` by integrating over the first coordinate.
fn orthant_probability_by_conditioning(corr: &DMatrix<f64>) -> Result<f64> {
    let d = corr.nrows();
    if d == 1 {
        return Ok(0.5);
    }
    orthant_moment(corr, 0, 0.0)
}

/// `E[X_k^ν 1{X ≥ 0}] / P0` numerator for `X ~ N(0, R)`.
fn truncated_moment(corr: &DMatrix<f64>, k: usize, df: f64) -> Result<f64> {
    orthant_moment(corr, k, df)
}

/// `E[X_k^p 1{X ≥ 0}]` by 1-D quadrature over `X_k` with the remaining
/// coordinates' orthant probability evaluated exactly (at most 3 dimensions).
fn orthant_moment(corr: &DMatrix<f64>, k: usize, p: f64) -> Result<f64> {
    let d = corr.nrows();
    check_quad_dim(d, "orthant moment")?;
    let rest = linalg::complement(d, &[k]);
    let c_rk = DVector::from_fn(rest.len(), |i, _| corr[(rest[i], k)] / corr[(k, k)]);
    let cond = linalg::select(corr, &rest, &rest) - &c_rk * c_rk.transpose() * corr[(k, k)];
    let sd = corr[(k, k)].sqrt();
    let f = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let x = sd * t;
        let mean: Vec<f64> = c_rk.iter().map(|c| c * x).collect();
        x.powf(p) * normal::pdf(t) * orthant_lowdim(&mean, &cond)
    };
    let mut total = 0.0;
    let mut ok = true;
    let edges = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0];
    for w in edges.windows(2) {
        let r = quad::integrate(f, w[0], w[1], 1e-15, 1e-13, 500);
        total += r.value;
        ok &= r.converged;
    }
    if !ok || !(total > 0.0) {
        return Err(Error::Numerical("orthant moment quadrature did not converge".into()));
    }
    Ok(total)
}

impl Prepared {
    /// `ln f_W(w)` for `w > 0`.
    fn ln_pdf(&self, w: &[f64]) -> f64 {
        let d = w.len();
        let ln_w: Vec<f64> = w.iter().map(|v| v.ln()).collect();
        let jac: f64 = ln_w.iter().sum();
        match &self.kind {
            SpectralDensity::Br { .. } => {
                let y = DVector::from_fn(d, |j, _| ln_w[j] + self.ln_a[j]);
                ln_mvn_pdf_centered(&y, &self.chol, self.ln_det) - jac
            }
            SpectralDensity::Sbr { .. } => {
                let y = DVector::from_fn(d, |j, _| ln_w[j] + self.ln_a[j]);
                std::f64::consts::LN_2 + ln_mvn_pdf_centered(&y, &self.chol, self.ln_det)
                    + normal::ln_cdf(self.aux.dot(&y))
                    - jac
            }
            SpectralDensity::Tet { df, .. } => {
                // x_j = (a_j w_j)^{1/ν}, dx_j/dw_j = x_j / (ν w_j)
                let ln_x: Vec<f64> = (0..d).map(|j| (self.ln_a[j] + ln_w[j]) / df).collect();
                let x = DVector::from_fn(d, |j, _| ln_x[j].exp());
                let ln_jac: f64 = (0..d).map(|j| ln_x[j] - df.ln() - ln_w[j]).sum();
                ln_mvn_pdf_centered(&x, &self.chol, self.ln_det) - self.aux[0] + ln_jac
            }
        }
    }
}

/// Log-concave maximization of `g` on the real line: grid scan then golden section.
fn argmax_concave<G: Fn(f64) -> f64>(g: &G) -> (f64, f64) {
    let mut best = (0.0, g(0.0));
    let mut t = -400.0;
    while t <= 400.0 {
        let v = g(t);
        if v > best.1 {
            best = (t, v);
        }
        t += 0.05;
    }
    let (mut a, mut b) = (best.0 - 0.05, best.0 + 0.05);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - phi * (b - a);
        let e = a + phi * (b - a);
        if g(c) > g(e) {
            b = e;
        } else {
            a = c;
        }
    }
    let m = 0.5 * (a + b);
    let v = g(m);
    if v > best.1 {
        (m, v)
    } else {
        best
    }
}

/// Point where the concave `g` has dropped `drop` below `g(t0) = top` in direction `dir`.
fn support_edge<G: Fn(f64) -> f64>(g: &G, t0: f64, top: f64, dir: f64, drop: f64) -> f64 {
    let target = top - drop;
    let mut step = 1e-3;
    let mut inner = t0;
    let mut outer = t0 + dir * step;
    while g(outer) > target {
        inner = outer;
        step *= 2.0;
        outer = t0 + dir * step;
        if step > 1e4 {
            return outer;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (inner + outer);
        if g(mid) > target {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    outer
}

/// Intensity `κ(x) = ∫₀^∞ r^D f_W(x r) dr` by adaptive quadrature in `t = ln r`.
///
/// `ln_f_w` is the log spectral density. The integrand must be log-concave in
/// `t`, which holds for all three families.
pub fn kappa_quadrature<F: Fn(&[f64]) -> f64>(ln_f_w: F, x: &[f64], tol: f64) -> Result<OracleReport> {
    let d = x.len();
    check_quad_dim(d, "kappa_quadrature")?;
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("kappa_quadrature needs a finite positive point".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let evals = std::cell::Cell::new(0usize);
    let mut buf = vec![0.0; d];
    let ln_g = |t: f64| {
        evals.set(evals.get() + 1);
        let r = t.exp();
        let w: Vec<f64> = x.iter().map(|v| v * r).collect();
        let v = (d as f64 + 1.0) * t + ln_f_w(&w);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let (t0, top) = argmax_concave(&ln_g);
    if !top.is_finite() {
        return Err(Error::Numerical("radial integrand has no finite mode".into()));
    }
    let lo = support_edge(&ln_g, t0, top, -1.0, SUPPORT_DROP);
    let hi = support_edge(&ln_g, t0, top, 1.0, SUPPORT_DROP);
    let scaled = |t: f64| {
        let r = t.exp();
        for (b, v) in buf.iter_mut().zip(x) {
            *b = v * r;
        }
        evals.set(evals.get() + 1);
        ((d as f64 + 1.0) * t + ln_f_w(&buf) - top).exp()
    };
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut converged = true;
    let mut f = scaled;
    for (a, b) in [(lo, t0), (t0, hi)] {
        let r = quad::integrate(&mut f, a, b, 0.0, 0.1 * tol, 4000);
        sum += r.value;
        err += r.abs_err;
        converged &= r.converged;
    }
    let scale = top.exp();
    let value = sum * scale;
    let error = err * scale + value * (-SUPPORT_DROP).exp();
    converged &= error <= tol * value;
    let mut metadata = BTreeMap::new();
    metadata.insert("tol".into(), tol);
    metadata.insert("t_lo".into(), lo);
    metadata.insert("t_hi".into(), hi);
    Ok(OracleReport { value, error, method: "radial-quadrature".into(), evals: evals.get(), converged, metadata })
}

/// [`kappa_quadrature`] with the spectral density of `density`.
pub fn kappa_quadrature_model(density: &SpectralDensity, x: &[f64], tol: f64) -> Result<OracleReport> {
    if density.dim() != x.len() {
        return Err(Error::Dimension(format!("point has length {}, model has {} sites", x.len(), density.dim())));
    }
    check_quad_dim(x.len(), "kappa_quadrature")?;
    let p = density.prepare()?;
    kappa_quadrature(|w| p.ln_pdf(w), x, tol)
}

/// Unconditional draws of the spectral vector `W` (unit means).
pub struct SpectralSampler {
    prep: Prepared,
    /// sBR: Cholesky factor of `Σ − ξξᵀ`; tET: Cholesky factor of `R`.
    aux_chol: DMatrix<f64>,
}

impl SpectralSampler {
    pub fn new(density: &SpectralDensity) -> Result<Self> {
        let prep = density.prepare()?;
        let aux_chol = match density {
            SpectralDensity::Br { .. } | SpectralDensity::Tet { .. } => prep.chol.l(),
            SpectralDensity::Sbr { sigma, xi } => {
                let c = sigma - xi * xi.transpose();
                linalg::cholesky(&c, "residual covariance")?.l()
            }
        };
        Ok(SpectralSampler { prep, aux_chol })
    }

    pub fn dim(&self) -> usize {
        self.aux_chol.nrows()
    }

    /// One draw of `W`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let gauss = |rng: &mut R| {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            &self.aux_chol * z
        };
        match &self.prep.kind {
            SpectralDensity::Br { .. } => {
                let g = gauss(rng);
                (0..d).map(|j| (g[j] - self.prep.ln_a[j]).exp()).collect()
            }
            SpectralDensity::Sbr { xi, .. } => {
                let u0 = rng.sample::<f64, _>(StandardNormal).abs();
                let e = gauss(rng);
                (0..d).map(|j| (xi[j] * u0 + e[j] - self.prep.ln_a[j]).exp()).collect()
            }
            SpectralDensity::Tet { df, .. } => loop {
                let x = gauss(rng);
                if x.iter().all(|v| *v >= 0.0) {
                    break (0..d).map(|j| (df * x[j].ln() - self.prep.ln_a[j]).exp()).collect();
                }
            },
        }
    }
}

/// Exponent function `V(x) = E max_i W_i / x_i` by plain Monte Carlo.
///
/// Draws are split into fixed chunks, chunk `c` using substream `c` of `seed`,
/// so the result does not depend on the thread count.
pub fn exponent_mc<S>(sampler: S, x: &[f64], n: usize, seed: u64) -> Result<OracleReport>
where
    S: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    if n < 2 {
        return Err(Error::Domain("exponent_mc needs at least two draws".into()));
    }
    if x.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("exponent_mc needs a positive point".into()));
    }
    let chunks = n.div_ceil(MC_CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let m = MC_CHUNK.min(n - c * MC_CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..m {
                let w = sampler(&mut rng);
                let v = w.iter().zip(x).map(|(w, x)| w / x).fold(0.0, f64::max);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    let mut metadata = BTreeMap::new();
    metadata.insert("draws".into(), nf);
    metadata.insert("seed".into(), seed as f64);
    Ok(OracleReport {
        value: mean,
        error: (var / nf).sqrt(),
        method: "monte-carlo".into(),
        evals: n,
        converged: true,
        metadata,
    })
}

/// [`exponent_mc`] with the unconditional spectral sampler of `density`.
pub fn exponent_mc_model(density: &SpectralDensity, x: &[f64], n: usize, seed: u64) -> Result<OracleReport> {
    if density.dim() != x.len() {
        return Err(Error::Dimension(format!("point has length {}, model has {} sites", x.len(), density.dim())));
    }
    let s = SpectralSampler::new(density)?;
    exponent_mc(|rng| s.draw(rng), x, n, seed)
}

fn mixed_difference<F: Fn(&[f64]) -> f64>(v: &F, x: &[f64], subset: &[usize], h: &[f64]) -> f64 {
    let m = subset.len();
    let mut total = 0.0;
    let mut y = x.to_vec();
    for mask in 0..(1usize << m) {
        let mut sign = 1.0;
        for (b, &i) in subset.iter().enumerate() {
            if mask >> b & 1 == 1 {
                y[i] = x[i] - h[b];
                sign = -sign;
            } else {
                y[i] = x[i] + h[b];
            }
        }
        total += sign * v(&y);
    }
    total / h.iter().map(|h| 2.0 * h).product::<f64>()
}

/// Mixed partial derivative `∂^{|B|} V / ∂x_B` by central differences with
/// one Richardson step over the step pair `(h, h/2)`, `h_i = h_rel · x_i`.
///
/// The returned value is the raw derivative, so the model quantity `−V_B`
/// is its negative. `converged` is false when the two step sizes disagree by
/// more than 1e-3 relative, which signals cancellation or a rough evaluator.
pub fn finite_diff_partial<F: Fn(&[f64]) -> f64>(
    v: F,
    x: &[f64],
    subset: &[usize],
    h_rel: f64,
) -> Result<OracleReport> {
    let m = subset.len();
    if m == 0 || m > MAX_FD_ORDER {
        return Err(Error::Domain(format!("finite differences support 1..={MAX_FD_ORDER} coordinates, got {m}")));
    }
    if subset.iter().any(|&i| i >= x.len()) || subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("subset must be strictly increasing indices within the point".into()));
    }
    if !(h_rel > 0.0 && h_rel < 0.5) {
        return Err(Error::Domain(format!("relative step {h_rel} outside (0, 0.5)")));
    }
    if subset.iter().any(|&i| !(x[i] > 0.0 && x[i].is_finite())) {
        return Err(Error::Domain("differentiated coordinates must be finite and positive".into()));
    }
    let h: Vec<f64> = subset.iter().map(|&i| h_rel * x[i]).collect();
    let h2: Vec<f64> = h.iter().map(|h| 0.5 * h).collect();
    let d1 = mixed_difference(&v, x, subset, &h);
    let d2 = mixed_difference(&v, x, subset, &h2);
    let value = (4.0 * d2 - d1) / 3.0;
    let error = (value - d2).abs();
    let scale = value.abs().max(d1.abs()).max(d2.abs());
    let converged = error <= 1e-3 * scale || scale < 1e-300;
    let mut metadata = BTreeMap::new();
    metadata.insert("h_rel".into(), h_rel);
    Ok(OracleReport {
        value,
        error,
        method: "richardson-central-difference".into(),
        evals: 2 << m,
        converged,
        metadata,
    })
}

/// Lower cdf `Pr(X ≤ upper)` of a normal (`df = None`) or Student-t law by
/// 1-D quadrature over the first coordinate; the conditional law of the
/// remaining coordinates (normal, or t with `ν + 1` degrees of freedom) is
/// integrated exactly in at most three dimensions.
pub fn cdf_by_conditioning(upper: &[f64], mean: &[f64], cov: &DMatrix<f64>, df: Option<f64>) -> Result<f64> {
    let d = upper.len();
    check_quad_dim(d, "cdf_by_conditioning")?;
    if mean.len() != d || cov.nrows() != d || cov.ncols() != d {
        return Err(Error::Dimension("mean, covariance and limits disagree in length".into()));
    }
    linalg::cholesky(cov, "oracle covariance")?;
    let s11 = cov[(0, 0)];
    let sd1 = s11.sqrt();
    let u1 = (upper[0] - mean[0]) / sd1;
    if d == 1 {
        return Ok(match df {
            None => uvn_rect(f64::NEG_INFINITY, u1),
            Some(nu) => uvt_rect(f64::NEG_INFINITY, u1, nu),
        });
    }
    let rest: Vec<usize> = (1..d).collect();
    let beta = DVector::from_fn(d - 1, |i, _| cov[(i + 1, 0)] / s11);
    let cond = linalg::select(cov, &rest, &rest) - &beta * beta.transpose() * s11;
    let k = d - 1;
    let sdc: Vec<f64> = (0..k).map(|i| cond[(i, i)].sqrt()).collect();
    let mut r = [[0.0; 3]; 3];
    for i in 0..k {
        for j in 0..k {
            r[i][j] = cond[(i, j)] / (sdc[i] * sdc[j]);
        }
    }
    let lo = [f64::NEG_INFINITY; 3];
    // z = sinh(s) keeps Student tails on a finite s-interval
    let f = |s: f64| {
        let z = s.sinh();
        let dens = match df {
            None => normal::pdf(z),
            Some(nu) => {
                (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln()
                    - 0.5 * (nu + 1.0) * (1.0 + z * z / nu).ln())
                .exp()
            }
        };
        if dens == 0.0 {
            return 0.0;
        }
        let x1 = mean[0] + sd1 * z;
        let infl = match df {
            None => 1.0,
            Some(nu) => ((nu + z * z) / (nu + 1.0)).sqrt(),
        };
        let hi: Vec<f64> = (0..k)
            .map(|i| {
                let m = mean[i + 1] + beta[i] * (x1 - mean[0]);
                (upper[i + 1] - m) / (sdc[i] * infl)
            })
            .collect();
        let p = match df {
            None => match k {
                1 => uvn_rect(f64::NEG_INFINITY, hi[0]),
                2 => bvn_rect([lo[0], lo[1]], [hi[0], hi[1]], r[0][1]),
                _ => tvn_rect(lo, [hi[0], hi[1], hi[2]], r),
            },
            Some(nu) => t_rect_lowdim(&lo[..k], &hi, &r, nu + 1.0),
        };
        dens * s.cosh() * p
    };
    let s_min = match df {
        None => -(40f64.asinh()),
        Some(_) => -80.0,
    };
    let s_max = if u1.is_finite() { u1.asinh().min(-s_min) } else { -s_min };
    if s_max <= s_min {
        return Ok(0.0);
    }
    let res = quad::integrate(f, s_min, s_max, 1e-14, 1e-12, 4000);
    if !res.converged {
        return Err(Error::Numerical("conditioning quadrature did not converge".into()));
    }
    Ok(res.value.clamp(0.0, 1.0))
}

/// Truncated cdf `Pr(0 ≤ X ≤ y) / Pr(X ≥ 0)` through the inclusion–exclusion
/// expansion over the `2^D` corners of `[0, y]`, each corner a lower cdf from
/// [`cdf_by_conditioning`].
pub fn trunc_cdf_inclusion_exclusion(
    y: &[f64],
    mean: &[f64],
    cov: &DMatrix<f64>,
    df: Option<f64>,
) -> Result<OracleReport> {
    let d = y.len();
    check_quad_dim(d, "inclusion-exclusion")?;
    if y.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::Domain("truncation point must be nonnegative".into()));
    }
    let corner_sum = |top: &[f64]| -> Result<f64> {
        let mut total = 0.0;
        for mask in 0..(1usize << d) {
            let z: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { 0.0 } else { top[i] }).collect();
            let sign = if mask.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            total += sign * cdf_by_conditioning(&z, mean, cov, df)?;
        }
        Ok(total)
    };
    let num = corner_sum(y)?;
    let den = corner_sum(&vec![f64::INFINITY; d])?;
    if !(den > 0.0) {
        return Err(Error::Underflow("orthant probability is zero".into()));
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("corners".into(), (1usize << d) as f64);
    if let Some(nu) = df {
        metadata.insert("df".into(), nu);
    }
    Ok(OracleReport {
        value: num / den,
        error: 1e-11 / den,
        method: "inclusion-exclusion".into(),
        evals: 2 << d,
        converged: true,
        metadata,
    })
}
