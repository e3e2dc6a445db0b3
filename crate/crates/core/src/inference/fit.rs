//! Maximum spectral-likelihood fitting with multi-starts and delete-one jackknife.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{Margins, ObservationSet};
use super::likelihood::{exceedances, lp_threshold_guard, risk_values, spectral_loglik, Exceedances};
use super::optim::{nelder_mead, SimplexOptions, SimplexResult};
use super::threshold::{select_threshold, GpdFit, ThresholdMethod};
use crate::dist::CdfOptions;
use crate::error::{Error, Result};
use crate::model::{BrParams, Model, ModelParams, SbrParams, SiteSet, SkewFieldSpec, TetParams, VariogramSpec};
use crate::rng::substream;
use crate::simulate::RiskSpec;

/// Model family to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Br,
    Sbr,
    Tet,
}

/// Kernel layout of the slant field; only the coefficients are estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewBasis {
    pub centers: Vec<[f64; 2]>,
    pub bandwidth: f64,
}

/// Magnitudes of the random starting coefficients of the slant field.
pub const START_MAGNITUDES: [f64; 3] = [0.5, 1.0, 2.0];

/// Optimizer and model settings of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Estimate rotation and stretch of the variogram.
    pub anisotropic: bool,
    pub anchor: [f64; 2],
    /// Starting range; the median inter-site distance when absent.
    pub init_range: Option<f64>,
    pub init_smoothness: f64,
    pub init_df: f64,
    /// Starting points; 5 for the skewed family and 1 otherwise when absent.
    pub multistarts: Option<usize>,
    /// Extra simplex runs restarted from each optimum.
    pub restarts: usize,
    pub simplex: SimplexOptions,
    pub jackknife: bool,
    /// Absolute error target of the multivariate probabilities inside the likelihood.
    pub cdf_tol: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            anisotropic: false,
            anchor: [0.0, 0.0],
            init_range: None,
            init_smoothness: 1.0,
            init_df: 2.0,
            multistarts: None,
            restarts: 1,
            simplex: SimplexOptions::default(),
            jackknife: false,
            cdf_tol: None,
        }
    }
}

/// What is fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub family: Family,
    #[serde(default)]
    pub skew: Option<SkewBasis>,
    #[serde(default)]
    pub options: FitOptions,
}

/// One simplex start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartOutcome {
    pub start: Vec<f64>,
    pub estimate: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub evals: usize,
}

/// Delete-one jackknife over exceedances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jackknife {
    pub scheme: String,
    pub std_errors: Vec<f64>,
    pub replicates: usize,
    pub failures: usize,
}

/// Point estimates, likelihood summaries and diagnostics of a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub family: Family,
    pub parameter_names: Vec<String>,
    pub estimates: Vec<f64>,
    pub jackknife: Option<Jackknife>,
    pub loglik: f64,
    pub n_params: usize,
    pub aic: f64,
    pub n_exceed: usize,
    pub threshold: f64,
    pub risk: RiskSpec,
    pub seed: u64,
    pub wall_time_s: f64,
    pub converged: bool,
    pub evals: usize,
    pub starts: Vec<StartOutcome>,
    /// Fitted model, ready to rebuild.
    pub params: ModelParams,
    /// Latent covariance field induced by the fitted slant (skewed family only).
    pub xi: Option<Vec<f64>>,
    /// Exceedances with missing sites, which enter through the intensity of their observed sites.
    pub rows_with_missing: usize,
    pub gpd_table: Vec<GpdFit>,
}

/// Map between unconstrained search coordinates and model parameters.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    family: Family,
    anisotropic: bool,
    skew: Option<SkewBasis>,
    anchor: [f64; 2],
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

impl ParamLayout {
    pub fn new(spec: &FitSpec) -> Result<Self> {
        if spec.family == Family::Sbr && spec.skew.as_ref().is_none_or(|s| s.centers.is_empty()) {
            return Err(Error::Config("the skewed family needs a kernel basis with at least one centre".into()));
        }
        Ok(ParamLayout {
            family: spec.family,
            anisotropic: spec.options.anisotropic,
            skew: if spec.family == Family::Sbr { spec.skew.clone() } else { None },
            anchor: spec.options.anchor,
        })
    }

    pub fn names(&self) -> Vec<String> {
        let mut n = vec!["range".to_string(), "smoothness".to_string()];
        if self.anisotropic {
            n.push("rotation".into());
            n.push("stretch".into());
        }
        if self.family == Family::Tet {
            n.push("df".into());
        }
        if let Some(s) = &self.skew {
            n.extend((1..=s.centers.len()).map(|j| format!("b{j}")));
        }
        n
    }

    pub fn len(&self) -> usize {
        self.names().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Natural parameters to search coordinates.
    pub fn to_search(&self, natural: &[f64]) -> Vec<f64> {
        let mut t = vec![natural[0].ln(), {
            let p = (natural[1] / 2.0).clamp(1e-12, 1.0 - 1e-12);
            (p / (1.0 - p)).ln()
        }];
        let mut i = 2;
        if self.anisotropic {
            t.push((natural[2] / FRAC_PI_4).clamp(-1.0 + 1e-12, 1.0 - 1e-12).atanh());
            t.push(natural[3].ln());
            i = 4;
        }
        if self.family == Family::Tet {
            t.push(natural[i].ln());
            i += 1;
        }
        t.extend_from_slice(&natural[i..]);
        t
    }

    /// Search coordinates to natural parameters; every box constraint holds by construction.
    pub fn to_natural(&self, t: &[f64]) -> Vec<f64> {
        let mut x = vec![t[0].exp(), 2.0 * sigmoid(t[1])];
        let mut i = 2;
        if self.anisotropic {
            x.push(FRAC_PI_4 * t[2].tanh());
            x.push(t[3].exp());
            i = 4;
        }
        if self.family == Family::Tet {
            x.push(t[i].exp());
            i += 1;
        }
        x.extend_from_slice(&t[i..]);
        x
    }

    pub fn params(&self, natural: &[f64]) -> ModelParams {
        let (rotation, stretch, mut i) = if self.anisotropic { (natural[2], natural[3], 4) } else { (0.0, 1.0, 2) };
        let variogram = VariogramSpec { range: natural[0], smoothness: natural[1], rotation, stretch };
        match self.family {
            Family::Br => ModelParams::Br(BrParams { variogram, anchor: self.anchor }),
            Family::Tet => {
                let df = natural[i];
                ModelParams::Tet(TetParams { variogram, df })
            }
            Family::Sbr => {
                let s = self.skew.as_ref().expect("skew basis checked in new");
                i = i.min(natural.len());
                ModelParams::Sbr(SbrParams {
                    variogram,
                    skew: SkewFieldSpec {
                        centers: s.centers.clone(),
                        coefficients: natural[i..].to_vec(),
                        bandwidth: s.bandwidth,
                        background: None,
                    },
                    anchor: self.anchor,
                })
            }
        }
    }
}

/// Median distance between distinct sites.
pub fn median_distance(sites: &SiteSet) -> f64 {
    let c = sites.coords();
    let mut d: Vec<f64> = Vec::new();
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            d.push((c[i][0] - c[j][0]).hypot(c[i][1] - c[j][1]));
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(|a, b| a.total_cmp(b));
    d[d.len() / 2]
}

struct Problem<'a> {
    layout: ParamLayout,
    data: &'a ObservationSet,
    opts: CdfOptions,
}

impl Problem<'_> {
    fn loglik(&self, natural: &[f64], exc: &Exceedances) -> Result<f64> {
        let model = Model::build(&self.layout.params(natural), self.data.sites(), self.opts)?;
        spectral_loglik(&model, self.data, exc)
    }

    fn minimize(&self, start_t: &[f64], exc: &Exceedances, simplex: &SimplexOptions, restarts: usize) -> SimplexResult {
        let f = |t: &[f64]| match self.loglik(&self.layout.to_natural(t), exc) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        };
        let mut r = nelder_mead(f, start_t, simplex);
        let mut evals = r.evals;
        for _ in 0..restarts {
            let again = nelder_mead(f, &r.x, simplex);
            evals += again.evals;
            let improved = again.value < r.value - simplex.f_tol;
            r = if again.value <= r.value { again } else { r };
            if !improved {
                break;
            }
        }
        r.evals = evals;
        r
    }
}

/// Fits `spec` to the exceedances of `risk` above the threshold chosen by `threshold`.
pub fn fit(
    spec: &FitSpec,
    data: &ObservationSet,
    risk: &RiskSpec,
    threshold: &ThresholdMethod,
    seed: u64,
) -> Result<FitResult> {
    let clock = Instant::now();
    if data.margins() == Margins::Raw {
        return Err(Error::Config("fitting needs data on frechet or pareto margins; run the transform first".into()));
    }
    let d = data.dim();
    risk.validate(d)?;
    let rv = risk_values(data, risk);
    let choice = select_threshold(&rv, threshold)?;
    let guard = lp_threshold_guard(risk, d);
    if choice.u < guard {
        return Err(Error::Config(format!(
            "threshold {} is below {guard}, the smallest admissible value for this risk at {d} sites",
            choice.u
        )));
    }
    let exc = exceedances(data, risk, choice.u)?;
    let layout = ParamLayout::new(spec)?;
    let o = &spec.options;
    let opts = o.cdf_tol.map(CdfOptions::with_tol).unwrap_or_default();
    let problem = Problem { layout: layout.clone(), data, opts };

    let mut base = vec![o.init_range.unwrap_or_else(|| median_distance(data.sites())), o.init_smoothness];
    if o.anisotropic {
        base.extend([0.0, 1.0]);
    }
    if spec.family == Family::Tet {
        base.push(o.init_df);
    }
    let n_starts = o.multistarts.unwrap_or(if spec.family == Family::Sbr { 5 } else { 1 }).max(1);
    let mut rng = substream(seed, 0);
    let starts: Vec<Vec<f64>> = (0..n_starts)
        .map(|_| {
            let mut s = base.clone();
            if let Some(sk) = &layout.skew {
                for _ in 0..sk.centers.len() {
                    let m = START_MAGNITUDES[rng.random_range(0..START_MAGNITUDES.len())];
                    s.push(if rng.random::<bool>() { m } else { -m });
                }
            }
            s
        })
        .collect();

    let mut outcomes = Vec::with_capacity(starts.len());
    let mut best: Option<(SimplexResult, usize)> = None;
    let mut evals = 0;
    for (k, s) in starts.iter().enumerate() {
        let r = problem.minimize(&layout.to_search(s), &exc, &o.simplex, o.restarts);
        evals += r.evals;
        outcomes.push(StartOutcome {
            start: s.clone(),
            estimate: layout.to_natural(&r.x),
            loglik: -r.value,
            converged: r.converged,
            evals: r.evals,
        });
        if best.as_ref().is_none_or(|(b, _)| r.value < b.value) {
            best = Some((r, k));
        }
    }
    let (best, _) = best.expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::Numerical("the likelihood is not finite at any visited parameter".into()));
    }
    let estimates = layout.to_natural(&best.x);
    let loglik = -best.value;
    let k = layout.len();

    let jackknife = if o.jackknife {
        if exc.len() < 3 {
            return Err(Error::InsufficientData("the jackknife needs at least 3 exceedances".into()));
        }
        let reps: Vec<(Vec<f64>, bool)> = (0..exc.len())
            .into_par_iter()
            .map(|drop| {
                let mut e = exc.clone();
                e.rows.remove(drop);
                e.risk_values.remove(drop);
                let r = problem.minimize(&best.x, &e, &o.simplex, 0);
                (layout.to_natural(&r.x), r.converged && r.value.is_finite())
            })
            .collect();
        let m = reps.len() as f64;
        let se = (0..k)
            .map(|j| {
                let mean = reps.iter().map(|r| r.0[j]).sum::<f64>() / m;
                ((m - 1.0) / m * reps.iter().map(|r| (r.0[j] - mean).powi(2)).sum::<f64>()).sqrt()
            })
            .collect();
        Some(Jackknife {
            scheme: "delete-one over exceedances, warm-started at the full-data optimum".into(),
            std_errors: se,
            replicates: reps.len(),
            failures: reps.iter().filter(|r| !r.1).count(),
        })
    } else {
        None
    };

    let params = layout.params(&estimates);
    let xi = match Model::build(&params, data.sites(), opts)? {
        Model::Sbr(m) => Some(m.xi().iter().copied().collect()),
        _ => None,
    };
    let rows_with_missing = exc.rows.iter().filter(|&&i| !data.is_complete_row(i)).count();
    Ok(FitResult {
        family: spec.family,
        parameter_names: layout.names(),
        estimates,
        jackknife,
        loglik,
        n_params: k,
        aic: 2.0 * k as f64 - 2.0 * loglik,
        n_exceed: exc.len(),
        threshold: choice.u,
        risk: risk.clone(),
        seed,
        wall_time_s: clock.elapsed().as_secs_f64(),
        converged: best.converged,
        evals,
        starts: outcomes,
        params,
        xi,
        rows_with_missing,
        gpd_table: choice.table,
    })
}

/// `Σ ln κ` of `params` on the exceedances of `risk` above `u`.
pub fn loglik_at(params: &ModelParams, data: &ObservationSet, risk: &RiskSpec, u: f64, opts: CdfOptions) -> Result<f64> {
    let exc = exceedances(data, risk, u)?;
    let model = Model::build(params, data.sites(), opts)?;
    spectral_loglik(&model, data, &exc)
}
