//! Exact simulation of max-stable processes and of r-Pareto processes for
//! the L1 risk and for general convex risks by rejection.

pub mod risk;
pub mod spectral;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use risk::RiskSpec;
pub use spectral::{TiltState, TiltedSampler};

use crate::dist::TruncMethod;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::rng::substream;

/// Proposals per pilot round of the rejection samplers.
pub const PILOT_PROPOSALS: usize = 1000;
/// Acceptance rates below this after the pilot are refused.
pub const MIN_PILOT_ACCEPTANCE: f64 = 1e-5;
/// Largest proposal chunk evaluated in one parallel pass.
const MAX_CHUNK: usize = 1 << 18;

/// A batch of simulated replicates, one row per replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimBatch {
    pub samples: Vec<Vec<f64>>,
    pub seed: u64,
    pub model: String,
    /// Risk label for r-Pareto batches.
    pub risk: Option<String>,
    /// Proposals consumed (equals the row count when no rejection is involved).
    pub proposals_used: usize,
}

impl SimBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `rows / proposals`.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals_used == 0 {
            return 0.0;
        }
        self.samples.len() as f64 / self.proposals_used as f64
    }
}

/// Acceptance counts of the two rejection samplers on a shared proposal stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceCell {
    pub risk: RiskSpec,
    pub c0: f64,
    pub baseline_bound: f64,
    pub reps: usize,
    pub accepted_c0: usize,
    pub accepted_baseline: usize,
}

impl AcceptanceCell {
    pub fn pct_c0(&self) -> f64 {
        100.0 * self.accepted_c0 as f64 / self.reps as f64
    }

    pub fn pct_baseline(&self) -> f64 {
        100.0 * self.accepted_baseline as f64 / self.reps as f64
    }
}

/// Simulation engine bound to one model.
#[derive(Debug, Clone)]
pub struct Simulator {
    sampler: TiltedSampler,
    family: &'static str,
}

impl Simulator {
    pub fn new(model: &Model) -> Result<Self> {
        Self::with_method(model, TruncMethod::Auto)
    }

    /// `method` selects the truncated-t sampler used by the extremal-t family.
    pub fn with_method(model: &Model, method: TruncMethod) -> Result<Self> {
        Ok(Simulator { sampler: TiltedSampler::new(model, method)?, family: model.family() })
    }

    pub fn dim(&self) -> usize {
        self.sampler.dim()
    }

    pub fn sampler(&self) -> &TiltedSampler {
        &self.sampler
    }

    /// One max-stable replicate by the extremal-function algorithm.
    pub fn maxstable_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let mut state = self.sampler.new_state();
        let mut z = vec![0.0; d];
        for i in 0..d {
            let mut e: f64 = exp1(rng);
            let mut zeta = 1.0 / e;
            while zeta > z[i] {
                let y = self.sampler.draw(rng, i, &mut state);
                // Only functions not already dominated at an earlier site are new extremal functions.
                if (0..i).all(|j| zeta * y[j] < z[j]) {
                    for j in 0..d {
                        z[j] = z[j].max(zeta * y[j]);
                    }
                }
                e += exp1(rng);
                zeta = 1.0 / e;
            }
            debug_assert!(z[i] > 0.0);
        }
        z
    }

    /// `n` max-stable replicates with unit-Fréchet margins.
    pub fn maxstable(&self, n: usize, seed: u64) -> SimBatch {
        let samples: Vec<Vec<f64>> =
            (0..n).into_par_iter().map(|s| self.maxstable_one(&mut substream(seed, s as u64))).collect();
        SimBatch { samples, seed, model: self.family.into(), risk: None, proposals_used: n }
    }

    /// L1 r-Pareto proposal with index `j`: `R · W / ‖W‖₁` with `R` unit Pareto
    /// and `W` drawn under the tilt toward a uniformly chosen site.
    pub fn l1_proposal(&self, seed: u64, j: u64) -> Vec<f64> {
        let mut rng = substream(seed, j);
        let d = self.dim();
        let k = rng.random_range(0..d);
        let mut state = self.sampler.new_state();
        let w = self.sampler.draw(&mut rng, k, &mut state);
        let norm: f64 = w.iter().sum();
        let u: f64 = 1.0 - rng.random::<f64>();
        let r = 1.0 / u;
        w.into_iter().map(|v| r * v / norm).collect()
    }

    /// `n` L1 r-Pareto replicates; every row has `‖z‖₁ > 1`.
    pub fn rpareto_l1(&self, n: usize, seed: u64) -> SimBatch {
        let samples: Vec<Vec<f64>> = (0..n).into_par_iter().map(|j| self.l1_proposal(seed, j as u64)).collect();
        SimBatch { samples, seed, model: self.family.into(), risk: Some("l1".into()), proposals_used: n }
    }

    /// `n` r-Pareto replicates for a convex risk: `c₀ Z̃` accepted when `r(Z̃) > 1/c₀`.
    pub fn rpareto_convex(&self, risk: &RiskSpec, n: usize, seed: u64) -> Result<SimBatch> {
        let d = self.dim();
        risk.validate(d)?;
        let c0 = risk.c0(d);
        let (samples, used) = self.rejection(n, seed, |z| {
            (risk.eval(z) > 1.0 / c0).then(|| z.iter().map(|v| c0 * v).collect())
        })?;
        Ok(SimBatch { samples, seed, model: self.family.into(), risk: Some(risk.label()), proposals_used: used })
    }

    /// Fixed-bound baseline: `Z̃ / M` accepted when `r(Z̃) ≥ M`. Exact for `M ≥ sup r(Θ)`.
    pub fn rpareto_baseline(&self, risk: &RiskSpec, bound: f64, n: usize, seed: u64) -> Result<SimBatch> {
        risk.validate(self.dim())?;
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::Domain(format!("baseline bound must be positive, got {bound}")));
        }
        let (samples, used) =
            self.rejection(n, seed, |z| (risk.eval(z) >= bound).then(|| z.iter().map(|v| v / bound).collect()))?;
        Ok(SimBatch { samples, seed, model: self.family.into(), risk: Some(risk.label()), proposals_used: used })
    }

    /// Accepts proposals in index order until `n` are kept; returns rows and proposals consumed.
    fn rejection<F>(&self, n: usize, seed: u64, accept: F) -> Result<(Vec<Vec<f64>>, usize)>
    where
        F: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
    {
        let mut rows = Vec::with_capacity(n);
        if n == 0 {
            return Ok((rows, 0));
        }
        let mut next = 0usize;
        let max_pilot = (1.0 / MIN_PILOT_ACCEPTANCE).ceil() as usize;
        let mut used = 0usize;
        loop {
            let chunk = if rows.is_empty() {
                PILOT_PROPOSALS
            } else {
                let rate = rows.len() as f64 / next as f64;
                (((n - rows.len()) as f64 / rate * 1.1).ceil() as usize).clamp(PILOT_PROPOSALS, MAX_CHUNK)
            };
            let out: Vec<Option<Vec<f64>>> =
                (next..next + chunk).into_par_iter().map(|j| accept(&self.l1_proposal(seed, j as u64))).collect();
            for (off, r) in out.into_iter().enumerate() {
                if let Some(row) = r {
                    rows.push(row);
                    if rows.len() == n {
                        used = next + off + 1;
                        break;
                    }
                }
            }
            if rows.len() == n {
                return Ok((rows, used));
            }
            next += chunk;
            if rows.is_empty() && next >= max_pilot {
                return Err(Error::LowAcceptance(format!(
                    "no proposal accepted in {next} pilot draws (rate below {MIN_PILOT_ACCEPTANCE:e}); review the risk and model parameters"
                )));
            }
        }
    }

    /// Acceptance counts of the `c₀` sampler and the fixed-bound baseline over `reps` shared proposals.
    pub fn acceptance_bench(&self, risks: &[RiskSpec], reps: usize, seed: u64) -> Result<Vec<AcceptanceCell>> {
        let d = self.dim();
        for r in risks {
            r.validate(d)?;
        }
        let limits: Vec<(f64, f64)> = risks.iter().map(|r| (1.0 / r.c0(d), r.baseline_bound(d))).collect();
        let counts = (0..reps)
            .into_par_iter()
            .map(|j| {
                let z = self.l1_proposal(seed, j as u64);
                risks
                    .iter()
                    .zip(&limits)
                    .map(|(r, &(t0, m))| {
                        let v = r.eval(&z);
                        ((v > t0) as usize, (v >= m) as usize)
                    })
                    .collect::<Vec<_>>()
            })
            .reduce(
                || vec![(0, 0); risks.len()],
                |a, b| a.iter().zip(&b).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect(),
            );
        Ok(risks
            .iter()
            .zip(counts)
            .map(|(r, (c, b))| AcceptanceCell {
                risk: r.clone(),
                c0: r.c0(d),
                baseline_bound: r.baseline_bound(d),
                reps,
                accepted_c0: c,
                accepted_baseline: b,
            })
            .collect())
    }
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

/// `n` exact max-stable replicates of `model`.
pub fn sample_maxstable(model: &Model, n: usize, seed: u64) -> Result<SimBatch> {
    Ok(Simulator::new(model)?.maxstable(n, seed))
}

/// `n` L1 r-Pareto replicates of `model`.
pub fn sample_rpareto_l1(model: &Model, n: usize, seed: u64) -> Result<SimBatch> {
    Ok(Simulator::new(model)?.rpareto_l1(n, seed))
}

/// `n` r-Pareto replicates for a convex risk.
pub fn sample_rpareto_convex(model: &Model, risk: &RiskSpec, n: usize, seed: u64) -> Result<SimBatch> {
    Simulator::new(model)?.rpareto_convex(risk, n, seed)
}

/// `n` r-Pareto replicates by the fixed-bound baseline; `bound` defaults to [`RiskSpec::baseline_bound`].
pub fn sample_rpareto_baseline(
    model: &Model,
    risk: &RiskSpec,
    bound: Option<f64>,
    n: usize,
    seed: u64,
) -> Result<SimBatch> {
    let sim = Simulator::new(model)?;
    let m = bound.unwrap_or_else(|| risk.baseline_bound(sim.dim()));
    sim.rpareto_baseline(risk, m, n, seed)
}
