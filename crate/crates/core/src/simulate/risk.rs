//! Risk functionals and their rejection constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Homogeneous order-one risk functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RiskSpec {
    /// Sum of coordinates.
    L1,
    /// `‖x‖_p` with `p > 1`.
    Lp { p: f64 },
    /// Maximum coordinate.
    Linf,
    /// `Σ m_i x_i` with `m_i > 0`.
    Linear { weights: Vec<f64> },
}

impl RiskSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            RiskSpec::Lp { p } if !(*p > 1.0) => Err(Error::Domain(format!("Lp risk needs p > 1, got {p}"))),
            RiskSpec::Linear { weights } => {
                if weights.len() != d {
                    return Err(Error::Dimension(format!("{} risk weights for {d} sites", weights.len())));
                }
                if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return Err(Error::Domain("linear risk weights must be positive and finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `r(x)` for nonnegative `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            RiskSpec::L1 => x.iter().sum(),
            RiskSpec::Lp { p } => {
                // Scaled by the maximum so large p does not overflow.
                let m = x.iter().cloned().fold(0.0, f64::max);
                if m == 0.0 {
                    return 0.0;
                }
                m * x.iter().map(|v| (v / m).powf(*p)).sum::<f64>().powf(1.0 / p)
            }
            RiskSpec::Linf => x.iter().cloned().fold(0.0, f64::max),
            RiskSpec::Linear { weights } => weights.iter().zip(x).map(|(w, v)| w * v).sum(),
        }
    }

    /// `c_i = 1 / r(e_i)`.
    pub fn unit_constants(&self, d: usize) -> Vec<f64> {
        match self {
            RiskSpec::Linear { weights } => weights.iter().map(|w| 1.0 / w).collect(),
            _ => vec![1.0; d],
        }
    }

    /// `c₀ = min(min_i c_i, 1)`; `r(c₀ z) ≤ ‖z‖₁` for convex `r`.
    pub fn c0(&self, d: usize) -> f64 {
        self.unit_constants(d).into_iter().fold(1.0, f64::min)
    }

    /// Default constant of the fixed-bound baseline sampler.
    ///
    /// `D^{p−2}` for Lp (never below 1, since the baseline is only exact for `M ≥ 1`),
    /// `max_i m_i` for linear risks, and 1 otherwise.
    pub fn baseline_bound(&self, d: usize) -> f64 {
        match self {
            RiskSpec::Lp { p } => (d as f64).powf(p - 2.0).max(1.0),
            RiskSpec::Linear { weights } => weights.iter().cloned().fold(1.0, f64::max),
            _ => 1.0,
        }
    }

    /// Smallest L1-scale threshold above which an `r`-exceedance set is
    /// contained in the L1 exceedance set: `D^{1−1/p}` for Lp.
    pub fn l1_threshold_bound(&self, d: usize) -> f64 {
        let df = d as f64;
        match self {
            RiskSpec::Lp { p } => df.powf(1.0 - 1.0 / p),
            RiskSpec::Linf => df,
            RiskSpec::Linear { .. } => 1.0 / self.c0(d),
            RiskSpec::L1 => 1.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            RiskSpec::L1 => "l1".into(),
            RiskSpec::Lp { p } => format!("l{p}"),
            RiskSpec::Linf => "linf".into(),
            RiskSpec::Linear { .. } => "linear".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(RiskSpec::Linf.c0(5), 1.0);
        assert_eq!(RiskSpec::Lp { p: 3.0 }.c0(5), 1.0);
        let lin = RiskSpec::Linear { weights: vec![0.5, 2.0, 4.0] };
        assert_eq!(lin.c0(3), 0.25);
        assert_eq!(RiskSpec::Lp { p: 3.0 }.baseline_bound(16), 16.0);
        assert!((RiskSpec::Lp { p: 2.0 }.l1_threshold_bound(4) - 2.0).abs() < 1e-15);
        assert!((RiskSpec::Lp { p: 2.0 }.eval(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
    }
}
