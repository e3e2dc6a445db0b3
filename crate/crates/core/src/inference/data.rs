//! Observation matrices with a missing-value mask and a margin tag.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SiteSet;

/// Marginal scale of an observation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Margins {
    Raw,
    /// Unit Fréchet, `Pr(X ≤ x) = exp(−1/x)`.
    Frechet,
    /// Unit Pareto scale, `Pr(X > x) = 1/x` in the tail. Simulated r-Pareto
    /// coordinates may fall below 1, so only positivity is enforced.
    Pareto,
}

/// How zeros are treated by the empirical marginal transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroPolicy {
    /// Zeros become missing values.
    Missing,
    /// Zeros are ranked like any other value.
    Keep,
}

/// `n × D` observations linked to a site set. Missing cells hold `NaN` and are flagged in the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    row_ids: Vec<String>,
    values: Vec<Vec<f64>>,
    missing: Vec<Vec<bool>>,
    margins: Margins,
    sites: SiteSet,
}

impl ObservationSet {
    /// Checks shapes and that non-missing values are finite and, on standardized margins, positive.
    pub fn new(
        row_ids: Vec<String>,
        mut values: Vec<Vec<f64>>,
        missing: Vec<Vec<bool>>,
        margins: Margins,
        sites: SiteSet,
    ) -> Result<Self> {
        let d = sites.len();
        if row_ids.len() != values.len() || missing.len() != values.len() {
            return Err(Error::Dimension("row ids, values and mask must have the same number of rows".into()));
        }
        for (i, (row, mask)) in values.iter_mut().zip(&missing).enumerate() {
            if row.len() != d || mask.len() != d {
                return Err(Error::Dimension(format!("row {i} has {} values for {d} sites", row.len())));
            }
            for j in 0..d {
                if mask[j] {
                    row[j] = f64::NAN;
                    continue;
                }
                let v = row[j];
                let ok = match margins {
                    Margins::Raw => v.is_finite(),
                    Margins::Frechet | Margins::Pareto => v.is_finite() && v > 0.0,
                };
                if !ok {
                    return Err(Error::Domain(format!("value {v} at row {i}, site {j} is invalid on {margins:?} margins")));
                }
            }
        }
        Ok(ObservationSet { row_ids, values, missing, margins, sites })
    }

    /// Fully observed rows with ids `1..n`.
    pub fn complete(values: Vec<Vec<f64>>, margins: Margins, sites: SiteSet) -> Result<Self> {
        let n = values.len();
        let d = sites.len();
        let ids = (1..=n).map(|i| i.to_string()).collect();
        Self::new(ids, values, vec![vec![false; d]; n], margins, sites)
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.sites.len()
    }

    pub fn margins(&self) -> Margins {
        self.margins
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    /// Raw row including `NaN` for missing cells.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[i][j]
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        (!self.missing[i][j]).then(|| self.values[i][j])
    }

    /// Observed indices and values of row `i`.
    pub fn observed(&self, i: usize) -> (Vec<usize>, Vec<f64>) {
        (0..self.dim()).filter(|&j| !self.missing[i][j]).map(|j| (j, self.values[i][j])).unzip()
    }

    pub fn is_complete_row(&self, i: usize) -> bool {
        !self.missing[i].iter().any(|&m| m)
    }

    /// Keeps the listed rows in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        ObservationSet {
            row_ids: rows.iter().map(|&i| self.row_ids[i].clone()).collect(),
            values: rows.iter().map(|&i| self.values[i].clone()).collect(),
            missing: rows.iter().map(|&i| self.missing[i].clone()).collect(),
            margins: self.margins,
            sites: self.sites.clone(),
        }
    }

    /// Same rows with every value multiplied by `t > 0`.
    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.values {
            for v in row.iter_mut() {
                *v *= t;
            }
        }
        out
    }
}

/// Average ranks (1-based) of `v`; ties share the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = 0.5 * ((i + 1) + (j + 1)) as f64;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Empirical-cdf transform of each column to unit Fréchet or unit Pareto margins.
///
/// With `n'` observed values and average rank `r`, Fréchet gives `−1/ln(r/(n'+1))`
/// and Pareto gives `(n'+1)/(n'+1−r)`. Only raw data are accepted.
pub fn marginal_transform(data: &ObservationSet, target: Margins, zero_policy: ZeroPolicy) -> Result<ObservationSet> {
    if data.margins != Margins::Raw {
        return Err(Error::Domain(format!("data are already on {:?} margins", data.margins)));
    }
    if target == Margins::Raw {
        return Err(Error::Domain("transform target must be frechet or pareto".into()));
    }
    let (n, d) = (data.n_rows(), data.dim());
    let mut values = data.values.clone();
    let mut missing = data.missing.clone();
    if zero_policy == ZeroPolicy::Missing {
        for i in 0..n {
            for j in 0..d {
                if !missing[i][j] && values[i][j] == 0.0 {
                    missing[i][j] = true;
                    values[i][j] = f64::NAN;
                }
            }
        }
    }
    for j in 0..d {
        let rows: Vec<usize> = (0..n).filter(|&i| !missing[i][j]).collect();
        if rows.is_empty() {
            return Err(Error::InsufficientData(format!("site {} has no observed values", data.sites.ids()[j])));
        }
        let col: Vec<f64> = rows.iter().map(|&i| values[i][j]).collect();
        let ranks = average_ranks(&col);
        let np1 = rows.len() as f64 + 1.0;
        for (&i, &r) in rows.iter().zip(&ranks) {
            values[i][j] = match target {
                Margins::Frechet => -1.0 / (r / np1).ln(),
                _ => np1 / (np1 - r),
            };
        }
    }
    ObservationSet::new(data.row_ids.clone(), values, missing, target, data.sites.clone())
}
