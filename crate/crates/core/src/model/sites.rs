//! Planar site sets.

use serde::Serialize;

use crate::error::{Error, Result};

/// Ordered planar sites; the order defines every matrix index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteSet {
    ids: Vec<String>,
    coords: Vec<[f64; 2]>,
}

impl SiteSet {
    /// Rejects empty sets, non-finite coordinates, duplicate ids and duplicate coordinates.
    pub fn new(ids: Vec<String>, coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Domain("empty site set".into()));
        }
        if ids.len() != coords.len() {
            return Err(Error::Dimension(format!("{} ids for {} coordinates", ids.len(), coords.len())));
        }
        for (i, c) in coords.iter().enumerate() {
            if !c[0].is_finite() || !c[1].is_finite() {
                return Err(Error::Domain(format!("site {} has non-finite coordinates", ids[i])));
            }
            for j in 0..i {
                if ids[j] == ids[i] {
                    return Err(Error::Domain(format!("duplicate site id {}", ids[i])));
                }
                if coords[j] == *c {
                    return Err(Error::Domain(format!(
                        "sites {} and {} share coordinates ({}, {})",
                        ids[j], ids[i], c[0], c[1]
                    )));
                }
            }
        }
        Ok(SiteSet { ids, coords })
    }

    /// Sites named `s1, s2, …` in the given order.
    pub fn from_coords(coords: Vec<[f64; 2]>) -> Result<Self> {
        let ids = (1..=coords.len()).map(|i| format!("s{i}")).collect();
        Self::new(ids, coords)
    }

    /// Unit-spaced square grid `{1, …, side}²`, first coordinate varying fastest.
    pub fn grid(side: usize) -> Result<Self> {
        let mut coords = Vec::with_capacity(side * side);
        for j in 1..=side {
            for i in 1..=side {
                coords.push([i as f64, j as f64]);
            }
        }
        Self::from_coords(coords)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }

    /// Sub-set on the given indices, keeping their order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.ids[i].clone()).collect(), idx.iter().map(|&i| self.coords[i]).collect())
    }
}
