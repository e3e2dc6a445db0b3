//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use spex::dist::CdfOptions;
use spex::model::{BrModel, Model, SbrModel, SiteSet, TetModel, VariogramSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random sites in `[0.5, 3.5]²`, away from the origin anchor.
pub fn random_sites<R: Rng>(rng: &mut R, d: usize) -> SiteSet {
    let coords = (0..d).map(|_| [rng.random_range(0.5..3.5), rng.random_range(0.5..3.5)]).collect();
    SiteSet::from_coords(coords).unwrap()
}

/// Correlation matrix `A Aᵀ` normalized to unit diagonal, with a ridge.
pub fn random_corr<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let m: DMatrix<f64> = &a * a.transpose() + DMatrix::<f64>::identity(d, d) * 0.3;
    let s: DVector<f64> = DVector::from_fn(d, |i, _| m[(i, i)].sqrt());
    DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { m[(i, j)] / (s[i] * s[j]) })
}

/// A random member of each family on random sites.
pub fn random_models<R: Rng>(rng: &mut R, d: usize) -> [Model; 3] {
    random_models_with(rng, d, CdfOptions::default())
}

/// [`random_models`] with explicit probability settings.
pub fn random_models_with<R: Rng>(rng: &mut R, d: usize, o: CdfOptions) -> [Model; 3] {
    let sites = random_sites(rng, d);
    let vario = VariogramSpec::isotropic(rng.random_range(0.8..3.0), rng.random_range(0.5..1.8));
    let br = BrModel::new(&sites, &vario, [0.0, 0.0], o).unwrap();
    let eta = DVector::from_fn(d, |_, _| rng.random_range(-0.8..0.8));
    let sbr = SbrModel::from_cov_eta(br.sigma().clone(), &eta, o).unwrap();
    let tet = TetModel::new(&sites, &vario, rng.random_range(1.0..4.0), o).unwrap();
    [Model::Br(br), Model::Sbr(sbr), Model::Tet(tet)]
}

pub fn random_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.3..3.0)).collect()
}

/// Kolmogorov–Smirnov distance between a sample and a continuous cdf.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
