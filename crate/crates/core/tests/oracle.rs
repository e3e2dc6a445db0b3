//! Brute-force references: radial quadrature, spectral Monte Carlo, finite
//! differences and conditioning-based probabilities.

mod common;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use spex::dist::{mvn_cdf, CdfOptions};
use spex::model::{BrModel, Model, SbrModel, SiteSet, SpectralModel, TetModel, VariogramSpec};
use spex::oracle::{
    cdf_by_conditioning, exponent_mc, exponent_mc_model, finite_diff_partial, kappa_quadrature,
    kappa_quadrature_model, SpectralDensity, FD_REL_STEP,
};
use spex::Error;

use common::{random_corr, rel, rng};

const O: CdfOptions = CdfOptions { abs_tol: None, seed: 0x5eed_cafe, max_points: 1 << 23 };

fn br_pair() -> Model {
    // sites one unit apart under γ(h) = h, so γ₁₂ = 1
    let sites = SiteSet::from_coords(vec![[1.0, 1.0], [2.0, 1.0]]).unwrap();
    Model::Br(BrModel::new(&sites, &VariogramSpec::isotropic(1.0, 1.0), [0.0, 0.0], O).unwrap())
}

fn exp1(r: &mut rand_chacha::ChaCha8Rng) -> f64 {
    -(1.0 - r.random::<f64>()).ln()
}

#[test]
fn radial_quadrature_matches_the_closed_form_intensity() {
    let m = br_pair();
    let q = kappa_quadrature_model(&SpectralDensity::from_model(&m), &[1.0, 1.0], 1e-8).unwrap();
    assert!(q.converged && q.error >= 0.0);
    assert!(rel(q.value, m.intensity(&[1.0, 1.0]).unwrap()) < 1e-4);
}

#[test]
fn radial_quadrature_is_homogeneous() {
    let mut r = rng(61);
    for d in 1..=3 {
        let sites = SiteSet::from_coords((0..d).map(|i| [1.0 + i as f64, 1.0 + 0.5 * i as f64]).collect()).unwrap();
        let m = Model::Br(BrModel::new(&sites, &VariogramSpec::isotropic(2.0, 1.0), [0.0, 0.0], O).unwrap());
        let dens = SpectralDensity::from_model(&m);
        let x: Vec<f64> = (0..d).map(|_| r.random_range(0.5..2.0)).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = kappa_quadrature_model(&dens, &x, 1e-10).unwrap().value;
        let b = kappa_quadrature_model(&dens, &x2, 1e-10).unwrap().value;
        assert!(rel(b * 2f64.powi(d as i32 + 1), a) < 1e-6, "d={d}");
    }
}

#[test]
fn radial_quadrature_is_symmetric_for_exchangeable_densities() {
    let m = Model::Tet(TetModel::from_corr(DMatrix::identity(2, 2), 2.0, O).unwrap());
    let dens = SpectralDensity::from_model(&m);
    let a = kappa_quadrature_model(&dens, &[0.7, 1.9], 1e-10).unwrap().value;
    let b = kappa_quadrature_model(&dens, &[1.9, 0.7], 1e-10).unwrap().value;
    assert!(rel(a, b) < 1e-8);
}

#[test]
fn radial_quadrature_of_a_generic_density() {
    // W ~ Exp(1) has unit mean, so ∫ r f(x r) dr = 1/x²
    let q = kappa_quadrature(|w| if w[0] > 0.0 { -w[0] } else { f64::NEG_INFINITY }, &[1.6], 1e-10).unwrap();
    assert!(rel(q.value, 1.0 / 2.56) < 1e-8);
    let too_big = kappa_quadrature(|_| 0.0, &[1.0; 5], 1e-6);
    assert!(matches!(too_big, Err(Error::Domain(_))));
}

#[test]
fn monte_carlo_exponent_of_unit_mean_variables() {
    let one = exponent_mc(|r| vec![exp1(r)], &[1.0], 200_000, 62).unwrap();
    assert!((one.value - 1.0).abs() < 4.0 * one.error && one.error > 0.0);
    let dup = exponent_mc(
        |r| {
            let w = exp1(r);
            vec![w, w]
        },
        &[1.0, 1.0],
        200_000,
        62,
    )
    .unwrap();
    assert_eq!(dup.value, one.value);
    let again = exponent_mc(|r| vec![exp1(r)], &[1.0], 200_000, 62).unwrap();
    assert_eq!(again.value.to_bits(), one.value.to_bits());
    assert_eq!(one.metadata["seed"], 62.0);
    assert_eq!(one.metadata["draws"], 200_000.0);
}

#[test]
fn monte_carlo_exponent_matches_the_skewed_closed_form() {
    let sites = SiteSet::from_coords(vec![[1.0, 1.0], [2.0, 2.0]]).unwrap();
    let br = BrModel::new(&sites, &VariogramSpec::isotropic(1.5, 1.0), [0.0, 0.0], O).unwrap();
    let sbr = SbrModel::from_cov_eta(br.sigma().clone(), &DVector::from_vec(vec![0.6, -0.9]), O).unwrap();
    let x = [0.8, 1.3];
    let mc = exponent_mc_model(&SpectralDensity::from_model(&Model::Sbr(sbr.clone())), &x, 1_000_000, 63).unwrap();
    let v = sbr.exponent(&x).unwrap();
    assert!((v - mc.value).abs() < 3.0 * mc.error, "{v} vs {} ± {}", mc.value, mc.error);
}

#[test]
fn finite_differences_of_the_independence_exponent() {
    let v = |x: &[f64]| 1.0 / x[0] + 1.0 / x[1];
    let d1 = finite_diff_partial(v, &[2.0, 0.7], &[0], FD_REL_STEP).unwrap();
    assert!(d1.converged && (d1.value + 0.25).abs() < 1e-9);
    let d12 = finite_diff_partial(v, &[2.0, 0.7], &[0, 1], FD_REL_STEP).unwrap();
    assert!(d12.value.abs() < 1e-6);
    assert!(finite_diff_partial(v, &[2.0, 0.7], &[0, 1, 1], FD_REL_STEP).is_err());
    assert!(finite_diff_partial(|_| 0.0, &[1.0; 4], &[0, 1, 2, 3], FD_REL_STEP).is_err());
}

#[test]
fn finite_differences_flag_a_rough_evaluator() {
    // rounding to 1e-5 swamps differences over steps of order 1e-4
    let rough = |x: &[f64]| (1e5 / x[0]).round() * 1e-5;
    let d = finite_diff_partial(rough, &[1.7], &[0], FD_REL_STEP).unwrap();
    assert!(d.error > 0.0, "{d:?}");
    assert!(!d.converged);
}

#[test]
fn finite_differences_match_the_skewed_partial() {
    let sites = SiteSet::from_coords(vec![[1.0, 1.0], [2.0, 1.0], [1.5, 2.5]]).unwrap();
    let br = BrModel::new(&sites, &VariogramSpec::isotropic(2.0, 1.3), [0.0, 0.0], O).unwrap();
    let sbr = SbrModel::from_cov_eta(br.sigma().clone(), &DVector::from_vec(vec![0.4, -0.7, 0.3]), O).unwrap();
    let x = [0.9, 1.4, 0.6];
    let fd = finite_diff_partial(|y| sbr.exponent(y).unwrap(), &x, &[0, 1], FD_REL_STEP).unwrap();
    let closed = sbr.partial(&x, &[0, 1]).unwrap();
    assert!(fd.value < 0.0 && closed > 0.0);
    assert!(rel(-fd.value, closed) < 1e-3);
}

#[test]
fn conditioning_reproduces_gaussian_probabilities() {
    let mut r = rng(64);
    for d in 1..=4 {
        for _ in 0..3 {
            let c = random_corr(&mut r, d) * r.random_range(0.5..2.0);
            let mean: Vec<f64> = (0..d).map(|_| r.random_range(-0.5..0.5)).collect();
            let up: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.5)).collect();
            let a = cdf_by_conditioning(&up, &mean, &c, None).unwrap();
            let o = CdfOptions::with_tol(1e-9);
            let b = mvn_cdf(&vec![f64::NEG_INFINITY; d], &up, &mean, &c, &o).unwrap().value;
            assert!((a - b).abs() < 2e-8, "d={d}: {a} vs {b}");
        }
    }
    let half = cdf_by_conditioning(&[0.0, 0.0], &[0.0, 0.0], &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]), None).unwrap();
    assert!((half - 1.0 / 3.0).abs() < 1e-12);
    let t = cdf_by_conditioning(&[0.0, 0.0, 0.0], &[0.0; 3], &DMatrix::identity(3, 3), Some(3.0)).unwrap();
    assert!((t - 0.125).abs() < 1e-10);
}
