//! Exponent functions, intensities and partial derivatives of the three
//! families: structural properties and oracle cross-checks.

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use spex::dist::{sample_trunc_mvn, CdfOptions, TruncMethod};
use spex::model::{
    build_br_cov, eta_from_kernels, eta_from_xi, semivariogram, xi_from_eta, BrModel, Model, SbrModel, SiteSet,
    SkewFieldSpec, SpectralModel, TetModel, VariogramSpec,
};
use spex::oracle::{exponent_mc_model, finite_diff_partial, kappa_quadrature_model, SpectralDensity, FD_REL_STEP};
use spex::Error;

use common::{random_corr, random_models, random_point, random_sites, rel, rng};

const O: CdfOptions = CdfOptions { abs_tol: None, seed: 0x5eed_cafe, max_points: 1 << 23 };

fn pair_sites(h: f64) -> SiteSet {
    SiteSet::from_coords(vec![[1.0, 1.0], [1.0 + h, 1.0]]).unwrap()
}

fn equicorrelation(d: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10, ..ProptestConfig::default() })]

    #[test]
    fn exponent_and_intensity_are_homogeneous(seed in 0u64..10_000, d in 2usize..=4, t in 0.2f64..5.0) {
        let mut r = rng(seed);
        for m in random_models(&mut r, d) {
            let x = random_point(&mut r, d);
            let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
            let v = m.exponent(&x).unwrap();
            prop_assert!(rel(m.exponent(&tx).unwrap() * t, v) < 1e-9, "{} V", m.family());
            let k = m.intensity(&x).unwrap();
            prop_assert!(k > 0.0);
            prop_assert!(rel(m.intensity(&tx).unwrap() * t.powi(d as i32 + 1), k) < 1e-9, "{} kappa", m.family());
        }
    }

    #[test]
    fn margins_are_unit_frechet(seed in 0u64..10_000, d in 2usize..=4) {
        let mut r = rng(seed);
        for m in random_models(&mut r, d) {
            let k = r.random_range(0..d);
            let xk = r.random_range(0.3..3.0);
            let mut x = vec![f64::INFINITY; d];
            x[k] = xk;
            prop_assert!(rel(m.exponent(&x).unwrap(), 1.0 / xk) < 1e-6, "{} exact infinity", m.family());
            let mut x = vec![1e8; d];
            x[k] = xk;
            prop_assert!((m.exponent(&x).unwrap() - 1.0 / xk).abs() < 1e-4, "{} large coordinates", m.family());
        }
    }

    #[test]
    fn extremal_coefficient_lies_between_one_and_d(seed in 0u64..10_000, d in 1usize..=5) {
        let mut r = rng(seed);
        for m in random_models(&mut r, d) {
            let th = m.theta().unwrap();
            prop_assert!(th >= 1.0 - 1e-9 && th <= d as f64 + 1e-9, "{} theta {th}", m.family());
        }
    }

    #[test]
    fn partials_are_nonnegative_and_reduce_to_intensity(seed in 0u64..10_000, d in 2usize..=4) {
        let mut r = rng(seed);
        for m in random_models(&mut r, d) {
            let x = random_point(&mut r, d);
            let full: Vec<usize> = (0..d).collect();
            prop_assert!(rel(m.partial(&x, &full).unwrap(), m.intensity(&x).unwrap()) < 1e-8);
            for mask in 1u32..(1 << d) - 1 {
                let b: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
                prop_assert!(m.partial(&x, &b).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn partial_with_distant_complement_is_the_marginal_intensity(seed in 0u64..10_000, d in 2usize..=4) {
        let mut r = rng(seed);
        for m in random_models(&mut r, d) {
            let b: Vec<usize> = (0..d).filter(|_| r.random_bool(0.5)).collect();
            if b.is_empty() || b.len() == d {
                continue;
            }
            let x_b = random_point(&mut r, b.len());
            let mut x = vec![1e12; d];
            for (p, &i) in b.iter().enumerate() {
                x[i] = x_b[p];
            }
            let lhs = m.partial(&x, &b).unwrap();
            let rhs = m.ln_marginal_intensity(&x_b, &b).unwrap().exp();
            prop_assert!(rel(lhs, rhs) < 1e-6, "{} B={b:?}: {lhs} vs {rhs}", m.family());
        }
    }

    #[test]
    fn zero_slant_skewed_model_is_brown_resnick(seed in 0u64..10_000, d in 1usize..=4) {
        let mut r = rng(seed);
        let sites = random_sites(&mut r, d);
        let vario = VariogramSpec::isotropic(r.random_range(0.8..3.0), r.random_range(0.5..1.8));
        let br = BrModel::new(&sites, &vario, [0.0, 0.0], O).unwrap();
        let sbr = SbrModel::from_cov_eta(br.sigma().clone(), &DVector::zeros(d), O).unwrap();
        let x = random_point(&mut r, d);
        prop_assert!(rel(sbr.exponent(&x).unwrap(), br.exponent(&x).unwrap()) < 1e-10);
        prop_assert!(rel(sbr.intensity(&x).unwrap(), br.intensity(&x).unwrap()) < 1e-10);
        for mask in 1u32..(1 << d) {
            let b: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
            prop_assert!(rel(sbr.partial(&x, &b).unwrap(), br.partial(&x, &b).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn slant_map_round_trips(seed in 0u64..10_000, d in 1usize..=6) {
        let mut r = rng(seed);
        let sites = random_sites(&mut r, d);
        let sigma = build_br_cov(&sites, &VariogramSpec::isotropic(2.0, 1.0), [0.0, 0.0]).unwrap();
        let eta = DVector::from_fn(d, |_, _| r.random_range(-2.0..2.0));
        let back = eta_from_xi(&xi_from_eta(&eta, &sigma).unwrap(), &sigma).unwrap();
        prop_assert!((back - eta).amax() < 1e-10);
    }
}

#[test]
fn brown_resnick_is_anchor_invariant() {
    let mut r = rng(21);
    let sites = random_sites(&mut r, 3);
    let vario = VariogramSpec { range: 1.7, smoothness: 1.3, rotation: 0.3, stretch: 1.4 };
    let a = BrModel::new(&sites, &vario, [0.0, 0.0], O).unwrap();
    let b = BrModel::new(&sites, &vario, [-4.0, 7.5], O).unwrap();
    for _ in 0..5 {
        let x = random_point(&mut r, 3);
        assert!(rel(a.intensity(&x).unwrap(), b.intensity(&x).unwrap()) < 1e-8);
        assert!(rel(a.exponent(&x).unwrap(), b.exponent(&x).unwrap()) < 1e-10);
        assert!(rel(a.partial(&x, &[1]).unwrap(), b.partial(&x, &[1]).unwrap()) < 1e-10);
    }
}

#[test]
fn skewed_model_depends_on_the_anchor() {
    // the slant lives on the anchored covariance, so moving the anchor changes the law
    let sites = SiteSet::grid(2).unwrap();
    let vario = VariogramSpec::isotropic(2.0, 1.0);
    let skew = SkewFieldSpec { centers: vec![[1.0, 1.0]], coefficients: vec![1.5], bandwidth: 1.0, background: None };
    let a = SbrModel::new(&sites, &vario, &skew, [0.0, 0.0], O).unwrap();
    let b = SbrModel::new(&sites, &vario, &skew, [-3.0, 5.0], O).unwrap();
    let x = [1.0, 0.7, 1.4, 0.9];
    let gap = rel(a.exponent(&x).unwrap(), b.exponent(&x).unwrap());
    assert!(gap > 1e-6, "anchor change moved V by only {gap}");
}

#[test]
fn variogram_reference_values() {
    let iso = VariogramSpec::isotropic(2.0, 1.0);
    assert_eq!(semivariogram(&iso, [0.0, 0.0]), 0.0);
    assert!((semivariogram(&iso, [3.0, 4.0]) - 2.5).abs() < 1e-14);
    let stretched = VariogramSpec { range: 1.0, smoothness: 1.0, rotation: 0.0, stretch: 2.0 };
    assert!((semivariogram(&stretched, [0.0, 1.0]) - 2.0).abs() < 1e-14);
    assert!(VariogramSpec::isotropic(1.0, 2.5).validate().is_err());
    assert!(VariogramSpec { rotation: 0.8, ..iso }.validate().is_err());
}

#[test]
fn anchored_covariance_recovers_the_variogram() {
    let mut r = rng(22);
    let vario = VariogramSpec { range: 1.3, smoothness: 0.7, rotation: -0.2, stretch: 0.6 };
    let one = SiteSet::from_coords(vec![[1.0, 2.0]]).unwrap();
    let s = build_br_cov(&one, &vario, [0.0, 0.0]).unwrap();
    assert!((s[(0, 0)] - 2.0 * semivariogram(&vario, [1.0, 2.0])).abs() < 1e-14);
    let sites = random_sites(&mut r, 6);
    let s = build_br_cov(&sites, &vario, [0.0, 0.0]).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            let (a, b) = (sites.coord(i), sites.coord(j));
            let g = semivariogram(&vario, [a[0] - b[0], a[1] - b[1]]);
            assert!(((s[(i, i)] + s[(j, j)] - 2.0 * s[(i, j)]) / 2.0 - g).abs() < 1e-12);
        }
    }
}

#[test]
fn kernel_slant_field_is_centred_and_normalized() {
    let sites = SiteSet::grid(5).unwrap();
    let zero = SkewFieldSpec { centers: vec![[2.0, 2.0]], coefficients: vec![0.0], bandwidth: 2.0, background: None };
    assert_eq!(eta_from_kernels(&sites, &zero).unwrap(), DVector::zeros(25));
    for (j, c) in [[1.0, 4.0], [3.5, 2.0], [5.0, 5.0]].iter().enumerate() {
        let mut coefficients = vec![0.0; 3];
        coefficients[j] = 1.0;
        let spec = SkewFieldSpec {
            centers: vec![[1.0, 4.0], [3.5, 2.0], [5.0, 5.0]],
            coefficients,
            bandwidth: 1.5,
            background: None,
        };
        let k = eta_from_kernels(&sites, &spec).unwrap();
        assert!(k.sum().abs() < 1e-12, "kernel at {c:?}");
        assert!((k.norm_squared() - 1.0).abs() < 1e-12);
    }
    let one = SiteSet::from_coords(vec![[1.0, 1.0]]).unwrap();
    let spec = SkewFieldSpec { centers: vec![[0.0, 0.0]], coefficients: vec![1.0], bandwidth: 1.0, background: None };
    assert!(eta_from_kernels(&one, &spec).is_err());
}

#[test]
fn slant_map_reference_values() {
    let id = DMatrix::identity(2, 2);
    assert_eq!(xi_from_eta(&DVector::zeros(2), &id).unwrap(), DVector::zeros(2));
    let xi = xi_from_eta(&DVector::from_vec(vec![1.0, -1.0]), &id).unwrap();
    assert!((xi[0] - 0.577_350_269_189_626).abs() < 1e-12 && (xi[1] + 0.577_350_269_189_626).abs() < 1e-12);
    assert!(matches!(eta_from_xi(&DVector::from_vec(vec![0.8, 0.8]), &id), Err(Error::Domain(_))));
}

#[test]
fn extremal_coefficient_reference_values() {
    let vario = VariogramSpec::isotropic(1.0, 1.0);
    let one = SiteSet::from_coords(vec![[1.0, 1.0]]).unwrap();
    assert!((BrModel::new(&one, &vario, [0.0, 0.0], O).unwrap().theta().unwrap() - 1.0).abs() < 1e-12);
    let th = BrModel::new(&pair_sites(1.0), &vario, [0.0, 0.0], O).unwrap().theta().unwrap();
    assert!((th - 1.520_499_877_813_047).abs() < 1e-9, "{th}");
    let th = BrModel::new(&pair_sites(1e-8), &vario, [0.0, 0.0], O).unwrap().theta().unwrap();
    assert!(th - 1.0 < 1e-4, "{th}");
}

#[test]
fn nonpositive_points_are_rejected() {
    let [br, sbr, tet] = random_models(&mut rng(23), 3);
    for m in [&br, &sbr, &tet] {
        assert!(matches!(m.exponent(&[1.0, 0.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(m.intensity(&[1.0, -1.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(m.partial(&[1.0, 1.0, 1.0], &[]), Err(Error::Domain(_))));
        assert!(m.exponent(&[1.0, 1.0]).is_err());
    }
}

#[test]
fn intensity_matches_radial_quadrature() {
    let mut r = rng(24);
    for d in [2, 3] {
        for m in random_models(&mut r, d) {
            let x = random_point(&mut r, d);
            let q = kappa_quadrature_model(&SpectralDensity::from_model(&m), &x, 1e-8).unwrap();
            assert!(rel(m.intensity(&x).unwrap(), q.value) < 1e-4, "{} d={d}", m.family());
        }
    }
}

#[test]
fn partials_match_finite_differences() {
    let mut r = rng(25);
    for m in random_models(&mut r, 3) {
        let x = random_point(&mut r, 3);
        for b in [vec![0], vec![1, 2]] {
            let fd = finite_diff_partial(|y| m.exponent(y).unwrap(), &x, &b, FD_REL_STEP).unwrap();
            assert!(fd.converged);
            let v = m.partial(&x, &b).unwrap();
            assert!(rel(v, -fd.value) < 1e-3, "{} B={b:?}: {v} vs {}", m.family(), -fd.value);
        }
    }
}

#[test]
fn partials_vanish_at_the_boundary() {
    let sites = SiteSet::grid(2).unwrap().subset(&[0, 1, 2]).unwrap();
    let vario = VariogramSpec::isotropic(2.0, 1.0);
    let models = [
        Model::Br(BrModel::new(&sites, &vario, [0.0, 0.0], O).unwrap()),
        Model::Sbr(SbrModel::from_cov_eta(build_br_cov(&sites, &vario, [0.0, 0.0]).unwrap(), &DVector::from_vec(vec![0.5, -0.3, -0.2]), O).unwrap()),
        Model::Tet(TetModel::new(&sites, &vario, 2.0, O).unwrap()),
    ];
    for m in &models {
        let mut prev = f64::INFINITY;
        // the truncated-t partial decays like ε^{1/ν}, hence the long sequence
        for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8] {
            let v = m.partial(&[1.0, eps, eps], &[0]).unwrap();
            assert!(v < prev, "{} eps={eps}", m.family());
            prev = v;
        }
        assert!(prev < 1e-6, "{} residual {prev}", m.family());
    }
}

#[test]
fn exponent_matches_spectral_monte_carlo() {
    let sites = pair_sites(1.5);
    let vario = VariogramSpec::isotropic(2.0, 1.0);
    let sbr = SbrModel::from_cov_eta(build_br_cov(&sites, &vario, [0.0, 0.0]).unwrap(), &DVector::zeros(2), O).unwrap();
    let tet = TetModel::from_corr(equicorrelation(2, 0.3), 2.0, O).unwrap();
    for m in [Model::Sbr(sbr), Model::Tet(tet)] {
        let mc = exponent_mc_model(&SpectralDensity::from_model(&m), &[1.0, 1.0], 400_000, 26).unwrap();
        let v = m.exponent(&[1.0, 1.0]).unwrap();
        assert!((v - mc.value).abs() < 3.0 * mc.error, "{}: {v} vs {} ± {}", m.family(), mc.value, mc.error);
    }
}

#[test]
fn truncated_t_intensity_is_permutation_invariant_under_exchangeability() {
    let m = TetModel::from_corr(equicorrelation(3, 0.4), 2.5, O).unwrap();
    let x = [0.7, 1.3, 2.1];
    let k = m.intensity(&x).unwrap();
    for p in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let y: Vec<f64> = p.iter().map(|&i| x[i]).collect();
        assert!(rel(m.intensity(&y).unwrap(), k) < 1e-10);
    }
}

#[test]
fn truncated_t_normalizers() {
    let one = TetModel::from_corr(DMatrix::identity(1, 1), 2.0, O).unwrap();
    assert!((one.normalizers()[0] - 1.0).abs() < 1e-8);
    for nu in [0.5, 1.0, 3.7] {
        let m = TetModel::from_corr(DMatrix::identity(1, 1), nu, O).unwrap();
        let moment = (0.5 * nu * std::f64::consts::LN_2 + statrs::function::gamma::ln_gamma(0.5 * (nu + 1.0))).exp()
            / std::f64::consts::PI.sqrt();
        assert!(rel(m.normalizers()[0], moment) < 1e-8, "nu={nu}");
    }
    let m = TetModel::from_corr(DMatrix::identity(4, 4), 1.5, O).unwrap();
    let a = m.normalizers();
    assert!(a.iter().all(|v| (v - a[0]).abs() < 1e-10 * a[0] && *v > 0.0));

    let corr = equicorrelation(2, 0.5);
    let m = TetModel::from_corr(corr.clone(), 2.0, O).unwrap();
    let n = 1_000_000;
    let s = sample_trunc_mvn(&[0.0, 0.0], &corr, n, TruncMethod::Exact, &mut rng(27)).unwrap();
    for k in 0..2 {
        let v: Vec<f64> = s.iter().map(|y| y[k] * y[k]).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        let se = (v.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (n * (n - 1)) as f64).sqrt();
        assert!((m.normalizers()[k] - mean).abs() < 3.0 * se, "a_{k}: {} vs {mean} ± {se}", m.normalizers()[k]);
    }
}

#[test]
fn rebuilt_models_evaluate_bitwise_identically() {
    let mut r = rng(28);
    let d = 4;
    let corr = random_corr(&mut r, d);
    let x = random_point(&mut r, d);
    let a = TetModel::from_corr(corr.clone(), 1.7, O).unwrap();
    let b = TetModel::from_corr(corr, 1.7, O).unwrap();
    assert_eq!(a.exponent(&x).unwrap().to_bits(), b.exponent(&x).unwrap().to_bits());
    assert_eq!(a.partial(&x, &[0, 3]).unwrap().to_bits(), b.partial(&x, &[0, 3]).unwrap().to_bits());
    let [m1, ..] = random_models(&mut rng(29), 5);
    let [m2, ..] = random_models(&mut rng(29), 5);
    assert_eq!(m1.exponent(&[1.0; 5]).unwrap().to_bits(), m2.exponent(&[1.0; 5]).unwrap().to_bits());
}
