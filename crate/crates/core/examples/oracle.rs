//! Closed-form exponent functions, intensities and partial derivatives next to
//! their brute-force references, plus the multivariate probabilities behind them.
//!
//! `cargo run --release --example oracle`

use nalgebra::DMatrix;

use spex::dist::{mvn_cdf, mvt_cdf, trunc_mvn_cdf, CdfOptions};
use spex::model::{SiteSet, SpectralModel, TetModel, VariogramSpec, Model};
use spex::oracle::{
    cdf_by_conditioning, exponent_mc_model, finite_diff_partial, kappa_quadrature_model,
    trunc_cdf_inclusion_exclusion, SpectralDensity, FD_REL_STEP,
};

fn main() -> spex::Result<()> {
    let sites = SiteSet::from_coords(vec![[1.0, 1.0], [2.0, 1.5], [1.5, 3.0]])?;
    let model = Model::Tet(TetModel::new(&sites, &VariogramSpec::isotropic(2.0, 1.0), 2.0, CdfOptions::default())?);
    let density = SpectralDensity::from_model(&model);
    let x = [0.8, 1.4, 1.1];

    let q = kappa_quadrature_model(&density, &x, 1e-8)?;
    println!("intensity      closed {:.10}  quadrature {:.10} ± {:.1e}", model.intensity(&x)?, q.value, q.error);
    let mc = exponent_mc_model(&density, &x, 200_000, 1)?;
    println!("exponent       closed {:.6}  Monte Carlo {:.6} ± {:.1e}", model.exponent(&x)?, mc.value, mc.error);
    let fd = finite_diff_partial(|y| model.exponent(y).unwrap_or(f64::NAN), &x, &[0, 2], FD_REL_STEP)?;
    println!("partial {{1,3}}  closed {:.8}  finite diff {:.8}", model.partial(&x, &[0, 2])?, -fd.value);

    let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.3, 0.5, 1.0, 0.4, 0.3, 0.4, 1.0]);
    let (up, mean) = ([1.0, 0.8, 1.5], [0.2, -0.1, 0.3]);
    let o = CdfOptions::with_tol(1e-9);
    let lo = [f64::NEG_INFINITY; 3];
    println!("normal cdf     QMC {:.10}  conditioning {:.10}", mvn_cdf(&lo, &up, &mean, &c, &o)?.value, cdf_by_conditioning(&up, &mean, &c, None)?);
    println!("t(3) cdf       QMC {:.10}  conditioning {:.10}", mvt_cdf(&up, &mean, &c, 3.0, &o)?.value, cdf_by_conditioning(&up, &mean, &c, Some(3.0))?);
    let ie = trunc_cdf_inclusion_exclusion(&up, &mean, &c, None)?;
    println!("truncated cdf  QMC {:.10}  inclusion-exclusion {:.10}", trunc_mvn_cdf(&up, &mean, &c, &o)?, ie.value);
    Ok(())
}
