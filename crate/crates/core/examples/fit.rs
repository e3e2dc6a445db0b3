//! Spectral-likelihood fits of Brown–Resnick and skewed Brown–Resnick models to
//! L1 r-Pareto data from a skewed model, compared by AIC.
//!
//! `cargo run --release --example fit`

use spex::dist::CdfOptions;
use spex::inference::{fit, Family, FitOptions, FitSpec, Margins, ObservationSet, SkewBasis, ThresholdMethod};
use spex::model::{Model, ModelParams, SbrParams, SiteSet, SkewFieldSpec, VariogramSpec};
use spex::simulate::{sample_rpareto_l1, RiskSpec};

fn main() -> spex::Result<()> {
    let sites = SiteSet::grid(8)?;
    let centers = vec![[3.0, 3.0], [6.0, 6.0]];
    let truth = ModelParams::Sbr(SbrParams {
        variogram: VariogramSpec::isotropic(3.0, 1.0),
        skew: SkewFieldSpec { centers: centers.clone(), coefficients: vec![-1.0, -2.0], bandwidth: 4.0, background: None },
        anchor: [0.0, 0.0],
    });
    let model = Model::build(&truth, &sites, CdfOptions::default())?;
    let batch = sample_rpareto_l1(&model, 2_000, 11)?;
    let data = ObservationSet::complete(batch.samples, Margins::Pareto, sites)?;
    let threshold = ThresholdMethod::Quantile { q: 0.95 };

    for (family, skew) in [(Family::Br, None), (Family::Sbr, Some(SkewBasis { centers: centers.clone(), bandwidth: 4.0 }))] {
        let spec = FitSpec { family, skew, options: FitOptions { jackknife: true, ..FitOptions::default() } };
        let r = fit(&spec, &data, &RiskSpec::L1, &threshold, 5)?;
        println!("{family:?}: {} exceedances above {:.3}, AIC {:.2}", r.n_exceed, r.threshold, r.aic);
        let se = r.jackknife.as_ref().map(|j| j.std_errors.clone()).unwrap_or_default();
        for (k, name) in r.parameter_names.iter().enumerate() {
            println!("  {name:>10} = {:8.4}  (jackknife se {:.4})", r.estimates[k], se.get(k).copied().unwrap_or(f64::NAN));
        }
    }
    println!("truth: range 3, smoothness 1, b = (-1, -2)");
    Ok(())
}
