//! Exact simulation of max-stable and r-Pareto fields for the three families.
//!
//! `cargo run --release --example simulate`

use spex::dependence::{empirical_theta2, model_theta2, EmpiricalMode};
use spex::dist::CdfOptions;
use spex::inference::{Margins, ObservationSet};
use spex::model::{BrModel, Model, SbrModel, SiteSet, SkewFieldSpec, TetModel, VariogramSpec};
use spex::simulate::{sample_maxstable, sample_rpareto_convex, sample_rpareto_l1, RiskSpec};

fn main() -> spex::Result<()> {
    let sites = SiteSet::grid(3)?;
    let vario = VariogramSpec::isotropic(2.0, 1.0);
    let skew = SkewFieldSpec { centers: vec![[1.0, 1.0]], coefficients: vec![-1.5], bandwidth: 1.5, background: None };
    // the 9-site extremal-t coefficient needs 8-dimensional orthant probabilities;
    // a 1e-4 error target keeps them quick
    let o = CdfOptions::with_tol(1e-4);
    let models = [
        Model::Br(BrModel::new(&sites, &vario, [0.0, 0.0], o)?),
        Model::Sbr(SbrModel::new(&sites, &vario, &skew, [0.0, 0.0], o)?),
        Model::Tet(TetModel::new(&sites, &vario, 2.0, o)?),
    ];
    for m in &models {
        let batch = sample_maxstable(m, 5_000, 1)?;
        let data = ObservationSet::complete(batch.samples, Margins::Frechet, sites.clone())?;
        let th = model_theta2(m, 0, 4)?;
        let emp = empirical_theta2(&data, 0, 4, &EmpiricalMode::Madogram)?;
        println!("{:>3}: theta2(s1, s5) model {:.4}, madogram {:.4}", m.family(), th, emp);

        let l1 = sample_rpareto_l1(m, 1_000, 2)?;
        let mean_risk = l1.samples.iter().map(|r| r.iter().sum::<f64>()).sum::<f64>() / l1.len() as f64;
        let lp = sample_rpareto_convex(m, &RiskSpec::Lp { p: 4.0 }, 1_000, 3)?;
        println!(
            "     r-Pareto: mean L1 risk {:.2}; L4 risk acceptance {:.1}%",
            mean_risk,
            100.0 * lp.acceptance_rate()
        );
    }
    Ok(())
}
