//! Acceptance rates of the two r-Pareto rejection samplers under Lp risks.
//!
//! The scaled sampler multiplies proposals by `c₀ = min(1, minᵢ 1/r(eᵢ))`; the
//! baseline accepts proposals whose risk exceeds a fixed bound.
//!
//! `cargo run --release --example acceptance_bench`

use spex::dist::CdfOptions;
use spex::model::{Model, ModelParams, BrParams, SiteSet, VariogramSpec};
use spex::simulate::{RiskSpec, Simulator};

fn main() -> spex::Result<()> {
    let risks: Vec<RiskSpec> = [2.0, 3.0, 5.0].iter().map(|&p| RiskSpec::Lp { p }).collect();
    println!("{:>4} {:>3} {:>10} {:>8}", "D", "p", "baseline %", "c0 %");
    for side in [2, 4, 8] {
        let sites = SiteSet::grid(side)?;
        let params = ModelParams::Br(BrParams { variogram: VariogramSpec::isotropic(2.0, 1.0), anchor: [0.0, 0.0] });
        let model = Model::build(&params, &sites, CdfOptions::default())?;
        for cell in Simulator::new(&model)?.acceptance_bench(&risks, 20_000, 7)? {
            let RiskSpec::Lp { p } = cell.risk else { unreachable!() };
            println!("{:>4} {:>3} {:>10.2} {:>8.2}", side * side, p, cell.pct_baseline(), cell.pct_c0());
        }
    }
    Ok(())
}
