//! How the uptake rule changes the value of the same nested simulation.

use voi::prelude::*;

fn main() -> voi::Result<()> {
    let model = DecisionModel::case_study();
    let design = StudyDesign::case_study(1).expect("study 1 exists");
    let nested = nmc_summaries(&design, &PriorSpec::case_study(), &model, 1_000, 2_000, 13)?;
    let current = CurrentShares::all_on(0, 2);
    println!("perfect implementation: {:.0}", nmc_evsi(&nested)?.value);
    for threshold in [0.5, 0.6, 0.7, 0.8] {
        let f = MarketShareFunction {
            rule: ShareRule::ThresholdLinear { threshold, saturation_at: 1.0 },
            target: 1,
            baseline: 0,
        };
        println!("uptake starts at p={threshold}: {:.0}", nmc_evsi_im(&nested, &f, &current)?.value);
    }
    let table = MarketShareFunction {
        rule: ShareRule::Table { breakpoints: vec![(0.5, 0.1), (0.7, 0.4), (0.9, 0.8)] },
        target: 1,
        baseline: 0,
    };
    println!("tabulated uptake: {:.0}", nmc_evsi_im(&nested, &table, &current)?.value);
    Ok(())
}
