//! Nested Monte Carlo for the side-effect study at a reduced size.

use voi::prelude::*;

fn main() -> voi::Result<()> {
    let model = DecisionModel::case_study();
    let design = StudyDesign::case_study(1).expect("study 1 exists");
    let nested = nmc_summaries(&design, &PriorSpec::case_study(), &model, 1_000, 2_000, 5)?;
    let evsi = nmc_evsi(&nested)?;
    let im = nmc_evsi_im(&nested, &MarketShareFunction::case_study(), &CurrentShares::all_on(0, 2))?;
    println!("EVSI    {:.0} ± {:.0}", evsi.value, evsi.std_error);
    println!("EVSI^IM {:.0} ± {:.0}", im.value, im.std_error);
    println!("{:.2}s for S={} R={}", nested.seconds, nested.len(), nested.r);
    Ok(())
}
