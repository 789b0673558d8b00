//! Moment matching for all three studies from one prior sample.

use voi::prelude::*;

fn main() -> voi::Result<()> {
    let prior = PriorSpec::case_study();
    let model = DecisionModel::case_study();
    let psa = sample_prior(&prior, &model, 10_000, 7)?;
    let market = MarketShareFunction::case_study();
    let current = CurrentShares::all_on(0, 2);
    let settings = MmSettings { r: 5_000, ..MmSettings::default() };
    for k in 1..=3 {
        let design = StudyDesign::case_study(k).expect("studies 1 to 3 exist");
        let run = mm_evsi_im(&psa, &design, &prior, &model, &market, &current, &settings, 100 + k as u64)?;
        println!(
            "study {k}: EVSI {:.0}, EVSI^IM {:.0} ± {:.0} ({:.2}s)",
            run.evsi.value, run.evsi_im.value, run.evsi_im.std_error, run.evsi_im.wall_time
        );
    }
    Ok(())
}
