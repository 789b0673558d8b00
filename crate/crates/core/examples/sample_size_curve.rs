//! EVSI^IM across trial sizes from one set of quantile datasets.

use voi::prelude::*;

fn main() -> voi::Result<()> {
    let prior = PriorSpec::case_study();
    let model = DecisionModel::case_study();
    let psa = sample_prior(&prior, &model, 10_000, 9)?;
    let design = StudyDesign::case_study(3).expect("study 3 exists");
    let grid: Vec<usize> = (1..=8).map(|i| 50 * i).collect();
    let settings = MmSettings { r: 4_000, bootstrap: 50, ..MmSettings::default() };
    let run = mm_evsi_im_by_n(
        &psa,
        &design,
        &prior,
        &model,
        &MarketShareFunction::case_study(),
        &CurrentShares::all_on(0, 2),
        &settings,
        (25, 400),
        &grid,
        11,
    )?;
    if let Some(fit) = run.logistic {
        println!("sample-size exponent u = {:.3}", fit.u.unwrap_or(0.0));
    }
    for e in &run.estimates {
        println!(
            "n={:>3} EVSI {:>6.0} EVSI^IM {:>6.0} ± {:.0}",
            e.n, e.evsi.value, e.evsi_im.value, e.evsi_im.std_error
        );
    }
    Ok(())
}
