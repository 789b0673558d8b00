//! Probabilistic analysis of the shipped decision model.

use voi::prelude::*;

fn main() -> voi::Result<()> {
    let model = DecisionModel::case_study();
    let psa = sample_prior(&PriorSpec::case_study(), &model, 10_000, 1)?;
    let nb = expected_nb(&psa);
    let p = prob_cost_effective(&psa);
    println!("expected net benefit: standard {:.0}, novel {:.0}", nb[0], nb[1]);
    println!("probability novel is cost-effective: {:.3}", p[1]);
    println!("EVPI: {:.0}", evpi(&psa));
    for shares in [CurrentShares::all_on(0, 2), CurrentShares::new(vec![0.7, 0.3])?] {
        println!("current decision value at {:?}: {:.0}", shares.m, current_decision_value(&psa, &shares)?);
    }
    Ok(())
}
