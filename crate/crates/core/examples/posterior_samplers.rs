//! Posterior draws for each study type.

use voi::prelude::*;
use voi::stats;
use voi::studies::{posterior_draws, Dataset, DatasetPayload};

fn main() -> voi::Result<()> {
    let prior = PriorSpec::case_study();
    let datasets = [
        DatasetPayload::SideEffects { x: 12, n: 60 },
        DatasetPayload::QualityOfLife { sum_logit: 75.0, n: 100 },
        DatasetPayload::EffectivenessRct { x_control: 30, x_treat: 11, n: 200 },
    ];
    for payload in datasets {
        let post = posterior_draws(&Dataset::new(payload)?, &prior, 5_000, 3)?;
        let col = |p: Parameter| post.draws.iter().map(|d| d.get(p)).collect::<Vec<_>>();
        println!("{payload:?}");
        for p in [Parameter::PC, Parameter::OddsRatio, Parameter::PSE, Parameter::QC] {
            let xs = col(p);
            println!("  {p:?}: mean {:.4} sd {:.4}", stats::mean(&xs), stats::std_dev(&xs));
        }
        if let Some(acc) = post.acceptance {
            println!("  acceptance {acc:.2}");
        }
    }
    Ok(())
}
