//! Nested Monte Carlo estimation.
//!
//! For each of `S` outer iterations a parameter set is drawn from the
//! prior, a dataset is simulated from it, and `R` posterior draws given
//! that dataset are pushed through the model. Posterior mean net benefit
//! and the fraction of inner draws in which each treatment is best
//! summarise every dataset; the estimators only ever see these summaries.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VoiError};
use crate::implementation::{assemble_evsi, assemble_evsi_im, CurrentShares, MarketShareFunction};
use crate::psa::{DecisionModel, NetBenefitMatrix, ParameterDraw, PriorSpec};
use crate::rng::{Stream, StreamFamily};
use crate::stats;
use crate::studies::{posterior_draws_with, simulate_dataset_with, StudyDesign};

/// Posterior summaries of one simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Posterior expected net benefit per treatment.
    pub mu: Vec<f64>,
    /// Posterior probability that each treatment is best.
    pub p: Vec<f64>,
    /// Posterior variance of each treatment's net benefit.
    pub variance: Vec<f64>,
    /// Posterior variance of `NB_d - NB_0`; zero for `d = 0`.
    pub incremental_variance: Vec<f64>,
    pub n_effective: usize,
    pub dataset_index: usize,
}

/// Summaries of a nested simulation plus the cost of producing them.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedSummaries {
    pub summaries: Vec<PosteriorSummary>,
    pub r: usize,
    pub seconds: f64,
}

impl NestedSummaries {
    pub fn new(summaries: Vec<PosteriorSummary>, r: usize) -> Self {
        Self { summaries, r, seconds: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }

    /// Posterior means as a datasets x treatments table.
    pub fn mu_matrix(&self) -> Result<NetBenefitMatrix> {
        let d = self.summaries.first().map_or(0, |s| s.mu.len());
        let data: Vec<f64> = self.summaries.iter().flat_map(|s| s.mu.iter().copied()).collect();
        NetBenefitMatrix::from_rows(self.summaries.len(), d, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "nmc")]
    NestedMonteCarlo,
    #[serde(rename = "mm")]
    MomentMatching,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::NestedMonteCarlo => "nmc",
            Method::MomentMatching => "mm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvsiEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Number of datasets the estimate averages over.
    pub s: usize,
    /// Posterior draws per nested dataset.
    pub r: usize,
    pub wall_time: f64,
    pub method: Method,
}

/// Posterior mean, probability of being best and variance for each
/// treatment over a set of posterior draws. `n_effective` and
/// `dataset_index` are left at zero for the caller to fill in.
pub fn summarize(draws: &[ParameterDraw], model: &DecisionModel) -> PosteriorSummary {
    let d = model.treatments();
    let r = draws.len() as f64;
    let mut nb = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut inc_sum = vec![0.0; d];
    let mut inc_sq = vec![0.0; d];
    let mut wins = vec![0usize; d];
    // Shift by the first draw's values to keep the variance accumulation
    // well conditioned at money scale.
    let mut shift = vec![0.0; d];
    if let Some(first) = draws.first() {
        model.evaluate_into(first, &mut shift);
    }
    for draw in draws {
        model.evaluate_into(draw, &mut nb);
        wins[stats::argmax(&nb)] += 1;
        let base = nb[0] - shift[0];
        for k in 0..d {
            let x = nb[k] - shift[k];
            sum[k] += x;
            sum_sq[k] += x * x;
            inc_sum[k] += x - base;
            inc_sq[k] += (x - base) * (x - base);
        }
    }
    let var_of = |s: f64, sq: f64| {
        if r < 2.0 {
            0.0
        } else {
            ((sq - s * s / r) / (r - 1.0)).max(0.0)
        }
    };
    PosteriorSummary {
        mu: (0..d).map(|k| shift[k] + sum[k] / r).collect(),
        p: wins.iter().map(|&w| w as f64 / r).collect(),
        variance: (0..d).map(|k| var_of(sum[k], sum_sq[k])).collect(),
        incremental_variance: (0..d).map(|k| var_of(inc_sum[k], inc_sq[k])).collect(),
        n_effective: 0,
        dataset_index: 0,
    }
}

/// Run the nested simulation: `s` outer datasets with `r` posterior draws each.
pub fn nmc_summaries(
    design: &StudyDesign,
    prior: &PriorSpec,
    model: &DecisionModel,
    s: usize,
    r: usize,
    seed: u64,
) -> Result<NestedSummaries> {
    if s < 2 {
        return Err(VoiError::invalid("S", format!("must be at least 2, got {s}")));
    }
    if r < 2 {
        return Err(VoiError::invalid("R", format!("must be at least 2, got {r}")));
    }
    let start = Instant::now();
    let sampler = prior.sampler()?;
    let outer = StreamFamily::new(seed, Stream::Outer);
    let data = StreamFamily::new(seed, Stream::Data);
    let post = StreamFamily::new(seed, Stream::Posterior);
    let summaries = (0..s)
        .into_par_iter()
        .map(|i| {
            let theta = sampler.sample(&mut outer.rng(i as u64));
            let dataset = simulate_dataset_with(design, &theta, &mut data.rng(i as u64));
            let (draws, _) = posterior_draws_with(&dataset, prior, r, &mut post.rng(i as u64))?;
            Ok(PosteriorSummary { n_effective: dataset.n_effective(), dataset_index: i, ..summarize(&draws, model) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NestedSummaries { summaries, r, seconds: start.elapsed().as_secs_f64() })
}

/// Standard value of sample information from nested summaries.
pub fn nmc_evsi(nested: &NestedSummaries) -> Result<EvsiEstimate> {
    if nested.is_empty() {
        return Err(VoiError::invalid("summaries", "no datasets"));
    }
    let start = Instant::now();
    let v = assemble_evsi(&nested.mu_matrix()?)?;
    Ok(EvsiEstimate {
        value: v.value,
        std_error: stats::std_error(&v.contributions),
        s: nested.len(),
        r: nested.r,
        wall_time: nested.seconds + start.elapsed().as_secs_f64(),
        method: Method::NestedMonteCarlo,
    })
}

/// Implementation-adjusted value of sample information from nested
/// summaries. Market shares come from the target treatment's posterior
/// probability of being best.
pub fn nmc_evsi_im(
    nested: &NestedSummaries,
    market: &MarketShareFunction,
    current: &CurrentShares,
) -> Result<EvsiEstimate> {
    if nested.is_empty() {
        return Err(VoiError::invalid("summaries", "no datasets"));
    }
    let start = Instant::now();
    let p_target: Vec<f64> = nested.summaries.iter().map(|s| s.p[market.target]).collect();
    let v = assemble_evsi_im(&nested.mu_matrix()?, &p_target, market, current)?;
    Ok(EvsiEstimate {
        value: v.value,
        std_error: stats::std_error(&v.contributions),
        s: nested.len(),
        r: nested.r,
        wall_time: nested.seconds + start.elapsed().as_secs_f64(),
        method: Method::NestedMonteCarlo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implementation::CurrentShares;

    fn summary(mu: Vec<f64>, p: Vec<f64>, i: usize) -> PosteriorSummary {
        let variance = vec![0.0; mu.len()];
        let incremental_variance = variance.clone();
        PosteriorSummary { mu, p, variance, incremental_variance, n_effective: 1, dataset_index: i }
    }

    fn sm_inc(draws: &[ParameterDraw], model: &DecisionModel) -> f64 {
        summarize(draws, model).incremental_variance[1]
    }

    #[test]
    fn summarize_matches_direct_formulas() {
        let model = DecisionModel::case_study();
        let draws: Vec<ParameterDraw> =
            (1..=20).map(|k| ParameterDraw::from_parts(0.01 * k as f64, 0.3, 0.02 * k as f64, 0.6)).collect();
        let sm = summarize(&draws, &model);
        let (mu, p, var) = (sm.mu, sm.p, sm.variance);
        let nb: Vec<Vec<f64>> = draws.iter().map(|d| model.evaluate(d)).collect();
        for k in 0..2 {
            let col: Vec<f64> = nb.iter().map(|r| r[k]).collect();
            assert!((mu[k] - stats::mean(&col)).abs() < 1e-6);
            assert!((var[k] - stats::variance(&col)).abs() < 1e-6 * stats::variance(&col));
        }
        let wins2 = nb.iter().filter(|r| r[1] > r[0]).count() as f64 / 20.0;
        assert!((p[1] - wins2).abs() < 1e-15);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        let inb: Vec<f64> = nb.iter().map(|r| r[1] - r[0]).collect();
        assert!((sm_inc(&draws, &model) - stats::variance(&inb)).abs() < 1e-6 * stats::variance(&inb));
        assert_eq!(summarize(&draws, &model).incremental_variance[0], 0.0);
    }

    #[test]
    fn all_draws_favouring_novel_give_p_one() {
        let model = DecisionModel::case_study();
        // Tiny event risk and no side effects: novel treatment always better.
        let draws = vec![ParameterDraw::from_parts(0.5, 0.01, 0.001, 0.5); 10];
        let p = summarize(&draws, &model).p;
        assert_eq!(p, vec![0.0, 1.0]);
    }

    #[test]
    fn perfect_information_limit_is_evpi() {
        use crate::psa::{evpi, sample_prior};
        let model = DecisionModel::case_study();
        let psa = sample_prior(&PriorSpec::case_study(), &model, 2000, 9).unwrap();
        let summaries = (0..psa.len()).map(|i| summary(psa.nb.row(i).to_vec(), vec![0.5, 0.5], i)).collect();
        let est = nmc_evsi(&NestedSummaries::new(summaries, 1)).unwrap();
        assert!((est.value - evpi(&psa)).abs() < 1e-6);
    }

    #[test]
    fn step_identity_is_bitwise() {
        let summaries: Vec<_> = [(1.0, 3.0), (5.0, 2.0), (4.5, 4.25), (-1.0, 0.5)]
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| summary(vec![a, b], vec![0.5, 0.5], i))
            .collect();
        let nested = NestedSummaries::new(summaries, 10);
        let means = [(1.0 + 5.0 + 4.5 - 1.0) / 4.0, (3.0 + 2.0 + 4.25 + 0.5) / 4.0];
        let current = CurrentShares::all_on(stats::argmax(&means), 2);
        let a = nmc_evsi(&nested).unwrap();
        let b = nmc_evsi_im(&nested, &MarketShareFunction::step_at_argmax(), &current).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn invalid_counts_rejected() {
        let design = StudyDesign::case_study(1).unwrap();
        let model = DecisionModel::case_study();
        let prior = PriorSpec::case_study();
        assert!(nmc_summaries(&design, &prior, &model, 1, 10, 0).is_err());
        assert!(nmc_summaries(&design, &prior, &model, 10, 1, 0).is_err());
        assert!(nmc_evsi(&NestedSummaries::new(vec![], 1)).is_err());
    }
}
