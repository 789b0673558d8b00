//! Posterior samplers against closed forms and an independent quadrature.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF, Normal};
use voi::prelude::*;
use voi::stats;
use voi::studies::{
    grid_posterior_rct, posterior_draws, posterior_effectiveness_with, quality_posterior_moments, Dataset,
    DatasetPayload, MhSettings,
};

fn prior() -> PriorSpec {
    PriorSpec::case_study()
}

fn column(draws: &[ParameterDraw], p: Parameter) -> Vec<f64> {
    draws.iter().map(|d| d.get(p)).collect()
}

fn ks_ok(sample: &[f64], cdf: impl Fn(f64) -> f64) -> bool {
    let d = stats::ks_statistic(sample, cdf);
    stats::ks_p_value(d, sample.len()) > 1e-3
}

#[test]
fn beta_binomial_update_matches_closed_form() {
    let data = Dataset::new(DatasetPayload::SideEffects { x: 19, n: 60 }).unwrap();
    let draws = posterior_draws(&data, &prior(), 40_000, 3).unwrap().draws;
    let p_se = column(&draws, Parameter::PSE);
    let (a, b): (f64, f64) = (3.0 + 19.0, 9.0 + 41.0);
    let mean = a / (a + b);
    let var = a * b / ((a + b).powi(2) * (a + b + 1.0));
    assert!((stats::mean(&p_se) - mean).abs() < 3.0 * stats::std_error(&p_se));
    // Var of the sample variance is about 2 var^2 / (n-1) for near-normal draws.
    assert!((stats::variance(&p_se) - var).abs() < 3.0 * var * (2.0 / 40_000f64).sqrt() * 1.5);
    let exact = Beta::new(a, b).unwrap();
    assert!(ks_ok(&p_se, |x| exact.cdf(x)));
}

#[test]
fn normal_update_matches_closed_form() {
    let n = 100;
    let sum_logit = 0.9 * n as f64;
    let data = Dataset::new(DatasetPayload::QualityOfLife { sum_logit, n }).unwrap();
    let draws = posterior_draws(&data, &prior(), 40_000, 4).unwrap().draws;
    let logit_q: Vec<f64> = draws.iter().map(|d| voi::psa::logit(d.q_c())).collect();
    // precision 6 + 100/2 = 56; mean (0.6*6 + 90/2)/56
    let (m, v) = (((0.6 * 6.0) + 45.0) / 56.0, 1.0 / 56.0);
    assert_eq!(quality_posterior_moments(&prior(), sum_logit, n), (m, v));
    assert!((stats::mean(&logit_q) - m).abs() < 3.0 * stats::std_error(&logit_q));
    let exact = Normal::new(m, v.sqrt()).unwrap();
    assert!(ks_ok(&logit_q, |x| exact.cdf(x)));
}

#[test]
fn uninformed_parameters_keep_their_prior() {
    let data = Dataset::new(DatasetPayload::SideEffects { x: 2, n: 60 }).unwrap();
    let draws = posterior_draws(&data, &prior(), 20_000, 5).unwrap().draws;
    let pc = Beta::new(15.0, 85.0).unwrap();
    let lor = Normal::new(-1.5, (1.0f64 / 3.0).sqrt()).unwrap();
    let lq = Normal::new(0.6, (1.0f64 / 6.0).sqrt()).unwrap();
    assert!(ks_ok(&column(&draws, Parameter::PC), |x| pc.cdf(x)));
    let log_or: Vec<f64> = column(&draws, Parameter::OddsRatio).iter().map(|o| o.ln()).collect();
    assert!(ks_ok(&log_or, |x| lor.cdf(x)));
    let logit_q: Vec<f64> = column(&draws, Parameter::QC).iter().map(|&q| voi::psa::logit(q)).collect();
    assert!(ks_ok(&logit_q, |x| lq.cdf(x)));
}

#[test]
fn trial_with_no_data_samples_the_prior() {
    let data = Dataset::new(DatasetPayload::EffectivenessRct { x_control: 0, x_treat: 0, n: 0 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (draws, acc) = posterior_effectiveness_with(&data, &prior(), 20_000, &MhSettings::default(), &mut rng).unwrap();
    assert!(acc > 0.05 && acc < 0.95);
    let pc = column(&draws, Parameter::PC);
    let lor: Vec<f64> = column(&draws, Parameter::OddsRatio).iter().map(|o| o.ln()).collect();
    assert!((stats::mean(&pc) - 0.15).abs() < 3.0 * stats::batch_means_se(&pc, 50));
    assert!((stats::mean(&lor) + 1.5).abs() < 3.0 * stats::batch_means_se(&lor, 50));
}

#[test]
fn metropolis_matches_quadrature() {
    for (k, &(xc, xt)) in [(30u64, 9u64), (18, 2), (45, 20)].iter().enumerate() {
        let data = Dataset::new(DatasetPayload::EffectivenessRct { x_control: xc, x_treat: xt, n: 200 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10 + k as u64);
        let (draws, _) =
            posterior_effectiveness_with(&data, &prior(), 20_000, &MhSettings::default(), &mut rng).unwrap();
        let oracle = grid_posterior_rct(&prior(), xc, xt, 200, 200).unwrap();
        let pc = column(&draws, Parameter::PC);
        let lor: Vec<f64> = column(&draws, Parameter::OddsRatio).iter().map(|o| o.ln()).collect();
        let se_pc = stats::batch_means_se(&pc, 50);
        let se_lor = stats::batch_means_se(&lor, 50);
        assert!((stats::mean(&pc) - oracle.mean_p_c).abs() < 3.0 * se_pc, "dataset {k} P_C");
        assert!((stats::mean(&lor) - oracle.mean_log_or).abs() < 3.0 * se_lor, "dataset {k} log OR");
        let ratio = stats::variance(&lor) / oracle.var_log_or;
        assert!((0.85..1.15).contains(&ratio), "dataset {k} log OR variance ratio {ratio}");
    }
}

#[test]
fn posterior_draws_are_reproducible() {
    let data = Dataset::new(DatasetPayload::EffectivenessRct { x_control: 30, x_treat: 9, n: 200 }).unwrap();
    let a = posterior_draws(&data, &prior(), 500, 9).unwrap();
    let b = posterior_draws(&data, &prior(), 500, 9).unwrap();
    assert_eq!(a, b);
}
