//! Moment matching estimation of the implementation-adjusted value.
//!
//! Instead of simulating thousands of datasets, `Q` datasets are generated
//! at evenly spread quantiles of the informed parameters and analysed with
//! `R` posterior draws each. Three things are learnt from them:
//!
//! * the average posterior variance of each net benefit, which sets how
//!   far a regression of net benefit on the informed parameters has to be
//!   shrunk to look like a distribution of posterior means;
//! * pairs of (incremental net benefit, probability of cost-effectiveness)
//!   that fix a generalised logistic curve, which then predicts the
//!   probability for every shrunk value;
//! * optionally, how both of the above change with the study's sample size.

mod logistic;
mod optim;
mod spline;
mod variance_curve;

pub use logistic::{fit_generalized_logistic, fit_generalized_logistic_n, LogisticFit};
pub use spline::{PSpline, SplineFit};
pub use variance_curve::{fit_variance_curve, VarianceCurveFit};

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Result, VoiError};
use crate::implementation::{assemble_evsi, assemble_evsi_im, AdjustedValue, CurrentShares, MarketShareFunction};
use crate::nmc::{summarize, EvsiEstimate, Method, NestedSummaries, PosteriorSummary};
use crate::psa::{DecisionModel, NetBenefitMatrix, Parameter, ParameterDraw, PriorSpec, PsaSample};
use crate::rng::{stream_rng, Stream, StreamFamily};
use crate::stats;
use crate::studies::{posterior_draws_with, simulate_dataset_with, Dataset, StudyDesign};

/// Fitted conditional expectations `E[NB_d | phi]` at every PSA draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalExpectationFit {
    /// One vector of length `S` per treatment.
    pub fitted: Vec<Vec<f64>>,
    /// Fitted `E[NB_d - NB_0 | phi]`, one vector per treatment (zeros for
    /// `d = 0`).
    pub incremental: Vec<Vec<f64>>,
    pub basis: String,
    pub residual_variance: Vec<f64>,
}

fn incremental_column(psa: &PsaSample, d: usize) -> Vec<f64> {
    (0..psa.len()).map(|i| psa.nb.get(i, d) - psa.nb.get(i, 0)).collect()
}

/// Regress each net-benefit column on the informed parameters (on their
/// logit/log scale). When every uncertain parameter is informed, the
/// net benefits are their own conditional expectations.
pub fn fit_conditional_expectation(psa: &PsaSample, design: &StudyDesign) -> Result<ConditionalExpectationFit> {
    fit_conditional_expectation_on(psa, design.informed())
}

pub fn fit_conditional_expectation_on(psa: &PsaSample, informed: &[Parameter]) -> Result<ConditionalExpectationFit> {
    let d = psa.treatments();
    if Parameter::ALL.iter().all(|p| informed.contains(p)) {
        return Ok(ConditionalExpectationFit {
            fitted: (0..d).map(|k| psa.nb.column(k)).collect(),
            incremental: (0..d).map(|k| incremental_column(psa, k)).collect(),
            basis: "identity (all parameters informed)".into(),
            residual_variance: vec![0.0; d],
        });
    }
    if psa.draws.len() != psa.len() {
        return Err(VoiError::Regression("PSA sample carries no parameter draws".into()));
    }
    let covariates: Vec<Vec<f64>> =
        informed.iter().map(|&p| psa.draws.iter().map(|draw| p.to_unbounded(draw.get(p))).collect()).collect();
    let smoother = PSpline::new(&covariates)?;
    let fits = (0..d).map(|k| smoother.fit(&psa.nb.column(k))).collect::<Result<Vec<SplineFit>>>()?;
    let mut incremental = vec![vec![0.0; psa.len()]];
    for k in 1..d {
        incremental.push(smoother.fit(&incremental_column(psa, k))?.fitted);
    }
    Ok(ConditionalExpectationFit {
        incremental,
        residual_variance: fits.iter().map(|f| f.residual_variance).collect(),
        fitted: fits.into_iter().map(|f| f.fitted).collect(),
        basis: smoother.description().to_string(),
    })
}

/// Per-treatment variance the posterior means should have: prior
/// variance minus average posterior variance, kept in `[0, prior]`.
pub fn variance_reduction_target(psa: &PsaSample, nested: &[PosteriorSummary]) -> Result<Vec<f64>> {
    if nested.is_empty() {
        return Err(VoiError::invalid("nested", "no nested simulations"));
    }
    Ok((0..psa.treatments())
        .map(|k| {
            let prior = stats::variance(&psa.nb.column(k));
            let posterior = nested.iter().map(|s| s.variance[k]).sum::<f64>() / nested.len() as f64;
            (prior - posterior).clamp(0.0, prior)
        })
        .collect())
}

/// Variance the posterior mean of `NB_d - NB_0` should have, per
/// treatment (zero for `d = 0`), kept in `[0, prior]`.
pub fn incremental_variance_target(psa: &PsaSample, nested: &[PosteriorSummary]) -> Result<Vec<f64>> {
    if nested.is_empty() {
        return Err(VoiError::invalid("nested", "no nested simulations"));
    }
    Ok((0..psa.treatments())
        .map(|k| {
            let prior = stats::variance(&incremental_column(psa, k));
            let posterior = nested.iter().map(|s| s.incremental_variance[k]).sum::<f64>() / nested.len() as f64;
            (prior - posterior).clamp(0.0, prior)
        })
        .collect())
}

/// Rescale the reference treatment's fitted values to `target`, and each
/// incremental fit to `incremental_target`, then rebuild
/// `mu_d = mu_0 + INB_d`.
///
/// Decisions only depend on the increments, so shrinking them directly
/// avoids amplifying regression noise in a column the data barely inform.
pub fn rescale_incremental(
    fit: &ConditionalExpectationFit,
    target: f64,
    incremental_target: &[f64],
) -> Result<NetBenefitMatrix> {
    let d = fit.fitted.len();
    if incremental_target.len() != d || fit.incremental.len() != d {
        return Err(VoiError::LengthMismatch {
            what: "incremental targets vs treatments",
            left: incremental_target.len(),
            right: d,
        });
    }
    if target.is_nan() || target < 0.0 || incremental_target.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(VoiError::invalid("target", "variance targets must be nonnegative"));
    }
    let base = rescale_column(&fit.fitted[0], target);
    let inc: Vec<Vec<f64>> = (1..d).map(|k| rescale_column(&fit.incremental[k], incremental_target[k])).collect();
    let mut data = Vec::with_capacity(base.len() * d);
    for (i, &b) in base.iter().enumerate() {
        data.push(b);
        data.extend(inc.iter().map(|c| b + c[i]));
    }
    NetBenefitMatrix::from_rows(base.len(), d, data)
}

/// Shrink fitted values about their mean so their variance equals `target`.
pub fn rescale(fit: &ConditionalExpectationFit, target: &[f64]) -> Result<NetBenefitMatrix> {
    if target.len() != fit.fitted.len() {
        return Err(VoiError::LengthMismatch {
            what: "targets vs treatments",
            left: target.len(),
            right: fit.fitted.len(),
        });
    }
    if target.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(VoiError::invalid("target", "variance targets must be nonnegative"));
    }
    let columns: Vec<Vec<f64>> = fit.fitted.iter().zip(target).map(|(g, &t)| rescale_column(g, t)).collect();
    let s = columns.first().map_or(0, Vec::len);
    let d = columns.len();
    let data = (0..s).flat_map(|i| columns.iter().map(move |c| c[i])).collect();
    NetBenefitMatrix::from_rows(s, d, data)
}

fn rescale_column(g: &[f64], target: f64) -> Vec<f64> {
    let m = stats::mean(g);
    let var = stats::variance(g);
    if var == 0.0 {
        return vec![m; g.len()];
    }
    let k = (target / var).sqrt();
    g.iter().map(|x| m + (x - m) * k).collect()
}

/// A dataset simulated at fixed quantiles of the informed parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileDataset {
    pub dataset: Dataset,
    /// Parameter values the dataset was generated from.
    pub generating: ParameterDraw,
    pub n: usize,
}

/// `q`-th of `count` datasets uses the `(q + 0.5) / count` sample quantile
/// of each informed parameter (marginal quantiles when there are two).
pub fn quantile_datasets(
    psa: &PsaSample,
    design: &StudyDesign,
    count: usize,
    seed: u64,
) -> Result<Vec<QuantileDataset>> {
    let sizes = vec![design.n; count];
    quantile_datasets_sized(psa, design, &sizes, seed)
}

/// As [`quantile_datasets`] with a sample size per dataset.
pub fn quantile_datasets_sized(
    psa: &PsaSample,
    design: &StudyDesign,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<QuantileDataset>> {
    let count = sizes.len();
    if count < 3 {
        return Err(VoiError::invalid("Q", format!("need at least 3 datasets, got {count}")));
    }
    if psa.draws.len() != psa.len() {
        return Err(VoiError::invalid("psa", "PSA sample carries no parameter draws"));
    }
    let sorted: Vec<(Parameter, Vec<f64>)> =
        design.informed().iter().map(|&p| (p, stats::sorted_copy(&psa.parameter_values(p)))).collect();
    let family = StreamFamily::new(seed, Stream::QuantileData);
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(q, &n)| {
            let level = (q as f64 + 0.5) / count as f64;
            let generating = sorted
                .iter()
                .fold(psa.draws[q % psa.len()], |d, (p, values)| d.with(*p, stats::quantile_sorted(values, level)));
            let dataset = simulate_dataset_with(&design.with_n(n), &generating, &mut family.rng(q as u64));
            QuantileDataset { dataset, generating, n }
        })
        .collect())
}

/// Posterior summaries at each quantile dataset.
///
/// Parameters the study does not inform keep their prior, so their
/// posterior draws are taken from the PSA sample itself (cycling when
/// `r` exceeds its size). The prior and posterior variances then share
/// those draws and their difference, the variance target, is far less
/// noisy than with independent draws.
fn nested_at(
    psa: &PsaSample,
    design: &StudyDesign,
    datasets: &[QuantileDataset],
    prior: &PriorSpec,
    model: &DecisionModel,
    r: usize,
    seed: u64,
) -> Result<Vec<PosteriorSummary>> {
    let family = StreamFamily::new(seed, Stream::QuantilePosterior);
    let fixed: Vec<Parameter> = Parameter::ALL.into_iter().filter(|p| !design.informed().contains(p)).collect();
    datasets
        .par_iter()
        .enumerate()
        .map(|(q, qd)| {
            let (mut draws, _) = posterior_draws_with(&qd.dataset, prior, r, &mut family.rng(q as u64))?;
            for (i, draw) in draws.iter_mut().enumerate() {
                let source = &psa.draws[i % psa.len()];
                *draw = fixed.iter().fold(*draw, |d, &p| d.with(p, source.get(p)));
            }
            Ok(PosteriorSummary { n_effective: qd.n, dataset_index: q, ..summarize(&draws, model) })
        })
        .collect()
}

/// Settings for the moment matching estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmSettings {
    /// Number of quantile datasets.
    pub q: usize,
    /// Posterior draws per quantile dataset.
    pub r: usize,
    /// Bootstrap replicates over the quantile datasets used for the
    /// standard error (0 disables the bootstrap term).
    pub bootstrap: usize,
}

impl Default for MmSettings {
    fn default() -> Self {
        Self { q: 50, r: 10_000, bootstrap: 200 }
    }
}

/// Output of [`mm_evsi_im`].
#[derive(Debug, Clone)]
pub struct MomentMatchingRun {
    pub evsi: EvsiEstimate,
    pub evsi_im: EvsiEstimate,
    pub logistic: LogisticFit,
    /// Variance targets: reference treatment, then incremental net benefit.
    pub targets: [f64; 2],
    /// Shrunk posterior expected net benefits, one row per PSA draw.
    pub mu: NetBenefitMatrix,
    /// Incremental net benefit (treatment 1 minus treatment 0) per PSA draw.
    pub inb: Vec<f64>,
    /// Predicted probability that treatment 1 is cost-effective per PSA draw.
    pub p_novel: Vec<f64>,
    /// Nested results at the quantile datasets.
    pub nested: NestedSummaries,
}

fn require_two(psa: &PsaSample, market: &MarketShareFunction) -> Result<()> {
    if psa.treatments() != 2 {
        return Err(VoiError::invalid(
            "treatments",
            "moment matching supports two-treatment models only; use nested Monte Carlo",
        ));
    }
    market.validate(2)
}

fn inb_pairs(nested: &[PosteriorSummary]) -> (Vec<f64>, Vec<f64>) {
    nested.iter().map(|s| (s.mu[1] - s.mu[0], s.p[1])).unzip()
}

fn target_probabilities(market: &MarketShareFunction, p_novel: &[f64]) -> Vec<f64> {
    if market.target == 1 {
        p_novel.to_vec()
    } else {
        p_novel.iter().map(|p| 1.0 - p).collect()
    }
}

fn inb_of(mu: &NetBenefitMatrix) -> Vec<f64> {
    (0..mu.rows()).map(|i| mu.get(i, 1) - mu.get(i, 0)).collect()
}

/// Prior variances of the reference net benefit and of the increment.
fn prior_variances(psa: &PsaSample) -> [f64; 2] {
    [stats::variance(&psa.nb.column(0)), stats::variance(&incremental_column(psa, 1))]
}

/// Posterior variances of the reference net benefit and of the increment.
fn posterior_variances(s: &PosteriorSummary) -> [f64; 2] {
    [s.variance[0], s.incremental_variance[1]]
}

fn targets_from(prior: [f64; 2], sample: &[PosteriorSummary]) -> [f64; 2] {
    let q = sample.len() as f64;
    let mut out = [0.0; 2];
    for (j, t) in out.iter_mut().enumerate() {
        let post = sample.iter().map(|s| posterior_variances(s)[j]).sum::<f64>() / q;
        *t = (prior[j] - post).clamp(0.0, prior[j]);
    }
    out
}

struct Assembled {
    evsi: AdjustedValue,
    evsi_im: AdjustedValue,
    inb: Vec<f64>,
    p_novel: Vec<f64>,
    mu: NetBenefitMatrix,
}

fn assemble(
    fit: &ConditionalExpectationFit,
    targets: [f64; 2],
    predict: impl Fn(f64) -> f64,
    market: &MarketShareFunction,
    current: &CurrentShares,
) -> Result<Assembled> {
    let mu = rescale_incremental(fit, targets[0], &[0.0, targets[1]])?;
    let inb = inb_of(&mu);
    let p_novel: Vec<f64> = inb.iter().map(|&x| predict(x)).collect();
    let evsi_im = assemble_evsi_im(&mu, &target_probabilities(market, &p_novel), market, current)?;
    let evsi = assemble_evsi(&mu)?;
    Ok(Assembled { evsi, evsi_im, inb, p_novel, mu })
}

fn resample<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Bootstrap variance of (evsi, evsi_im) over the quantile datasets.
fn bootstrap_variance(
    replicates: usize,
    q: usize,
    seed: u64,
    replicate: impl Fn(&[usize]) -> Result<(f64, f64)> + Sync,
) -> (f64, f64) {
    if replicates < 2 {
        return (0.0, 0.0);
    }
    let family = StreamFamily::new(seed, Stream::Fit);
    let values: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .filter_map(|b| replicate(&resample(&mut family.rng(b as u64), q)).ok())
        .collect();
    if values.len() < 2 {
        return (0.0, 0.0);
    }
    let (e, im): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    (stats::variance(&e), stats::variance(&im))
}

fn estimate(v: &AdjustedValue, bootstrap_var: f64, s: usize, r: usize, seconds: f64) -> EvsiEstimate {
    EvsiEstimate {
        value: v.value,
        std_error: (stats::std_error(&v.contributions).powi(2) + bootstrap_var).sqrt(),
        s,
        r,
        wall_time: seconds,
        method: Method::MomentMatching,
    }
}

/// Moment matching estimate of the standard and implementation-adjusted
/// value of sample information for `design`.
///
/// The standard error combines the Monte Carlo error over the PSA sample
/// with a bootstrap over the quantile datasets, which refits the variance
/// target and the logistic curve.
#[allow(clippy::too_many_arguments)]
pub fn mm_evsi_im(
    psa: &PsaSample,
    design: &StudyDesign,
    prior: &PriorSpec,
    model: &DecisionModel,
    market: &MarketShareFunction,
    current: &CurrentShares,
    settings: &MmSettings,
    seed: u64,
) -> Result<MomentMatchingRun> {
    require_two(psa, market)?;
    if settings.q < 4 {
        return Err(VoiError::invalid("Q", format!("need at least 4 quantile datasets, got {}", settings.q)));
    }
    let start = Instant::now();
    let datasets = quantile_datasets(psa, design, settings.q, seed)?;
    let nested = nested_at(psa, design, &datasets, prior, model, settings.r, seed)?;
    let fit = fit_conditional_expectation(psa, design)?;
    let prior_var = prior_variances(psa);
    // No data leaves the posterior at the prior; the sampled variances
    // would only contribute noise.
    let targets_of = |sample: &[PosteriorSummary]| {
        if design.n == 0 {
            [0.0; 2]
        } else {
            targets_from(prior_var, sample)
        }
    };
    let targets = targets_of(&nested);
    let (inb_q, p_q) = inb_pairs(&nested);
    let logistic = fit_generalized_logistic(&inb_q, &p_q)?;
    let out = assemble(&fit, targets, |x| logistic.predict(x), market, current)?;

    let (boot_evsi, boot_im) = bootstrap_variance(settings.bootstrap, settings.q, seed, |idx| {
        let sample: Vec<PosteriorSummary> = idx.iter().map(|&i| nested[i].clone()).collect();
        let (inb, p) = inb_pairs(&sample);
        let lf = fit_generalized_logistic(&inb, &p)?;
        let a = assemble(&fit, targets_of(&sample), |x| lf.predict(x), market, current)?;
        Ok((a.evsi.value, a.evsi_im.value))
    });
    let seconds = start.elapsed().as_secs_f64();
    Ok(MomentMatchingRun {
        evsi: estimate(&out.evsi, boot_evsi, psa.len(), settings.r, seconds),
        evsi_im: estimate(&out.evsi_im, boot_im, psa.len(), settings.r, seconds),
        logistic,
        targets,
        mu: out.mu,
        inb: out.inb,
        p_novel: out.p_novel,
        nested: NestedSummaries { summaries: nested, r: settings.r, seconds },
    })
}

/// One sample size's result from [`mm_evsi_im_by_n`].
#[derive(Debug, Clone)]
pub struct SampleSizeEstimate {
    pub n: usize,
    pub evsi: EvsiEstimate,
    pub evsi_im: EvsiEstimate,
}

/// Output of [`mm_evsi_im_by_n`].
#[derive(Debug, Clone)]
pub struct SampleSizeRun {
    pub estimates: Vec<SampleSizeEstimate>,
    pub logistic: Option<LogisticFit>,
    /// Variance curves for the reference net benefit and the increment.
    pub variance_curves: Vec<VarianceCurveFit>,
    /// Sample size assigned to each quantile dataset.
    pub sizes: Vec<usize>,
}

/// Evenly spaced sizes over `[n_min, n_max]`, shuffled so that size is
/// not tied to the quantile level.
pub fn sample_size_sequence(n_min: usize, n_max: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut sizes: Vec<usize> = (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            (n_min as f64 + t * (n_max - n_min) as f64).round() as usize
        })
        .collect();
    let mut rng = stream_rng(seed, Stream::SampleSize, 0);
    for i in (1..sizes.len()).rev() {
        let j = rng.random_range(0..=i);
        sizes.swap(i, j);
    }
    sizes
}

type Curves = ([VarianceCurveFit; 2], LogisticFit);

fn fit_curves(prior: [f64; 2], sample: &[PosteriorSummary], sizes: &[f64]) -> Result<Curves> {
    let curve = |j: usize| {
        let v: Vec<f64> = sample.iter().map(|s| posterior_variances(s)[j]).collect();
        fit_variance_curve(&v, sizes, prior[j])
    };
    let (inb, p) = inb_pairs(sample);
    Ok(([curve(0)?, curve(1)?], fit_generalized_logistic_n(&inb, &p, sizes)?))
}

/// Moment matching across sample sizes: one set of `Q` quantile datasets
/// with sizes spread over `n_range`, then estimates at each `n` in `n_grid`.
#[allow(clippy::too_many_arguments)]
pub fn mm_evsi_im_by_n(
    psa: &PsaSample,
    design: &StudyDesign,
    prior: &PriorSpec,
    model: &DecisionModel,
    market: &MarketShareFunction,
    current: &CurrentShares,
    settings: &MmSettings,
    n_range: (usize, usize),
    n_grid: &[usize],
    seed: u64,
) -> Result<SampleSizeRun> {
    if n_grid.is_empty() {
        return Ok(SampleSizeRun { estimates: vec![], logistic: None, variance_curves: vec![], sizes: vec![] });
    }
    require_two(psa, market)?;
    let (n_min, n_max) = n_range;
    if n_min == 0 || n_max <= n_min {
        return Err(VoiError::invalid("n_range", "need 1 <= N_min < N_max"));
    }
    if let Some(bad) = n_grid.iter().find(|n| !(n_min..=n_max).contains(*n)) {
        return Err(VoiError::invalid("n_grid", format!("{bad} outside [{n_min}, {n_max}]")));
    }
    if settings.q < 5 {
        return Err(VoiError::invalid("Q", format!("need at least 5 quantile datasets, got {}", settings.q)));
    }
    let start = Instant::now();
    let sizes = sample_size_sequence(n_min, n_max, settings.q, seed);
    let datasets = quantile_datasets_sized(psa, design, &sizes, seed)?;
    let nested = nested_at(psa, design, &datasets, prior, model, settings.r, seed)?;
    let fit = fit_conditional_expectation(psa, design)?;
    let sizes_f: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let prior_var = prior_variances(psa);
    let (curves, logistic) = fit_curves(prior_var, &nested, &sizes_f)?;
    let fixed_cost = start.elapsed().as_secs_f64();

    let estimates = n_grid
        .iter()
        .map(|&n| {
            let t0 = Instant::now();
            let nf = n as f64;
            let targets = curves.each_ref().map(|c| c.target(nf));
            let out = assemble(&fit, targets, |x| logistic.predict_n(x, nf), market, current)?;
            let (boot_evsi, boot_im) = bootstrap_variance(settings.bootstrap, settings.q, seed ^ n as u64, |idx| {
                let sample: Vec<PosteriorSummary> = idx.iter().map(|&i| nested[i].clone()).collect();
                let ns: Vec<f64> = idx.iter().map(|&i| sizes_f[i]).collect();
                let (cv, lf) = fit_curves(prior_var, &sample, &ns)?;
                let a = assemble(&fit, cv.each_ref().map(|c| c.target(nf)), |x| lf.predict_n(x, nf), market, current)?;
                Ok((a.evsi.value, a.evsi_im.value))
            });
            let seconds = fixed_cost + t0.elapsed().as_secs_f64();
            Ok(SampleSizeEstimate {
                n,
                evsi: estimate(&out.evsi, boot_evsi, psa.len(), settings.r, seconds),
                evsi_im: estimate(&out.evsi_im, boot_im, psa.len(), settings.r, seconds),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSizeRun { estimates, logistic: Some(logistic), variance_curves: curves.to_vec(), sizes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_of(columns: Vec<Vec<f64>>) -> ConditionalExpectationFit {
        let d = columns.len();
        let incremental = columns.iter().map(|c| c.iter().zip(&columns[0]).map(|(x, b)| x - b).collect()).collect();
        ConditionalExpectationFit {
            fitted: columns,
            incremental,
            basis: String::new(),
            residual_variance: vec![0.0; d],
        }
    }

    #[test]
    fn rescale_identity_and_collapse() {
        let g = vec![1.0, 4.0, 2.0, 9.0, -3.0];
        let v = stats::variance(&g);
        let same = rescale(&fit_of(vec![g.clone()]), &[v]).unwrap();
        for (i, x) in g.iter().enumerate() {
            assert!((same.get(i, 0) - x).abs() < 1e-12);
        }
        let flat = rescale(&fit_of(vec![g.clone()]), &[0.0]).unwrap();
        let m = stats::mean(&g);
        assert!((0..g.len()).all(|i| flat.get(i, 0) == m));
        assert!(rescale(&fit_of(vec![g]), &[-1.0]).is_err());
    }

    #[test]
    fn rescale_of_constant_stays_constant() {
        let out = rescale(&fit_of(vec![vec![2.0; 4]]), &[5.0]).unwrap();
        assert!((0..4).all(|i| out.get(i, 0) == 2.0));
    }

    #[test]
    fn variance_target_extremes() {
        let nb = NetBenefitMatrix::from_rows(4, 1, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let psa = PsaSample::from_net_benefits(vec![], nb, 0).unwrap();
        let prior = stats::variance(&[1.0, 3.0, 5.0, 7.0]);
        let s = |v: f64| PosteriorSummary {
            mu: vec![0.0],
            p: vec![1.0],
            variance: vec![v],
            incremental_variance: vec![0.0],
            n_effective: 1,
            dataset_index: 0,
        };
        assert_eq!(variance_reduction_target(&psa, &[s(prior), s(prior)]).unwrap(), vec![0.0]);
        assert_eq!(variance_reduction_target(&psa, &[s(0.0), s(0.0)]).unwrap(), vec![prior]);
        assert_eq!(variance_reduction_target(&psa, &[s(2.0 * prior)]).unwrap(), vec![0.0]);
    }

    #[test]
    fn size_sequence_spans_range() {
        let s = sample_size_sequence(10, 200, 20, 3);
        assert_eq!(s.len(), 20);
        assert_eq!(*s.iter().min().unwrap(), 10);
        assert_eq!(*s.iter().max().unwrap(), 200);
        assert_eq!(s, sample_size_sequence(10, 200, 20, 3));
    }
}
