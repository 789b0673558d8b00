//! Proposed study designs: data simulation and posterior sampling.
//!
//! Each design informs a subset of the parameters. Posterior draws update
//! that subset given a simulated dataset and redraw every other parameter
//! from its prior.

mod grid;
mod metropolis;

pub use grid::{grid_posterior_rct, GridPosterior};
pub use metropolis::{posterior_effectiveness_with, MhSettings};

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VoiError};
use crate::psa::{expit, logit, Parameter, ParameterDraw, PriorSpec};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Binomial count of side effects among `n` treated individuals.
    SideEffects,
    /// Logit quality of life recorded for `n` individuals after the event.
    QualityOfLife,
    /// Two-arm trial with `n` patients per arm.
    EffectivenessRct,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::SideEffects => "SideEffects",
            StudyKind::QualityOfLife => "QualityOfLife",
            StudyKind::EffectivenessRct => "EffectivenessRct",
        }
    }

    /// Parameters whose posterior the data update.
    pub fn informed(self) -> &'static [Parameter] {
        match self {
            StudyKind::SideEffects => &[Parameter::PSE],
            StudyKind::QualityOfLife => &[Parameter::QC],
            StudyKind::EffectivenessRct => &[Parameter::PC, Parameter::OddsRatio],
        }
    }
}

/// Known individual-level variance of logit quality of life.
pub const QOL_DATA_VARIANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub kind: StudyKind,
    /// Sample size (per arm for the trial).
    pub n: usize,
}

impl StudyDesign {
    pub fn new(kind: StudyKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(VoiError::invalid("n", "sample size must be at least 1"));
        }
        Ok(Self { kind, n })
    }

    /// The three designs of the worked example: 60 treated patients,
    /// 100 quality-of-life records, 200 patients per trial arm.
    pub fn case_study(study: usize) -> Option<Self> {
        let (kind, n) = match study {
            1 => (StudyKind::SideEffects, 60),
            2 => (StudyKind::QualityOfLife, 100),
            3 => (StudyKind::EffectivenessRct, 200),
            _ => return None,
        };
        Some(Self { kind, n })
    }

    pub fn informed(&self) -> &'static [Parameter] {
        self.kind.informed()
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { kind: self.kind, n }
    }
}

/// Sufficient statistics of one simulated study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DatasetPayload {
    SideEffects { x: u64, n: usize },
    QualityOfLife { sum_logit: f64, n: usize },
    EffectivenessRct { x_control: u64, x_treat: u64, n: usize },
}

impl DatasetPayload {
    pub fn kind(&self) -> StudyKind {
        match self {
            DatasetPayload::SideEffects { .. } => StudyKind::SideEffects,
            DatasetPayload::QualityOfLife { .. } => StudyKind::QualityOfLife,
            DatasetPayload::EffectivenessRct { .. } => StudyKind::EffectivenessRct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dataset {
    pub payload: DatasetPayload,
}

impl Dataset {
    /// Validates counts against the sample size. `n = 0` is accepted and
    /// means "no data".
    pub fn new(payload: DatasetPayload) -> Result<Self> {
        match payload {
            DatasetPayload::SideEffects { x, n } if x as usize > n => {
                Err(VoiError::invalid("x", format!("{x} events exceed sample size {n}")))
            }
            DatasetPayload::EffectivenessRct { x_control, x_treat, n }
                if x_control as usize > n || x_treat as usize > n =>
            {
                Err(VoiError::invalid("x_control/x_treat", format!("counts exceed arm size {n}")))
            }
            DatasetPayload::QualityOfLife { sum_logit, .. } if !sum_logit.is_finite() => {
                Err(VoiError::invalid("sum_logit", "must be finite"))
            }
            _ => Ok(Self { payload }),
        }
    }

    pub fn kind(&self) -> StudyKind {
        self.payload.kind()
    }

    pub fn n_effective(&self) -> usize {
        match self.payload {
            DatasetPayload::SideEffects { n, .. }
            | DatasetPayload::QualityOfLife { n, .. }
            | DatasetPayload::EffectivenessRct { n, .. } => n,
        }
    }
}

/// Posterior parameter draws for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub draws: Vec<ParameterDraw>,
    pub dataset: Dataset,
    pub seed: u64,
    /// Metropolis acceptance rate over the retained phase; `None` for
    /// conjugate designs.
    pub acceptance: Option<f64>,
}

/// Simulate a dataset from the sampling distribution given `draw`.
pub fn simulate_dataset(design: &StudyDesign, draw: &ParameterDraw, seed: u64) -> Dataset {
    simulate_dataset_with(design, draw, &mut stream_rng(seed, Stream::Data, 0))
}

pub fn simulate_dataset_with<R: Rng + ?Sized>(design: &StudyDesign, draw: &ParameterDraw, rng: &mut R) -> Dataset {
    let n = design.n;
    let binomial = |p: f64, rng: &mut R| -> u64 {
        Binomial::new(n as u64, p.clamp(0.0, 1.0)).expect("probability clamped to [0, 1]").sample(rng)
    };
    let payload = match design.kind {
        StudyKind::SideEffects => DatasetPayload::SideEffects { x: binomial(draw.p_se(), rng), n },
        StudyKind::QualityOfLife => {
            let noise = Normal::new(logit(draw.q_c()), QOL_DATA_VARIANCE.sqrt()).expect("finite mean, positive sd");
            let sum_logit = (0..n).map(|_| noise.sample(rng)).sum();
            DatasetPayload::QualityOfLife { sum_logit, n }
        }
        StudyKind::EffectivenessRct => {
            let x_control = binomial(draw.p_c(), rng);
            let x_treat = binomial(draw.p_t(), rng);
            DatasetPayload::EffectivenessRct { x_control, x_treat, n }
        }
    };
    Dataset { payload }
}

fn check_r(r: usize) -> Result<()> {
    if r < 2 {
        return Err(VoiError::invalid("R", format!("must be at least 2, got {r}")));
    }
    Ok(())
}

fn mismatch(expected: StudyKind, dataset: &Dataset) -> VoiError {
    VoiError::KindMismatch { expected: expected.name(), found: dataset.kind().name() }
}

/// Conjugate Beta update of P_SE.
pub fn posterior_side_effects(dataset: &Dataset, prior: &PriorSpec, r: usize, seed: u64) -> Result<PosteriorDraws> {
    let mut rng = stream_rng(seed, Stream::Posterior, 0);
    let draws = posterior_side_effects_with(dataset, prior, r, &mut rng)?;
    Ok(PosteriorDraws { draws, dataset: *dataset, seed, acceptance: None })
}

pub fn posterior_side_effects_with<R: Rng + ?Sized>(
    dataset: &Dataset,
    prior: &PriorSpec,
    r: usize,
    rng: &mut R,
) -> Result<Vec<ParameterDraw>> {
    check_r(r)?;
    let DatasetPayload::SideEffects { x, n } = dataset.payload else {
        return Err(mismatch(StudyKind::SideEffects, dataset));
    };
    let sampler = prior.sampler()?;
    let x = x as f64;
    let post =
        Beta::new(prior.p_se.alpha + x, prior.p_se.beta + n as f64 - x).map_err(|e| VoiError::Domain(e.to_string()))?;
    Ok((0..r)
        .map(|_| {
            let p_c = sampler.sample_p_c(rng);
            let or = sampler.sample_odds_ratio(rng);
            let p_se = post.sample(rng);
            let q_c = sampler.sample_q_c(rng);
            ParameterDraw::from_parts(p_c, or, p_se, q_c)
        })
        .collect())
}

/// Conjugate Normal update of logit(Q_C) with known data variance.
/// Returns (posterior mean, posterior variance).
pub fn quality_posterior_moments(prior: &PriorSpec, sum_logit: f64, n: usize) -> (f64, f64) {
    let prior_precision = 1.0 / prior.logit_q_c.variance;
    let precision = prior_precision + n as f64 / QOL_DATA_VARIANCE;
    let mean = (prior.logit_q_c.mean * prior_precision + sum_logit / QOL_DATA_VARIANCE) / precision;
    (mean, 1.0 / precision)
}

pub fn posterior_quality(dataset: &Dataset, prior: &PriorSpec, r: usize, seed: u64) -> Result<PosteriorDraws> {
    let mut rng = stream_rng(seed, Stream::Posterior, 0);
    let draws = posterior_quality_with(dataset, prior, r, &mut rng)?;
    Ok(PosteriorDraws { draws, dataset: *dataset, seed, acceptance: None })
}

pub fn posterior_quality_with<R: Rng + ?Sized>(
    dataset: &Dataset,
    prior: &PriorSpec,
    r: usize,
    rng: &mut R,
) -> Result<Vec<ParameterDraw>> {
    check_r(r)?;
    let DatasetPayload::QualityOfLife { sum_logit, n } = dataset.payload else {
        return Err(mismatch(StudyKind::QualityOfLife, dataset));
    };
    let sampler = prior.sampler()?;
    let (mean, var) = quality_posterior_moments(prior, sum_logit, n);
    let post = Normal::new(mean, var.sqrt()).map_err(|e| VoiError::Domain(e.to_string()))?;
    Ok((0..r)
        .map(|_| {
            let p_c = sampler.sample_p_c(rng);
            let or = sampler.sample_odds_ratio(rng);
            let p_se = sampler.sample_p_se(rng);
            let q_c = expit(post.sample(rng));
            ParameterDraw::from_parts(p_c, or, p_se, q_c)
        })
        .collect())
}

/// Random-walk Metropolis update of (P_C, OR) with default settings.
pub fn posterior_effectiveness(dataset: &Dataset, prior: &PriorSpec, r: usize, seed: u64) -> Result<PosteriorDraws> {
    let mut rng = stream_rng(seed, Stream::Posterior, 0);
    let (draws, acceptance) = posterior_effectiveness_with(dataset, prior, r, &MhSettings::default(), &mut rng)?;
    Ok(PosteriorDraws { draws, dataset: *dataset, seed, acceptance: Some(acceptance) })
}

/// Dispatch on the dataset kind.
pub fn posterior_draws(dataset: &Dataset, prior: &PriorSpec, r: usize, seed: u64) -> Result<PosteriorDraws> {
    match dataset.kind() {
        StudyKind::SideEffects => posterior_side_effects(dataset, prior, r, seed),
        StudyKind::QualityOfLife => posterior_quality(dataset, prior, r, seed),
        StudyKind::EffectivenessRct => posterior_effectiveness(dataset, prior, r, seed),
    }
}

/// Dispatch on the dataset kind using a caller-supplied generator.
/// Returns the draws and, for the trial design, the acceptance rate.
pub fn posterior_draws_with<R: Rng + ?Sized>(
    dataset: &Dataset,
    prior: &PriorSpec,
    r: usize,
    rng: &mut R,
) -> Result<(Vec<ParameterDraw>, Option<f64>)> {
    match dataset.kind() {
        StudyKind::SideEffects => Ok((posterior_side_effects_with(dataset, prior, r, rng)?, None)),
        StudyKind::QualityOfLife => Ok((posterior_quality_with(dataset, prior, r, rng)?, None)),
        StudyKind::EffectivenessRct => {
            let (d, acc) = posterior_effectiveness_with(dataset, prior, r, &MhSettings::default(), rng)?;
            Ok((d, Some(acc)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn prior() -> PriorSpec {
        PriorSpec::case_study()
    }

    #[test]
    fn design_informed_sets() {
        assert_eq!(StudyDesign::case_study(1).unwrap().informed(), &[Parameter::PSE]);
        assert_eq!(StudyDesign::case_study(2).unwrap().informed(), &[Parameter::QC]);
        assert_eq!(StudyDesign::case_study(3).unwrap().informed(), &[Parameter::PC, Parameter::OddsRatio]);
        assert!(StudyDesign::case_study(4).is_none());
        assert!(StudyDesign::new(StudyKind::SideEffects, 0).is_err());
    }

    #[test]
    fn degenerate_side_effect_probability_gives_zero_events() {
        let design = StudyDesign::case_study(1).unwrap();
        let draw = ParameterDraw::from_parts(0.15, 0.26, 0.0, 0.64);
        for seed in 0..20 {
            let ds = simulate_dataset(&design, &draw, seed);
            assert_eq!(ds.payload, DatasetPayload::SideEffects { x: 0, n: 60 });
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let design = StudyDesign::case_study(3).unwrap();
        let draw = ParameterDraw::from_parts(0.15, 0.26, 0.25, 0.64);
        assert_eq!(simulate_dataset(&design, &draw, 11), simulate_dataset(&design, &draw, 11));
    }

    #[test]
    fn conjugate_beta_examples() {
        let ds = Dataset::new(DatasetPayload::SideEffects { x: 15, n: 60 }).unwrap();
        let post = posterior_side_effects(&ds, &prior(), 10_000, 3).unwrap();
        // Beta(18, 54): mean 0.25, variance 18*54 / (72^2 * 73)
        let p_se: Vec<f64> = post.draws.iter().map(|d| d.p_se()).collect();
        let var = 18.0 * 54.0 / (72.0 * 72.0 * 73.0);
        let se = (var / 10_000.0f64).sqrt();
        assert!((stats::mean(&p_se) - 0.25).abs() < 3.0 * se);
        assert!(post.acceptance.is_none());

        let ds = Dataset::new(DatasetPayload::SideEffects { x: 0, n: 60 }).unwrap();
        let post = posterior_side_effects(&ds, &prior(), 10_000, 4).unwrap();
        let p_se: Vec<f64> = post.draws.iter().map(|d| d.p_se()).collect();
        let var = 3.0 * 69.0 / (72.0 * 72.0 * 73.0);
        assert!((stats::mean(&p_se) - 3.0 / 72.0).abs() < 3.0 * (var / 10_000.0f64).sqrt());
    }

    #[test]
    fn quality_update_moments() {
        // n = 100 with mean logit 0.6: precision 6 + 50.
        let (m, v) = quality_posterior_moments(&prior(), 60.0, 100);
        assert!((m - 0.6).abs() < 1e-12);
        assert!((v - 1.0 / 56.0).abs() < 1e-15);
        let (m, v) = quality_posterior_moments(&prior(), 0.0, 0);
        assert_eq!((m, v), (0.6, 1.0 / 6.0));
        for n in 1..50 {
            let (_, v) = quality_posterior_moments(&prior(), 3.0 * n as f64, n);
            assert!(v < 1.0 / 6.0);
        }
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let ds = Dataset::new(DatasetPayload::SideEffects { x: 1, n: 5 }).unwrap();
        assert!(matches!(posterior_quality(&ds, &prior(), 10, 0), Err(VoiError::KindMismatch { .. })));
        assert!(matches!(posterior_effectiveness(&ds, &prior(), 10, 0), Err(VoiError::KindMismatch { .. })));
        let ds = Dataset::new(DatasetPayload::QualityOfLife { sum_logit: 1.0, n: 5 }).unwrap();
        assert!(posterior_side_effects(&ds, &prior(), 10, 0).is_err());
    }

    #[test]
    fn counts_above_n_rejected() {
        assert!(Dataset::new(DatasetPayload::SideEffects { x: 61, n: 60 }).is_err());
        assert!(Dataset::new(DatasetPayload::EffectivenessRct { x_control: 1, x_treat: 201, n: 200 }).is_err());
    }

    #[test]
    fn r_below_two_rejected() {
        let ds = Dataset::new(DatasetPayload::SideEffects { x: 1, n: 5 }).unwrap();
        assert!(posterior_side_effects(&ds, &prior(), 1, 0).is_err());
    }
}
