//! Decision model and probabilistic analysis.
//!
//! The shipped model compares standard care (treatment index 0) with a
//! novel treatment (index 1) that lowers the risk of a critical event at
//! the price of a treatment cost and possible side effects. Four
//! parameters are uncertain: the baseline event probability, the odds
//! ratio under treatment, the side-effect probability and the quality of
//! life after the event.

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VoiError};
use crate::rng::{Stream, StreamFamily};
use crate::stats;

/// Deterministic model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    /// Remaining years of life.
    pub life_years: f64,
    /// Yearly cost of treating the critical event.
    pub cost_event: f64,
    /// One-off cost of the novel treatment.
    pub cost_treatment: f64,
    /// Cost of treating side effects.
    pub cost_side_effect: f64,
    /// Quality-of-life detriment due to side effects.
    pub qol_side_effect: f64,
    /// Willingness to pay per quality-of-life unit.
    pub willingness_to_pay: f64,
}

impl FixedParams {
    pub fn case_study() -> Self {
        Self {
            life_years: 30.0,
            cost_event: 200_000.0,
            cost_treatment: 15_000.0,
            cost_side_effect: 100_000.0,
            qol_side_effect: 1.0,
            willingness_to_pay: 75_000.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("life_years", self.life_years),
            ("cost_event", self.cost_event),
            ("cost_treatment", self.cost_treatment),
            ("cost_side_effect", self.cost_side_effect),
            ("qol_side_effect", self.qol_side_effect),
            ("willingness_to_pay", self.willingness_to_pay),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(VoiError::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.life_years < 1.0 {
            return Err(VoiError::invalid("life_years", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }
}

/// Normal prior; the second parameter is a variance, not a standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub variance: f64,
}

/// Independent priors for the four uncertain parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub p_c: BetaPrior,
    pub log_or: NormalPrior,
    pub p_se: BetaPrior,
    pub logit_q_c: NormalPrior,
}

impl PriorSpec {
    pub fn case_study() -> Self {
        Self {
            p_c: BetaPrior { alpha: 15.0, beta: 85.0 },
            log_or: NormalPrior { mean: -1.5, variance: 1.0 / 3.0 },
            p_se: BetaPrior { alpha: 3.0, beta: 9.0 },
            logit_q_c: NormalPrior { mean: 0.6, variance: 1.0 / 6.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("p_c", self.p_c), ("p_se", self.p_se)] {
            if !(b.alpha > 0.0 && b.beta > 0.0 && b.alpha.is_finite() && b.beta.is_finite()) {
                return Err(VoiError::invalid(name, "Beta parameters must be positive"));
            }
        }
        for (name, n) in [("log_or", self.log_or), ("logit_q_c", self.logit_q_c)] {
            if !(n.mean.is_finite() && n.variance.is_finite() && n.variance > 0.0) {
                return Err(VoiError::invalid(name, "variance must be positive"));
            }
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<PriorSampler> {
        self.validate()?;
        let beta = |b: BetaPrior| Beta::new(b.alpha, b.beta).map_err(|e| VoiError::Domain(e.to_string()));
        let normal =
            |n: NormalPrior| Normal::new(n.mean, n.variance.sqrt()).map_err(|e| VoiError::Domain(e.to_string()));
        Ok(PriorSampler {
            p_c: beta(self.p_c)?,
            log_or: normal(self.log_or)?,
            p_se: beta(self.p_se)?,
            logit_q_c: normal(self.logit_q_c)?,
        })
    }
}

/// Ready-to-use prior distributions.
#[derive(Debug, Clone, Copy)]
pub struct PriorSampler {
    p_c: Beta<f64>,
    log_or: Normal<f64>,
    p_se: Beta<f64>,
    logit_q_c: Normal<f64>,
}

impl PriorSampler {
    pub fn sample_p_c<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.p_c.sample(rng)
    }

    pub fn sample_odds_ratio<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.log_or.sample(rng).exp()
    }

    pub fn sample_p_se<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.p_se.sample(rng)
    }

    pub fn sample_q_c<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        expit(self.logit_q_c.sample(rng))
    }

    /// One joint draw, consuming the generator in the fixed order
    /// P_C, OR, P_SE, Q_C.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParameterDraw {
        let p_c = self.sample_p_c(rng);
        let or = self.sample_odds_ratio(rng);
        let p_se = self.sample_p_se(rng);
        let q_c = self.sample_q_c(rng);
        ParameterDraw::from_parts(p_c, or, p_se, q_c)
    }
}

/// The uncertain model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameter {
    /// Baseline probability of the critical event.
    PC,
    /// Odds ratio of the event under the novel treatment.
    OddsRatio,
    /// Probability of side effects on treatment.
    PSE,
    /// Quality of life after the critical event.
    QC,
}

impl Parameter {
    pub const ALL: [Parameter; 4] = [Parameter::PC, Parameter::OddsRatio, Parameter::PSE, Parameter::QC];

    /// Map to the unbounded scale used for regression (logit or log).
    pub fn to_unbounded(self, value: f64) -> f64 {
        match self {
            Parameter::OddsRatio => value.ln(),
            _ => logit(value),
        }
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Treated event probability from the baseline probability and odds ratio.
pub fn derive_pt(p_c: f64, odds_ratio: f64) -> Result<f64> {
    if !(p_c > 0.0 && p_c < 1.0) {
        return Err(VoiError::Domain(format!("P_C must lie in (0, 1), got {p_c}")));
    }
    if !(odds_ratio > 0.0 && odds_ratio.is_finite()) {
        return Err(VoiError::Domain(format!("odds ratio must be positive, got {odds_ratio}")));
    }
    Ok(pt_unchecked(p_c, odds_ratio))
}

#[inline]
fn pt_unchecked(p_c: f64, odds_ratio: f64) -> f64 {
    p_c * odds_ratio / (1.0 - p_c + p_c * odds_ratio)
}

/// One joint parameter draw. `p_t` is always derived from `p_c` and the
/// odds ratio, so the fields are read-only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterDraw {
    p_c: f64,
    odds_ratio: f64,
    p_se: f64,
    q_c: f64,
    p_t: f64,
}

impl ParameterDraw {
    pub fn new(p_c: f64, odds_ratio: f64, p_se: f64, q_c: f64) -> Result<Self> {
        let p_t = derive_pt(p_c, odds_ratio)?;
        for (name, v) in [("P_SE", p_se), ("Q_C", q_c)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(VoiError::Domain(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(Self { p_c, odds_ratio, p_se, q_c, p_t })
    }

    /// Unvalidated constructor for sampler output. Boundary values can
    /// only appear through floating-point underflow of a valid draw.
    pub(crate) fn from_parts(p_c: f64, odds_ratio: f64, p_se: f64, q_c: f64) -> Self {
        Self { p_c, odds_ratio, p_se, q_c, p_t: pt_unchecked(p_c, odds_ratio) }
    }

    pub fn p_c(&self) -> f64 {
        self.p_c
    }
    pub fn odds_ratio(&self) -> f64 {
        self.odds_ratio
    }
    pub fn p_se(&self) -> f64 {
        self.p_se
    }
    pub fn q_c(&self) -> f64 {
        self.q_c
    }
    pub fn p_t(&self) -> f64 {
        self.p_t
    }

    pub fn get(&self, param: Parameter) -> f64 {
        match param {
            Parameter::PC => self.p_c,
            Parameter::OddsRatio => self.odds_ratio,
            Parameter::PSE => self.p_se,
            Parameter::QC => self.q_c,
        }
    }

    /// Copy with one parameter replaced; `p_t` is re-derived.
    pub fn with(&self, param: Parameter, value: f64) -> Self {
        let mut d = *self;
        match param {
            Parameter::PC => d.p_c = value,
            Parameter::OddsRatio => d.odds_ratio = value,
            Parameter::PSE => d.p_se = value,
            Parameter::QC => d.q_c = value,
        }
        d.p_t = pt_unchecked(d.p_c, d.odds_ratio);
        d
    }
}

/// Net benefit of standard care.
pub fn net_benefit_standard(draw: &ParameterDraw, fixed: &FixedParams) -> f64 {
    let l = fixed.life_years;
    let p_c = draw.p_c;
    fixed.willingness_to_pay * (p_c * l * (1.0 + draw.q_c) / 2.0 + (1.0 - p_c) * l) - p_c * fixed.cost_event
}

/// Net benefit of the novel treatment.
pub fn net_benefit_novel(draw: &ParameterDraw, fixed: &FixedParams) -> f64 {
    let l = fixed.life_years;
    let q_se = fixed.qol_side_effect;
    let (p_t, p_se) = (draw.p_t, draw.p_se);
    let post_event = l * (1.0 + draw.q_c) / 2.0;
    let effects = p_t * p_se * (post_event - q_se)
        + p_t * (1.0 - p_se) * post_event
        + (1.0 - p_t) * p_se * (l - q_se)
        + (1.0 - p_t) * (1.0 - p_se) * l;
    fixed.willingness_to_pay * effects - (fixed.cost_treatment + p_t * fixed.cost_event + p_se * fixed.cost_side_effect)
}

pub type NetBenefitFn = fn(&ParameterDraw, &FixedParams) -> f64;

/// Fixed inputs plus one net-benefit function per treatment.
#[derive(Debug, Clone)]
pub struct DecisionModel {
    pub fixed: FixedParams,
    net_benefits: Vec<NetBenefitFn>,
}

impl DecisionModel {
    pub fn new(fixed: FixedParams, net_benefits: Vec<NetBenefitFn>) -> Result<Self> {
        fixed.validate()?;
        if net_benefits.is_empty() {
            return Err(VoiError::invalid("net_benefits", "at least one treatment required"));
        }
        Ok(Self { fixed, net_benefits })
    }

    /// Standard care and the novel treatment.
    pub fn two_treatment(fixed: FixedParams) -> Result<Self> {
        Self::new(fixed, vec![net_benefit_standard, net_benefit_novel])
    }

    pub fn case_study() -> Self {
        Self::two_treatment(FixedParams::case_study()).expect("case-study parameters are valid")
    }

    pub fn treatments(&self) -> usize {
        self.net_benefits.len()
    }

    pub fn evaluate_into(&self, draw: &ParameterDraw, out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.net_benefits) {
            *o = f(draw, &self.fixed);
        }
    }

    pub fn evaluate(&self, draw: &ParameterDraw) -> Vec<f64> {
        let mut out = vec![0.0; self.treatments()];
        self.evaluate_into(draw, &mut out);
        out
    }
}

/// Row-major `rows x cols` net-benefit table (one column per treatment).
#[derive(Debug, Clone, PartialEq)]
pub struct NetBenefitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NetBenefitMatrix {
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(VoiError::LengthMismatch {
                what: "net benefit data vs rows * cols",
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, d: usize) -> f64 {
        self.data[i * self.cols + d]
    }

    pub fn column(&self, d: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, d)).collect()
    }
}

/// A probabilistic analysis sample: prior draws and their net benefits.
#[derive(Debug, Clone, PartialEq)]
pub struct PsaSample {
    pub draws: Vec<ParameterDraw>,
    pub nb: NetBenefitMatrix,
    pub seed: u64,
}

impl PsaSample {
    /// Build from existing draws, evaluating `model` on each.
    pub fn from_draws(draws: Vec<ParameterDraw>, model: &DecisionModel, seed: u64) -> Result<Self> {
        if draws.len() < 2 {
            return Err(VoiError::invalid("S", "at least 2 draws required"));
        }
        let d = model.treatments();
        let mut data = vec![0.0; draws.len() * d];
        data.par_chunks_mut(d).zip(draws.par_iter()).for_each(|(row, draw)| model.evaluate_into(draw, row));
        let nb = NetBenefitMatrix::from_rows(draws.len(), d, data)?;
        Ok(Self { draws, nb, seed })
    }

    /// Build directly from a net-benefit table (for externally computed models).
    pub fn from_net_benefits(draws: Vec<ParameterDraw>, nb: NetBenefitMatrix, seed: u64) -> Result<Self> {
        if nb.rows() < 2 {
            return Err(VoiError::invalid("S", "at least 2 rows required"));
        }
        if !draws.is_empty() && draws.len() != nb.rows() {
            return Err(VoiError::LengthMismatch {
                what: "draws vs net benefit rows",
                left: draws.len(),
                right: nb.rows(),
            });
        }
        Ok(Self { draws, nb, seed })
    }

    pub fn len(&self) -> usize {
        self.nb.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.nb.rows() == 0
    }

    pub fn treatments(&self) -> usize {
        self.nb.cols()
    }

    /// Values of one parameter across the draws.
    pub fn parameter_values(&self, param: Parameter) -> Vec<f64> {
        self.draws.iter().map(|d| d.get(param)).collect()
    }
}

/// Draw `s` parameter sets from the prior and evaluate the model on each.
/// Draw `i` uses its own stream, so the result does not depend on
/// thread scheduling.
pub fn sample_prior(spec: &PriorSpec, model: &DecisionModel, s: usize, seed: u64) -> Result<PsaSample> {
    if s < 2 {
        return Err(VoiError::invalid("S", format!("must be at least 2, got {s}")));
    }
    let sampler = spec.sampler()?;
    let family = StreamFamily::new(seed, Stream::Prior);
    let draws: Vec<ParameterDraw> = (0..s).into_par_iter().map(|i| sampler.sample(&mut family.rng(i as u64))).collect();
    PsaSample::from_draws(draws, model, seed)
}

/// Per-treatment fraction of rows in which that treatment has the highest
/// net benefit (ties to the lowest index).
pub fn prob_cost_effective(psa: &PsaSample) -> Vec<f64> {
    let d = psa.treatments();
    let mut counts = vec![0usize; d];
    for i in 0..psa.len() {
        counts[stats::argmax(psa.nb.row(i))] += 1;
    }
    let n = psa.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

/// Column means of the net-benefit table.
pub fn expected_nb(psa: &PsaSample) -> Vec<f64> {
    (0..psa.treatments()).map(|d| stats::mean(&psa.nb.column(d))).collect()
}

/// Expected value of perfect information from a PSA sample.
pub fn evpi(psa: &PsaSample) -> f64 {
    let maxes: Vec<f64> = (0..psa.len()).map(|i| psa.nb.row(i)[stats::argmax(psa.nb.row(i))]).collect();
    let means = expected_nb(psa);
    stats::mean(&maxes) - means[stats::argmax(&means)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_means() -> ParameterDraw {
        // Table means: P_C = 0.15, OR chosen so P_T = 0.0440, P_SE = 0.25, Q_C = 0.6405.
        let p_c: f64 = 0.15;
        let p_t: f64 = 0.0440;
        let or = p_t * (1.0 - p_c) / (p_c * (1.0 - p_t));
        ParameterDraw::new(p_c, or, 0.25, 0.6405).unwrap()
    }

    #[test]
    fn derive_pt_examples() {
        assert_eq!(derive_pt(0.15, 1.0).unwrap(), 0.15);
        // 0.15 * 0.2636 / (0.85 + 0.15 * 0.2636)
        let expect = 0.039_54 / (0.85 + 0.039_54);
        assert!((derive_pt(0.15, 0.2636).unwrap() - expect).abs() < 1e-15);
        assert!((derive_pt(0.15, 0.2636).unwrap() - 0.044_45).abs() < 1e-4);
        assert!(derive_pt(0.5, 0.0).is_err());
        assert!(derive_pt(1.0, 1.0).is_err());
    }

    #[test]
    fn standard_care_net_benefit() {
        let f = FixedParams::case_study();
        let d = at_means();
        // 75000 * (0.15 * 30 * 1.6405 / 2 + 0.85 * 30) - 0.15 * 200000
        assert!((net_benefit_standard(&d, &f) - 2_159_334.375).abs() < 1e-6);
        let d0 = d.with(Parameter::PC, 0.0);
        assert!((net_benefit_standard(&d0, &f) - 2_250_000.0).abs() < 1e-6);
        let d1 = d.with(Parameter::QC, 1.0);
        assert!((net_benefit_standard(&d1, &f) - (2_250_000.0 - 0.15 * 200_000.0)).abs() < 1e-6);
    }

    #[test]
    fn novel_net_benefit() {
        let f = FixedParams::case_study();
        let d = at_means();
        assert!((net_benefit_novel(&d, &f) - 2_164_654.75).abs() < 1e-6);

        let perfect = ParameterDraw::from_parts(0.15, 0.0, 0.0, 0.6405);
        assert!((net_benefit_novel(&perfect, &f) - (2_250_000.0 - 15_000.0)).abs() < 1e-6);

        let harmless = FixedParams { qol_side_effect: 0.0, cost_side_effect: 0.0, ..f };
        let with_se = ParameterDraw::from_parts(0.15, 0.3, 1.0, 0.6);
        let without_se = ParameterDraw::from_parts(0.15, 0.3, 0.0, 0.6);
        assert!((net_benefit_novel(&with_se, &harmless) - net_benefit_novel(&without_se, &harmless)).abs() < 1e-6);
    }

    #[test]
    fn prob_cost_effective_ties_and_dominance() {
        let dominated = NetBenefitMatrix::from_rows(3, 2, vec![2.0, 1.0, 5.0, 0.0, 3.0, 2.9]).unwrap();
        let psa = PsaSample::from_net_benefits(vec![], dominated, 0).unwrap();
        assert_eq!(prob_cost_effective(&psa), vec![1.0, 0.0]);

        let ties = NetBenefitMatrix::from_rows(2, 2, vec![1.0, 1.0, 4.0, 4.0]).unwrap();
        let psa = PsaSample::from_net_benefits(vec![], ties, 0).unwrap();
        assert_eq!(prob_cost_effective(&psa), vec![1.0, 0.0]);
    }

    #[test]
    fn expected_nb_examples() {
        let constant = NetBenefitMatrix::from_rows(3, 1, vec![7.0; 3]).unwrap();
        let psa = PsaSample::from_net_benefits(vec![], constant, 0).unwrap();
        assert_eq!(expected_nb(&psa), vec![7.0]);
        let two = NetBenefitMatrix::from_rows(2, 1, vec![0.0, 2.0]).unwrap();
        let psa = PsaSample::from_net_benefits(vec![], two, 0).unwrap();
        assert_eq!(expected_nb(&psa), vec![1.0]);
    }

    #[test]
    fn rejects_too_few_draws() {
        let m = DecisionModel::case_study();
        assert!(sample_prior(&PriorSpec::case_study(), &m, 1, 0).is_err());
    }

    #[test]
    fn invalid_fixed_params() {
        let f = FixedParams { life_years: 0.5, ..FixedParams::case_study() };
        assert!(f.validate().is_err());
        let f = FixedParams { cost_event: -1.0, ..FixedParams::case_study() };
        assert!(f.validate().is_err());
    }
}
