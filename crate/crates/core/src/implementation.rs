//! Market-share dynamics and the implementation-adjusted value.
//!
//! After a study, each treatment's share of the market is a function of
//! how strongly the evidence favours it. The value of the decision taken
//! with data is the share-weighted posterior expected net benefit; the
//! value of the current decision weights prior expected net benefits by
//! today's shares.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VoiError};
use crate::psa::{expected_nb, NetBenefitMatrix, PsaSample};
use crate::stats;

/// How the target treatment's share responds to evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ShareRule {
    /// Zero below `threshold`, rising linearly to 1 at `saturation_at`.
    ThresholdLinear { threshold: f64, saturation_at: f64 },
    /// Everything goes to the treatment with the highest posterior
    /// expected net benefit (standard, fully implemented decision).
    StepAtArgmax,
    /// Piecewise-linear through `(probability, share)` breakpoints,
    /// constant beyond the first and last.
    Table { breakpoints: Vec<(f64, f64)> },
}

/// A market-share function for a two-way split: `target` receives the
/// share computed from its probability of being cost-effective and
/// `baseline` receives the complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketShareFunction {
    pub rule: ShareRule,
    #[serde(default = "default_target")]
    pub target: usize,
    #[serde(default)]
    pub baseline: usize,
}

fn default_target() -> usize {
    1
}

impl MarketShareFunction {
    /// Uptake of the novel treatment once its probability of being
    /// cost-effective passes 0.6, complete at 1.
    pub fn case_study() -> Self {
        Self { rule: ShareRule::ThresholdLinear { threshold: 0.6, saturation_at: 1.0 }, target: 1, baseline: 0 }
    }

    pub fn step_at_argmax() -> Self {
        Self { rule: ShareRule::StepAtArgmax, target: 1, baseline: 0 }
    }

    pub fn validate(&self, treatments: usize) -> Result<()> {
        if self.target >= treatments || self.baseline >= treatments {
            return Err(VoiError::invalid("market_share", "treatment index out of range"));
        }
        match &self.rule {
            ShareRule::StepAtArgmax => Ok(()),
            _ if self.target == self.baseline => {
                Err(VoiError::invalid("market_share", "target and baseline must differ"))
            }
            ShareRule::ThresholdLinear { threshold, saturation_at } => {
                if !(0.0..1.0).contains(threshold) || !(*saturation_at > *threshold && *saturation_at <= 1.0) {
                    return Err(VoiError::invalid("market_share", "need 0 <= threshold < saturation_at <= 1"));
                }
                Ok(())
            }
            ShareRule::Table { breakpoints } => {
                if breakpoints.is_empty() {
                    return Err(VoiError::invalid("market_share", "table needs at least one breakpoint"));
                }
                for w in breakpoints.windows(2) {
                    if !(w[1].0 > w[0].0 && w[1].1 >= w[0].1) {
                        return Err(VoiError::invalid(
                            "market_share",
                            "breakpoints must be strictly increasing in p and nondecreasing in share",
                        ));
                    }
                }
                if breakpoints.iter().any(|&(p, m)| !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&m)) {
                    return Err(VoiError::invalid("market_share", "breakpoints must lie in [0, 1]"));
                }
                Ok(())
            }
        }
    }

    /// Share of the target treatment given its probability of being
    /// cost-effective. Not defined for [`ShareRule::StepAtArgmax`].
    pub fn target_share(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(VoiError::Domain(format!("probability {p} outside [0, 1]")));
        }
        Ok(match &self.rule {
            ShareRule::ThresholdLinear { threshold, saturation_at } => {
                if p < *threshold {
                    0.0
                } else {
                    ((p - threshold) / (saturation_at - threshold)).min(1.0)
                }
            }
            ShareRule::Table { breakpoints } => interpolate(breakpoints, p),
            ShareRule::StepAtArgmax => {
                return Err(VoiError::invalid(
                    "market_share",
                    "step-at-argmax shares depend on expected net benefits, not on p",
                ))
            }
        })
    }

    /// Shares for all `treatments` given the target's probability and the
    /// posterior expected net benefits `mu` (used only by the step rule).
    pub fn shares(&self, p_target: f64, mu: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; mu.len()];
        self.shares_into(p_target, mu, &mut out)?;
        Ok(out)
    }

    pub(crate) fn shares_into(&self, p_target: f64, mu: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|m| *m = 0.0);
        if let ShareRule::StepAtArgmax = self.rule {
            out[stats::argmax(mu)] = 1.0;
            return Ok(());
        }
        let m = self.target_share(p_target)?;
        out[self.target] = m;
        out[self.baseline] = 1.0 - m;
        Ok(())
    }
}

fn interpolate(points: &[(f64, f64)], p: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if p <= first.0 {
        return first.1;
    }
    if p >= last.0 {
        return last.1;
    }
    let k = points.partition_point(|&(x, _)| x <= p);
    let (x0, y0) = points[k - 1];
    let (x1, y1) = points[k];
    y0 + (y1 - y0) * (p - x0) / (x1 - x0)
}

/// Shares for a two-treatment model from the target's probability.
pub fn market_share(f: &MarketShareFunction, p: f64) -> Result<Vec<f64>> {
    let m = f.target_share(p)?;
    let mut out = vec![0.0; 2.max(f.target + 1).max(f.baseline + 1)];
    out[f.target] = m;
    out[f.baseline] = 1.0 - m;
    Ok(out)
}

/// Current market shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurrentShares {
    pub m: Vec<f64>,
}

impl CurrentShares {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        let s = Self { m };
        s.validate()?;
        Ok(s)
    }

    /// All of the market on one treatment.
    pub fn all_on(treatment: usize, treatments: usize) -> Self {
        let mut m = vec![0.0; treatments];
        m[treatment] = 1.0;
        Self { m }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(VoiError::invalid("current_shares", "components must lie in [0, 1]"));
        }
        let total: f64 = self.m.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(VoiError::invalid("current_shares", format!("must sum to 1, got {total}")));
        }
        Ok(())
    }
}

/// Value of the current decision: share-weighted prior expected net benefit.
pub fn current_decision_value(psa: &PsaSample, shares: &CurrentShares) -> Result<f64> {
    if shares.m.len() != psa.treatments() {
        return Err(VoiError::LengthMismatch {
            what: "current shares vs treatments",
            left: shares.m.len(),
            right: psa.treatments(),
        });
    }
    Ok(weighted(&shares.m, &expected_nb(psa)))
}

fn weighted(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).fold(0.0, |acc, (w, v)| acc + w * v)
}

/// Implementation-adjusted value with its per-dataset contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedValue {
    pub value: f64,
    /// Share-weighted expected net benefit for each dataset, minus the
    /// current-decision value. Their mean approximates `value`.
    pub contributions: Vec<f64>,
}

/// Implementation-adjusted value of sample information from per-dataset
/// posterior expected net benefits `mu` (rows = datasets) and the
/// target treatment's probability of being cost-effective.
///
/// The current-decision term weights the grand means of `mu` by the
/// current shares, as the nested and moment-matching estimators both do.
pub fn assemble_evsi_im(
    mu: &NetBenefitMatrix,
    p_target: &[f64],
    f: &MarketShareFunction,
    shares: &CurrentShares,
) -> Result<AdjustedValue> {
    let (s, d) = (mu.rows(), mu.cols());
    if p_target.len() != s {
        return Err(VoiError::LengthMismatch { what: "p_target vs datasets", left: p_target.len(), right: s });
    }
    if shares.m.len() != d {
        return Err(VoiError::LengthMismatch { what: "current shares vs treatments", left: shares.m.len(), right: d });
    }
    if s == 0 {
        return Err(VoiError::invalid("mu", "no datasets"));
    }
    f.validate(d)?;
    let mut m = vec![0.0; d];
    let mut with_data = Vec::with_capacity(s);
    for (i, &p) in p_target.iter().enumerate() {
        let row = mu.row(i);
        f.shares_into(p, row, &mut m)?;
        with_data.push(weighted(&m, row));
    }
    let grand: Vec<f64> = (0..d).map(|k| stats::mean(&mu.column(k))).collect();
    let current = weighted(&shares.m, &grand);
    let value = stats::mean(&with_data) - current;
    let contributions = with_data.iter().map(|v| v - current).collect();
    Ok(AdjustedValue { value, contributions })
}

/// Standard (fully implemented) value of sample information from the
/// same inputs: mean of row maxima minus the maximum of grand means.
pub fn assemble_evsi(mu: &NetBenefitMatrix) -> Result<AdjustedValue> {
    if mu.rows() == 0 {
        return Err(VoiError::invalid("mu", "no datasets"));
    }
    let maxes: Vec<f64> = (0..mu.rows()).map(|i| mu.row(i)[stats::argmax(mu.row(i))]).collect();
    let grand: Vec<f64> = (0..mu.cols()).map(|k| stats::mean(&mu.column(k))).collect();
    let best = grand[stats::argmax(&grand)];
    let value = stats::mean(&maxes) - best;
    let contributions = maxes.iter().map(|v| v - best).collect();
    Ok(AdjustedValue { value, contributions })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_linear_examples() {
        let f = MarketShareFunction::case_study();
        assert_eq!(market_share(&f, 0.55).unwrap(), vec![1.0, 0.0]);
        let m = market_share(&f, 0.8).unwrap();
        assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 0.5).abs() < 1e-12);
        assert_eq!(market_share(&f, 1.0).unwrap(), vec![0.0, 1.0]);
        assert_eq!(market_share(&f, 0.6).unwrap(), vec![1.0, 0.0]);
        assert!(market_share(&f, 1.2).is_err());
        assert!(market_share(&f, -0.1).is_err());
    }

    #[test]
    fn table_rule_interpolates() {
        let f = MarketShareFunction {
            rule: ShareRule::Table { breakpoints: vec![(0.5, 0.0), (0.7, 0.4), (0.9, 1.0)] },
            target: 1,
            baseline: 0,
        };
        f.validate(2).unwrap();
        assert_eq!(f.target_share(0.2).unwrap(), 0.0);
        assert!((f.target_share(0.6).unwrap() - 0.2).abs() < 1e-12);
        assert!((f.target_share(0.8).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(f.target_share(0.95).unwrap(), 1.0);
    }

    #[test]
    fn invalid_rules_rejected() {
        let bad = MarketShareFunction {
            rule: ShareRule::ThresholdLinear { threshold: 0.7, saturation_at: 0.6 },
            target: 1,
            baseline: 0,
        };
        assert!(bad.validate(2).is_err());
        let bad = MarketShareFunction {
            rule: ShareRule::Table { breakpoints: vec![(0.5, 0.5), (0.6, 0.2)] },
            target: 1,
            baseline: 0,
        };
        assert!(bad.validate(2).is_err());
        assert!(MarketShareFunction::case_study().validate(1).is_err());
    }

    #[test]
    fn step_rule_needs_mu() {
        let f = MarketShareFunction::step_at_argmax();
        assert!(f.target_share(0.5).is_err());
        assert_eq!(f.shares(0.0, &[3.0, 5.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(f.shares(0.0, &[5.0, 5.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn current_shares_validation() {
        assert!(CurrentShares::new(vec![0.5, 0.4]).is_err());
        assert!(CurrentShares::new(vec![1.5, -0.5]).is_err());
        assert!(CurrentShares::new(vec![0.3, 0.7]).is_ok());
    }

    #[test]
    fn current_value_is_linear_in_shares() {
        let nb = NetBenefitMatrix::from_rows(2, 2, vec![1.0, 10.0, 3.0, 20.0]).unwrap();
        let psa = PsaSample::from_net_benefits(vec![], nb, 0).unwrap();
        assert_eq!(current_decision_value(&psa, &CurrentShares::all_on(0, 2)).unwrap(), 2.0);
        assert_eq!(current_decision_value(&psa, &CurrentShares::all_on(1, 2)).unwrap(), 15.0);
        let half = CurrentShares::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(current_decision_value(&psa, &half).unwrap(), 8.5);
    }

    #[test]
    fn no_adoption_gives_zero() {
        let mu = NetBenefitMatrix::from_rows(3, 2, vec![1.0, 4.0, 2.0, 0.0, 6.0, 7.0]).unwrap();
        let v =
            assemble_evsi_im(&mu, &[0.1, 0.3, 0.59], &MarketShareFunction::case_study(), &CurrentShares::all_on(0, 2))
                .unwrap();
        assert!(v.value.abs() < 1e-12);
    }

    #[test]
    fn step_rule_reproduces_evsi_exactly() {
        let mu = NetBenefitMatrix::from_rows(4, 2, vec![1.0, 4.0, 2.5, 0.0, 6.0, 7.1, -3.0, 2.0]).unwrap();
        let grand = [(1.0 + 2.5 + 6.0 - 3.0) / 4.0, (4.0 + 0.0 + 7.1 + 2.0) / 4.0];
        let current = CurrentShares::all_on(stats::argmax(&grand), 2);
        let adj = assemble_evsi_im(&mu, &[0.0; 4], &MarketShareFunction::step_at_argmax(), &current).unwrap();
        let std = assemble_evsi(&mu).unwrap();
        assert_eq!(adj.value.to_bits(), std.value.to_bits());
    }

    #[test]
    fn length_mismatch_reported() {
        let mu = NetBenefitMatrix::from_rows(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = assemble_evsi_im(&mu, &[0.5], &MarketShareFunction::case_study(), &CurrentShares::all_on(0, 2));
        assert!(matches!(r, Err(VoiError::LengthMismatch { .. })));
    }
}
