//! Random-walk Metropolis for the two-arm trial posterior.
//!
//! The chain runs on (eta, lor) = (logit P_C, log OR). On that scale the
//! treated-arm log-odds is simply `eta + lor`, and the Beta prior on P_C
//! with its Jacobian becomes `p^alpha (1 - p)^beta`, so the log target is
//!
//! ```text
//! (alpha + x_c) eta - (alpha + beta + n) softplus(eta)
//!   + x_t (eta + lor) - n softplus(eta + lor)
//!   - (lor - m)^2 / (2 v)
//! ```

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{check_r, mismatch, Dataset, DatasetPayload, StudyKind};
use crate::error::{Result, VoiError};
use crate::psa::{expit, ParameterDraw, PriorSpec};

/// Tuning for the trial-design sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhSettings {
    /// Iterations spent tuning the proposal.
    pub adapt: usize,
    /// Discarded iterations after tuning.
    pub burn_in: usize,
    /// Keep every `thin`-th iteration.
    pub thin: usize,
    /// Acceptance band targeted during tuning.
    pub target_low: f64,
    pub target_high: f64,
}

impl Default for MhSettings {
    fn default() -> Self {
        Self { adapt: 1000, burn_in: 1000, thin: 5, target_low: 0.2, target_high: 0.4 }
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

struct Target {
    a_eta: f64,
    b_eta: f64,
    x_treat: f64,
    n: f64,
    lor_mean: f64,
    lor_var: f64,
}

impl Target {
    #[inline]
    fn log_density(&self, eta: f64, lor: f64) -> f64 {
        let treat = eta + lor;
        let dl = lor - self.lor_mean;
        self.a_eta * eta - self.b_eta * softplus(eta) + self.x_treat * treat
            - self.n * softplus(treat)
            - dl * dl / (2.0 * self.lor_var)
    }
}

/// Proposal `x + scale * L z` with `L` lower triangular.
#[derive(Clone, Copy)]
struct Proposal {
    l11: f64,
    l21: f64,
    l22: f64,
    scale: f64,
}

impl Proposal {
    fn step<R: Rng + ?Sized>(&self, rng: &mut R, eta: f64, lor: f64) -> (f64, f64) {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        (eta + self.scale * self.l11 * z1, lor + self.scale * (self.l21 * z1 + self.l22 * z2))
    }
}

struct Chain<'a> {
    target: &'a Target,
    eta: f64,
    lor: f64,
    lp: f64,
}

impl Chain<'_> {
    fn advance<R: Rng + ?Sized>(&mut self, proposal: &Proposal, rng: &mut R) -> bool {
        let (eta, lor) = proposal.step(rng, self.eta, self.lor);
        let lp = self.target.log_density(eta, lor);
        let u: f64 = rng.random();
        if u.ln() < lp - self.lp {
            self.eta = eta;
            self.lor = lor;
            self.lp = lp;
            true
        } else {
            false
        }
    }
}

/// Draw `r` posterior samples of (P_C, OR) for a trial dataset; P_SE and
/// Q_C come from their priors. Returns the draws and the acceptance rate
/// of the post-tuning iterations.
pub fn posterior_effectiveness_with<R: Rng + ?Sized>(
    dataset: &Dataset,
    prior: &PriorSpec,
    r: usize,
    settings: &MhSettings,
    rng: &mut R,
) -> Result<(Vec<ParameterDraw>, f64)> {
    check_r(r)?;
    let DatasetPayload::EffectivenessRct { x_control, x_treat, n } = dataset.payload else {
        return Err(mismatch(StudyKind::EffectivenessRct, dataset));
    };
    if settings.thin == 0 {
        return Err(VoiError::invalid("thin", "must be at least 1"));
    }
    let sampler = prior.sampler()?;
    let (alpha, beta) = (prior.p_c.alpha, prior.p_c.beta);
    let nf = n as f64;
    let target = Target {
        a_eta: alpha + x_control as f64,
        b_eta: alpha + beta + nf,
        x_treat: x_treat as f64,
        n: nf,
        lor_mean: prior.log_or.mean,
        lor_var: prior.log_or.variance,
    };

    // Start near the conditional modes with curvature-based scales.
    let p0 = (alpha + x_control as f64) / (alpha + beta + nf);
    let eta0 = p0.ln() - (1.0 - p0).ln();
    let lor0 = prior.log_or.mean;
    let pt0 = expit(eta0 + lor0);
    let sd_eta = 1.0 / ((alpha + beta + nf) * p0 * (1.0 - p0)).sqrt();
    let sd_lor = 1.0 / (1.0 / prior.log_or.variance + nf * pt0 * (1.0 - pt0)).sqrt();

    let mut chain = Chain { target: &target, eta: eta0, lor: lor0, lp: target.log_density(eta0, lor0) };
    let mut proposal = Proposal { l11: sd_eta, l21: 0.0, l22: sd_lor, scale: 2.38 / 2f64.sqrt() };

    // Tuning: batches of 100 nudge the global scale into the target band;
    // halfway through, the proposal shape switches to the empirical
    // covariance of the second quarter of the tuning run.
    const BATCH: usize = 100;
    let half = settings.adapt / 2;
    let mut history: Vec<(f64, f64)> = Vec::with_capacity(settings.adapt);
    let mut accepted = 0usize;
    for it in 0..settings.adapt {
        if chain.advance(&proposal, rng) {
            accepted += 1;
        }
        history.push((chain.eta, chain.lor));
        if (it + 1) % BATCH == 0 {
            let rate = accepted as f64 / BATCH as f64;
            if rate < settings.target_low {
                proposal.scale *= if rate < 0.5 * settings.target_low { 0.5 } else { 0.8 };
            } else if rate > settings.target_high {
                proposal.scale *= if rate > 0.5 + 0.5 * settings.target_high { 2.0 } else { 1.25 };
            }
            accepted = 0;
        }
        if it + 1 == half && half >= 100 {
            if let Some(shape) = covariance_shape(&history[half / 2..]) {
                proposal = Proposal { scale: 2.38 / 2f64.sqrt(), ..shape };
            }
        }
    }

    for _ in 0..settings.burn_in {
        chain.advance(&proposal, rng);
    }

    let mut draws = Vec::with_capacity(r);
    let mut accepted = 0usize;
    let total = r * settings.thin;
    for it in 0..total {
        if chain.advance(&proposal, rng) {
            accepted += 1;
        }
        if (it + 1) % settings.thin == 0 {
            let p_c = expit(chain.eta);
            let or = chain.lor.exp();
            let p_se = sampler.sample_p_se(rng);
            let q_c = sampler.sample_q_c(rng);
            draws.push(ParameterDraw::from_parts(p_c, or, p_se, q_c));
        }
    }
    let acceptance = accepted as f64 / total as f64;
    if !(acceptance > 0.05 && acceptance < 0.95) {
        return Err(VoiError::SamplerFailure { acceptance });
    }
    Ok((draws, acceptance))
}

/// Cholesky factor of the sample covariance, or `None` if degenerate.
fn covariance_shape(points: &[(f64, f64)]) -> Option<Proposal> {
    let n = points.len() as f64;
    if n < 10.0 {
        return None;
    }
    let (me, ml) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (me, ml) = (me / n, ml / n);
    let (mut see, mut sel, mut sll) = (0.0, 0.0, 0.0);
    for &(e, l) in points {
        see += (e - me) * (e - me);
        sel += (e - me) * (l - ml);
        sll += (l - ml) * (l - ml);
    }
    let (see, sel, sll) = (see / (n - 1.0), sel / (n - 1.0), sll / (n - 1.0));
    if !(see > 0.0 && sll > 0.0) {
        return None;
    }
    let l11 = see.sqrt();
    let l21 = sel / l11;
    let rem = sll - l21 * l21;
    if rem.is_nan() || rem <= 1e-12 * sll {
        return None;
    }
    Some(Proposal { l11, l21, l22: rem.sqrt(), scale: 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
    }

    #[test]
    fn acceptance_is_in_band() {
        let ds = Dataset::new(DatasetPayload::EffectivenessRct { x_control: 30, x_treat: 9, n: 200 }).unwrap();
        let mut rng = stream_rng(5, Stream::Posterior, 0);
        let (draws, acc) =
            posterior_effectiveness_with(&ds, &PriorSpec::case_study(), 2000, &MhSettings::default(), &mut rng)
                .unwrap();
        assert_eq!(draws.len(), 2000);
        assert!(acc > 0.1 && acc < 0.6, "acceptance {acc}");
    }

    #[test]
    fn zero_thin_rejected() {
        let ds = Dataset::new(DatasetPayload::EffectivenessRct { x_control: 3, x_treat: 1, n: 20 }).unwrap();
        let settings = MhSettings { thin: 0, ..MhSettings::default() };
        let mut rng = stream_rng(5, Stream::Posterior, 0);
        assert!(posterior_effectiveness_with(&ds, &PriorSpec::case_study(), 10, &settings, &mut rng).is_err());
    }
}
