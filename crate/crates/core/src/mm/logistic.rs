//! Generalised logistic map from expected net benefit to probability of
//! cost-effectiveness.
//!
//! ```text
//! h(mu)    = (A + exp(-B z))^(-v)             z = (mu - center) / scale
//! h(mu, N) = (A + exp(-B N^u z))^(-v)
//! ```
//!
//! Fitted by maximum a posteriori on the unconstrained coordinates
//! `A = 1 + e^a`, `B = e^b`, `v = e^w` (and `u`), each with a Normal(0, 10^2)
//! prior, under Gaussian residuals whose variance is profiled out.

use serde::{Deserialize, Serialize};

use super::optim::NelderMead;
use crate::error::{Result, VoiError};
use crate::stats;

const PRIOR_SD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub a: f64,
    pub b: f64,
    pub v: f64,
    /// Sample-size exponent; present only for the across-sample-size model.
    pub u: Option<f64>,
    /// Residual standard deviation.
    pub sigma: f64,
    pub center: f64,
    pub scale: f64,
    /// Maximised log posterior (up to a constant).
    pub log_posterior: f64,
}

impl LogisticFit {
    fn standardize(&self, mu: f64) -> f64 {
        (mu - self.center) / self.scale
    }

    /// Predicted probability at expected net benefit `mu`, in (0, 1].
    pub fn predict(&self, mu: f64) -> f64 {
        curve(self.a, self.b, self.v, self.standardize(mu))
    }

    /// Predicted probability at `mu` for sample size `n`. Falls back to
    /// [`predict`](Self::predict) when the fit has no sample-size term.
    pub fn predict_n(&self, mu: f64, n: f64) -> f64 {
        match self.u {
            Some(u) => curve(self.a, self.b * n.powf(u), self.v, self.standardize(mu)),
            None => self.predict(mu),
        }
    }

    /// Upper asymptote `A^(-v)`.
    pub fn saturation(&self) -> f64 {
        self.a.powf(-self.v)
    }
}

/// `(A + exp(-B z))^(-v)` evaluated in log space, floored at the smallest
/// positive double.
fn curve(a: f64, b: f64, v: f64, z: f64) -> f64 {
    let t = -b * z;
    // ln(A + e^t) without overflow
    let log_inner = if t > a.ln() { t + (a * (-t).exp()).ln_1p() } else { a.ln() + (t.exp() / a).ln_1p() };
    (-v * log_inner).exp().clamp(f64::MIN_POSITIVE, 1.0)
}

fn standardization(mu: &[f64]) -> (f64, f64) {
    let center = stats::mean(mu);
    let scale = stats::std_dev(mu);
    (center, if scale > 0.0 && scale.is_finite() { scale } else { 1.0 })
}

fn check_inputs(mu: &[f64], p: &[f64], min_q: usize) -> Result<()> {
    if mu.len() != p.len() {
        return Err(VoiError::LengthMismatch { what: "mu vs p", left: mu.len(), right: p.len() });
    }
    if mu.len() < min_q {
        return Err(VoiError::invalid("Q", format!("need at least {min_q} points, got {}", mu.len())));
    }
    if mu.iter().chain(p).any(|v| !v.is_finite()) {
        return Err(VoiError::invalid("mu/p", "values must be finite"));
    }
    Ok(())
}

/// Negative log posterior with the residual variance profiled out.
fn objective(residual_ss: f64, q: usize, theta: &[f64]) -> f64 {
    let prior: f64 = theta.iter().map(|t| t * t).sum::<f64>() / (2.0 * PRIOR_SD * PRIOR_SD);
    0.5 * q as f64 * (residual_ss / q as f64 + 1e-300).ln() + prior
}

const STARTS: [[f64; 3]; 8] = [
    [0.0, 0.0, 0.0],
    [-2.0, 1.0, 0.0],
    [1.0, -1.0, 1.0],
    [-3.0, 0.5, -1.0],
    [0.0, 2.0, -0.5],
    [2.0, 0.0, 2.0],
    [-1.0, -0.5, 0.5],
    [-5.0, 1.5, -2.0],
];

/// Fit `p ~ h(mu)`.
pub fn fit_generalized_logistic(mu: &[f64], p: &[f64]) -> Result<LogisticFit> {
    check_inputs(mu, p, 4)?;
    let (center, scale) = standardization(mu);
    let z: Vec<f64> = mu.iter().map(|m| (m - center) / scale).collect();
    let rss = |th: &[f64]| -> f64 {
        let (a, b, v) = (1.0 + th[0].exp(), th[1].exp(), th[2].exp());
        z.iter().zip(p).map(|(&zi, &pi)| (pi - curve(a, b, v, zi)).powi(2)).sum()
    };
    let nm = NelderMead::default();
    let best = STARTS
        .iter()
        .map(|s| nm.minimize(|th| objective(rss(th), z.len(), th), s))
        .filter(|m| m.f.is_finite())
        .min_by(|x, y| x.f.total_cmp(&y.f))
        .ok_or_else(|| VoiError::NonConvergence("generalised logistic: no start produced a finite fit".into()))?;
    let th = &best.x;
    Ok(LogisticFit {
        a: 1.0 + th[0].exp(),
        b: th[1].exp(),
        v: th[2].exp(),
        u: None,
        sigma: (rss(th) / z.len() as f64).sqrt(),
        center,
        scale,
        log_posterior: -best.f,
    })
}

/// Fit `p ~ h(mu, N)` with a sample-size exponent `u`.
pub fn fit_generalized_logistic_n(mu: &[f64], p: &[f64], sizes: &[f64]) -> Result<LogisticFit> {
    check_inputs(mu, p, 5)?;
    if sizes.len() != mu.len() {
        return Err(VoiError::LengthMismatch { what: "sizes vs mu", left: sizes.len(), right: mu.len() });
    }
    if sizes.iter().any(|n| !(*n > 0.0 && n.is_finite())) {
        return Err(VoiError::invalid("N_q", "sample sizes must be positive"));
    }
    let (center, scale) = standardization(mu);
    let z: Vec<f64> = mu.iter().map(|m| (m - center) / scale).collect();
    let ln_n: Vec<f64> = sizes.iter().map(|n| n.ln()).collect();
    // Centre log N so B and u are less correlated in the search; the
    // reported B refers to the raw N^u.
    let ln_ref = stats::mean(&ln_n);
    let rss = |th: &[f64]| -> f64 {
        let (a, v, u) = (1.0 + th[0].exp(), th[2].exp(), th[3]);
        z.iter()
            .zip(p)
            .zip(&ln_n)
            .map(|((&zi, &pi), &ln)| {
                let b = (th[1] + u * (ln - ln_ref)).exp();
                (pi - curve(a, b, v, zi)).powi(2)
            })
            .sum()
    };
    // Prior is on the raw log B, which is b_c - u * ln_ref.
    let raw = |th: &[f64]| [th[0], th[1] - th[3] * ln_ref, th[2], th[3]];
    let nm = NelderMead { max_iter: 8000, ..Default::default() };
    let best = STARTS
        .iter()
        .flat_map(|s| [0.0, 0.5, -0.5].map(|u| [s[0], s[1], s[2], u]))
        .map(|s| nm.minimize(|th| objective(rss(th), z.len(), &raw(th)), &s))
        .filter(|m| m.f.is_finite())
        .min_by(|x, y| x.f.total_cmp(&y.f))
        .ok_or_else(|| VoiError::NonConvergence("sample-size logistic: no start produced a finite fit".into()))?;
    let th = raw(&best.x);
    Ok(LogisticFit {
        a: 1.0 + th[0].exp(),
        b: th[1].exp(),
        v: th[2].exp(),
        u: Some(th[3]),
        sigma: (rss(&best.x) / z.len() as f64).sqrt(),
        center,
        scale,
        log_posterior: -best.f,
    })
}
