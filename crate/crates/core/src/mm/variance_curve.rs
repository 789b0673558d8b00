//! Average posterior variance as a function of sample size.
//!
//! `w(n) = a + (prior_variance - a) * c / (n + c)` starts at the prior
//! variance for `n = 0` and decays towards `a`. For fixed `c` the model is
//! linear in `a`, so `a` is profiled out and only `log c` is searched.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VoiError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurveFit {
    /// Asymptotic average posterior variance.
    pub a: f64,
    /// Half-saturation sample size.
    pub c: f64,
    pub prior_variance: f64,
    pub rss: f64,
}

impl VarianceCurveFit {
    /// Predicted average posterior variance at sample size `n`.
    pub fn predict(&self, n: f64) -> f64 {
        self.a + (self.prior_variance - self.a) * self.c / (n + self.c)
    }

    /// Variance-reduction target at `n`, within `[0, prior_variance]`.
    pub fn target(&self, n: f64) -> f64 {
        (self.prior_variance - self.predict(n)).clamp(0.0, self.prior_variance)
    }
}

fn profile(c: f64, sizes: &[f64], var: &[f64], prior: f64) -> (f64, f64) {
    let (mut num, mut den) = (0.0, 0.0);
    for (&n, &y) in sizes.iter().zip(var) {
        let k = c / (n + c);
        num += (1.0 - k) * (y - prior * k);
        den += (1.0 - k) * (1.0 - k);
    }
    let a = if den > 0.0 { (num / den).clamp(0.0, prior) } else { 0.0 };
    let rss = sizes
        .iter()
        .zip(var)
        .map(|(&n, &y)| {
            let k = c / (n + c);
            (y - a - (prior - a) * k).powi(2)
        })
        .sum();
    (a, rss)
}

/// Least-squares fit of the decay curve to per-dataset posterior
/// variances observed at sample sizes `sizes`.
pub fn fit_variance_curve(posterior_variances: &[f64], sizes: &[f64], prior_variance: f64) -> Result<VarianceCurveFit> {
    if posterior_variances.len() != sizes.len() {
        return Err(VoiError::LengthMismatch {
            what: "posterior variances vs sizes",
            left: posterior_variances.len(),
            right: sizes.len(),
        });
    }
    if sizes.len() < 4 {
        return Err(VoiError::invalid("Q", format!("need at least 4 points, got {}", sizes.len())));
    }
    if !(prior_variance > 0.0 && prior_variance.is_finite()) {
        return Err(VoiError::invalid("prior_variance", "must be positive"));
    }
    if sizes.iter().chain(posterior_variances).any(|v| !v.is_finite()) || sizes.iter().any(|&n| n < 0.0) {
        return Err(VoiError::invalid("posterior_variances/sizes", "values must be finite, sizes nonnegative"));
    }
    let n_min = sizes.iter().cloned().fold(f64::INFINITY, f64::min).max(1.0);
    let n_max = sizes.iter().cloned().fold(0.0, f64::max).max(n_min);
    let (lo, hi) = ((n_min * 1e-6).ln(), (n_max * 1e4).ln());
    let rss_at = |lc: f64| profile(lc.exp(), sizes, posterior_variances, prior_variance).1;

    let steps = 400;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let k = (0..=steps)
        .min_by(|&i, &j| rss_at(grid[i]).total_cmp(&rss_at(grid[j])))
        .ok_or_else(|| VoiError::NonConvergence("variance curve: empty grid".into()))?;
    // Golden-section refinement inside the neighbouring grid cells.
    let (mut x0, mut x1) = (grid[k.saturating_sub(1)], grid[(k + 1).min(steps)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let m1 = x1 - g * (x1 - x0);
        let m2 = x0 + g * (x1 - x0);
        if rss_at(m1) < rss_at(m2) {
            x1 = m2;
        } else {
            x0 = m1;
        }
    }
    let lc = 0.5 * (x0 + x1);
    let c = lc.exp();
    let (a, rss) = profile(c, sizes, posterior_variances, prior_variance);
    if !rss.is_finite() {
        return Err(VoiError::NonConvergence("variance curve: non-finite residuals".into()));
    }
    Ok(VarianceCurveFit { a, c, prior_variance, rss })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_prior_variance() {
        let fit = VarianceCurveFit { a: 2.0, c: 30.0, prior_variance: 10.0, rss: 0.0 };
        assert_eq!(fit.predict(0.0), 10.0);
        assert_eq!(fit.target(0.0), 0.0);
        assert!(fit.predict(10.0) > fit.predict(100.0));
        assert!(fit.target(1e12) <= 8.0 + 1e-9);
    }

    #[test]
    fn constant_variances_give_flat_curve() {
        let sizes: Vec<f64> = (1..=20).map(|i| 10.0 * i as f64).collect();
        let fit = fit_variance_curve(&[4.0; 20], &sizes, 10.0).unwrap();
        assert!((fit.a - 4.0).abs() < 1e-3);
        for &n in &sizes {
            assert!((fit.predict(n) - 4.0).abs() < 1e-3);
        }
    }

    #[test]
    fn exact_data_recovered() {
        let truth = VarianceCurveFit { a: 3.0, c: 45.0, prior_variance: 12.0, rss: 0.0 };
        let sizes: Vec<f64> = (0..30).map(|i| 5.0 + 10.0 * i as f64).collect();
        let var: Vec<f64> = sizes.iter().map(|&n| truth.predict(n)).collect();
        let fit = fit_variance_curve(&var, &sizes, 12.0).unwrap();
        assert!((fit.a - 3.0).abs() < 1e-6);
        assert!((fit.c - 45.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_variance_curve(&[1.0; 3], &[1.0, 2.0, 3.0], 2.0).is_err());
        assert!(fit_variance_curve(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0], 0.0).is_err());
        assert!(fit_variance_curve(&[1.0; 4], &[1.0, 2.0, 3.0], 2.0).is_err());
    }
}
