//! Penalised cubic regression splines (P-splines) with the smoothing
//! parameter chosen by generalised cross-validation.
//!
//! One covariate uses a cubic B-spline basis on equally spaced knots with
//! a second-order difference penalty. Two covariates use the tensor
//! product of two such bases with one penalty (and smoothing parameter)
//! per direction. Linear functions lie in the penalty's null space, so
//! they are reproduced exactly at any smoothing level.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VoiError};

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    width: f64,
    segments: usize,
}

impl Axis {
    fn new(values: &[f64], segments: usize) -> Self {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-12);
        // Pad slightly so the extremes sit strictly inside the knot range.
        let lo = lo - 1e-6 * span;
        let width = span * (1.0 + 2e-6) / segments as f64;
        Self { lo, width, segments }
    }

    fn size(&self) -> usize {
        self.segments + 3
    }

    /// First nonzero basis index and the four nonzero values at `x`.
    fn eval(&self, x: f64) -> (usize, [f64; 4]) {
        let t = ((x - self.lo) / self.width).clamp(0.0, self.segments as f64);
        let k = (t.floor() as usize).min(self.segments - 1);
        let u = t - k as f64;
        let u2 = u * u;
        let u3 = u2 * u;
        (
            k,
            [
                (1.0 - u).powi(3) / 6.0,
                (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
                (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
                u3 / 6.0,
            ],
        )
    }

    fn penalty(&self) -> DMatrix<f64> {
        let k = self.size();
        let mut d = DMatrix::zeros(k - 2, k);
        for i in 0..k - 2 {
            d[(i, i)] = 1.0;
            d[(i, i + 1)] = -2.0;
            d[(i, i + 2)] = 1.0;
        }
        d.transpose() * d
    }
}

/// Sparse design: each row has a fixed number of nonzeros.
struct Design {
    cols: usize,
    idx: Vec<usize>,
    val: Vec<f64>,
    nnz: usize,
}

impl Design {
    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = i * self.nnz;
        self.idx[s..s + self.nnz].iter().copied().zip(self.val[s..s + self.nnz].iter().copied())
    }

    fn rows(&self) -> usize {
        self.idx.len() / self.nnz
    }

    fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.cols, self.cols);
        for i in 0..self.rows() {
            for (a, va) in self.row(i) {
                for (b, vb) in self.row(i) {
                    g[(a, b)] += va * vb;
                }
            }
        }
        g
    }

    fn cross(&self, y: &[f64]) -> DVector<f64> {
        let mut v = DVector::zeros(self.cols);
        for (i, yi) in y.iter().enumerate() {
            for (a, va) in self.row(i) {
                v[a] += va * yi;
            }
        }
        v
    }

    fn predict(&self, beta: &DVector<f64>) -> Vec<f64> {
        (0..self.rows()).map(|i| self.row(i).map(|(a, v)| v * beta[a]).sum()).collect()
    }
}

/// A fitted smoother for one response.
#[derive(Debug, Clone)]
pub struct SplineFit {
    pub fitted: Vec<f64>,
    pub edf: f64,
    pub residual_variance: f64,
    pub lambdas: Vec<f64>,
    pub gcv: f64,
}

/// Penalised spline smoother over one or two covariates.
pub struct PSpline {
    design: Design,
    penalties: Vec<DMatrix<f64>>,
    gram: DMatrix<f64>,
    description: String,
}

const SEGMENTS_1D: usize = 20;
const SEGMENTS_2D: usize = 7;

impl PSpline {
    /// `covariates` holds one vector per covariate (1 or 2), all of equal length.
    pub fn new(covariates: &[Vec<f64>]) -> Result<Self> {
        let n = covariates.first().map_or(0, Vec::len);
        if covariates.iter().any(|c| c.len() != n) {
            return Err(VoiError::Regression("covariates differ in length".into()));
        }
        if covariates.iter().flatten().any(|v| !v.is_finite()) {
            return Err(VoiError::Regression("non-finite covariate".into()));
        }
        let (design, penalties, description) = match covariates {
            [x] => {
                let ax = Axis::new(x, SEGMENTS_1D);
                if n < ax.size() + 2 {
                    return Err(VoiError::Regression(format!("{n} points too few for {} basis functions", ax.size())));
                }
                let mut idx = Vec::with_capacity(4 * n);
                let mut val = Vec::with_capacity(4 * n);
                for &xi in x {
                    let (k, b) = ax.eval(xi);
                    for (j, bj) in b.iter().enumerate() {
                        idx.push(k + j);
                        val.push(*bj);
                    }
                }
                let design = Design { cols: ax.size(), idx, val, nnz: 4 };
                (design, vec![ax.penalty()], format!("cubic P-spline, {} basis functions", ax.size()))
            }
            [x1, x2] => {
                let a1 = Axis::new(x1, SEGMENTS_2D);
                let a2 = Axis::new(x2, SEGMENTS_2D);
                let (k1, k2) = (a1.size(), a2.size());
                if n < k1 * k2 + 2 {
                    return Err(VoiError::Regression(format!("{n} points too few for {} basis functions", k1 * k2)));
                }
                let mut idx = Vec::with_capacity(16 * n);
                let mut val = Vec::with_capacity(16 * n);
                for (&u, &v) in x1.iter().zip(x2) {
                    let (i0, b1) = a1.eval(u);
                    let (j0, b2) = a2.eval(v);
                    for (i, bi) in b1.iter().enumerate() {
                        for (j, bj) in b2.iter().enumerate() {
                            idx.push((i0 + i) * k2 + j0 + j);
                            val.push(bi * bj);
                        }
                    }
                }
                let design = Design { cols: k1 * k2, idx, val, nnz: 16 };
                let p1 = a1.penalty().kronecker(&DMatrix::identity(k2, k2));
                let p2 = DMatrix::identity(k1, k1).kronecker(&a2.penalty());
                (design, vec![p1, p2], format!("tensor-product cubic P-spline, {k1}x{k2} basis functions"))
            }
            _ => return Err(VoiError::Regression("one or two covariates supported".into())),
        };
        let gram = design.gram();
        Ok(Self { design, penalties, gram, description })
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Fit `y`, choosing smoothing parameters on a log grid by GCV.
    pub fn fit(&self, y: &[f64]) -> Result<SplineFit> {
        let n = self.design.rows();
        if y.len() != n {
            return Err(VoiError::LengthMismatch { what: "response vs covariates", left: y.len(), right: n });
        }
        let center = y.iter().sum::<f64>() / n as f64;
        let spread = (y.iter().map(|v| (v - center).powi(2)).sum::<f64>() / n as f64).sqrt();
        if !spread.is_finite() {
            return Err(VoiError::Regression("non-finite response".into()));
        }
        if spread == 0.0 {
            return Ok(SplineFit {
                fitted: vec![center; n],
                edf: 1.0,
                residual_variance: 0.0,
                lambdas: vec![f64::INFINITY; self.penalties.len()],
                gcv: 0.0,
            });
        }
        let ys: Vec<f64> = y.iter().map(|v| (v - center) / spread).collect();
        let xty = self.design.cross(&ys);
        let yty: f64 = ys.iter().map(|v| v * v).sum();

        let gram_scale = self.gram.trace();
        let scales: Vec<f64> = self.penalties.iter().map(|p| gram_scale / p.trace()).collect();
        let grid: Vec<f64> = (0..=20).map(|i| 10f64.powf(-6.0 + 0.6 * i as f64)).collect();
        let combos: Vec<Vec<f64>> = match self.penalties.len() {
            1 => grid.iter().map(|&g| vec![g * scales[0]]).collect(),
            _ => {
                let coarse: Vec<f64> = grid.iter().step_by(2).copied().collect();
                coarse
                    .iter()
                    .flat_map(|&g1| coarse.iter().map(move |&g2| (g1, g2)))
                    .map(|(g1, g2)| vec![g1 * scales[0], g2 * scales[1]])
                    .collect()
            }
        };

        let mut best: Option<(f64, Vec<f64>, DVector<f64>, f64)> = None;
        for lambdas in combos {
            let Some((beta, edf, rss)) = self.solve(&lambdas, &xty, yty) else {
                continue;
            };
            let denom = n as f64 - edf;
            if denom <= 0.0 {
                continue;
            }
            let gcv = n as f64 * rss / (denom * denom);
            if best.as_ref().is_none_or(|b| gcv < b.0) {
                best = Some((gcv, lambdas, beta, edf));
            }
        }
        let (gcv, lambdas, beta, edf) =
            best.ok_or_else(|| VoiError::Regression("penalised system singular for every smoothing level".into()))?;
        let fitted_std = self.design.predict(&beta);
        let rss: f64 = fitted_std.iter().zip(&ys).map(|(f, y)| (f - y).powi(2)).sum();
        let fitted = fitted_std.iter().map(|f| center + spread * f).collect();
        Ok(SplineFit {
            fitted,
            edf,
            residual_variance: spread * spread * rss / (n as f64 - edf).max(1.0),
            lambdas,
            gcv,
        })
    }

    fn solve(&self, lambdas: &[f64], xty: &DVector<f64>, yty: f64) -> Option<(DVector<f64>, f64, f64)> {
        let mut a = self.gram.clone();
        for (l, p) in lambdas.iter().zip(&self.penalties) {
            a += p * *l;
        }
        let ridge = 1e-10 * a.trace() / a.nrows() as f64;
        for i in 0..a.nrows() {
            a[(i, i)] += ridge;
        }
        let chol = a.cholesky()?;
        let beta = chol.solve(xty);
        let edf = chol.solve(&self.gram).trace();
        let rss = (yty - 2.0 * beta.dot(xty) + beta.dot(&(&self.gram * &beta))).max(0.0);
        Some((beta, edf, rss))
    }
}
