//! Ordinary Kriging with a Gaussian correlation model.
//!
//! Inputs are expected in the unit box. Length-scales are chosen by
//! coordinate-wise search over a log grid, maximizing the concentrated
//! likelihood.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KrigingError {
    #[error("need at least {need} distinct points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("input {0:?} appears twice with different values")]
    ConflictingDuplicates(Vec<f64>),
    #[error("inputs have inconsistent dimensions")]
    DimensionMismatch,
    #[error("non-finite training data")]
    NonFinite,
    #[error("correlation matrix is not positive definite even with regularization")]
    Singular,
}

/// Diagonal regularization added to every correlation matrix.
pub const NUGGET: f64 = 1e-10;
const LOG10_THETA_GRID: (f64, f64, usize) = (-1.0, 3.0, 17);
const SWEEPS: usize = 2;
const REFINEMENTS: usize = 8;

#[derive(Debug, Clone)]
pub struct KrigingModel {
    inputs: Vec<Vec<f64>>,
    theta: Vec<f64>,
    /// Values are standardized internally; these undo it.
    y_offset: f64,
    y_scale: f64,
    mean: f64,
    variance: f64,
    weights: DVector<f64>,
}

struct Factored {
    /// Correlation matrix without the nugget.
    corr: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    mean: f64,
    variance: f64,
    log_det: f64,
}

fn correlation(a: &[f64], b: &[f64], theta: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).zip(theta).map(|((x, y), t)| t * (x - y) * (x - y)).sum();
    (-d2).exp()
}

fn factor(x: &[Vec<f64>], y: &DVector<f64>, theta: &[f64]) -> Option<Factored> {
    let n = x.len();
    let mut r = DMatrix::<f64>::identity(n, n) * (1.0 + NUGGET);
    for i in 0..n {
        for j in 0..i {
            let c = correlation(&x[i], &x[j], theta);
            r[(i, j)] = c;
            r[(j, i)] = c;
        }
    }
    let chol = r.clone().cholesky()?;
    let corr = r - DMatrix::<f64>::identity(n, n) * NUGGET;
    let ones = DVector::from_element(n, 1.0);
    let r_inv_one = chol.solve(&ones);
    let r_inv_y = chol.solve(y);
    let mean = ones.dot(&r_inv_y) / ones.dot(&r_inv_one);
    let resid = y - DVector::from_element(n, mean);
    let variance = resid.dot(&chol.solve(&resid)) / n as f64;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Some(Factored { corr, chol, mean, variance, log_det })
}

/// Negative concentrated log-likelihood (up to constants); lower is better.
fn objective(f: &Factored, n: usize) -> f64 {
    n as f64 * f.variance.max(1e-300).ln() + f.log_det
}

impl KrigingModel {
    /// Fits to `(x, y)`. Exact duplicate inputs with equal values are merged.
    pub fn fit(x: &[Vec<f64>], y: &[f64]) -> Result<Self, KrigingError> {
        let (x, y) = Self::prepare(x, y)?;
        let dim = x[0].len();
        let (lo, hi, steps) = LOG10_THETA_GRID;
        let grid: Vec<f64> = (0..steps).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (steps - 1) as f64)).collect();
        let (y_offset, y_scale, ys) = standardize(&y);
        if y_scale == 0.0 {
            return Self::finish(x, vec![1.0; dim], y_offset, 0.0, &ys);
        }
        let mut theta = vec![10.0; dim];
        let mut best = factor(&x, &ys, &theta).map_or(f64::INFINITY, |f| objective(&f, x.len()));
        for _ in 0..SWEEPS {
            for d in 0..dim {
                for &t in &grid {
                    let mut trial = theta.clone();
                    trial[d] = t;
                    if let Some(f) = factor(&x, &ys, &trial) {
                        let v = objective(&f, x.len());
                        if v < best {
                            best = v;
                            theta = trial;
                        }
                    }
                }
            }
        }
        Self::finish(x, theta, y_offset, y_scale, &ys)
    }

    /// Fits with fixed length-scales.
    pub fn fit_with_theta(x: &[Vec<f64>], y: &[f64], theta: &[f64]) -> Result<Self, KrigingError> {
        let (x, y) = Self::prepare(x, y)?;
        if theta.len() != x[0].len() || theta.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(KrigingError::DimensionMismatch);
        }
        let (y_offset, y_scale, ys) = standardize(&y);
        Self::finish(x, theta.to_vec(), y_offset, y_scale, &ys)
    }

    fn prepare(x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>), KrigingError> {
        if x.len() != y.len() || x.is_empty() {
            return Err(KrigingError::DimensionMismatch);
        }
        let dim = x[0].len();
        if dim == 0 || x.iter().any(|p| p.len() != dim) {
            return Err(KrigingError::DimensionMismatch);
        }
        if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
            return Err(KrigingError::NonFinite);
        }
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(x.len());
        let mut ys: Vec<f64> = Vec::with_capacity(y.len());
        for (p, &v) in x.iter().zip(y) {
            match xs.iter().position(|q| q == p) {
                Some(i) if ys[i] != v => return Err(KrigingError::ConflictingDuplicates(p.clone())),
                Some(_) => {}
                None => {
                    xs.push(p.clone());
                    ys.push(v);
                }
            }
        }
        if xs.len() < dim + 2 {
            return Err(KrigingError::TooFewPoints { need: dim + 2, got: xs.len() });
        }
        Ok((xs, ys))
    }

    fn finish(x: Vec<Vec<f64>>, theta: Vec<f64>, y_offset: f64, y_scale: f64, ys: &DVector<f64>) -> Result<Self, KrigingError> {
        let f = factor(&x, ys, &theta).ok_or(KrigingError::Singular)?;
        let resid = ys - DVector::from_element(x.len(), f.mean);
        // Refine toward the un-regularized system so training points are
        // reproduced despite the nugget.
        let mut weights = f.chol.solve(&resid);
        for _ in 0..REFINEMENTS {
            let r = &resid - &f.corr * &weights;
            weights += f.chol.solve(&r);
        }
        Ok(Self { inputs: x, theta, y_offset, y_scale, mean: f.mean, variance: f.variance, weights })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.y_scale == 0.0 {
            return self.y_offset;
        }
        let r: f64 = self.inputs.iter().zip(self.weights.iter()).map(|(p, w)| w * correlation(x, p, &self.theta)).sum();
        self.y_offset + self.y_scale * (self.mean + r)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Process variance in the units of the training values squared.
    pub fn process_variance(&self) -> f64 {
        self.variance * self.y_scale * self.y_scale
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

fn standardize(y: &[f64]) -> (f64, f64, DVector<f64>) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 { sd } else { 0.0 };
    let ys = DVector::from_iterator(y.len(), y.iter().map(|v| if scale > 0.0 { (v - mean) / scale } else { 0.0 }));
    (mean, scale, ys)
}
