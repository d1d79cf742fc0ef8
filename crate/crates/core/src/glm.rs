//! Logistic regression by iteratively reweighted least squares.

use crate::data::{Dataset, ResponseKind};
use crate::error::{Error, Result};
use crate::linalg::PivotedQr;
use crate::linmod::{design_matrix, design_row};
use crate::predictive::{PredictiveDistribution, PROB_CLIP};

pub const DEFAULT_MAX_ITER: usize = 50;
/// Relative deviance change that ends the iteration.
pub const DEVIANCE_TOL: f64 = 1e-9;
/// Largest entry of `Xᵀ(y − p̂)` accepted at convergence.
pub const SCORE_TOL: f64 = 1e-6;

/// Linear predictor beyond which the fitted probability leaves the clip
/// range; a fit that gets there is treated as separated.
const ETA_LIMIT: f64 = 23.025_850_929_840_455;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedLogit {
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub deviance: f64,
    pub converged: bool,
    pub iterations: usize,
    pub included_columns: Vec<usize>,
    pub n_fit: usize,
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn linear_predictor(data: &Dataset, columns: &[usize], beta: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(beta.len());
    (0..data.len())
        .map(|i| {
            design_row(data.row(i), columns, &mut row);
            row.iter().zip(beta).map(|(a, b)| a * b).sum()
        })
        .collect()
}

fn deviance_of(y: &[f64], eta: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(eta)
        .map(|(&yi, &e)| if yi == 1.0 { softplus(-e) } else { softplus(e) })
        .sum::<f64>()
}

/// Bernoulli log-likelihood of coefficients `beta` (intercept first).
pub fn log_likelihood(data: &Dataset, columns: &[usize], beta: &[f64]) -> f64 {
    -0.5 * deviance_of(data.response(), &linear_predictor(data, columns, beta))
}

/// Gradient of [`log_likelihood`]: `Xᵀ(y − p)`.
pub fn score_vector(data: &Dataset, columns: &[usize], beta: &[f64]) -> Vec<f64> {
    let eta = linear_predictor(data, columns, beta);
    let mut g = vec![0.0; beta.len()];
    let mut row = Vec::with_capacity(beta.len());
    for (i, e) in eta.iter().enumerate() {
        design_row(data.row(i), columns, &mut row);
        let r = data.y(i) - logistic(*e);
        for (gj, xj) in g.iter_mut().zip(&row) {
            *gj += xj * r;
        }
    }
    g
}

pub fn logit_fit(data: &Dataset, columns: &[usize], max_iter: usize) -> Result<FittedLogit> {
    if data.kind() != ResponseKind::Binary {
        return Err(Error::InvalidParameter(
            "logistic regression needs a binary response".into(),
        ));
    }
    let n = data.len();
    let k1 = columns.len() + 1;
    if n < k1 + 1 {
        return Err(Error::Unidentifiable(format!(
            "{n} cases cannot fit {k1} logistic coefficients"
        )));
    }
    if columns.iter().any(|&c| c >= data.n_cols()) || columns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("invalid column subset".into()));
    }
    let x = design_matrix(data, columns);
    if !PivotedQr::new(x.clone(), n, k1).is_full_rank() {
        return Err(Error::Unidentifiable("rank-deficient logistic design".into()));
    }
    let y = data.response();

    let mut beta = vec![0.0; k1];
    let mut eta = vec![0.0; n];
    let mut deviance = deviance_of(y, &eta);
    let mut converged = false;
    let mut iterations = 0;
    let mut weighted = vec![0.0; n * k1];
    let mut target = vec![0.0; n];

    while iterations < max_iter {
        iterations += 1;
        for i in 0..n {
            let p = logistic(eta[i]);
            let w = (p * (1.0 - p)).max(1e-12);
            let sw = w.sqrt();
            target[i] = sw * (eta[i] + (y[i] - p) / w);
            for j in 0..k1 {
                weighted[j * n + i] = sw * x[j * n + i];
            }
        }
        let qr = PivotedQr::new(weighted.clone(), n, k1);
        if !qr.is_full_rank() {
            break;
        }
        let mut proposal = qr.solve(&target);
        let mut new_eta = linear_predictor(data, columns, &proposal);
        let mut new_dev = deviance_of(y, &new_eta);
        // Step halving if the Newton step overshoots.
        let mut halvings = 0;
        while new_dev > deviance * (1.0 + 1e-12) + 1e-12 && halvings < 20 {
            for (p, b) in proposal.iter_mut().zip(&beta) {
                *p = 0.5 * (*p + b);
            }
            new_eta = linear_predictor(data, columns, &proposal);
            new_dev = deviance_of(y, &new_eta);
            halvings += 1;
        }
        let rel = (new_dev - deviance).abs() / (new_dev.abs() + 0.1);
        beta = proposal;
        eta = new_eta;
        deviance = new_dev;
        if rel < DEVIANCE_TOL {
            let score = score_vector(data, columns, &beta);
            if score.iter().all(|g| g.abs() < SCORE_TOL) {
                converged = true;
                break;
            }
        }
    }

    if eta.iter().any(|e| e.abs() > ETA_LIMIT) {
        converged = false;
    }

    Ok(FittedLogit {
        coefficients: beta,
        deviance,
        converged,
        iterations,
        included_columns: columns.to_vec(),
        n_fit: n,
    })
}

/// `deviance + 2·(k+1)`.
pub fn logit_aic(model: &FittedLogit) -> f64 {
    model.deviance + 2.0 * model.coefficients.len() as f64
}

impl FittedLogit {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.coefficients[0]
            + self
                .included_columns
                .iter()
                .zip(&self.coefficients[1..])
                .map(|(&c, b)| x[c] * b)
                .sum::<f64>()
    }
}

pub fn clipped_prob(eta: f64) -> f64 {
    logistic(eta).clamp(PROB_CLIP, 1.0 - PROB_CLIP)
}

pub fn predict_prob(model: &FittedLogit, x: &[f64]) -> PredictiveDistribution {
    PredictiveDistribution::Bernoulli {
        prob: clipped_prob(model.linear_predictor(x)),
    }
}
