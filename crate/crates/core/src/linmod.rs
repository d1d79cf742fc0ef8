//! Ordinary least squares with an intercept, and what the selection and
//! scoring layers need from it.

use crate::boxcox;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{quad_form, PivotedQr};
use crate::predictive::PredictiveDistribution;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedLinearModel {
    /// Intercept first, then one coefficient per included column.
    pub coefficients: Vec<f64>,
    /// `SSE / df_resid`.
    pub sigma2_hat: f64,
    /// Degrees of freedom used for the predictive t. Equals `n_fit − (k+1)`
    /// unless the scale was re-estimated on other data.
    pub df_resid: usize,
    /// `(XᵀX)⁻¹`, row-major, in coefficient order.
    pub gram_inverse: Vec<f64>,
    pub included_columns: Vec<usize>,
    /// Box-Cox index when the model was fitted to `g_λ(y)`.
    pub lambda: Option<f64>,
    /// Whether Box-Cox predictions carry the change-of-variables factor.
    pub jacobian: bool,
    pub n_fit: usize,
    pub sse: f64,
}

fn check_columns(data: &Dataset, columns: &[usize]) -> Result<()> {
    if columns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("columns must be strictly increasing".into()));
    }
    if let Some(&c) = columns.last() {
        if c >= data.n_cols() {
            return Err(Error::InvalidParameter(format!(
                "column {c} out of range for {} covariates",
                data.n_cols()
            )));
        }
    }
    Ok(())
}

/// Design row `[1, x[columns]...]`.
pub(crate) fn design_row(x: &[f64], columns: &[usize], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    out.extend(columns.iter().map(|&c| x[c]));
}

/// Column-major `[1, X_columns]` for the rows of `data`.
pub(crate) fn design_matrix(data: &Dataset, columns: &[usize]) -> Vec<f64> {
    let n = data.len();
    let mut a = Vec::with_capacity(n * (columns.len() + 1));
    a.extend(std::iter::repeat_n(1.0, n));
    for &c in columns {
        a.extend((0..n).map(|i| data.x(i, c)));
    }
    a
}

/// Least-squares fit of `response` on the intercept plus `columns` of `data`.
pub fn ols_fit_response(data: &Dataset, columns: &[usize], response: &[f64]) -> Result<FittedLinearModel> {
    check_columns(data, columns)?;
    let n = data.len();
    let k1 = columns.len() + 1;
    if n < k1 + 1 {
        return Err(Error::Unidentifiable(format!(
            "{n} cases cannot fit {k1} coefficients with a residual degree of freedom"
        )));
    }
    let qr = PivotedQr::new(design_matrix(data, columns), n, k1);
    if !qr.is_full_rank() {
        return Err(Error::Unidentifiable(format!("design of rank {} < {k1}", qr.rank())));
    }
    let coefficients = qr.solve(response);
    let mut row = Vec::with_capacity(k1);
    let sse: f64 = (0..n)
        .map(|i| {
            design_row(data.row(i), columns, &mut row);
            let fit: f64 = row.iter().zip(&coefficients).map(|(a, b)| a * b).sum();
            (response[i] - fit).powi(2)
        })
        .sum();
    let df_resid = n - k1;
    Ok(FittedLinearModel {
        coefficients,
        sigma2_hat: sse / df_resid as f64,
        df_resid,
        gram_inverse: qr.gram_inverse(),
        included_columns: columns.to_vec(),
        lambda: None,
        jacobian: true,
        n_fit: n,
        sse,
    })
}

pub fn ols_fit(data: &Dataset, columns: &[usize]) -> Result<FittedLinearModel> {
    ols_fit_response(data, columns, data.response())
}

pub fn transformed_response(data: &Dataset, lambda: f64) -> Result<Vec<f64>> {
    data.response()
        .iter()
        .map(|&y| {
            if y > 0.0 {
                Ok(boxcox::forward(y, lambda))
            } else {
                Err(Error::NonPositiveResponse(y))
            }
        })
        .collect()
}

/// OLS on `g_λ(y)`; the returned model predicts on the original scale.
pub fn ols_fit_boxcox(data: &Dataset, columns: &[usize], lambda: f64) -> Result<FittedLinearModel> {
    let z = transformed_response(data, lambda)?;
    let mut model = ols_fit_response(data, columns, &z)?;
    model.lambda = Some(lambda);
    Ok(model)
}

impl FittedLinearModel {
    pub fn n_coefficients(&self) -> usize {
        self.coefficients.len()
    }

    /// Response on the scale the model was fitted on.
    pub fn model_scale(&self, y: f64) -> f64 {
        match self.lambda {
            Some(l) if y > 0.0 => boxcox::forward(y, l),
            Some(_) => f64::NAN,
            None => y,
        }
    }

    pub(crate) fn mean_and_leverage(&self, x: &[f64], buf: &mut Vec<f64>) -> (f64, f64) {
        design_row(x, &self.included_columns, buf);
        let mean = buf.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum();
        (mean, quad_form(&self.gram_inverse, buf))
    }

    /// `xᵀ(XᵀX)⁻¹x` for the design row built from covariates `x`.
    pub fn leverage(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.coefficients.len());
        self.mean_and_leverage(x, &mut buf).1
    }

    pub fn fitted_value(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.coefficients.len());
        self.mean_and_leverage(x, &mut buf).0
    }

    /// Residuals on the model scale.
    pub fn residuals(&self, data: &Dataset) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.coefficients.len());
        (0..data.len())
            .map(|i| self.model_scale(data.y(i)) - self.mean_and_leverage(data.row(i), &mut buf).0)
            .collect()
    }
}

/// Predictive t at covariate row `x` (all covariates; the model picks its
/// columns): location `xᵀβ̂`, scale `σ̂·√(1 + xᵀ(XᵀX)⁻¹x)`.
pub fn predict_dist(model: &FittedLinearModel, x: &[f64]) -> PredictiveDistribution {
    let mut buf = Vec::with_capacity(model.coefficients.len());
    let (location, h) = model.mean_and_leverage(x, &mut buf);
    let scale = (model.sigma2_hat * (1.0 + h)).sqrt();
    let df = model.df_resid as f64;
    match model.lambda {
        Some(lambda) => PredictiveDistribution::BoxCoxT {
            location,
            scale,
            df,
            lambda,
            jacobian: model.jacobian,
        },
        None => PredictiveDistribution::StudentT { location, scale, df },
    }
}

/// Externally studentized residuals for the cases `model` was fitted on.
/// A case with leverage 1, or a non-zero residual whose leave-one-out
/// variance is zero, gets `+∞`.
pub fn studentized_residuals(model: &FittedLinearModel, data: &Dataset) -> Result<Vec<f64>> {
    if model.df_resid < 2 {
        return Err(Error::Unidentifiable(
            "externally studentized residuals need two residual degrees of freedom".into(),
        ));
    }
    let n = data.len();
    let k1 = model.n_coefficients();
    let resid_df = (n - k1 - 1) as f64;
    let mut buf = Vec::with_capacity(k1);
    let y_scale = data
        .response()
        .iter()
        .map(|&y| model.model_scale(y).abs())
        .fold(0.0, f64::max);
    let negligible = 1e-10 * (1.0 + y_scale);
    let sse: f64;
    let mut parts = Vec::with_capacity(n);
    {
        let mut total = 0.0;
        for i in 0..n {
            let (fit, h) = model.mean_and_leverage(data.row(i), &mut buf);
            let e = model.model_scale(data.y(i)) - fit;
            total += e * e;
            parts.push((e, h));
        }
        sse = total;
    }
    Ok(parts
        .into_iter()
        .map(|(e, h)| {
            if e.abs() <= negligible {
                return 0.0;
            }
            let one_minus_h = 1.0 - h;
            if one_minus_h <= 1e-12 {
                return f64::INFINITY;
            }
            let s2 = (sse - e * e / one_minus_h) / resid_df;
            if s2 <= negligible * negligible {
                return f64::INFINITY;
            }
            e / (s2 * one_minus_h).sqrt()
        })
        .collect())
}

/// `n·ln(SSE/n) + 2·(k+1)`; `−∞` for an exact fit.
pub fn linear_aic(model: &FittedLinearModel, n_fit: usize) -> f64 {
    aic_from_sse(model.sse, n_fit, model.n_coefficients())
}

pub(crate) fn aic_from_sse(sse: f64, n_fit: usize, n_coefficients: usize) -> f64 {
    if sse <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = n_fit as f64;
    n * (sse / n).ln() + 2.0 * n_coefficients as f64
}

/// Box-Cox profile log-likelihood, `−(n/2)·ln(SSE_λ/n) + (λ−1)·Σ ln y`.
pub fn boxcox_profile_loglik(lambda: f64, data: &Dataset, columns: &[usize]) -> Result<f64> {
    let model = ols_fit_boxcox(data, columns, lambda)?;
    let n = data.len() as f64;
    let log_sum: f64 = data.response().iter().map(|y| y.ln()).sum();
    Ok(-0.5 * n * (model.sse / n).ln() + (lambda - 1.0) * log_sum)
}
