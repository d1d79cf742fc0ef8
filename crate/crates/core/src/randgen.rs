//! Synthetic data for the four simulation scenarios.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::boxcox;
use crate::data::{Dataset, ResponseKind};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// True intercept in every scenario. Fitted models still estimate it.
pub const ALPHA: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    BoxCox,
    VarSel,
    Outlier,
    Binary,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::BoxCox,
        ScenarioKind::VarSel,
        ScenarioKind::Outlier,
        ScenarioKind::Binary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::BoxCox => "boxcox",
            ScenarioKind::VarSel => "varsel",
            ScenarioKind::Outlier => "outlier",
            ScenarioKind::Binary => "binary",
        }
    }

    pub fn response_kind(self) -> ResponseKind {
        match self {
            ScenarioKind::Binary => ResponseKind::Binary,
            _ => ResponseKind::Continuous,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario '{s}'")))
    }
}

/// Scenario-specific factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioDesign {
    /// `g_λ(Y) = α + βX + ε`, one uniform covariate.
    BoxCox { lambda: f64 },
    /// `Y = α + β Σ X_j + ε` with equicorrelated uniform covariates.
    VarSel { p: usize, rho: f64 },
    /// `Y = α + βX + σ t_df`; `df = ∞` means normal errors.
    Outlier { df: f64 },
    /// `η = β Σ X_j + ε`, `Y ~ Bernoulli(logistic(η))`.
    Binary { p: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub n: usize,
    pub sigma: f64,
    pub beta: f64,
    pub design: ScenarioDesign,
}

impl ScenarioParams {
    pub fn kind(&self) -> ScenarioKind {
        match self.design {
            ScenarioDesign::BoxCox { .. } => ScenarioKind::BoxCox,
            ScenarioDesign::VarSel { .. } => ScenarioKind::VarSel,
            ScenarioDesign::Outlier { .. } => ScenarioKind::Outlier,
            ScenarioDesign::Binary { .. } => ScenarioKind::Binary,
        }
    }

    pub fn n_predictors(&self) -> usize {
        match self.design {
            ScenarioDesign::VarSel { p, .. } | ScenarioDesign::Binary { p } => p,
            ScenarioDesign::BoxCox { .. } | ScenarioDesign::Outlier { .. } => 1,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.design {
            ScenarioDesign::BoxCox { lambda } => Some(lambda),
            _ => None,
        }
    }

    pub fn rho(&self) -> Option<f64> {
        match self.design {
            ScenarioDesign::VarSel { rho, .. } => Some(rho),
            _ => None,
        }
    }

    pub fn df(&self) -> Option<f64> {
        match self.design {
            ScenarioDesign::Outlier { df } => Some(df),
            _ => None,
        }
    }

    /// Canonical key for these factors (training fraction excluded).
    pub fn label(&self) -> String {
        let head = format!("{}/n={}/sigma={}/beta={}", self.kind(), self.n, self.sigma, self.beta);
        match self.design {
            ScenarioDesign::BoxCox { lambda } => format!("{head}/lambda={lambda}"),
            ScenarioDesign::VarSel { p, rho } => format!("{head}/p={p}/rho={rho}"),
            ScenarioDesign::Outlier { df } => format!("{head}/df={df}"),
            ScenarioDesign::Binary { p } => format!("{head}/p={p}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and ≥ 0, got {}",
                self.sigma
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        match self.design {
            ScenarioDesign::BoxCox { lambda } if !lambda.is_finite() => {
                Err(Error::InvalidParameter("lambda must be finite".into()))
            }
            ScenarioDesign::VarSel { p, rho } => {
                if p == 0 {
                    return Err(Error::InvalidParameter("need at least one predictor".into()));
                }
                check_rho(rho)
            }
            ScenarioDesign::Binary { p: 0 } => Err(Error::InvalidParameter("need at least one predictor".into())),
            ScenarioDesign::Outlier { df } if !(df > 0.0) => Err(Error::InvalidParameter(format!(
                "error degrees of freedom must be positive, got {df}"
            ))),
            _ => Ok(()),
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "correlation must lie in [0, 1), got {rho}"
        )))
    }
}

/// Normal-scale correlation whose Gaussian copula gives uniform marginals
/// with Pearson correlation `rho`: inverts `ρ = (6/π)·asin(ρ_N / 2)`.
pub fn copula_normal_correlation(rho: f64) -> f64 {
    2.0 * (std::f64::consts::PI * rho / 6.0).sin()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `n × p` row-major matrix of Uniform(0,1) covariates with common pairwise
/// correlation `rho`.
pub fn correlated_uniform_design(n: usize, p: usize, rho: f64, rng: &mut RandomStream) -> Result<Vec<f64>> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("design needs n ≥ 1 and p ≥ 1".into()));
    }
    check_rho(rho)?;
    let mut out = Vec::with_capacity(n * p);
    if rho == 0.0 {
        out.extend((0..n * p).map(|_| rng.random::<f64>()));
        return Ok(out);
    }
    let rho_n = copula_normal_correlation(rho);
    let (shared, own) = (rho_n.sqrt(), (1.0 - rho_n).sqrt());
    for _ in 0..n {
        let common: f64 = rng.sample(StandardNormal);
        for _ in 0..p {
            let e: f64 = rng.sample(StandardNormal);
            out.push(normal_cdf(shared * common + own * e));
        }
    }
    Ok(out)
}

fn error_draw(df: f64, rng: &mut RandomStream) -> f64 {
    if df.is_infinite() {
        rng.sample(StandardNormal)
    } else {
        // df validated positive
        StudentT::new(df).expect("positive degrees of freedom").sample(rng)
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Draws a dataset from the scenario's true process. `n_override` replaces
/// the cell's sample size (evaluation and limit-sample draws).
pub fn generate(params: &ScenarioParams, n_override: Option<usize>, rng: &mut RandomStream) -> Result<Dataset> {
    params.validate()?;
    let n = n_override.unwrap_or(params.n);
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let (sigma, beta) = (params.sigma, params.beta);
    match params.design {
        ScenarioDesign::BoxCox { lambda } => {
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            let mut rejected = 0usize;
            for _ in 0..n {
                let xi: f64 = rng.random();
                let mean = ALPHA + beta * xi;
                let yi = loop {
                    let e: f64 = rng.sample(StandardNormal);
                    match boxcox::inverse(mean + sigma * e, lambda) {
                        Some(v) => break v,
                        None => rejected += 1,
                    }
                };
                x.push(xi);
                y.push(yi);
            }
            if rejected > 0 {
                log::debug!(
                    "{}: rejected {rejected} error draws outside the Box-Cox domain ({n} accepted)",
                    params.label()
                );
            }
            Dataset::new(x, 1, y, ResponseKind::Continuous)
        }
        ScenarioDesign::VarSel { p, rho } => {
            let design = correlated_uniform_design(n, p, rho, rng)?;
            let y = design
                .chunks_exact(p)
                .map(|row| {
                    let e: f64 = rng.sample(StandardNormal);
                    ALPHA + beta * row.iter().sum::<f64>() + sigma * e
                })
                .collect();
            Dataset::new(design, p, y, ResponseKind::Continuous)
        }
        ScenarioDesign::Outlier { df } => {
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let xi: f64 = rng.random();
                x.push(xi);
                y.push(ALPHA + beta * xi + sigma * error_draw(df, rng));
            }
            Dataset::new(x, 1, y, ResponseKind::Continuous)
        }
        ScenarioDesign::Binary { p } => {
            let mut design = Vec::with_capacity(n * p);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let start = design.len();
                design.extend((0..p).map(|_| rng.random::<f64>()));
                let e: f64 = rng.sample(StandardNormal);
                let eta = beta * design[start..].iter().sum::<f64>() + sigma * e;
                y.push(if rng.random::<f64>() < logistic(eta) { 1.0 } else { 0.0 });
            }
            Dataset::new(design, p, y, ResponseKind::Binary)
        }
    }
}
