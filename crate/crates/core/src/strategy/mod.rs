//! The four prediction strategies and their evaluation by log score.
//!
//! * FD: select and estimate on all of `Z`.
//! * SD: select on `Z₁`, estimate on `Z₂`.
//! * SAFE: select on `Z₁`, estimate on all of `Z`.
//! * VALID: select and estimate on `Z₁`, then re-estimate the error
//!   variance from the residuals on `Z₂`.

mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boxcox::LAMBDA_GRID;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{clipped_prob, logit_fit, FittedLogit, DEFAULT_MAX_ITER};
use crate::linmod::{ols_fit, ols_fit_boxcox, FittedLinearModel};
use crate::predictive::{bernoulli_score, boxcox_score, t_score, StandardT, SCALE_FLOOR, SCORE_CAP};
use crate::randgen::ScenarioKind;
use crate::select::{
    boxcox_select, outlier_prune, stepwise_aic, Family, ModelForm, SelectedModel, StepwiseStart, OUTLIER_THRESHOLD,
};

pub use crate::predictive::log_score;
pub use split::{split_data, Fraction, SplitPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "FD")]
    Fd,
    #[serde(rename = "SD")]
    Sd,
    #[serde(rename = "SAFE")]
    Safe,
    #[serde(rename = "VALID")]
    Valid,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Fd, Strategy::Sd, Strategy::Safe, Strategy::Valid];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Fd => "FD",
            Strategy::Sd => "SD",
            Strategy::Safe => "SAFE",
            Strategy::Valid => "VALID",
        }
    }

    /// Whether the strategy selects on `Z₁` rather than all of `Z`.
    pub fn selects_on_split(self) -> bool {
        self != Strategy::Fd
    }

    pub fn applies_to(self, kind: ScenarioKind) -> bool {
        !(self == Strategy::Valid && kind == ScenarioKind::Binary)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy '{s}'")))
    }
}

/// How an outlier-deletion decision made on `Z₁` carries over to estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierTransfer {
    /// The selection is the list of deleted `Z₁` cases. SD fits all of `Z₂`;
    /// SAFE fits the retained `Z₁` cases plus all of `Z₂`.
    #[default]
    CaseList,
    /// The selection is the deletion rule, re-run on whatever data is used
    /// for estimation.
    Reapply,
}

impl FromStr for OutlierTransfer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cases" => Ok(OutlierTransfer::CaseList),
            "reapply" => Ok(OutlierTransfer::Reapply),
            _ => Err(Error::InvalidParameter(format!(
                "outlier transfer must be 'cases' or 'reapply', got '{s}'"
            ))),
        }
    }
}

impl fmt::Display for OutlierTransfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutlierTransfer::CaseList => "cases",
            OutlierTransfer::Reapply => "reapply",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Include `y^(λ−1)` in Box-Cox predictive densities.
    pub jacobian: bool,
    pub stepwise_start: StepwiseStart,
    pub outlier_transfer: OutlierTransfer,
    pub lambda_grid: Vec<f64>,
    pub outlier_threshold: f64,
    pub logit_max_iter: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            jacobian: true,
            stepwise_start: StepwiseStart::Full,
            outlier_transfer: OutlierTransfer::CaseList,
            lambda_grid: LAMBDA_GRID.to_vec(),
            outlier_threshold: OUTLIER_THRESHOLD,
            logit_max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// A scenario's model-building procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub kind: ScenarioKind,
    pub options: AnalysisOptions,
}

impl Analysis {
    pub fn new(kind: ScenarioKind, options: AnalysisOptions) -> Self {
        Self { kind, options }
    }

    pub fn select(&self, data: &Dataset) -> Result<SelectedModel> {
        let all: Vec<usize> = (0..data.n_cols()).collect();
        match self.kind {
            ScenarioKind::BoxCox => boxcox_select(data, &self.options.lambda_grid),
            ScenarioKind::VarSel => stepwise_aic(data, Family::Linear, &all, self.options.stepwise_start),
            ScenarioKind::Binary => stepwise_aic(data, Family::Logistic, &all, self.options.stepwise_start),
            ScenarioKind::Outlier => outlier_prune(data, self.options.outlier_threshold),
        }
    }

    fn fit_columns(&self, lambda: Option<f64>, columns: &[usize], data: &Dataset) -> Result<Fitted> {
        match (self.kind, lambda) {
            (ScenarioKind::Binary, _) => logit_fit(data, columns, self.options.logit_max_iter).map(Fitted::Logit),
            (_, Some(l)) => ols_fit_boxcox(data, columns, l).map(|mut m| {
                m.jacobian = self.options.jacobian;
                Fitted::Linear(m)
            }),
            (_, None) => ols_fit(data, columns).map(Fitted::Linear),
        }
    }

    /// Fits model form `form` to `data`, falling back to the intercept-only
    /// model if the form cannot be fitted there.
    pub fn fit_form(&self, form: &ModelForm, data: &Dataset) -> Result<FittedPredictor> {
        let all: Vec<usize> = (0..data.n_cols()).collect();
        let (lambda, columns) = match form {
            ModelForm::Lambda(l) => (Some(*l), &all[..]),
            ModelForm::Columns(c) => (None, &c[..]),
            ModelForm::Fixed => (None, &all[..]),
        };
        match self.fit_columns(lambda, columns, data) {
            Ok(fitted) => Ok(FittedPredictor::new(fitted, false)),
            Err(Error::Unidentifiable(why)) => {
                log::trace!("falling back to intercept-only fit: {why}");
                let fitted = self.fit_columns(lambda, &[], data)?;
                Ok(FittedPredictor::new(fitted, true))
            }
            Err(e) => Err(e),
        }
    }

    /// Estimation step of `strategy` for a model form chosen elsewhere.
    /// This is also how a form is fitted to fresh data of matching size.
    pub fn estimate_form(
        &self,
        strategy: Strategy,
        form: &ModelForm,
        data: &Dataset,
        plan: &SplitPlan,
    ) -> Result<FittedPredictor> {
        match strategy {
            Strategy::Fd | Strategy::Safe => self.fit_form(form, data),
            Strategy::Sd => self.fit_form(form, &data.subset(&plan.estimation)),
            Strategy::Valid => {
                self.check_valid()?;
                let fit = self.fit_form(form, &data.subset(&plan.selection))?;
                rescale_on(fit, &data.subset(&plan.estimation))
            }
        }
    }

    fn check_valid(&self) -> Result<()> {
        if Strategy::Valid.applies_to(self.kind) {
            Ok(())
        } else {
            Err(Error::NotApplicable {
                strategy: Strategy::Valid.name(),
                scenario: self.kind.name(),
            })
        }
    }

    fn fit_cases(&self, data: &Dataset, cases: &[usize]) -> Result<FittedPredictor> {
        self.fit_form(&ModelForm::Fixed, &data.subset(cases))
    }

    fn pruned_fit(&self, data: &Dataset) -> Result<FittedPredictor> {
        match outlier_prune(data, self.options.outlier_threshold)? {
            SelectedModel::RetainedCases { retained, .. } => self.fit_cases(data, &retained),
            _ => unreachable!("outlier_prune returns retained cases"),
        }
    }

    /// Estimation step of `strategy` given the selection it made. `selected`
    /// was computed on `Z` for FD and on `Z₁` otherwise.
    pub fn estimate(
        &self,
        strategy: Strategy,
        selected: &SelectedModel,
        data: &Dataset,
        plan: &SplitPlan,
    ) -> Result<FittedPredictor> {
        let SelectedModel::RetainedCases { retained, .. } = selected else {
            return self.estimate_form(strategy, &selected.form(), data, plan);
        };
        let transfer = self.options.outlier_transfer;
        let in_z: Vec<usize> = if strategy.selects_on_split() {
            retained.iter().map(|&r| plan.selection[r]).collect()
        } else {
            retained.clone()
        };
        match (strategy, transfer) {
            (Strategy::Fd, _) => self.fit_cases(data, &in_z),
            (Strategy::Sd, OutlierTransfer::CaseList) => self.fit_cases(data, &plan.estimation),
            (Strategy::Sd, OutlierTransfer::Reapply) => self.pruned_fit(&data.subset(&plan.estimation)),
            (Strategy::Safe, OutlierTransfer::CaseList) => {
                let mut cases: Vec<usize> = in_z.into_iter().chain(plan.estimation.iter().copied()).collect();
                cases.sort_unstable();
                self.fit_cases(data, &cases)
            }
            (Strategy::Safe, OutlierTransfer::Reapply) => self.pruned_fit(data),
            (Strategy::Valid, _) => {
                let fit = self.fit_cases(data, &in_z)?;
                rescale_on(fit, &data.subset(&plan.estimation))
            }
        }
    }

    /// Runs `strategy` end to end: select on its selection data, then estimate.
    pub fn apply_strategy(&self, strategy: Strategy, data: &Dataset, plan: &SplitPlan) -> Result<PredictiveModel> {
        if strategy == Strategy::Valid {
            self.check_valid()?;
        }
        let selected = if strategy.selects_on_split() {
            self.select(&data.subset(&plan.selection))?
        } else {
            self.select(data)?
        };
        self.build(strategy, selected, data, plan)
    }

    /// Estimation half of [`Analysis::apply_strategy`], for a selection
    /// already made on the data the strategy selects on.
    pub fn build(
        &self,
        strategy: Strategy,
        selected: SelectedModel,
        data: &Dataset,
        plan: &SplitPlan,
    ) -> Result<PredictiveModel> {
        let predictor = self.estimate(strategy, &selected, data, plan)?;
        Ok(PredictiveModel {
            strategy,
            selected,
            predictor,
        })
    }
}

/// Replaces the error variance with `Σ e²/(m − 1)` over `holdout` residuals,
/// with `m − 1` degrees of freedom.
fn rescale_on(mut fit: FittedPredictor, holdout: &Dataset) -> Result<FittedPredictor> {
    let Fitted::Linear(model) = &mut fit.fitted else {
        return Err(Error::NotApplicable {
            strategy: Strategy::Valid.name(),
            scenario: "binary",
        });
    };
    let m = holdout.len();
    if m < 2 {
        return Err(Error::InvalidSplit("validation part needs at least two cases".into()));
    }
    let ss: f64 = model.residuals(holdout).iter().map(|e| e * e).sum();
    model.sigma2_hat = ss / (m - 1) as f64;
    model.df_resid = m - 1;
    fit.flags.sigma_floor = model.sigma2_hat.sqrt() < SCALE_FLOOR;
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Linear(FittedLinearModel),
    Logit(FittedLogit),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Degradation {
    /// Logistic fit did not converge (separation or iteration limit).
    pub separation: bool,
    /// Error variance estimate below the scoring floor.
    pub sigma_floor: bool,
    /// The chosen form was unfittable; an intercept-only model was used.
    pub fallback: bool,
}

/// A fitted model ready to produce predictive distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPredictor {
    pub fitted: Fitted,
    pub flags: Degradation,
}

impl FittedPredictor {
    fn new(fitted: Fitted, fallback: bool) -> Self {
        let flags = Degradation {
            separation: matches!(&fitted, Fitted::Logit(m) if !m.converged),
            sigma_floor: matches!(&fitted, Fitted::Linear(m) if m.sigma2_hat.sqrt() < SCALE_FLOOR),
            fallback,
        };
        Self { fitted, flags }
    }

    pub fn predict(&self, x: &[f64]) -> crate::predictive::PredictiveDistribution {
        match &self.fitted {
            Fitted::Linear(m) => crate::linmod::predict_dist(m, x),
            Fitted::Logit(m) => crate::glm::predict_prob(m, x),
        }
    }

    /// Log scores of every case in `eval`, in order.
    pub fn scores(&self, eval: &Dataset) -> Vec<f64> {
        match &self.fitted {
            Fitted::Linear(m) => {
                let t = StandardT::new(m.df_resid as f64);
                let mut buf = Vec::with_capacity(m.coefficients.len());
                (0..eval.len())
                    .map(|i| {
                        let (mu, h) = m.mean_and_leverage(eval.row(i), &mut buf);
                        let scale = (m.sigma2_hat * (1.0 + h)).sqrt();
                        match m.lambda {
                            Some(l) => boxcox_score(&t, mu, scale, l, m.jacobian, eval.y(i)),
                            None => t_score(&t, mu, scale, eval.y(i)),
                        }
                    })
                    .collect()
            }
            Fitted::Logit(m) => (0..eval.len())
                .map(|i| bernoulli_score(clipped_prob(m.linear_predictor(eval.row(i))), eval.y(i)))
                .collect(),
        }
    }

    /// Mean log score over `eval` and the number of capped scores.
    pub fn mean_score(&self, eval: &Dataset) -> Result<(f64, usize)> {
        if eval.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        let scores = self.scores(eval);
        let capped = scores.iter().filter(|&&s| s >= SCORE_CAP).count();
        Ok((scores.iter().sum::<f64>() / scores.len() as f64, capped))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveModel {
    pub strategy: Strategy,
    pub selected: SelectedModel,
    pub predictor: FittedPredictor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub mean_score: f64,
    pub eval_count: usize,
    pub cap_hits: usize,
    pub flags: Degradation,
}

pub fn evaluate(model: &PredictiveModel, eval: &Dataset) -> Result<StrategyResult> {
    let (mean_score, cap_hits) = model.predictor.mean_score(eval)?;
    Ok(StrategyResult {
        strategy: model.strategy,
        mean_score,
        eval_count: eval.len(),
        cap_hits,
        flags: model.predictor.flags,
    })
}
