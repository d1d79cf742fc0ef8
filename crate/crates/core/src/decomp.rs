//! Monte Carlo decomposition of a strategy's expected score into the best
//! attainable score plus model selection, parameter estimation and data
//! reuse costs.
//!
//! For replication `j` with selected form `Mⱼ`, every score below is taken
//! on that replication's evaluation sample:
//!
//! ```text
//! observedⱼ = g∞(M*) + [g∞(Mⱼ) − g∞(M*)] + [gFⱼ − g∞(Mⱼ)] + [observedⱼ − gFⱼ]
//! ```
//!
//! `g∞(M)` scores form `M` fitted on a very large sample and `gFⱼ` scores
//! `Mⱼ` fitted (by the same strategy) on a fresh sample the size of the
//! training data. Averaging the brackets gives the matched-weighting
//! estimate, whose components sum to the mean observed score exactly.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::select::ModelForm;
use crate::strategy::{Analysis, FittedPredictor, SplitPlan, Strategy};

/// What one replication contributes for one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationTerms {
    pub form: ModelForm,
    pub observed: f64,
    /// `g(Z^F, Mⱼ)`.
    pub fresh: f64,
    /// `g∞(Mⱼ)`.
    pub limit: f64,
    /// `g∞(M*)`.
    pub limit_best: f64,
    pub fresh_fallback: bool,
}

/// Scores `form` fitted by `strategy` on `fresh` (split by `plan`) against
/// `eval`.
pub fn fresh_score(
    analysis: &Analysis,
    strategy: Strategy,
    form: &ModelForm,
    fresh: &Dataset,
    plan: &SplitPlan,
    eval: &Dataset,
) -> Result<(f64, bool)> {
    let fit = analysis.estimate_form(strategy, form, fresh, plan)?;
    Ok((fit.mean_score(eval)?.0, fit.flags.fallback))
}

/// The large-sample side: `M* = S(Z∞)` and each needed form fitted on `Z∞`.
#[derive(Debug, Clone)]
pub struct LimitReference {
    pub best_form: ModelForm,
    fits: BTreeMap<ModelForm, FittedPredictor>,
}

impl LimitReference {
    /// Selects on `z_inf` and fits `M*` plus every form in `forms` there.
    pub fn new<'a>(
        analysis: &Analysis,
        z_inf: &Dataset,
        forms: impl IntoIterator<Item = &'a ModelForm>,
    ) -> Result<Self> {
        let best_form = analysis.select(z_inf)?.form();
        let mut wanted: BTreeSet<ModelForm> = forms.into_iter().cloned().collect();
        wanted.insert(best_form.clone());
        let fits = wanted
            .into_par_iter()
            .map(|f| analysis.fit_form(&f, z_inf).map(|fit| (f, fit)))
            .collect::<Result<_>>()?;
        Ok(Self { best_form, fits })
    }

    /// `g∞(form)` on `eval`.
    pub fn score(&self, form: &ModelForm, eval: &Dataset) -> Result<f64> {
        let fit = self
            .fits
            .get(form)
            .ok_or_else(|| Error::InvalidParameter(format!("form {form} was not fitted on the limit sample")))?;
        Ok(fit.mean_score(eval)?.0)
    }

    pub fn best_score(&self, eval: &Dataset) -> Result<f64> {
        self.score(&self.best_form, eval)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionEstimate {
    pub strategy: Strategy,
    pub n_rep: usize,
    pub mean_score: f64,
    pub best_form: ModelForm,
    /// `g∞(M*)`.
    pub best_score: f64,
    pub best_se: f64,
    pub selection_cost: f64,
    pub selection_se: f64,
    pub estimation_cost: f64,
    pub estimation_se: f64,
    pub reuse_cost: f64,
    pub reuse_se: f64,
    /// Estimation cost with `g(Z^F, Mᵢ) − g∞(Mᵢ)` averaged over the fresh
    /// samples of every pooled replication, not only those that selected
    /// `Mᵢ`, then weighted by the selection probabilities.
    pub pooled_estimation_cost: Option<f64>,
    /// `mean_score` minus the other three components under pooling.
    pub pooled_reuse_cost: Option<f64>,
    pub selection_probs: BTreeMap<ModelForm, f64>,
    /// Replications whose fresh-sample fit fell back to intercept only.
    pub fresh_fallbacks: usize,
}

impl DecompositionEstimate {
    pub fn component_sum(&self) -> f64 {
        self.best_score + self.selection_cost + self.estimation_cost + self.reuse_cost
    }
}

/// Mean and standard error of the mean (`NaN` for a single value).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Combines per-replication terms. `pooled`, when given, maps every form in
/// `terms` to its pooled `g(Z^F, M) − g∞(M)`.
pub fn assemble(
    strategy: Strategy,
    terms: &[ReplicationTerms],
    best_form: &ModelForm,
    pooled: Option<&BTreeMap<ModelForm, f64>>,
) -> Result<DecompositionEstimate> {
    if terms.is_empty() {
        return Err(Error::InvalidParameter(
            "decomposition needs at least one replication".into(),
        ));
    }
    let n = terms.len();
    let mut best = Vec::with_capacity(n);
    let mut sel = Vec::with_capacity(n);
    let mut est = Vec::with_capacity(n);
    let mut reuse = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    let mut counts: BTreeMap<ModelForm, usize> = BTreeMap::new();
    for t in terms {
        best.push(t.limit_best);
        // Exactly zero when the replication picked M* itself.
        sel.push(if &t.form == best_form {
            0.0
        } else {
            t.limit - t.limit_best
        });
        est.push(t.fresh - t.limit);
        reuse.push(t.observed - t.fresh);
        observed.push(t.observed);
        *counts.entry(t.form.clone()).or_default() += 1;
    }
    let selection_probs: BTreeMap<ModelForm, f64> = counts
        .into_iter()
        .map(|(form, c)| (form, c as f64 / n as f64))
        .collect();
    let (mean_score, _) = mean_se(&observed);
    let (best_score, best_se) = mean_se(&best);
    let (selection_cost, selection_se) = mean_se(&sel);
    let (estimation_cost, estimation_se) = mean_se(&est);
    let (reuse_cost, reuse_se) = mean_se(&reuse);

    let (pooled_estimation_cost, pooled_reuse_cost) = match pooled {
        Some(pooled) => {
            let mut cost = 0.0;
            for (form, p) in &selection_probs {
                let c = pooled
                    .get(form)
                    .ok_or_else(|| Error::InvalidParameter(format!("no pooled fresh score for {form}")))?;
                cost += p * c;
            }
            (Some(cost), Some(mean_score - best_score - selection_cost - cost))
        }
        None => (None, None),
    };

    Ok(DecompositionEstimate {
        strategy,
        n_rep: n,
        mean_score,
        best_form: best_form.clone(),
        best_score,
        best_se,
        selection_cost,
        selection_se,
        estimation_cost,
        estimation_se,
        reuse_cost,
        reuse_se,
        pooled_estimation_cost,
        pooled_reuse_cost,
        selection_probs,
        fresh_fallbacks: terms.iter().filter(|t| t.fresh_fallback).count(),
    })
}

/// Each cost as a share of the three-cost total. Shares may fall outside
/// [0, 1] when a component estimate is negative.
pub fn reuse_share(d: &DecompositionEstimate) -> Result<(f64, f64, f64)> {
    let total = d.selection_cost + d.estimation_cost + d.reuse_cost;
    if total == 0.0 || !total.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cost total {total} cannot be apportioned"
        )));
    }
    Ok((
        d.selection_cost / total,
        d.estimation_cost / total,
        d.reuse_cost / total,
    ))
}

/// Runs `cell` under `config` with `strategy` decomposed.
pub fn estimate_decomposition(
    cell: &crate::harness::ScenarioCell,
    strategy: Strategy,
    config: &crate::harness::RunConfig,
) -> Result<DecompositionEstimate> {
    let config = crate::harness::RunConfig {
        strategies: vec![strategy],
        decompose: vec![strategy],
        ..config.clone()
    };
    let outcome = crate::harness::run_cell(cell, &config)?;
    outcome.decompositions.into_iter().next().ok_or(Error::NotApplicable {
        strategy: strategy.name(),
        scenario: cell.params.kind().name(),
    })
}
