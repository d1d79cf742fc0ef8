//! Factorial experiment runner: replications, aggregation and output.

mod cells;
mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::decomp::{assemble, fresh_score, mean_se, DecompositionEstimate, LimitReference, ReplicationTerms};
use crate::error::{Error, Result};
use crate::randgen::{generate, ScenarioKind};
use crate::rng::{derive_seed, make_stream, Purpose, StreamKey};
use crate::select::ModelForm;
use crate::strategy::{evaluate, split_data, Analysis, AnalysisOptions, SplitPlan, Strategy, StrategyResult};

pub use cells::{enumerate_cells, ScenarioCell, FRACTIONS};
pub use output::{
    read_results, report_differences, write_decompositions, write_results, DecompRow, DifferenceRow, DifferenceTable,
    ResultRow,
};

/// Environment variable that overrides the default worker count.
pub const WORKERS_ENV: &str = "DATASPLIT_WORKERS";

/// Named replication/evaluation sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// 500 replications, 1000 evaluation draws.
    Desk,
    /// 4000 replications, 4000 evaluation draws.
    #[default]
    Full,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            _ => Err(Error::InvalidParameter(format!(
                "profile must be 'desk' or 'full', got '{s}'"
            ))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Full => "full",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_rep: usize,
    pub n_eval: usize,
    /// Size of the large sample standing in for unlimited data.
    pub n_inf: usize,
    pub master_seed: u64,
    /// `None` defers to [`WORKERS_ENV`], then to the available cores.
    pub workers: Option<usize>,
    pub scenarios: Vec<ScenarioKind>,
    /// Keep only cells whose id contains this string.
    pub cell_filter: Option<String>,
    pub strategies: Vec<Strategy>,
    /// Strategies to decompose. Empty for a plain run.
    pub decompose: Vec<Strategy>,
    /// Replications whose fresh samples feed the pooled estimation cost;
    /// 0 turns pooling off.
    pub pooled_cap: usize,
    pub options: AnalysisOptions,
}

impl RunConfig {
    pub fn profile(profile: Profile) -> Self {
        let (n_rep, n_eval) = match profile {
            Profile::Desk => (500, 1000),
            Profile::Full => (4000, 4000),
        };
        Self {
            n_rep,
            n_eval,
            n_inf: 10_000,
            master_seed: 20_240_601,
            workers: None,
            scenarios: ScenarioKind::ALL.to_vec(),
            cell_filter: None,
            strategies: Strategy::ALL.to_vec(),
            decompose: Vec::new(),
            pooled_cap: 20,
            options: AnalysisOptions::default(),
        }
    }

    pub fn desk() -> Self {
        Self::profile(Profile::Desk)
    }

    pub fn full() -> Self {
        Self::profile(Profile::Full)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rep == 0 || self.n_eval == 0 || self.n_inf == 0 {
            return Err(Error::InvalidParameter(
                "replication, evaluation and limit sizes must be positive".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("worker count must be positive".into()));
        }
        if self.strategies.is_empty() && self.decompose.is_empty() {
            return Err(Error::InvalidParameter("no strategies requested".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::InvalidParameter("no scenarios requested".into()));
        }
        Ok(())
    }

    pub fn worker_count(&self) -> Result<usize> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(w) if w > 0 => Ok(w),
                _ => Err(Error::InvalidParameter(format!(
                    "{WORKERS_ENV} must be a positive integer, got '{v}'"
                ))),
            },
            Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }

    /// Cells selected by the scenario and cell filters, in canonical order.
    pub fn cells(&self) -> Vec<ScenarioCell> {
        self.scenarios
            .iter()
            .flat_map(|&k| enumerate_cells(k))
            .filter(|c| self.cell_filter.as_deref().is_none_or(|f| c.cell_id.contains(f)))
            .collect()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::full()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub cell: ScenarioCell,
    pub rows: Vec<ResultRow>,
    pub decompositions: Vec<DecompositionEstimate>,
    /// More than half the replications needed an intercept-only fallback.
    pub unreliable: bool,
}

struct CellContext<'a> {
    cell: &'a ScenarioCell,
    seed: u64,
    analysis: Analysis,
    n_eval: usize,
    /// Every strategy that has to be fitted, in a fixed order.
    fitted: Vec<Strategy>,
    decompose: Vec<Strategy>,
}

struct Replication {
    train: Dataset,
    eval: Dataset,
    plan: SplitPlan,
}

/// Observed and fresh-sample scores; the limit terms come in a second pass.
struct FirstPass {
    form: ModelForm,
    observed: f64,
    fresh: f64,
    fresh_fallback: bool,
}

struct RepOutcome {
    results: Vec<StrategyResult>,
    terms: Vec<FirstPass>,
}

/// Second-pass output for one replication and decomposed strategy.
struct LimitPass {
    limit: f64,
    limit_best: f64,
    /// `g(Z^F, M) − g∞(M)` for each form of the strategy, when pooled.
    pooled: Option<Vec<f64>>,
}

impl CellContext<'_> {
    fn stream(&self, rep: u64, purpose: Purpose) -> crate::rng::RandomStream {
        make_stream(StreamKey::new(self.seed, rep, purpose))
    }

    fn replication(&self, rep: u64) -> Result<Replication> {
        let params = &self.cell.params;
        Ok(Replication {
            train: generate(params, None, &mut self.stream(rep, Purpose::TrainData))?,
            eval: generate(params, Some(self.n_eval), &mut self.stream(rep, Purpose::EvalData))?,
            plan: split_data(
                params.n,
                self.cell.fraction,
                &mut self.stream(rep, Purpose::SplitPermutation),
            )?,
        })
    }

    fn fresh(&self, rep: u64) -> Result<Dataset> {
        generate(&self.cell.params, None, &mut self.stream(rep, Purpose::FreshData))
    }

    fn run(&self, rep: u64) -> Result<RepOutcome> {
        let r = self.replication(rep)?;
        let fresh = if self.decompose.is_empty() {
            None
        } else {
            Some(self.fresh(rep)?)
        };
        let mut results = Vec::with_capacity(self.fitted.len());
        let mut terms = Vec::with_capacity(self.decompose.len());
        // SD, SAFE and VALID select on the same Z₁; do it once.
        let mut split_selection = None;
        for &s in &self.fitted {
            let selected = if s.selects_on_split() {
                if split_selection.is_none() {
                    split_selection = Some(self.analysis.select(&r.train.subset(&r.plan.selection))?);
                }
                split_selection.clone().expect("set above")
            } else {
                self.analysis.select(&r.train)?
            };
            let model = self.analysis.build(s, selected, &r.train, &r.plan)?;
            let result = evaluate(&model, &r.eval)?;
            if let Some(fresh) = fresh.as_ref().filter(|_| self.decompose.contains(&s)) {
                let form = model.selected.form();
                let (g, fallback) = fresh_score(&self.analysis, s, &form, fresh, &r.plan, &r.eval)?;
                terms.push(FirstPass {
                    form,
                    observed: result.mean_score,
                    fresh: g,
                    fresh_fallback: fallback,
                });
            }
            results.push(result);
        }
        Ok(RepOutcome { results, terms })
    }

    /// Limit-sample scores on replication `rep`'s evaluation sample, plus
    /// the pooled fresh-minus-limit terms of every form in `forms[k]` when
    /// `pool` is set.
    fn limit_pass(
        &self,
        rep: u64,
        first: &RepOutcome,
        limit: &LimitReference,
        forms: &[Vec<ModelForm>],
        pool: bool,
    ) -> Result<Vec<LimitPass>> {
        let r = self.replication(rep)?;
        let best = limit.best_score(&r.eval)?;
        let fresh = if pool { Some(self.fresh(rep)?) } else { None };
        // Limit fits do not depend on the strategy; score each form once.
        let mut g_inf: BTreeMap<&ModelForm, f64> = BTreeMap::new();
        let wanted = first
            .terms
            .iter()
            .map(|t| &t.form)
            .chain(forms.iter().flatten().filter(|_| pool));
        for f in wanted {
            if !g_inf.contains_key(f) {
                g_inf.insert(f, limit.score(f, &r.eval)?);
            }
        }
        self.decompose
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let pooled = match &fresh {
                    Some(fresh) => Some(
                        forms[k]
                            .iter()
                            .map(|f| Ok(fresh_score(&self.analysis, s, f, fresh, &r.plan, &r.eval)?.0 - g_inf[f]))
                            .collect::<Result<_>>()?,
                    ),
                    None => None,
                };
                Ok(LimitPass {
                    limit: g_inf[&first.terms[k].form],
                    limit_best: best,
                    pooled,
                })
            })
            .collect()
    }
}

/// Runs every replication of `cell`. Parallelism comes from the enclosing
/// rayon pool; results do not depend on it.
pub fn run_cell(cell: &ScenarioCell, config: &RunConfig) -> Result<CellOutcome> {
    config.validate()?;
    let kind = cell.params.kind();
    let applicable = |s: &&Strategy| s.applies_to(kind);
    let reported: Vec<Strategy> = config.strategies.iter().filter(applicable).copied().collect();
    let wanted = config.decompose.iter().filter(applicable);
    let fitted: Vec<Strategy> = reported
        .iter()
        .chain(wanted)
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // Same order as `fitted`, which is the order terms are produced in.
    let decompose: Vec<Strategy> = fitted
        .iter()
        .filter(|s| config.decompose.contains(s))
        .copied()
        .collect();
    let ctx = CellContext {
        cell,
        seed: derive_seed(config.master_seed, &cell.params.label()),
        analysis: Analysis::new(kind, config.options.clone()),
        n_eval: config.n_eval,
        fitted,
        decompose,
    };
    log::debug!("cell {}: {} replications", cell.cell_id, config.n_rep);

    let reps: Vec<RepOutcome> = (0..config.n_rep as u64)
        .into_par_iter()
        .map(|j| ctx.run(j))
        .collect::<Result<_>>()?;

    let fallback_reps = reps
        .iter()
        .filter(|r| r.results.iter().any(|x| x.flags.fallback))
        .count();
    let unreliable = 2 * fallback_reps > reps.len();
    if unreliable {
        log::warn!(
            "cell {} unreliable: {fallback_reps} of {} replications fell back",
            cell.cell_id,
            reps.len()
        );
    }

    let column = |s: Strategy| ctx.fitted.iter().position(|&x| x == s);
    let fd = column(Strategy::Fd);
    let rows = reported
        .iter()
        .map(|&s| {
            let k = column(s).expect("reported strategies are fitted");
            let results: Vec<&StrategyResult> = reps.iter().map(|r| &r.results[k]).collect();
            let scores: Vec<f64> = results.iter().map(|r| r.mean_score).collect();
            let (mean_score, se) = mean_se(&scores);
            let (diff_fd, diff_fd_se) = match fd {
                Some(f) => {
                    let diffs: Vec<f64> = reps
                        .iter()
                        .map(|r| r.results[f].mean_score - r.results[k].mean_score)
                        .collect();
                    let (d, e) = mean_se(&diffs);
                    (Some(d), Some(e))
                }
                None => (None, None),
            };
            let count = |p: fn(&StrategyResult) -> bool| results.iter().filter(|r| p(r)).count();
            ResultRow {
                mean_score,
                se,
                diff_fd,
                diff_fd_se,
                n_rep: reps.len(),
                separation: count(|r| r.flags.separation),
                sigma_floor: count(|r| r.flags.sigma_floor),
                fallback: count(|r| r.flags.fallback),
                cap_hits: results.iter().map(|r| r.cap_hits).sum(),
                unreliable,
                ..ResultRow::new(cell, s)
            }
        })
        .collect();

    let decompositions = if ctx.decompose.is_empty() {
        Vec::new()
    } else {
        decompose_cell(&ctx, config, &reps)?
    };

    Ok(CellOutcome {
        cell: cell.clone(),
        rows,
        decompositions,
        unreliable,
    })
}

fn decompose_cell(ctx: &CellContext, config: &RunConfig, reps: &[RepOutcome]) -> Result<Vec<DecompositionEstimate>> {
    let z_inf = generate(
        &ctx.cell.params,
        Some(config.n_inf),
        &mut ctx.stream(0, Purpose::LimitData),
    )?;
    let forms: Vec<Vec<ModelForm>> = (0..ctx.decompose.len())
        .map(|k| {
            reps.iter()
                .map(|r| r.terms[k].form.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();
    let limit = LimitReference::new(&ctx.analysis, &z_inf, forms.iter().flatten())?;
    drop(z_inf);

    let n_pool = config.pooled_cap.min(reps.len());
    let second: Vec<Vec<LimitPass>> = reps
        .par_iter()
        .enumerate()
        .map(|(j, r)| ctx.limit_pass(j as u64, r, &limit, &forms, j < n_pool))
        .collect::<Result<_>>()?;

    ctx.decompose
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let terms: Vec<ReplicationTerms> = reps
                .iter()
                .zip(&second)
                .map(|(r, l)| {
                    let first = &r.terms[k];
                    ReplicationTerms {
                        form: first.form.clone(),
                        observed: first.observed,
                        fresh: first.fresh,
                        limit: l[k].limit,
                        limit_best: l[k].limit_best,
                        fresh_fallback: first.fresh_fallback,
                    }
                })
                .collect();
            let pooled: Option<BTreeMap<ModelForm, f64>> = (n_pool > 0).then(|| {
                forms[k]
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        let sum: f64 = second[..n_pool]
                            .iter()
                            .map(|l| l[k].pooled.as_ref().expect("pooled replication")[i])
                            .sum();
                        (f.clone(), sum / n_pool as f64)
                    })
                    .collect()
            });
            assemble(s, &terms, &limit.best_form, pooled.as_ref())
        })
        .collect()
}

/// Runs every selected cell on a pool of the configured size.
pub fn run(config: &RunConfig) -> Result<Vec<CellOutcome>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count()?)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let cells = config.cells();
    if cells.is_empty() {
        return Err(Error::InvalidParameter("no cells match the filters".into()));
    }
    pool.install(|| {
        cells
            .iter()
            .map(|c| {
                log::info!("running {}", c.cell_id);
                run_cell(c, config)
            })
            .collect()
    })
}
