//! Model selection: Box-Cox index choice, stepwise AIC, and iterative
//! outlier deletion.

use std::fmt;
use std::str::FromStr;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{logit_aic, logit_fit, DEFAULT_MAX_ITER};
use crate::linalg::CrossProducts;
use crate::linmod::{aic_from_sse, boxcox_profile_loglik, ols_fit, studentized_residuals};

pub const OUTLIER_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Linear,
    Logistic,
}

/// Model the stepwise search starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepwiseStart {
    #[default]
    Full,
    Null,
}

impl FromStr for StepwiseStart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(StepwiseStart::Full),
            "null" => Ok(StepwiseStart::Null),
            _ => Err(Error::InvalidParameter(format!(
                "stepwise start must be 'full' or 'null', got '{s}'"
            ))),
        }
    }
}

impl fmt::Display for StepwiseStart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepwiseStart::Full => "full",
            StepwiseStart::Null => "null",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMove {
    Add(usize),
    Drop(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub mv: StepMove,
    /// AIC of the model after the move.
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectedModel {
    BoxCoxLambda {
        lambda: f64,
        /// `(λ, profile log-likelihood)` for every grid value.
        profile: Vec<(f64, f64)>,
    },
    VariableSubset {
        columns: Vec<usize>,
        start: Vec<usize>,
        start_aic: f64,
        trace: Vec<Step>,
        /// The requested full-model start was unfittable; the search began
        /// from the intercept-only model instead.
        degenerate_start: bool,
    },
    RetainedCases {
        retained: Vec<usize>,
        passes: usize,
    },
}

impl SelectedModel {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            SelectedModel::BoxCoxLambda { lambda, .. } => Some(*lambda),
            _ => None,
        }
    }

    pub fn columns(&self) -> Option<&[usize]> {
        match self {
            SelectedModel::VariableSubset { columns, .. } => Some(columns),
            _ => None,
        }
    }

    pub fn retained(&self) -> Option<&[usize]> {
        match self {
            SelectedModel::RetainedCases { retained, .. } => Some(retained),
            _ => None,
        }
    }
}

/// What a selection decided, stripped of the data it was made on. Two
/// replications that select the same form fall in the same bin.
#[derive(Debug, Clone)]
pub enum ModelForm {
    Lambda(f64),
    Columns(Vec<usize>),
    /// The regression form is fixed; only the cases used vary.
    Fixed,
}

impl ModelForm {
    fn rank(&self) -> u8 {
        match self {
            ModelForm::Lambda(_) => 0,
            ModelForm::Columns(_) => 1,
            ModelForm::Fixed => 2,
        }
    }
}

impl PartialEq for ModelForm {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for ModelForm {}

impl PartialOrd for ModelForm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ModelForm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (ModelForm::Lambda(a), ModelForm::Lambda(b)) => a.total_cmp(b),
            (ModelForm::Columns(a), ModelForm::Columns(b)) => a.len().cmp(&b.len()).then_with(|| a.cmp(b)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for ModelForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelForm::Lambda(l) => write!(f, "lambda={l}"),
            ModelForm::Columns(c) => {
                let names: Vec<String> = c.iter().map(|j| format!("x{}", j + 1)).collect();
                write!(f, "{{{}}}", names.join(","))
            }
            ModelForm::Fixed => f.write_str("fixed"),
        }
    }
}

impl SelectedModel {
    pub fn form(&self) -> ModelForm {
        match self {
            SelectedModel::BoxCoxLambda { lambda, .. } => ModelForm::Lambda(*lambda),
            SelectedModel::VariableSubset { columns, .. } => ModelForm::Columns(columns.clone()),
            SelectedModel::RetainedCases { .. } => ModelForm::Fixed,
        }
    }
}

/// Grid value with the largest score. Ties (relative 1e-12) go to the value
/// nearest 1, then to the larger value.
pub fn pick_lambda(profile: &[(f64, f64)]) -> Option<f64> {
    let max = profile.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * max.abs().max(1.0);
    profile
        .iter()
        .filter(|p| p.1 >= max - tol)
        .min_by(|a, b| {
            let da = (a.0 - 1.0).abs();
            let db = (b.0 - 1.0).abs();
            da.total_cmp(&db).then(b.0.total_cmp(&a.0))
        })
        .map(|p| p.0)
}

/// Chooses λ from `grid` by maximizing the Box-Cox profile likelihood of a
/// regression on all covariates.
pub fn boxcox_select(data: &Dataset, grid: &[f64]) -> Result<SelectedModel> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    let columns: Vec<usize> = (0..data.n_cols()).collect();
    let profile = grid
        .iter()
        .map(|&l| boxcox_profile_loglik(l, data, &columns).map(|v| (l, v)))
        .collect::<Result<Vec<_>>>()?;
    let lambda = pick_lambda(&profile).expect("non-empty grid");
    Ok(SelectedModel::BoxCoxLambda { lambda, profile })
}

enum Scorer<'a> {
    Linear { cp: CrossProducts, n: usize },
    Logistic { data: &'a Dataset },
}

impl Scorer<'_> {
    fn aic(&self, cols: &[usize]) -> Option<f64> {
        match self {
            Scorer::Linear { cp, n } => {
                if *n < cols.len() + 2 {
                    return None;
                }
                cp.sse(cols).map(|sse| aic_from_sse(sse, *n, cols.len() + 1))
            }
            Scorer::Logistic { data } => logit_fit(data, cols, DEFAULT_MAX_ITER).ok().map(|m| logit_aic(&m)),
        }
    }
}

/// AIC of `cols` under `family`, as used by the stepwise search.
pub fn subset_aic(data: &Dataset, family: Family, cols: &[usize]) -> Option<f64> {
    scorer(data, family).aic(cols)
}

fn scorer(data: &Dataset, family: Family) -> Scorer<'_> {
    match family {
        Family::Linear => Scorer::Linear {
            cp: CrossProducts::new((0..data.len()).map(|i| (data.row(i), data.y(i))), data.n_cols()),
            n: data.len(),
        },
        Family::Logistic => Scorer::Logistic { data },
    }
}

fn apply_move(cols: &[usize], mv: StepMove) -> Vec<usize> {
    match mv {
        StepMove::Drop(c) => cols.iter().copied().filter(|&x| x != c).collect(),
        StepMove::Add(c) => {
            let mut v = cols.to_vec();
            let pos = v.partition_point(|&x| x < c);
            v.insert(pos, c);
            v
        }
    }
}

/// Replays a stepwise trace from its starting subset.
pub fn replay_trace(start: &[usize], trace: &[Step]) -> Vec<usize> {
    trace.iter().fold(start.to_vec(), |cols, s| apply_move(&cols, s.mv))
}

/// Greedy both-direction AIC search over `scope`.
///
/// Each step evaluates every single-column drop and every addition from
/// `scope`, and takes the lowest-AIC move. An addition must lower the AIC;
/// a drop is also taken on a tie, so ties resolve toward the smaller model.
pub fn stepwise_aic(data: &Dataset, family: Family, scope: &[usize], start: StepwiseStart) -> Result<SelectedModel> {
    let mut scope = scope.to_vec();
    scope.sort_unstable();
    scope.dedup();
    if scope.last().is_some_and(|&c| c >= data.n_cols()) {
        return Err(Error::InvalidParameter("scope column out of range".into()));
    }
    let scorer = scorer(data, family);

    let (mut current, mut current_aic, degenerate_start) = match start {
        StepwiseStart::Full => match scorer.aic(&scope) {
            Some(a) => (scope.clone(), a, false),
            None => (Vec::new(), f64::NAN, true),
        },
        StepwiseStart::Null => (Vec::new(), f64::NAN, false),
    };
    if current.is_empty() {
        current_aic = scorer
            .aic(&current)
            .ok_or_else(|| Error::Unidentifiable("intercept-only model cannot be fitted".into()))?;
    }
    let start_cols = current.clone();
    let start_aic = current_aic;
    let mut trace = Vec::new();

    loop {
        let tol = if current_aic.is_finite() {
            1e-9 * current_aic.abs().max(1.0)
        } else {
            0.0
        };
        let mut best: Option<(f64, StepMove)> = None;
        let mut best_drop: Option<(f64, StepMove)> = None;
        let candidates = current
            .iter()
            .map(|&c| StepMove::Drop(c))
            .chain(scope.iter().filter(|c| !current.contains(c)).map(|&c| StepMove::Add(c)));
        for mv in candidates {
            let Some(aic) = scorer.aic(&apply_move(&current, mv)) else {
                continue;
            };
            if best.is_none_or(|(b, _)| aic < b) {
                best = Some((aic, mv));
            }
            if matches!(mv, StepMove::Drop(_)) && best_drop.is_none_or(|(b, _)| aic < b) {
                best_drop = Some((aic, mv));
            }
        }
        let chosen = match (best, best_drop) {
            (Some((aic, mv)), _) if aic < current_aic - tol => Some((aic, mv)),
            (_, Some((aic, mv))) if aic <= current_aic + tol => Some((aic, mv)),
            _ => None,
        };
        let Some((aic, mv)) = chosen else { break };
        current = apply_move(&current, mv);
        current_aic = aic;
        trace.push(Step { mv, aic });
    }

    Ok(SelectedModel::VariableSubset {
        columns: current,
        start: start_cols,
        start_aic,
        trace,
        degenerate_start,
    })
}

/// Repeatedly fits OLS on the retained cases and deletes every case whose
/// externally studentized residual exceeds `threshold` in magnitude.
///
/// Stops when no residual exceeds the threshold, or when deleting the
/// flagged cases would leave fewer than `k + 2` cases.
pub fn outlier_prune(data: &Dataset, threshold: f64) -> Result<SelectedModel> {
    let columns: Vec<usize> = (0..data.n_cols()).collect();
    let min_fit = columns.len() + 2;
    let mut retained: Vec<usize> = (0..data.len()).collect();
    let mut passes = 0;
    loop {
        // Externally studentized residuals need one case beyond the minimum fit.
        if retained.len() < min_fit + 1 {
            if passes == 0 {
                return Err(Error::Unidentifiable(format!(
                    "{} cases are too few for outlier screening",
                    retained.len()
                )));
            }
            break;
        }
        passes += 1;
        let subset = data.subset(&retained);
        let model = match ols_fit(&subset, &columns) {
            Ok(m) => m,
            Err(e) if passes == 1 => return Err(e),
            Err(_) => break,
        };
        let r = studentized_residuals(&model, &subset)?;
        let keep: Vec<usize> = retained
            .iter()
            .zip(&r)
            .filter(|(_, ri)| ri.abs() <= threshold)
            .map(|(&i, _)| i)
            .collect();
        if keep.len() == retained.len() || keep.len() < min_fit {
            break;
        }
        retained = keep;
    }
    Ok(SelectedModel::RetainedCases { retained, passes })
}
