//! CSV rows for runs and decompositions, and the FD difference report.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ScenarioCell;
use crate::decomp::{reuse_share, DecompositionEstimate};
use crate::error::Result;
use crate::randgen::ScenarioKind;
use crate::strategy::Strategy;

/// One (cell, strategy) summary. Factors that do not apply to the scenario
/// are left empty; `df` is written as `inf` for normal errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: ScenarioKind,
    pub cell_id: String,
    pub n: usize,
    pub sigma: f64,
    pub beta: f64,
    pub lambda: Option<f64>,
    pub p: Option<usize>,
    pub rho: Option<f64>,
    pub df: Option<String>,
    pub f: String,
    pub strategy: Strategy,
    pub mean_score: f64,
    pub se: f64,
    /// Paired mean of `score(FD) − score(strategy)`; empty without FD.
    pub diff_fd: Option<f64>,
    pub diff_fd_se: Option<f64>,
    pub n_rep: usize,
    pub separation: usize,
    pub sigma_floor: usize,
    pub fallback: usize,
    pub cap_hits: usize,
    pub unreliable: bool,
}

fn p_factor(cell: &ScenarioCell) -> Option<usize> {
    matches!(cell.params.kind(), ScenarioKind::VarSel | ScenarioKind::Binary).then(|| cell.params.n_predictors())
}

impl ResultRow {
    /// Row carrying `cell`'s factors with zeroed statistics.
    pub fn new(cell: &ScenarioCell, strategy: Strategy) -> Self {
        let params = &cell.params;
        Self {
            scenario: params.kind(),
            cell_id: cell.cell_id.clone(),
            n: params.n,
            sigma: params.sigma,
            beta: params.beta,
            lambda: params.lambda(),
            p: p_factor(cell),
            rho: params.rho(),
            df: params.df().map(|d| d.to_string()),
            f: cell.fraction.to_string(),
            strategy,
            mean_score: 0.0,
            se: 0.0,
            diff_fd: None,
            diff_fd_se: None,
            n_rep: 0,
            separation: 0,
            sigma_floor: 0,
            fallback: 0,
            cap_hits: 0,
            unreliable: false,
        }
    }
}

/// One decomposed (cell, strategy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompRow {
    pub scenario: ScenarioKind,
    pub cell_id: String,
    pub strategy: Strategy,
    pub n_rep: usize,
    pub mean_score: f64,
    pub best_form: String,
    pub best_score: f64,
    pub best_se: f64,
    pub selection_cost: f64,
    pub selection_se: f64,
    pub estimation_cost: f64,
    pub estimation_se: f64,
    pub reuse_cost: f64,
    pub reuse_se: f64,
    pub pooled_estimation_cost: Option<f64>,
    pub pooled_reuse_cost: Option<f64>,
    pub share_selection: Option<f64>,
    pub share_estimation: Option<f64>,
    pub share_reuse: Option<f64>,
    /// `form:probability` pairs separated by `;`.
    pub selection_probs: String,
    pub fresh_fallbacks: usize,
}

impl DecompRow {
    pub fn new(cell: &ScenarioCell, d: &DecompositionEstimate) -> Self {
        let shares = reuse_share(d).ok();
        let probs: Vec<String> = d.selection_probs.iter().map(|(f, p)| format!("{f}:{p}")).collect();
        Self {
            scenario: cell.params.kind(),
            cell_id: cell.cell_id.clone(),
            strategy: d.strategy,
            n_rep: d.n_rep,
            mean_score: d.mean_score,
            best_form: d.best_form.to_string(),
            best_score: d.best_score,
            best_se: d.best_se,
            selection_cost: d.selection_cost,
            selection_se: d.selection_se,
            estimation_cost: d.estimation_cost,
            estimation_se: d.estimation_se,
            reuse_cost: d.reuse_cost,
            reuse_se: d.reuse_se,
            pooled_estimation_cost: d.pooled_estimation_cost,
            pooled_reuse_cost: d.pooled_reuse_cost,
            share_selection: shares.map(|s| s.0),
            share_estimation: shares.map(|s| s.1),
            share_reuse: shares.map(|s| s.2),
            selection_probs: probs.join(";"),
            fresh_fallbacks: d.fresh_fallbacks,
        }
    }
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    write_rows(out, rows)
}

pub fn write_decompositions<W: Write>(out: W, rows: &[DecompRow]) -> Result<()> {
    write_rows(out, rows)
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}

/// FD minus each split strategy, with paired standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceTable {
    /// Strategies with a difference column, in display order.
    pub strategies: Vec<Strategy>,
    pub rows: Vec<DifferenceRow>,
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceRow {
    pub cell_id: String,
    pub fd_score: Option<f64>,
    /// `(FD − S, se)` per column; `None` where the cell lacks `S` or FD.
    pub diffs: Vec<Option<(f64, f64)>>,
}

pub fn report_differences(rows: &[ResultRow]) -> DifferenceTable {
    let mut cells: Vec<&str> = Vec::new();
    for r in rows {
        if !cells.contains(&r.cell_id.as_str()) {
            cells.push(&r.cell_id);
        }
    }
    let find = |cell: &str, s: Strategy| rows.iter().find(|r| r.cell_id == cell && r.strategy == s);
    let mut notices = Vec::new();
    let no_fd: Vec<&str> = cells
        .iter()
        .copied()
        .filter(|c| find(c, Strategy::Fd).is_none())
        .collect();
    if !no_fd.is_empty() {
        notices.push(format!(
            "{} cell(s) have no FD row; their differences are blank",
            no_fd.len()
        ));
    }
    let mut strategies = Vec::new();
    for s in [Strategy::Sd, Strategy::Safe, Strategy::Valid] {
        let present = cells.iter().filter(|c| find(c, s).is_some()).count();
        if present == 0 {
            notices.push(format!("FD-{s} omitted: no {s} rows"));
            continue;
        }
        if present < cells.len() {
            notices.push(format!(
                "{s} missing in {} cell(s); shown as '-'",
                cells.len() - present
            ));
        }
        strategies.push(s);
    }
    let rows = cells
        .iter()
        .map(|&c| {
            let fd = find(c, Strategy::Fd);
            DifferenceRow {
                cell_id: c.to_string(),
                fd_score: fd.map(|r| r.mean_score),
                diffs: strategies
                    .iter()
                    .map(|&s| {
                        let r = find(c, s)?;
                        fd?;
                        Some((r.diff_fd?, r.diff_fd_se?))
                    })
                    .collect(),
            }
        })
        .collect();
    DifferenceTable {
        strategies,
        rows,
        notices,
    }
}

impl fmt::Display for DifferenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.cell_id.len()).max().unwrap_or(4).max(4);
        write!(f, "{:<width$}  {:>9}", "cell", "FD")?;
        for s in &self.strategies {
            write!(f, "  {:>9} {:>8}", format!("FD-{s}"), "se")?;
        }
        writeln!(f)?;
        for r in &self.rows {
            write!(f, "{:<width$}  ", r.cell_id)?;
            match r.fd_score {
                Some(x) => write!(f, "{x:>9.4}")?,
                None => write!(f, "{:>9}", "-")?,
            }
            for d in &r.diffs {
                match d {
                    Some((x, se)) => write!(f, "  {x:>9.4} {se:>8.4}")?,
                    None => write!(f, "  {:>9} {:>8}", "-", "-")?,
                }
            }
            writeln!(f)?;
        }
        for n in &self.notices {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}
