use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    Continuous,
    Binary,
}

/// Covariates (row-major, `n × p`) together with the response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: Vec<f64>,
    response: Vec<f64>,
    n_cols: usize,
    kind: ResponseKind,
}

impl Dataset {
    pub fn new(design: Vec<f64>, n_cols: usize, response: Vec<f64>, kind: ResponseKind) -> Result<Self> {
        if design.len() != response.len() * n_cols {
            return Err(Error::InvalidParameter(format!(
                "design has {} entries, expected {} rows × {} columns",
                design.len(),
                response.len(),
                n_cols
            )));
        }
        if kind == ResponseKind::Binary && response.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidParameter("binary response must be 0 or 1".into()));
        }
        Ok(Self {
            design,
            response,
            n_cols,
            kind,
        })
    }

    /// Builds a dataset from covariate rows.
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>, kind: ResponseKind) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidParameter("ragged covariate rows".into()));
        }
        if rows.len() != response.len() {
            return Err(Error::InvalidParameter(format!(
                "{} covariate rows but {} responses",
                rows.len(),
                response.len()
            )));
        }
        Self::new(rows.concat(), n_cols, response, kind)
    }

    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn kind(&self) -> ResponseKind {
        self.kind
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn x(&self, i: usize, j: usize) -> f64 {
        self.design[i * self.n_cols + j]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.response[i]
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i, j)).collect()
    }

    /// Returns the cases at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut design = Vec::with_capacity(indices.len() * self.n_cols);
        let mut response = Vec::with_capacity(indices.len());
        for &i in indices {
            design.extend_from_slice(self.row(i));
            response.push(self.response[i]);
        }
        Dataset {
            design,
            response,
            n_cols: self.n_cols,
            kind: self.kind,
        }
    }

    /// Same covariates, different response.
    pub fn with_response(&self, response: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.design.clone(), self.n_cols, response, self.kind)
    }
}
