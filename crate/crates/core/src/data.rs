//! Tabular input, response/design split and covariate rescaling to
//! `[-1, 1]`.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{dim, param, Error, Result};
use crate::sampler::ChainInput;

/// A numeric table with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    /// `rows x columns`.
    pub values: Array2<f64>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Ok(i);
        }
        match name.parse::<usize>() {
            Ok(i) if i >= 1 && i <= self.names.len() => Ok(i - 1),
            _ => Err(param(format!("no column named '{name}'"))),
        }
    }
}

/// Read a UTF-8 CSV with a header row and numeric cells. Row numbers in
/// errors are file line numbers (the header is line 1).
pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let names: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    if names.is_empty() {
        return Err(param("input has no columns"));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != names.len() {
            return Err(Error::Ingestion {
                row: line,
                column: String::new(),
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
        for (cell, name) in rec.iter().zip(&names) {
            let missing = cell.is_empty() || ["na", "nan", "null"].contains(&cell.to_ascii_lowercase().as_str());
            if missing {
                return Err(Error::Ingestion {
                    row: line,
                    column: name.clone(),
                    message: "missing value".into(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Ingestion {
                row: line,
                column: name.clone(),
                message: format!("non-numeric value '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingestion {
                    row: line,
                    column: name.clone(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(param("input has no data rows"));
    }
    let values = Array2::from_shape_vec((rows, names.len()), data).map_err(|e| dim(e.to_string()))?;
    Ok(Table { names, values })
}

/// Affine map of each covariate onto `[-1, 1]`: `x' = s x + o` with
/// `s = 2 / (max - min)` and `o = -1 - s min`. Constant columns map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rescaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Rescaling {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let k = x.ncols();
        let mut min = vec![f64::INFINITY; k];
        let mut max = vec![f64::NEG_INFINITY; k];
        for row in x.outer_iter() {
            for j in 0..k {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Self { min, max }
    }

    pub fn is_degenerate(&self, j: usize) -> bool {
        !(self.max[j] > self.min[j])
    }

    pub fn scale(&self, j: usize) -> f64 {
        if self.is_degenerate(j) {
            0.0
        } else {
            2.0 / (self.max[j] - self.min[j])
        }
    }

    pub fn offset(&self, j: usize) -> f64 {
        if self.is_degenerate(j) {
            0.0
        } else {
            -1.0 - self.scale(j) * self.min[j]
        }
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.min.len() {
            return Err(dim(format!("rescaling fitted on {} columns, got {}", self.min.len(), x.ncols())));
        }
        let mut out = x.to_owned();
        for j in 0..x.ncols() {
            let (s, o) = (self.scale(j), self.offset(j));
            out.column_mut(j).mapv_inplace(|v| s * v + o);
        }
        Ok(out)
    }

    /// Map coefficients on the rescaled design back to the original
    /// covariate scale: slopes `b_j s_j`, intercept `a + sum_j b_j o_j`.
    pub fn back_transform(&self, alpha: f64, beta: ArrayView1<f64>) -> (f64, Array1<f64>) {
        let mut a = alpha;
        let mut b = beta.to_owned();
        for j in 0..beta.len() {
            a += beta[j] * self.offset(j);
            b[j] = beta[j] * self.scale(j);
        }
        (a, b)
    }

    /// Row-wise [`Rescaling::back_transform`] of a `Q x K` slope matrix.
    pub fn back_transform_profile(&self, alpha: ArrayView1<f64>, beta: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
        let mut a = alpha.to_owned();
        let mut b = beta.to_owned();
        for qi in 0..beta.nrows() {
            let (aq, bq) = self.back_transform(alpha[qi], beta.row(qi));
            a[qi] = aq;
            b.row_mut(qi).assign(&bq);
        }
        (a, b)
    }
}

/// Response, raw and rescaled covariates.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub target: String,
    pub covariates: Vec<String>,
    pub y: Array1<f64>,
    pub x_raw: Array2<f64>,
    /// Covariates on `[-1, 1]`.
    pub x: Array2<f64>,
    pub rescaling: Rescaling,
}

impl Dataset {
    pub fn new(target: String, covariates: Vec<String>, y: Array1<f64>, x_raw: Array2<f64>) -> Result<Self> {
        if y.len() != x_raw.nrows() {
            return Err(dim(format!("{} responses but {} design rows", y.len(), x_raw.nrows())));
        }
        if covariates.len() != x_raw.ncols() {
            return Err(dim("covariate names do not match design columns"));
        }
        if y.iter().chain(x_raw.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericDomain("non-finite value in data".into()));
        }
        let rescaling = Rescaling::fit(x_raw.view());
        for (j, name) in covariates.iter().enumerate() {
            if rescaling.is_degenerate(j) {
                log::warn!("covariate '{name}' is constant; it is mapped to 0 and carries no information");
            }
        }
        let x = rescaling.apply(x_raw.view())?;
        Ok(Self {
            target,
            covariates,
            y,
            x_raw,
            x,
            rescaling,
        })
    }

    /// Split a table into the named response column and the remaining
    /// covariates.
    pub fn from_table(table: &Table, target: &str) -> Result<Self> {
        let ti = table.column_index(target)?;
        let y = table.values.column(ti).to_owned();
        let keep: Vec<usize> = (0..table.names.len()).filter(|&j| j != ti).collect();
        let x_raw = table.values.select(ndarray::Axis(1), &keep);
        let covariates = keep.iter().map(|&j| table.names[j].clone()).collect();
        Self::new(table.names[ti].clone(), covariates, y, x_raw)
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.x.ncols()
    }

    /// Sampler input with the response repeated for `q` quantiles.
    pub fn chain_input(&self, q: usize) -> Result<ChainInput> {
        ChainInput::replicated(self.x.clone(), self.y.view(), q)
    }
}

pub fn ingest_csv(path: &Path, target: &str) -> Result<Dataset> {
    Dataset::from_table(&read_table(path)?, target)
}
