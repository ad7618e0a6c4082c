use std::path::Path;

use crate::error::DataError;

/// Largest `p` for which the centered Gram matrix is precomputed at load time.
pub const GRAM_PRECOMPUTE_LIMIT: usize = 2048;

/// Response plus candidate columns, with the centering metadata every model
/// shares. Immutable once built.
///
/// Internally the centered columns are also rescaled to unit norm and their
/// Gram matrix is cached, so incremental fits never touch the `N`-length data.
/// Rescaling does not change any SSE.
#[derive(Debug, Clone)]
pub struct Dataset {
    response: String,
    names: Vec<String>,
    y: Vec<f64>,
    columns: Vec<Vec<f64>>,
    column_means: Vec<f64>,
    ybar: f64,
    sse0: f64,
    // centered, unit-norm copies of `columns`
    scales: Vec<f64>,
    unit: Vec<Vec<f64>>,
    gram: Option<Vec<f64>>,
    xty: Vec<f64>,
    warnings: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from raw columns. Constant candidate columns are
    /// dropped and noted in [`warnings`](Self::warnings).
    pub fn new(
        response: impl Into<String>,
        y: Vec<f64>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self, DataError> {
        let response = response.into();
        let n = y.len();
        if names.len() != columns.len() {
            return Err(DataError::Shape(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some(c) = columns.iter().position(|c| c.len() != n) {
            return Err(DataError::Shape(format!(
                "column `{}` has {} rows, response has {n}",
                names[c],
                columns[c].len()
            )));
        }
        if n < 3 {
            return Err(DataError::TooFewRows(n));
        }
        let mut seen = std::collections::HashSet::new();
        for name in names.iter().chain(std::iter::once(&response)) {
            if !seen.insert(name.as_str()) {
                return Err(DataError::DuplicateName(name.clone()));
            }
        }

        let ybar = mean(&y);
        let sse0: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
        if !(sse0 > 0.0) || y.iter().all(|&v| v == y[0]) {
            return Err(DataError::ConstantResponse(response));
        }

        let mut warnings = Vec::new();
        let mut kept_names = Vec::with_capacity(names.len());
        let mut kept = Vec::with_capacity(columns.len());
        for (name, col) in names.into_iter().zip(columns) {
            if col.iter().all(|&v| v == col[0]) {
                warnings.push(format!("dropped constant column `{name}`"));
            } else {
                kept_names.push(name);
                kept.push(col);
            }
        }
        if kept.is_empty() {
            return Err(DataError::NoCandidates);
        }
        let p = kept.len();
        if n <= p + 2 {
            warnings.push(format!(
                "N = {n} <= p + 2 = {}: models with more than N - 2 columns are excluded",
                p + 2
            ));
        }

        let column_means: Vec<f64> = kept.iter().map(|c| mean(c)).collect();
        let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
        let mut scales = Vec::with_capacity(p);
        let mut unit = Vec::with_capacity(p);
        for (col, &m) in kept.iter().zip(&column_means) {
            let centered: Vec<f64> = col.iter().map(|v| v - m).collect();
            let norm = dot(&centered, &centered).sqrt();
            scales.push(norm);
            unit.push(centered.into_iter().map(|v| v / norm).collect::<Vec<_>>());
        }
        let xty = unit.iter().map(|u| dot(u, &yc)).collect();
        let gram = (p <= GRAM_PRECOMPUTE_LIMIT).then(|| {
            let mut g = vec![0.0; p * p];
            for i in 0..p {
                for j in 0..=i {
                    let v = dot(&unit[i], &unit[j]);
                    g[i * p + j] = v;
                    g[j * p + i] = v;
                }
            }
            g
        });

        Ok(Self {
            response,
            names: kept_names,
            y,
            columns: kept,
            column_means,
            ybar,
            sse0,
            scales,
            unit,
            gram,
            xty,
            warnings,
        })
    }

    /// Reads a comma-separated file with a header row; `response` names the
    /// response column and every other column becomes a candidate.
    pub fn load_csv(path: impl AsRef<Path>, response: &str) -> Result<Self, DataError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file, response)
    }

    pub fn from_reader(reader: impl std::io::Read, response: &str) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let ycol = header
            .iter()
            .position(|h| h == response)
            .ok_or_else(|| DataError::MissingResponse(response.to_string()))?;

        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            // data rows are 1-based, counting after the header
            let row = r + 1;
            if rec.len() != header.len() {
                return Err(DataError::RaggedRow {
                    row,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| DataError::NonNumeric {
                        row,
                        column: header[c].clone(),
                        value: field.to_string(),
                    })?;
                cols[c].push(v);
            }
        }

        let y = cols.remove(ycol);
        let mut names = header;
        names.remove(ycol);
        Self::new(response, y, names, cols)
    }

    /// Design with the selected mains, their squares and all pairwise
    /// products. Mains keep their column order here; for each main `A` the
    /// square `AA` is followed by the products `AB` with `B` after `A`.
    pub fn expand_design(&self, mains: &[&str]) -> Result<Dataset, DataError> {
        if mains.is_empty() {
            return Err(DataError::EmptyMains);
        }
        let mut idx = Vec::with_capacity(mains.len());
        for &m in mains {
            let j = self
                .names
                .iter()
                .position(|n| n == m)
                .ok_or_else(|| DataError::MissingColumn(m.to_string()))?;
            if idx.contains(&j) {
                return Err(DataError::DuplicateName(m.to_string()));
            }
            idx.push(j);
        }
        idx.sort_unstable();

        let mut names = Vec::new();
        let mut columns = Vec::new();
        for &j in &idx {
            names.push(self.names[j].clone());
            columns.push(self.columns[j].clone());
        }
        for (a, &ja) in idx.iter().enumerate() {
            for &jb in &idx[a..] {
                names.push(format!("{}{}", self.names[ja], self.names[jb]));
                columns.push(
                    self.columns[ja]
                        .iter()
                        .zip(&self.columns[jb])
                        .map(|(u, v)| u * v)
                        .collect(),
                );
            }
        }
        Dataset::new(self.response.clone(), self.y.clone(), names, columns)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn response(&self) -> &str {
        &self.response
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Candidate column `j` on its original scale.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn ybar(&self) -> f64 {
        self.ybar
    }

    /// SSE of the intercept-only model.
    pub fn sse0(&self) -> f64 {
        self.sse0
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn has_gram(&self) -> bool {
        self.gram.is_some()
    }

    /// Norm of centered column `j`; divides unit-scale coefficients back to
    /// the original scale.
    pub(crate) fn scale(&self, j: usize) -> f64 {
        self.scales[j]
    }

    /// Inner product of the centered unit-norm columns `i` and `j`.
    #[inline]
    pub(crate) fn cross(&self, i: usize, j: usize) -> f64 {
        match &self.gram {
            Some(g) => g[i * self.p() + j],
            None => dot(&self.unit[i], &self.unit[j]),
        }
    }

    /// Inner product of centered unit-norm column `j` with the centered response.
    #[inline]
    pub(crate) fn xty(&self, j: usize) -> f64 {
        self.xty[j]
    }

    /// Column `j` centered by its mean, original scale.
    pub fn centered_column(&self, j: usize) -> Vec<f64> {
        let m = self.column_means[j];
        self.columns[j].iter().map(|v| v - m).collect()
    }

    /// Response minus its mean.
    pub fn centered_response(&self) -> Vec<f64> {
        self.y.iter().map(|v| v - self.ybar).collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
