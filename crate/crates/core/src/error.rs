use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("response column `{0}` not found in header")]
    MissingResponse(String),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("response `{0}` is constant")]
    ConstantResponse(String),
    #[error("need at least 3 observations, found {0}")]
    TooFewRows(usize),
    #[error("no non-constant candidate columns remain")]
    NoCandidates,
    #[error("duplicate column name `{0}`")]
    DuplicateName(String),
    #[error("at least one main effect is required")]
    EmptyMains,
    #[error("length mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinModelError {
    #[error("column index {index} out of range for p = {p}")]
    OutOfRange { index: usize, p: usize },
    #[error("column {0} is already in the model")]
    AlreadyActive(usize),
    #[error("column {0} is not in the model")]
    NotActive(usize),
    #[error("design is rank deficient at column(s) {columns:?}")]
    RankDeficient { columns: Vec<String> },
    #[error("model has {k} columns but at most N - 2 = {max} are identifiable")]
    TooManyColumns { k: usize, max: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorError {
    #[error("g must be positive and finite, got {0}")]
    InvalidG(f64),
    #[error("a fixed g has no prior density")]
    FixedHasNoDensity,
    #[error("sample count for the Zellner-Siow prior must be positive")]
    InvalidSampleCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimateError {
    #[error("empty model set")]
    Empty,
    #[error("every model in the set has zero weight")]
    AllExcluded,
    #[error("expected {expected} covariate values, got {found}")]
    CovariateLength { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Prior(#[from] PriorError),
}

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("p = {p} exceeds the enumeration guard of {limit}; pass the force override to run anyway")]
    TooLarge { p: usize, limit: usize },
    #[error("exact enumeration supports at most 63 candidate columns, got {0}")]
    Unsupported(usize),
    #[error("exact enumeration requires a fixed g")]
    HierarchicalG,
    #[error("shards do not partition the model space: {0}")]
    IncompletePartition(String),
    #[error(transparent)]
    Prior(#[from] PriorError),
}
