use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weight sequence is empty")]
    EmptyInput,
    #[error("weight at index {0} is not a positive finite number")]
    InvalidWeight(usize),
    #[error("table has {table} rows but weight set has {weights} items")]
    SizeMismatch { table: usize, weights: usize },
    #[error("section count {sections} is invalid for {items} items")]
    InvalidSectionCount { sections: usize, items: usize },
    #[error("input to the search is not sorted ascending")]
    UnsortedInput,
    #[error("split plan is inconsistent: section {section} ran out of items")]
    PlanInconsistent { section: usize },
    #[error("section size {size} is invalid for a table of {rows} rows")]
    InvalidSectionSize { size: usize, rows: usize },
    #[error("sample index {index} is out of range for {n} items")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("fewer than two bins remain after pooling")]
    DegenerateBins,
    #[error("expected probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
