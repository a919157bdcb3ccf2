use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Variants split into two families that the CLI maps onto distinct exit
/// codes: validation problems (bad input, domain violations) and numerical
/// failures (factorizations, divergence, non-finite values).
#[derive(Debug, Error)]
pub enum SaddleError {
    #[error("dimension mismatch in block `{block}`: expected {expected}, got {got}")]
    Dimension {
        block: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("size guard exceeded: total dimension {dim} > {limit}")]
    SizeGuard { dim: usize, limit: usize },

    #[error("factorization of {block} failed{}", fmt_cond(.condition))]
    Factorization {
        block: &'static str,
        condition: Option<f64>,
    },

    #[error("non-finite residual after iteration {last_finite}")]
    Divergence { last_finite: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eigensolver failed to converge on {0}")]
    Eigensolver(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_cond(cond: &Option<f64>) -> String {
    match cond {
        Some(c) => format!(" (condition estimate {c:.3e})"),
        None => String::new(),
    }
}

impl SaddleError {
    /// True for failures caused by the numbers rather than by the input shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SaddleError::Factorization { .. }
                | SaddleError::Divergence { .. }
                | SaddleError::Numerical(_)
                | SaddleError::Eigensolver(_)
        )
    }
}

pub type Result<T, E = SaddleError> = std::result::Result<T, E>;
