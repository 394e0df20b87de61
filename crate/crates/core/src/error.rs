use thiserror::Error;

use crate::subproduct::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cannot infer vector length from an empty list")]
    EmptySpan,

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("tensor block of {cells} cells exceeds the configured limit of {limit}")]
    TooLarge { cells: usize, limit: usize },

    #[error("staircase is not downward closed: {present:?} present but {missing:?} missing")]
    InvalidStaircase {
        present: (usize, usize),
        missing: (usize, usize),
    },

    #[error("missing projection for degree {0:?}")]
    MissingDegree((usize, usize)),

    #[error("degree {degree:?} is outside the truncation (max total degree {max_degree})")]
    OutsideTruncation {
        degree: (usize, usize),
        max_degree: usize,
    },

    #[error("partial data violates the subproduct inequalities: {0}")]
    PartialViolation(ValidationReport),

    #[error("vector is not in the fiber at degree {degree:?} (residual {residual:.3e})")]
    NotInFiber {
        degree: (usize, usize),
        residual: f64,
    },

    #[error("generator {index} is not (m,n)-homogeneous")]
    NotHomogeneous { index: usize },

    #[error("generator {index} has degree {degree:?}; degree-one generators would shrink X(1,0) or X(0,1)")]
    DegreeOneGenerator {
        index: usize,
        degree: (usize, usize),
    },

    #[error("improper ideal: the generated ideal contains the constants")]
    ImproperIdeal,

    #[error("letter {0} is outside the alphabet")]
    BadLetter(String),

    #[error("operators belong to different Fock spaces")]
    ForeignOperator,

    #[error("truncation order {k} exceeds k_X = {k_x}; the homomorphism is not well defined")]
    OrderExceedsKx { k: usize, k_x: String },

    #[error("point is outside the polyball variety")]
    OutsideVariety,

    #[error("systems have different truncation degrees ({0} vs {1})")]
    TruncationMismatch(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),
}
