//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("degenerate pair: the two vertices coincide")]
    DegeneratePair,

    #[error("extraction failed at step {step}: no candidate reaches the requested floor")]
    PrivateSeqFailure { step: usize },

    #[error("structure extraction fell short: achieved size {achieved}, wanted {wanted}")]
    StructureFailure { achieved: usize, wanted: usize },

    #[error("family extraction stopped after {} structures, wanted {wanted}", achieved.len())]
    FamilyFailure {
        achieved: Vec<crate::structure::PairStructure>,
        wanted: usize,
    },

    #[error("computation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error(
        "good-W search exhausted {attempts} attempts \
         (event failures: shifts {e1_failures}, coverage {e2_failures}, size {e3_failures})"
    )]
    GoodWFailure {
        attempts: usize,
        e1_failures: usize,
        e2_failures: usize,
        e3_failures: usize,
    },

    #[error("no progression of the required length; longest achieved has {} terms", best.length)]
    InsufficientSets { best: Box<crate::sumset::ProgressionWitness> },

    #[error("interval pipeline refused: {0}")]
    Refused(String),

    #[error("interval pipeline failed at stage {stage}: {message}")]
    StageFailure { stage: &'static str, message: String },

    #[error("target {target} not solved; paths attempted: {}", attempted.join(", "))]
    Unsolved { target: u64, attempted: Vec<String> },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
