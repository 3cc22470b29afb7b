use thiserror::Error;

/// Errors raised by tree construction, the solvers and the oracle.
#[derive(Debug, Error)]
pub enum MafError {
    #[error("newick parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("duplicate taxon label '{0}'")]
    DuplicateLabel(String),

    #[error("empty taxon label")]
    EmptyLabel,

    #[error("degree violation: {0}")]
    Degree(String),

    #[error("invalid taxon set: {0}")]
    TaxonSet(String),

    #[error("tree kinds differ (rooted vs unrooted)")]
    KindMismatch,

    #[error("trees are not on the same taxon set")]
    TaxaMismatch,

    #[error("bipartition is trivial")]
    TrivialBipartition,

    #[error("cut budget exhausted")]
    BudgetExhausted,

    #[error("edge does not belong to the component")]
    EdgeNotInTree,

    #[error("{{{0}, {1}}} is not a cherry of the host tree")]
    NotACherry(String, String),

    #[error("blocks do not partition the taxon set")]
    NotAPartition,

    #[error("instance is not disjoint")]
    NotDisjoint,

    #[error("components do not overlap")]
    NoOverlap,

    #[error("oracle node limit of {0} exceeded")]
    NodeLimit(u64),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MafError>;
