use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("p must be an odd prime >= 3 (got {0})")]
    EvenOrTooSmall(u64),
    #[error("p must be prime ≡ 1 (mod 4) (got {0})")]
    WrongResidueClass(u64),
    #[error("p = {p} exceeds the table limit {limit}")]
    FieldTooLarge { p: u64, limit: u64 },
    #[error("residue {x} out of range 0..{p}")]
    OutOfRange { x: u64, p: u64 },
    #[error("argument must be nonzero")]
    ZeroArgument,
    #[error("matrix dimension {dim} exceeds limit {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("eigensolver did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("budget exceeded: {needed} work items needed, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("subset contains the last (non-field) column")]
    LastColumnInSubset,
    #[error("subset must be nonempty")]
    EmptySet,
    #[error("size window violated: {0}")]
    SizeWindowViolated(String),
    #[error("invalid sparsity K = {0}")]
    BadSparsity(usize),
    #[error("distributions are over different supports")]
    SupportMismatch,
    #[error("invalid distribution: {0}")]
    InvalidPmf(String),
    #[error("min-entropy {k} bits needs sources of size {size} > p = {p}")]
    EntropyTooHigh { k: f64, size: u64, p: u64 },
    #[error("report is for p = {report}, context is p = {ctx}")]
    PrimeMismatch { report: u64, ctx: u64 },
    #[error("alpha = {0} outside (0, 1/2]")]
    BadAlpha(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("need at least {needed} usable rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("cross-check failed: {0}")]
    CrossCheckFailed(String),
}

impl Error {
    pub fn budget(needed: u128, budget: u128) -> Self {
        Error::BudgetExceeded { needed, budget }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
