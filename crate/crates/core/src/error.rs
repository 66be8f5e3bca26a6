use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Exact (chamber) failures, numerical failures and word-ball verification
/// failures share one enum so pipeline stages can propagate them unchanged;
/// [`Error::Stage`] wraps an error with the name of the stage that raised it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("rank {rank} exceeds the enumeration cap {cap}")]
    RankCapExceeded { rank: usize, cap: usize },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("no longest element found: malformed chamber")]
    NotFound,
    #[error("margin kind mismatch: {0}")]
    KindMismatch(String),
    #[error("singular input matrix")]
    SingularInput,
    #[error("word budget exceeded: {needed} words requested, budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("overflow risk: {0}")]
    OverflowRisk(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not proximal at the requested tolerance")]
    NotProximal,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("bad exterior power index {index} for dimension {dim}")]
    BadIndex { index: usize, dim: usize },
    #[error("transversality failed at factor {index}: margin {margin:.3e} < {required:.3e}")]
    TransversalityFailed { index: usize, margin: f64, required: f64 },
    #[error("factor {index} is not certified epsilon-proximal")]
    NotCertified { index: usize },
    #[error("no cone direction found within search budget")]
    NoDirectionFound,
    #[error("retry budget exhausted after {attempts} conjugator draws (best margin {best_margin:.3e})")]
    RetryBudgetExhausted { attempts: usize, best_margin: f64 },
    #[error("no power up to {max_m} certified: representation {rep}, {detail}")]
    MaxPowerExceeded { max_m: u64, rep: usize, detail: String },
    #[error("freeness failure: words {word} and {other} are {separation:.3e} apart")]
    FreenessFailure { word: String, other: String, separation: f64 },
    #[error("cone escape: mu({word}) leaves the cone")]
    ConeEscape { word: String },
    #[error("additivity failure at {word}: residual {residual:.4} > bound {bound:.4}")]
    AdditivityFailure { word: String, residual: f64, bound: f64 },
    #[error("margin degeneration: {detail} (minimizing word {word})")]
    MarginDegeneration { word: String, detail: String },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, with stage tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
