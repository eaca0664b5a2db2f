use thiserror::Error;

pub type Result<T, E = HamError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamError {
    #[error("integral over [0, inf) diverges: a term t^{power} has zero decay rate")]
    DivergentIntegral { power: u32 },

    #[error("decay rate {0} is negative; growing exponentials are not representable")]
    GrowingExponential(String),

    #[error("decay rate overflowed the 64-bit rational range")]
    RateOverflow,

    #[error("boundary conditions cannot be met by a decaying solution: {0}")]
    NoDecayingSolution(String),

    #[error("solution would be unbounded at infinity: {0}")]
    UnboundedResult(String),

    #[error("invalid linear operator: {0}")]
    InvalidOperator(String),

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("term u_{order} has zero norm while later terms do not")]
    ZeroNormTerm { order: usize },

    #[error("series needs at least {needed} nonzero terms, found {found}")]
    InsufficientTerms { needed: usize, found: usize },

    #[error("norm of u_0 is infinite on [0, inf); configure a finite window")]
    InfiniteNorm,

    #[error("error bound requires a convergent verdict with 0 <= r < 1, got r = {0}")]
    NotConvergent(f64),

    #[error("minimizer hit the edge of the scanned h range at h = {h}")]
    BoundaryOptimum { h: f64 },

    #[error("pointwise ratios do not stabilize: {0}")]
    NoStableLimit(String),

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("no closed-form reference for '{0}'")]
    NoClosedForm(String),

    #[error("shooting failed: {0}")]
    ShootingFailed(String),

    #[error("requested order {requested} exceeds computed order {computed}")]
    OrderOutOfRange { requested: usize, computed: usize },

    #[error("parse error: {0}")]
    Parse(String),
}
