use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet mismatch: ({lhs_vars} vars, order {lhs_order}) vs ({rhs_vars} vars, order {rhs_order})")]
    JetMismatch {
        lhs_vars: usize,
        lhs_order: usize,
        rhs_vars: usize,
        rhs_order: usize,
    },
    #[error("index {index} out of range for {len} variables")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unsupported jet shape: {0}")]
    JetShape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{tag} expects {expected} argument(s), got {got}")]
    Arity {
        tag: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("field evaluation failed: {0}")]
    Evaluation(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("metric a_ij is not positive definite at {0:?}")]
    SingularMetric(Vec<f64>),
    #[error("fundamental tensor g_ij is not positive definite")]
    SingularG,
    #[error("one-form has vanishing norm (b = {0:e})")]
    ZeroNorm(f64),
    #[error("zero tangent vector")]
    ZeroVector,
    #[error("phi is not positive at s = {0}")]
    NonPositivePhi(f64),
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),
    #[error("singular direction in volume quadrature at node {node}")]
    SingularDirectionInQuadrature { node: usize },
    #[error("degenerate flag: {0:e}")]
    DegenerateFlag(f64),
    #[error("volume density f(b) = {0} is not positive")]
    NonPositiveDensity(f64),
    #[error("empty sample grid")]
    EmptyGrid,
    #[error("operation requires the Randers phi, got {0}")]
    WrongPhiVariant(String),
    #[error("every sample was singular")]
    AllSamplesSingular,
    #[error("least-squares design matrix is rank deficient")]
    RankDeficient,
    #[error("missing report: {0}")]
    MissingReports(&'static str),
    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),
    #[error("parameter {name} = {value} out of range ({range})")]
    ParamOutOfRange {
        name: String,
        value: f64,
        range: &'static str,
    },
    #[error("wind is too strong: lambda = {0} <= 0")]
    FastWind(f64),
    #[error("operation requires dimension {expected}, metric has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("adaptive quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
}
