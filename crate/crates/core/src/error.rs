use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // ingest
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("malformed date `{0}`")]
    MalformedDate(String),
    #[error("input file is empty: {0}")]
    EmptyFile(String),
    #[error("negative value {value} for flow {origin}->{destination}")]
    NegativeValue {
        origin: String,
        destination: String,
        value: f64,
    },
    #[error("interior gap in activity panel: {0}")]
    InteriorGap(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("no observations inside window {start}..{end}")]
    WindowEmpty { start: String, end: String },

    // shocks
    #[error("event filter selects no weather group")]
    EmptyFilter,
    #[error("inconsistent state metadata: {0}")]
    InconsistentMeta(String),

    // weights
    #[error("unit `{0}` has no links to any other unit")]
    IsolatedUnit(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("index {index} out of range for {len} units")]
    IndexOutOfRange { index: usize, len: usize },

    // estimation
    #[error("design matrix is singular (collinear regressors){0}")]
    SingularDesign(String),
    #[error("sample too short: {0}")]
    SampleTooShort(String),
    #[error("series has zero variance")]
    ZeroVariance,

    // gvar
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("contemporaneous matrix G is singular")]
    SingularG,
    #[error("G is ill-conditioned (condition number {cond:e} exceeds {bound:e})")]
    IllConditioned { cond: f64, bound: f64 },

    // irf
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("region `{0}` has no member units")]
    EmptyRegion(String),
    #[error("aggregation weights mismatch: {0}")]
    WeightMismatch(String),
    #[error("second-round analysis needs a scenario hitting exactly one unit, got {0}")]
    MultiStateScenario(usize),

    // bootstrap
    #[error("residual matrix is empty")]
    EmptyResiduals,
    #[error("{discarded} of {total} bootstrap replications were unstable")]
    TooManyUnstableReplications { discarded: usize, total: usize },
    #[error("point-estimated system is unstable (spectral radius {0:.6})")]
    UnstableSystem(f64),

    // alternatives
    #[error("concentrated likelihood has no interior optimum (best p = {0})")]
    NonConcaveLikelihood(f64),
    #[error("bias correction did not reach a fixed point in {0} iterations")]
    NonConvergence(usize),
    #[error("need at least two estimates, got {0}")]
    TooFewStates(usize),

    // synth
    #[error("no stable coefficient draw after {0} attempts")]
    UnstableSpec(usize),

    // cli / plumbing
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input missing: {0}")]
    InputMissing(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingColumn(_) => "MissingColumn",
            Error::MalformedDate(_) => "MalformedDate",
            Error::EmptyFile(_) => "EmptyFile",
            Error::NegativeValue { .. } => "NegativeValue",
            Error::InteriorGap(_) => "InteriorGap",
            Error::UnknownState(_) => "UnknownState",
            Error::WindowEmpty { .. } => "WindowEmpty",
            Error::EmptyFilter => "EmptyFilter",
            Error::InconsistentMeta(_) => "InconsistentMeta",
            Error::IsolatedUnit(_) => "IsolatedUnit",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::SingularDesign(_) => "SingularDesign",
            Error::SampleTooShort(_) => "SampleTooShort",
            Error::ZeroVariance => "ZeroVariance",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::SingularG => "SingularG",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::UnknownRegion(_) => "UnknownRegion",
            Error::EmptyRegion(_) => "EmptyRegion",
            Error::WeightMismatch(_) => "WeightMismatch",
            Error::MultiStateScenario(_) => "MultiStateScenario",
            Error::EmptyResiduals => "EmptyResiduals",
            Error::TooManyUnstableReplications { .. } => "TooManyUnstableReplications",
            Error::UnstableSystem(_) => "UnstableSystem",
            Error::NonConcaveLikelihood(_) => "NonConcaveLikelihood",
            Error::NonConvergence(_) => "NonConvergence",
            Error::TooFewStates(_) => "TooFewStates",
            Error::UnstableSpec(_) => "UnstableSpec",
            Error::Config(_) => "ConfigError",
            Error::InputMissing(_) => "InputMissing",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
        }
    }
}
