use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("interpolation needs at least one point")]
    NoPoints,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("singular map")]
    SingularMap,
    #[error("degenerate map")]
    DegenerateMap,
    #[error("all points fixed")]
    AllPointsFixed,
    #[error("invalid system: {0}")]
    InvalidSpec(String),
    #[error("x = {0} outside the domain [0, 1]")]
    Domain(String),
    #[error("underdetermined system")]
    Underdetermined,
    #[error("image not an interval")]
    NotAnInterval,
    #[error("degenerate interval")]
    DegenerateInterval,
    #[error("kernel 1 + xy vanishes on [0, 1] × interval")]
    KernelVanishes,
    #[error("pole in [0, 1]")]
    PoleInUnitInterval,
    #[error("outside valid parameter range: {0}")]
    ParameterRange(String),
    #[error("no natural dual for type {0}")]
    NoNaturalDual(String),
    #[error("input not S-invariant")]
    NotInvariant,
    #[error("density not positive on {0}")]
    NotPositive(String),
    #[error("pole interior to the domain at x = {0}")]
    PoleInterior(String),
    #[error("density not normalizable on the domain")]
    NotNormalizable,
    #[error("closed form {closed} and quadrature {numeric} disagree")]
    QuadratureMismatch { closed: f64, numeric: f64 },
    #[error("invalid orbit configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
