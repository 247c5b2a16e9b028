use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    ParamsInvalid(String),
    #[error("parameters out of range: {0}")]
    ParamsOutOfRange(String),
    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),
    #[error("height cap not converged: |dlogZ| = {delta:e} with cap {cap}")]
    CapNotConverged { cap: u32, delta: f64 },
    #[error("incompatible cylinder set: {0}")]
    IncompatibleSet(String),
    #[error("negative height at site {0:?}")]
    NegativeHeight((i32, i32)),
    #[error("order too large: {0}")]
    OrderTooLarge(String),
    #[error("cylinder is not elementary (diameter {diam} > {bound})")]
    NonElementaryCylinder { diam: u32, bound: u32 },
    #[error("site {0:?} is not at height 0")]
    SiteNotAtZero((i32, i32)),
    #[error("cluster graph is disconnected")]
    Disconnected,
    #[error("template mismatch: {0}")]
    TemplateMismatch(String),
    #[error("not a set of large cylinders: {0}")]
    NotLargeSet(String),
    #[error("region too large: {sites} sites (cap {cap})")]
    RegionTooLarge { sites: usize, cap: usize },
    #[error("epsilon must lie in (0,2), got {0}")]
    EpsilonRange(f64),
    #[error("spec file: {0}")]
    Spec(String),
    #[error("io: {0}")]
    Io(String),
    #[error("cache: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
