use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation error: modulus `{name}` is not finite at s = {at}")]
    Evaluation { name: String, at: f64 },

    #[error("weight domain exhausted: sup phi = {sup_phi} is below tau_max = {tau_max}")]
    WeightDomainExhausted { sup_phi: f64, tau_max: f64 },

    #[error("weight table cannot reach tau_max = {tau_max} in floating point (reached {reached})")]
    WeightRange { reached: f64, tau_max: f64 },

    #[error("weight domain: gamma * T = {span} exceeds tau_max = {tau_max} (gamma = {gamma})")]
    GammaRange { gamma: f64, span: f64, tau_max: f64 },

    #[error("modulus `{0}` failed validation")]
    InvalidModulus(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("not a {nu}-block: coefficient at |xi| = {xi} has magnitude {magnitude}")]
    NotABlock { nu: i32, xi: f64, magnitude: f64 },

    #[error("positivity threshold not found up to m = {m_max}")]
    ThresholdNotFound { m_max: u32, profile: Vec<(u32, f64)> },

    #[error("precondition violated at time sample {sample} (t = {time}): {reason}")]
    Support { sample: usize, time: f64, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
