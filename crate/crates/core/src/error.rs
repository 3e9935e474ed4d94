use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("unsupported numeric mode: {0}")]
    UnsupportedMode(String),

    #[error("cannot parse `{input}` as {expected}")]
    Parse { input: String, expected: &'static str },

    #[error("series diverges at p = {p}")]
    Divergence { p: f64 },

    #[error("response matrices do not contract at p = {p} (operator norm {factor})")]
    NoContraction { p: f64, factor: f64 },

    #[error("p = {p} is outside the range [{lo}, {hi}] of the {scheme} scheme")]
    Range {
        scheme: &'static str,
        p: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (last change {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("Φ^{k0}(1-p) = {theta} is not below 1/2")]
    InvalidK0 { k0: usize, theta: f64 },

    #[error("preimage depth {depth} needs a big-float context (limit {limit} in float64)")]
    NeedsBigFloat { depth: usize, limit: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
