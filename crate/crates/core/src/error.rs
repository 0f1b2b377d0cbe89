use thiserror::Error;

use crate::params::State;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid tyre parameter: {0}")]
    InvalidTyre(String),

    #[error("input out of domain: {0}")]
    Domain(String),

    #[error("stick force {lambda} exceeds friction bound {mu}")]
    StickBound { lambda: f64, mu: f64 },

    #[error("slip mode does not match the side of the switching surface (h = {h})")]
    ModeMismatch { h: f64 },

    #[error("state is not on the switching surface (h = {h})")]
    OffSurface { h: f64 },

    #[error("state is at a two-fold singularity candidate: {0:?}")]
    NearSingularity(State),

    #[error("designer denominator vanishes: {0}")]
    Denominator(&'static str),

    #[error("designed point fails the two-fold check: residual {0:e}")]
    DesignCheck(f64),

    #[error("injection failed: {0}")]
    Injection(String),
}

pub type Result<T> = std::result::Result<T, Error>;
