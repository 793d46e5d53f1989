use crate::odecore::OdeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("inadmissible initial triple: {0}")]
    Inadmissible(String),
    #[error("left the validity region: {0}")]
    OutsideDomain(String),
    #[error("seed f={f} lies outside every window (P={p})")]
    OutsideWindow { f: f64, p: f64 },
    #[error("pinned frame vector has norm {norm}, expected 1")]
    PinnedNorm { norm: f64 },
    #[error("frame Gram drift {drift} exceeds {limit} at u={u}")]
    GramDrift { drift: f64, limit: f64, u: f64 },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
