use thiserror::Error;

use crate::modal::PortId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid wavenumber k = {0}: need 0 < k < pi for a single propagating mode")]
    Wavenumber(f64),

    #[error("invalid branch height L = {0}: need L > 1")]
    BranchHeight(f64),

    #[error("invalid staircase: {0}")]
    Staircase(String),

    #[error("truncation margin {name} = {value} does not clear the last step")]
    Margin { name: &'static str, value: f64 },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid port basis: {0}")]
    PortBasis(String),

    #[error("no modal basis supplied for port {0:?}")]
    MissingBasis(PortId),

    #[error("incident mode {mode} out of range for port {port:?} with {terms} terms")]
    IncidentMode { port: PortId, mode: usize, terms: usize },

    #[error(
        "singular or near-singular system ({0}); the truncated problem may be resonant, \
         try a different truncation margin"
    )]
    Singular(String),

    #[error("invalid field operation: {0}")]
    Field(String),

    #[error("exceptional case: {0}")]
    Exceptional(String),

    #[error("search failed: {0}")]
    Search(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for the degenerate configurations the asymptotic analysis excludes.
    pub fn is_exceptional(&self) -> bool {
        matches!(self, Error::Exceptional(_))
    }
}
