//! Time-harmonic scattering in symmetric branched waveguides.
//!
//! Quadratic finite elements with modal Robin ports compute reflection and
//! transmission coefficients, augmented scattering matrices of half-guide
//! problems and the scattering matrices of their limit geometries. The
//! [`asymptotics`] module turns limit matrices into large-height predictions
//! and [`search`] locates invisibility and trapped-mode branch heights.

pub mod error;
pub mod geometry;
pub mod mesh;
pub mod modal;
pub mod solver;
pub mod scattering;
pub mod asymptotics;
pub mod search;

pub use error::{Error, Result};
pub use geometry::{
    truncate, BoundaryTag, GuideProblem, HalfGuideProblem, LimitGeometry, Margins, SymmetryBc,
    TruncatedDomain, WaveguideGeometry,
};
pub use mesh::Mesh;
pub use modal::{Port, PortBasis, PortId, PortKind, PortSide, TransverseMode};
pub use num_complex::Complex64;
pub use scattering::{
    AugmentedMatrix, Channel, HalfCoefficients, LimitMatrixMixed, LimitMatrixNeumann, ScatteringMatrix,
    ScatteringPair, SolveOptions,
};
pub use asymptotics::MobiusCircle;
pub use search::{GeometryFamily, MatrixRecord, PeakSet, Quantity, RefinedPoint, SweepRecord, Target};
pub use solver::ComplexField;
