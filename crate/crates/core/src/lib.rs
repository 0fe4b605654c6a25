//! Equilibrium capillary bridges between rigid obstacles, computed by
//! minimizing total interface energy on a triangulated shell mesh.
//!
//! The crate is organized around a labeled surface mesh ([`mesh::ShellMesh`]),
//! signed-distance descriptions of the obstacles ([`distance::ObstacleField`]),
//! and curvature-free first- and second-order shape derivatives of the
//! interface energies ([`calculus`]). The [`system`] module assembles the
//! constrained stationarity conditions into a sparse KKT system and drives the
//! two-phase solve (smoothed gradient steps, then a proper Newton iteration on
//! a reduced motion basis). [`remesh`] restores mesh quality between the two
//! phases, [`forces`] post-processes a converged bridge into obstacle forces,
//! and [`verify`] provides the finite-difference oracles that back every
//! derivative expression.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default `std`
//! feature to use it in that configuration. File formats, configuration and
//! the command line live in the companion `capbridge` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod calculus;
pub mod distance;
pub mod forces;
mod mathx;
pub mod mesh;
pub mod quad;
pub mod remesh;
pub mod system;
pub mod vec3;
pub mod verify;

use alloc::string::String;
use core::fmt;

pub use vec3::{Mat3, Vec3};

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A triangle (or other geometric entity) degenerated below tolerance.
    DegenerateGeometry(String),
    /// An operation required a closed mesh but the mesh has boundary edges.
    OpenMesh,
    /// An operation required a consistently oriented mesh.
    InconsistentOrientation,
    /// Mesh connectivity is not a 2-manifold (an edge with more than two faces).
    NonManifold(String),
    /// The queried vertex does not lie on a triple line of the given obstacle.
    NotOnTripleLine { vertex: usize, obstacle: usize },
    /// Contact co-normals are (anti-)parallel, leaving no 2D motion subspace.
    DegenerateContact { vertex: usize },
    /// A distance field was evaluated at a point where it is not differentiable.
    SingularPoint(Vec3),
    /// A grid-backed field was queried outside its sampled domain.
    OutOfDomain(Vec3),
    /// Invalid argument or configuration value.
    InvalidParameter(String),
    /// The KKT system is singular or numerically rank deficient.
    SingularSystem {
        /// Suspected analytic kernel, derived from the geometric setup.
        hint: KernelHint,
        /// Number of pivots at or below the breakdown threshold.
        bad_pivots: usize,
    },
    /// A vertex update could not be made inversion-free by step halving.
    StepFailed(String),
    /// The outer iteration exhausted its budget.
    NonConvergence { residual: f64, iterations: usize },
    /// Newton projection onto an obstacle surface failed.
    ProjectionFailed { point: Vec3, residual: f64 },
}

/// Likely nullspace of a singular KKT system, used in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelHint {
    /// Rigid translation of the bridge (e.g. both obstacles are planes and no
    /// centroid constraint is active).
    Translation,
    /// Tangential motion along an obstacle or around a symmetry axis.
    Tangential,
    /// No specific kernel could be identified.
    Unknown,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegenerateGeometry(d) => write!(f, "degenerate geometry: {d}"),
            Error::OpenMesh => write!(f, "operation requires a closed mesh"),
            Error::InconsistentOrientation => {
                write!(f, "mesh orientation is not consistent")
            }
            Error::NonManifold(d) => write!(f, "non-manifold mesh: {d}"),
            Error::NotOnTripleLine { vertex, obstacle } => write!(
                f,
                "vertex {vertex} is not on the triple line of obstacle {obstacle}"
            ),
            Error::DegenerateContact { vertex } => write!(
                f,
                "contact co-normals at vertex {vertex} are parallel"
            ),
            Error::SingularPoint(p) => {
                write!(f, "distance field singular at ({}, {}, {})", p.x, p.y, p.z)
            }
            Error::OutOfDomain(p) => {
                write!(f, "point ({}, {}, {}) outside field domain", p.x, p.y, p.z)
            }
            Error::InvalidParameter(d) => write!(f, "invalid parameter: {d}"),
            Error::SingularSystem { hint, bad_pivots } => write!(
                f,
                "singular KKT system ({bad_pivots} degenerate pivots); suspected kernel: {hint:?}"
            ),
            Error::StepFailed(d) => write!(f, "step failed: {d}"),
            Error::NonConvergence {
                residual,
                iterations,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::ProjectionFailed { point, residual } => write!(
                f,
                "projection from ({}, {}, {}) did not converge (|dist| = {residual:.3e})",
                point.x, point.y, point.z
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
