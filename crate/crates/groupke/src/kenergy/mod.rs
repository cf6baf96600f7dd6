//! Reduced K-energy K(u) = L(u) + N(u) and its soliton-modified variant
//! on smooth candidates u = u0 + f, pointwise scalar curvature, the Q
//! diagnostic, discrete Legendre transforms, and a desk-scale
//! coefficient-descent minimizer.

pub mod candidate;
pub mod chi;
pub mod functional;
pub mod guillemin;
pub mod legendre;
pub mod minimize;
pub mod scalar;

pub use candidate::{symmetrize, SmoothCandidate};
pub use chi::ChiFunction;
pub use functional::{kenergy_value, modified_kenergy_value, nonlinear_n, KEnergyValue, QuadValue};
pub use guillemin::GuilleminFunction;
pub use legendre::{legendre_transform, make_grid};
pub use minimize::{minimize_kenergy, MinimizeResult, TraceStep};
pub use scalar::{q_diagnostic, q_diagnostic_expanded, scalar_curvature_at};

use thiserror::Error;

/// Quadrature / truncation configuration shared by the K-energy
/// operations.
#[derive(Debug, Clone)]
pub struct QuadConfig {
    /// Grundmann-Moller index; the rule is exact to degree 2s+1 and a
    /// second evaluation at s+1 supplies the error estimate.
    pub quad_s: usize,
    /// Nodes closer than `wall_margin_rel` times the polytope diameter
    /// to a Weyl wall are dropped (pi vanishes quadratically there while
    /// chi(grad u) blows up).
    pub wall_margin_rel: f64,
    /// Maximum tolerated fraction of (absolute) quadrature mass dropped
    /// at walls or chamber violations before the evaluation errors out.
    pub dropped_mass_bound: f64,
    /// Relative tolerance driving adaptive cell bisection.
    pub refine_rel: f64,
    /// Depth cap for the bisection cascade.
    pub max_refine_depth: usize,
    /// Budget on the total number of bisections per integral.
    pub max_refine_splits: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            quad_s: 6,
            wall_margin_rel: 1e-6,
            dropped_mass_bound: 0.01,
            refine_rel: 1e-9,
            max_refine_depth: 30,
            max_refine_splits: 20_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum KEnergyError {
    #[error("dropped quadrature mass fraction {fraction} exceeds the configured bound")]
    ChamberViolation { fraction: f64 },
    #[error("candidate Hessian is not positive definite at a quadrature node")]
    NotConvexAtNodes,
    #[error("evaluation point is within the wall margin of a Weyl wall or facet")]
    WallTooClose,
    #[error("candidate Hessian is numerically singular at the evaluation point")]
    SingularHessian,
    #[error("input samples are not convex")]
    NotConvexSamples,
    #[error("no descent step found from the initial candidate")]
    NoDescent,
}
