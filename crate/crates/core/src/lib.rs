//! Numerics for symmetry reduction of natural Lagrangian systems.
//!
//! Given a system with a free isometric group action (a floating board, a
//! mass on a rotating disc, N particles under rigid motions, or a
//! user-supplied table-driven system), this crate constructs the
//! g-orthogonal connection from the momentum map, splits velocities into
//! vertical and horizontal parts, lifts closed shape-space loops to
//! recover the group drift they generate (the geometric phase), and
//! measures the connection's curvature.
//!
//! Modules, bottom to top:
//!
//! - [`lie`]: group elements, algebra structure constants, exp/log,
//!   adjoint actions, admissible bilinear forms.
//! - [`geometry`]: the [`geometry::SystemModel`] evaluation maps and the
//!   quantities derived from them (Lagrangian, momentum map, Gram
//!   matrix, lift derivatives).
//! - [`connection`]: the connection components at a point, the
//!   horizontal projection, and its pointwise identities.
//! - [`dynamics`]: shape paths, horizontal lifts, loop holonomy, and
//!   numerical curvature.
//! - [`systems`]: builtin models and shape-path generators.
//! - [`verify`]: randomized identity sweeps, parallel by default via
//!   [`exec`].

pub mod connection;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod lie;
pub mod systems;
pub mod verify;

pub use connection::{connection_at, horizontal_projection, ConnectionEval};
pub use dynamics::{holonomy, horizontal_lift, Integrator, LiftOptions, ShapePath, Trajectory};
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use geometry::{SystemModel, TangentSample};
pub use lie::{AlgebraVector, BilinearForm, DualVector, GroupElement, LieStructure};
pub use verify::{verify_system, VerifyReport};
