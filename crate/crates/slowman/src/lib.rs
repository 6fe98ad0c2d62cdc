//! Slow-manifold analysis of slow-fast dynamical systems.
//!
//! A slow-fast system spends most of its time near a low-dimensional *slow
//! manifold* and only briefly on fast excursions. This crate locates that
//! manifold directly from trajectory-curve kinematics: in 2D the slow
//! manifold is approximated by the vanishing of the curvature of trajectory
//! curves, in 3D by the vanishing of their torsion; the (historically
//! earlier) singular approximation and an eigenvalue-based tangent
//! linear system formulation are implemented alongside and cross-checked
//! against the kinematic route.
//!
//! The pieces:
//!
//! * [`model`] — built-in benchmark systems (Van der Pol, cubic Chua,
//!   Lorenz, Volterra-Gause) and a small text format for user models
//!   ([`expr`]).
//! * [`kinematics`] — velocity, acceleration, jerk, Frenet frame,
//!   curvature, torsion at a state.
//! * [`manifold`] — implicit slow-manifold fields, attractivity, slow/fast
//!   domain classification, closed-form Van der Pol curves.
//! * [`tls`] — jacobian eigen-decomposition with fast/slow splitting,
//!   eigenvalue-free manifold polynomials, and the conjugate-product
//!   equivalence between the eigen route and the kinematic route.
//! * [`trajectory`] — fixed-step RK4 and adaptive RK45 integration with
//!   dense output and Poincaré section crossings.
//! * [`levelset`] — marching-squares / marching-cubes zero-set extraction,
//!   the singular manifold (section ∩ surface), and its deployment by the
//!   flow.
//! * [`verify`] — a seeded, self-contained cross-check suite wiring the
//!   kinematic and eigenvalue routes together.
//! * [`csvio`] / [`cli`] — reproducible CSV/OBJ artifacts and the
//!   `slowman` command-line tool.

pub mod cli;
pub mod csvio;
pub mod expr;
pub mod geom;
pub mod kinematics;
pub mod levelset;
pub mod manifold;
pub mod model;
pub mod tls;
pub mod trajectory;
pub mod verify;
