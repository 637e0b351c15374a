//! Finsler metrics on the two-sphere whose geodesics are circles.
//!
//! The crate builds circular path geometries from an odd curvature field
//! `kappa` on the sphere of oriented great-circle planes, turns a positive
//! density on that sphere into a Finsler metric through a Crofton-type
//! construction, and verifies numerically that the metric's geodesics are
//! the circles of the path geometry. A hyperbolic-plane horocycle family is
//! included as a contrast case where the construction does not preserve
//! geodesics.
//!
//! Module map:
//!
//! * [`quat`]: quaternions, the Hopf map, the rotation cover and bivector
//!   coordinates on oriented 2-planes of `R^4`.
//! * [`circle`]: oriented circles on the unit sphere.
//! * [`kappa`]: curvature fields, the great-circle fibration solve and the
//!   map from contact elements to circle parameters.
//! * [`grid`]: icosahedral quadrature grids.
//! * [`metric`]: the fiber density, the Finsler norm and the Crofton oracle.
//! * [`geodesic`]: Euler-Lagrange integration, minimality and measure recovery.
//! * [`hyperbolic`]: horocycles in the hyperboloid model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle;
pub mod cosine;
pub mod error;
pub mod geodesic;
pub mod grid;
pub mod hyperbolic;
pub mod kappa;
pub mod metric;
pub mod quat;

pub use error::{Error, Result};

/// Three-vectors in the ambient space of the sphere.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Four-vectors, identified with quaternions `w + x i + y j + z k`.
pub type Vec4 = nalgebra::Vector4<f64>;
/// Chart coordinates and chart velocities.
pub type Vec2 = nalgebra::Vector2<f64>;
