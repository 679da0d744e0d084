//! Equivariant filter for bearing-only landmark estimation in the plane.
//!
//! The library splits into a generic observer and one concrete system:
//!
//! - [`group`] holds the symmetry group `(S1 x R+)^n`, its actions on
//!   landmark configurations, velocities and bearings, and the lift of the
//!   kinematics onto the group algebra.
//! - [`filter`] is the filter engine: linearization about a fixed origin,
//!   Riccati propagation in 2x2 blocks, innovation, and the observer step.
//! - [`slam2d`] instantiates the derotated planar landmark system with
//!   closed-form linearization blocks and an excitation monitor.
//! - [`sim`] generates ground truth, runs the closed loop, and records it.
//! - [`analysis`], [`export`] and [`config`] cover metric extraction,
//!   CSV/SVG artifacts, and the text configuration format used by the CLI.

pub mod analysis;
pub mod config;
pub mod error;
pub mod export;
pub mod filter;
pub mod group;
pub mod mat2;
pub mod selfcheck;
pub mod sim;
pub mod slam2d;
