#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and control of a two-joint extensible boom (revolute pitch,
//! prismatic extension) pressing a compliant pad against a planar wall.
//!
//! - [`model`]: kinematics and damped resolved-rate control.
//! - [`compliance`]: task-space stiffness of the arm and pad.
//! - [`plant`]: contact, friction and sensor simulation on a fixed-rate
//!   multi-loop timeline.
//! - [`control`]: contact detection, gain-scheduled admittance, trajectory
//!   tracking.
//! - [`harness`]: scenarios, metrics, identification and verification.

pub mod cli;
pub mod compliance;
pub mod control;
pub mod error;
pub mod harness;
pub mod model;
pub mod plant;

pub use error::{Result, SimError};
