//! Construction and numerical verification of biconservative surfaces with
//! parallel normalized mean curvature in the unit sphere S⁴.
//!
//! Two pipelines build the same surfaces. The intrinsic one starts from the
//! curvature κ of the level curves of the Gaussian curvature and integrates
//! its third order ODE. The extrinsic one starts from the constants (c, C),
//! integrates the mean curvature profile f, the Frenet frame of the
//! directrix, and sweeps circles to obtain a parametrized patch in E⁵.
//! [`verify`] recomputes everything from the patch points alone.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod exec;
pub mod extrinsic;
pub mod intrinsic;
pub mod io;
pub mod odecore;
pub mod profile;
pub mod scan;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
