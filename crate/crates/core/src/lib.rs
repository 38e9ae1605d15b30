//! Distributed automatic load control for multi-area power networks.
//!
//! * [`netmodel`]: buses, lines, areas and the incidence algebra.
//! * [`olc`]: the optimal load control program and an independent oracle.
//! * [`dynamics`]: closed-loop simulation of the swing model with the
//!   load controller, its gradient form and its stationary form.
//! * [`certify`]: Lyapunov certificates, rate fitting and robustness bounds.
//! * [`scenario`]: declarative experiments, sweeps and export.

pub mod error;
pub mod netmodel;
pub mod olc;
pub mod dynamics;
pub mod certify;
pub mod scenario;

pub use error::{Error, Result};
