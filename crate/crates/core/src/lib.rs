//! Pseudospectral laboratory for the viscous Camassa-Holm equations
//! (Navier-Stokes-alpha) on periodic boxes.
//!
//! The momentum `v` is advected by the filtered velocity `u`, related by the
//! Helmholtz filter `u - alpha^2 Lap u = v`:
//!
//! ```text
//! v_t + u.grad v + sum_j v_j grad u_j + grad p = nu Lap v,   div v = 0
//! ```
//!
//! With `alpha = 0` this reduces to the incompressible Navier-Stokes
//! equations.

pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod models;
pub mod spectral;

pub use error::{FlowError, Result};
