//! Right-hand sides of the VCHE and NSE, pressure recovery, and initial
//! data.

pub mod initial;
pub mod nonlinear;

pub use initial::{generate_initial_data, taylor_green, InitialDataSpec, InitialKind};
pub use nonlinear::{
    advective_terms, full_rhs, nse_nonlinear, pressure_source, recover_pressure, rotational_terms,
    vche_nonlinear, vche_nonlinear_with, NonlinearForm, PressureField,
};
