//! Periodic-box Fourier representation and the linear operators acting on it.

pub mod checkpoint;
mod fft;
pub mod field;
pub mod grid;
pub mod operators;
pub mod params;

pub use field::{
    backward_scalar, forward_scalar, transform_backward, transform_forward, SpectralScalar,
    SpectralVectorField,
};
pub use grid::Grid;
pub use operators::{
    apply_derivative, dealias, helmholtz_apply, helmholtz_filter, leray_project, Derivative,
    Derived,
};
pub use params::ModelParams;

/// `build_grid` in operation form.
pub fn build_grid(dim: usize, points_per_dim: usize, box_length: f64) -> crate::Result<Grid> {
    Grid::new(dim, points_per_dim, box_length)
}
