//! Numerical toolkit for the derivative nonlinear Schrodinger equation
//!
//! ```text
//! i q_t + q_xx + i (|q|^2 q)_x = 0
//! ```
//!
//! on a periodic interval, organized around its Lax pair. The crate provides
//! the explicit one-soliton family and its fundamental eigenvector matrix,
//! Darboux/Backlund transformations that add or remove a bound state, Jost
//! solutions of the spatial spectral problem together with their time flow,
//! an integrating-factor RK4 evolver for the equation itself, and a stability
//! harness that strips a soliton from perturbed data, co-evolves field and
//! eigenfunctions, and measures the orbital distance to the soliton family.
//!
//! All fields live on uniform periodic grids of complex samples. Quadrature
//! is the rectangle rule, differentiation is spectral unless a routine
//! documents otherwise, and every module exposes sequential implementations
//! alongside the default data-parallel ones (see the `parallel` feature).

pub mod backlund;
pub mod config;
pub mod error;
pub mod evans;
pub mod evolve;
pub mod grid;
pub mod harness;
pub mod io;
pub mod jost;
pub mod lax;
pub mod soliton;
pub mod spectral;

pub use error::{DnlsError, Result};
pub use grid::Grid;

/// Complex sample type used for all fields.
pub type C64 = num_complex::Complex64;
