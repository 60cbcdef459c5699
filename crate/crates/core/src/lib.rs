//! Numerical laboratory for the tight-binding Schrödinger equation with
//! Markovian diagonal noise.
//!
//! The crate simulates single noise realizations of
//! `i d/dt psi = K psi + v_x(omega_t) psi` on finite periodic lattices,
//! estimates densities, moments and characteristic functions by Monte Carlo
//! over independent trajectories, and independently computes the diffusion
//! matrix and spectral structure of the augmented generator on truncated
//! systems, cross-validating the two routes.

use blas_src as _;

pub mod augmented;
pub mod ensemble;
pub mod error;
pub mod evolve;
pub mod fourier;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod lr;
pub mod noise;
pub mod quadrature;

mod linalg;

pub use error::{Error, Result};
pub use kernel::{AssumptionReport, HoppingKernel};
pub use lattice::Lattice;
pub use wavefunction::{ExpProfile, WaveFunction};

pub mod wavefunction;

pub use num_complex::Complex64 as C64;
