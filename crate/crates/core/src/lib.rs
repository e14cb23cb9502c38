//! Pseudospectral solvers for the scaled Navier-Stokes-Korteweg system and
//! the viscous quasi-geostrophic equation on the periodic square, with the
//! energy functionals used to measure the low-Mach, vanishing-capillarity
//! limit between them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constitutive;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod nsk;
pub mod qg;
pub mod spectral;

pub use constitutive::{validate_params, Params};
pub use error::{Error, Result};
pub use nsk::{NskSolver, NskState, Scheme};
pub use qg::{QgSolver, QgState};
pub use spectral::{ScalarField, SpectralWorkspace, SymTensorField, VectorField};
