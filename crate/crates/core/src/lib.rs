//! Modulational stability of small periodic traveling waves in nonlocal
//! dispersive equations of KdV, BBM and regularized Boussinesq type.
//!
//! Closed-form instability indices (`indices`) and reduced spectral pencils
//! (`pencil`) are cross-checked against truncated Floquet-Bloch spectra
//! (`hill`) of waves computed by a Newton-Galerkin solver (`stokes`).

pub mod diagram;
pub mod dispersion;
pub mod error;
pub mod hill;
pub mod indices;
pub mod numerics;
pub mod pencil;
pub mod stokes;
pub mod validate;

pub use error::{Error, Result};
