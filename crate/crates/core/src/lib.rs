//! Spectral machinery of the Grushin operator `L = -Δ_x - |x|²Δ_t` on `R^{d₁}×R^{d₂}`.

pub mod error;
pub mod hermite;
pub mod io;
pub mod norms;
pub mod quadrature;
pub mod restriction;
pub mod specfun;
pub mod tensor;
pub mod weyl;

pub use error::{Error, Result};
