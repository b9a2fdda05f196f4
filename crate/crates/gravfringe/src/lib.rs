//! Numerical model of gravitationally induced entanglement between two
//! trapped masses held in relativistic coherent-state superpositions.
//!
//! Units are dimensionless throughout: lengths in Compton wavelengths, times
//! in inverse Compton frequencies and the trap frequency as `ħω / mc²`.

pub mod action_engine;
pub mod error;
pub mod quadrature;
pub mod rel_coherent;
pub mod trap_modes;
pub mod visibility;

pub use error::{Error, Result};

/// Shortest round-trip text for a float, in exponent form outside `[1e-4, 1e15)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
