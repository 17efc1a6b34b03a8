//! Numerical models of a narrow-band, frequency-uncorrelated photon-pair
//! source feeding an EIT atomic memory.
//!
//! * [`spectral`]: cavity line shapes, pump spectra and the joint spectral
//!   amplitude.
//! * [`biphoton`]: spectral purity (interference visibility) and two-photon
//!   time distributions.
//! * [`eit`]: transparency window, slow light, pulse propagation and a
//!   stop-light memory.
//! * [`qubit`]: polarization qubits, the dual-rail memory channel, CHSH and
//!   cross-correlation diagnostics.
//! * [`svg`]: dependency-free heatmap, curve and bar-chart rendering.

// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biphoton;
pub mod eit;
mod error;
mod linalg;
pub mod optimize;
pub mod qubit;
pub mod spectral;
pub mod svg;

pub use error::{Error, Result};
