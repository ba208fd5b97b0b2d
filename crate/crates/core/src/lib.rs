//! Gabor analysis at critical lattice density.
//!
//! The Gaussian coherent states `e_λ` indexed by the integer lattice are
//! complete but not a frame. Adjoining one half-integer "sharp" atom gives a
//! relaxed system with bounded, explicitly computable expansion coefficients.
//! This crate implements that expansion on sampled signals, together with the
//! Zak transform, theta functions, higher-order variants with dual atoms,
//! metaplectic rotations and a constructive decomposition of signals
//! concentrated in a phase-plane domain.

pub mod certainty;
pub mod config;
pub mod error;
pub mod expansion;
pub mod gabor;
pub mod higher;
pub mod io;
pub mod metaplectic;
pub mod numerics;
pub mod phaseplane;
pub mod verify;
pub mod zak;

pub use error::{Error, Result};
pub use num_complex::Complex64;
