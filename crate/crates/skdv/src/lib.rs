//! Numerical realization of a boundary-corrected Duhamel fixed-point solver
//! for the coupled Schrodinger-KdV system on the half-line, together with a
//! verification suite for the underlying multiplier-estimate machinery
//! (admissibility ranges, reduced supremum integrals, trilinear dual forms,
//! and the weighted-convolution calculus lemma).

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod halfline;
pub mod norms;
pub mod propagators;
pub mod quad;
pub mod solver;
pub mod verifier;

pub use error::{Result, SkdvError};
