//! Relative torsion for cochain complexes of finitely generated Hilbert
//! modules over a finite von Neumann algebra.
//!
//! The algebra is either `C` or the group algebra of a finite group acting on
//! `l^2(G)`. Every module map is stored through its expansion as a complex
//! matrix commuting with the left regular action, and every determinant is a
//! Fuglede-Kadison determinant normalized by the group order.

pub mod cli;
pub mod complex;
pub mod cone;
pub mod detclass;
pub mod error;
pub mod linalg;
pub mod morse;
pub mod random;
pub mod report;
pub mod scenario;
pub mod vna;
pub mod witten;

pub use error::{Error, Result};
pub use num_complex::Complex64;
