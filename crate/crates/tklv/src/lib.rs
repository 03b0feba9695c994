//! Twisted Kazhdan-Lusztig-Vogan polynomials for extended blocks.
//!
//! The crate is organised bottom-up: [`laurent`] is the coefficient ring,
//! [`extblock`] the parameter data, [`hecke`] the module action, and [`klv`]
//! the recursion engine that fills the polynomial table.

pub mod construct;
pub mod extblock;
pub mod hecke;
pub mod klv;
pub mod laurent;
pub mod oracle;

pub use extblock::{BlockError, BlockOrder, ExtBlock, LoadError, TypeCode, ValidationError};
pub use hecke::{ModuleVector, OperatorMatrix};
pub use klv::{compute_all, Entry, KlvError, MCoeff, PolyTable, Route};
pub use laurent::{LaurentError, LaurentPoly, PlusMinus};
