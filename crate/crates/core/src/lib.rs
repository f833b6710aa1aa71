//! Open quantum system dynamics on sparse complex matrices.
//!
//! [`Qobj`] holds kets, bras, operators and superoperators together with the
//! tensor structure of their space. Lindblad master-equation evolution lives
//! in [`mesolve`], quantum-jump Monte-Carlo evolution in [`mcsolve`].

pub mod analysis;
pub mod dense;
pub mod error;
pub mod factory;
pub mod mcsolve;
pub mod mesolve;
pub mod ode;
pub mod qobj;
pub mod sparse;
pub mod table;

pub use num_complex::Complex64 as C64;

pub use crate::error::{QError, Result};
pub use crate::qobj::{tensor, DimSpec, Dims, Eigenstates, QType, Qobj};
