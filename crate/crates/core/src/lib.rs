//! Numerical toolkit for the fundamental R-operators of the quantum loop
//! algebras `U_q(L(sl_{l+1}))` and the spin chains built from them.

pub mod boundary;
pub mod chain;
pub mod error;
pub mod exec;
pub mod qcore;
pub mod repkit;
pub mod rmat;
pub mod suite;
pub mod tensorlab;

pub use error::{Error, Result};
