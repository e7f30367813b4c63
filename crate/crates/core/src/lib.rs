#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x <= tol)` also rejects NaN

pub mod cli;
pub mod document;
pub mod dynamics;
pub mod error;
pub mod measure;
pub mod norm;
pub mod ode;
pub mod random;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
