#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod fock;
pub mod linalg;
pub mod process;
pub mod qform;
pub mod quadratic;
pub mod tomo;
pub mod verify;
pub mod wire;

pub use error::{Error, Result};
pub use exec::Exec;
pub use qform::{ChoiBlocks, GaussianQForm, Partition};
