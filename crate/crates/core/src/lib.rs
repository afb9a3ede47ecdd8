#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod json;
pub mod plan;
pub mod quadrature;
pub mod roots;
pub mod runner;
pub mod simulate;
pub mod special_fn;

pub use error::{Error, Result};
