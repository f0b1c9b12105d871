//! Configuration, commands and file formats around `bdglab-core`.
//!
//! Every command reads a [`config::RunConfig`], writes its files into the
//! configured output directory and returns its result for further use.

#![warn(missing_docs)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod commands;
pub mod config;
pub mod emit;
mod error;

pub use error::{CliError, Result};
