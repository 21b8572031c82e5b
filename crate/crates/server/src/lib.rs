//! Command-line interface and HTTP service over the `causalis` library.

pub mod cli;
pub mod ops;
pub mod service;
pub mod store;
