pub mod dirichlet;
pub mod error;
pub mod kernels;
pub mod lab;
pub mod numtheory;
pub mod quadrature;
pub mod sparse;
pub mod symbols;
pub mod volterra;

pub use error::{Error, Result};
