pub mod embedding;
pub mod error;
pub mod kernels;
pub mod lap;
pub mod perm;
pub mod pipeline;
pub mod qap;
pub mod rng;
pub mod subset;

pub use error::{Error, Result};
