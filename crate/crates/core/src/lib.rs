//! Individual-based simulation and numerics for locally regulated spatial
//! populations.

pub mod config;
pub mod error;
pub mod experiment;
pub mod ibm;
pub mod kernels;
pub mod lineage;
pub mod lookdown;
pub mod model;
pub mod pde;
pub mod plot;
pub mod rng;
pub mod stability;
pub mod stats;

pub use error::{Error, Result};
