pub mod cli;
pub mod cluster_sim;
pub mod data;
pub mod error;
pub mod format;
pub mod model;
pub mod nucleus;
pub mod numerics;
pub mod seed;

pub use error::{Error, Result};
