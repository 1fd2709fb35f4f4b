pub mod commands;
pub mod ensembles;
pub mod entanglement;
pub mod error;
pub mod generator;
pub mod linalg;
pub mod propagators;
pub mod scenarios;
pub mod stats;

pub use error::{Error, Result};
