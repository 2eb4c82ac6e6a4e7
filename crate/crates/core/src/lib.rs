pub mod baselines;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod gnn;
pub mod numerics;
pub mod precise;
pub mod rate;
pub mod training;

pub use error::{Error, Result};
