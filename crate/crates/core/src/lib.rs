//! Learning optimal transport maps onto PDE-induced target measures with
//! ReLU networks, plus numerical probes of the regularity and excess-risk
//! theory behind them.

pub mod error;
pub mod experiment;
pub mod map;
pub mod measures;
pub mod neural;
pub mod risk;
pub mod rng;
pub mod trainer;
pub mod transport;

pub use error::{Error, Result};
pub use experiment::Example;
pub use map::{IdentityMap, PushforwardMap, ScalarMap};
