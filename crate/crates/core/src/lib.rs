pub mod anonymize;
pub mod data;
pub mod dimreduce;
pub mod evaluate;
pub mod error;
pub mod linalg;
pub mod multidim;
pub mod rng;
pub mod value;

pub use error::{Error, Result};
pub use rng::Rng;
