pub mod datasets;
pub mod distributions;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod reservoir;
pub mod ts;

pub use error::{Error, Result};
