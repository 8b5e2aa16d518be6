pub mod agents;
pub mod error;
pub mod harness;
pub mod hexfloat;
pub mod learners;
pub mod streams;
pub mod types;

pub use error::{Error, Result};
