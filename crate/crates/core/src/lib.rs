pub mod dynsys;
pub mod certloss;
pub mod error;
pub mod neural;
pub mod setcore;
pub mod trainer;
pub mod zeroset;

pub use error::{Error, Result};
