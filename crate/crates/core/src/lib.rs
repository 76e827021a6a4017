pub mod argred;
pub mod constgen;
pub mod error;
pub mod realnum;
pub mod softfp;
pub mod theorems;

pub use error::{Error, Result};
