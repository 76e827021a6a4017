//! A binary floating-point kernel with a configurable precision and
//! exponent range, correct rounding, and an exact reference arithmetic.

mod exact;
mod format;
mod fpn;

pub mod eft;
pub mod ops;
pub mod round;

pub use eft::{fast2mult, fast2sum, Pair};
pub use exact::ExactReal;
pub use format::{Format, Ties};
pub use fpn::Fpn;
pub use ops::{OpTally, Rounded};
pub use round::round;
