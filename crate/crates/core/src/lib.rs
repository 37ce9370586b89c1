pub mod error;
pub mod fom;
pub mod harness;
pub mod interp;
pub mod multiindex;
pub mod par;
pub mod points;
pub mod providers;

pub use error::{Error, Result};
