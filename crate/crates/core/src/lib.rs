//! Decides whether triple-product isotypic components of the modified
//! diagonal cycle on a modular curve vanish, from newform orbit data and
//! local representation types, with exact arithmetic throughout.

pub mod arith;
pub mod cli;
pub mod construct;
pub mod cyclotomic;
pub mod data;
pub mod error;
pub mod goodness;
pub mod isogeny;
pub mod localglobal;
pub mod repcore;

pub use error::{Error, Result};
