//! Twisted traces of cycle integrals and theta lifts of the weight 1/2
//! form `h` whose shadow is the theta function.

pub mod arith;
pub mod cli;
pub mod error;
pub mod lift;
pub mod modfun;
pub mod qforms;
pub mod specfun;
pub mod traces;
pub mod verify;

pub use error::{Error, Result};
