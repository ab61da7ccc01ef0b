//! Hyperbolic polynomials, mixed characteristic polynomials and the
//! interlacing-family partitioner for resolutions of the identity in a
//! hyperbolicity cone.

pub mod bounds;
pub mod error;
pub mod hyperbolic;
pub mod mixedchar;
pub mod oracles;
pub mod partition;
pub mod polyalg;

pub use error::{Error, Result};
