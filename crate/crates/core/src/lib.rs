//! Exact p-adic kernels for growth computations along the cyclotomic tower.
//!
//! Everything is computed exactly in Z/p^N with tracked denominators and
//! truncation degrees; there is no floating point anywhere. The crate is
//! generic over an integer scalar ([`scalar::Scalar`]) with a fast `u128`
//! instantiation and an unbounded `BigUint` one.

// Index loops deliberately mirror the row/column notation of the matrix and
// pivot-table code; the iterator rewrites the lint suggests read worse here.
#![allow(clippy::needless_range_loop)]

pub mod cyclo;
pub mod error;
pub mod growth;
pub mod iwasawa;
pub mod linalg;
pub mod logmatrix;
pub mod padic;
pub mod scalar;
pub mod series;
pub mod valuation;
pub mod verify;

pub use error::{Error, Result};
pub use padic::Zp;
pub use scalar::{Fast, Scalar, Wide};
pub use series::Series;
pub use valuation::{ExtVal, Rat, ValMatrix};
