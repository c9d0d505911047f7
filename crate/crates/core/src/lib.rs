// `!(x > 0.0)` guards are meant to reject NaN; quadrature nodes keep their
// published digits
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod mollifier;
pub mod numeric;

pub use error::{Error, Result};
pub mod geometry;
pub mod measure;
pub mod nufft;
pub mod spectrum;
pub mod ratio;
pub mod threshold;
pub mod torus;
pub mod report;
