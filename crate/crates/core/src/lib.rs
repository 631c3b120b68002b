// `!(x > y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamform;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod metrics;
pub mod runner;
pub mod scene;
pub mod wola;

pub use error::{Error, Result};
