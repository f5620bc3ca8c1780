// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod cli;
pub mod error;
pub mod fss;
pub mod hardy;
pub mod localscale;
pub mod presets;
pub mod realline;
pub mod report;

pub use error::{Error, Result};
