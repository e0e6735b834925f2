#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod extension;
pub mod fit;
pub mod fraclap;
pub mod hankel;
pub mod hardy;
pub mod linalg;
pub mod par;
pub mod quad;
pub mod radial;
pub mod report;
pub mod semilinear;
pub mod special;

pub use error::{Error, Result};
