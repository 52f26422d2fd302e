pub mod contour;
pub mod edge;
pub mod error;
pub mod fixtures;
pub mod fmm;
pub mod grid;
pub mod linalg;
pub mod metric;
pub mod oracle;
pub mod pipeline;

pub use error::{Error, Result};
