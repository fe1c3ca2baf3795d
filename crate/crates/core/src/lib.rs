pub mod adjust;
pub mod bench;
pub mod error;
pub mod locus;
pub mod output;
pub mod pipeline;
pub mod scan;
pub mod sim;
pub mod special;
pub mod stats;
pub mod sync;
pub mod variance;

pub use error::{Error, Result};
