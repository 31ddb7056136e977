//! Portfolio turnover under crossing of trades.

pub mod alpha;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod market_data;
pub mod statistics;
pub mod theory;
pub mod turnover;

pub use error::{Error, Result};
pub use linalg::Matrix;
