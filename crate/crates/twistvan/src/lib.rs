//! File formats, batch evaluation and experiment reports on top of
//! `twistvan-core`.

pub mod batch;
pub mod cache;
pub mod config;
pub mod error;
pub mod records;
pub mod suite;

pub use error::{AppError, AppResult};
