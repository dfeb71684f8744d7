//! Command-line and HTTP front ends for SOS extraction and optimization.

pub mod config;
pub mod http;
pub mod ops;

pub use config::Config;
