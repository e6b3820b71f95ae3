//! Config ingestion and CSV emission for the command-line driver.

pub mod config;
pub mod csv;

pub use config::{load_system, System};
