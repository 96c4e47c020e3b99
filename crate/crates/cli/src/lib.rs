//! Command-line interface and HTTP service over `provision-core`, with an
//! on-disk registry of applications and their models.

pub mod cli;
pub mod config;
pub mod io;
pub mod service;
pub mod store;

pub use cli::run;
pub use config::ServiceConfig;
pub use store::{RegistryStore, StoreError};
