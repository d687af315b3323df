pub mod analysis;
pub mod checks;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod presets;
pub mod resolvent;
pub mod scheme;

pub use error::{Error, Result};
