pub mod chaos;
pub mod error;
pub mod experiments;
pub mod graduation;
pub mod mechsde;
pub mod paths;
pub mod rajchman;
pub mod stochastics;

pub use error::{Error, Result};
