pub mod error;
pub mod linalg;
pub mod model;
pub mod enskog;
pub mod profile;
pub mod spectral;
pub mod evans;
pub mod front;
pub mod sim2d;
pub mod config;
pub mod report;
pub mod pipeline;

pub use error::{Error, Result};
