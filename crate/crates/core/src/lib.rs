//! Typed sparse random networks: sampling, empirical measures, rate functions and
//! numerical checks of their large-deviation behaviour.

pub mod empirical;
pub mod error;
pub mod experiment;
pub mod measure;
pub mod model;
pub mod rates;
pub mod sum;
pub mod verify;

pub use error::{Error, Result, Violation};
