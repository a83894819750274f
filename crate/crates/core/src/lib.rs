pub mod classify;
pub mod cli;
pub mod dsp;
pub mod epochset;
pub mod error;
pub mod features;
pub mod filterbank;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
