//! File formats, trace output, Monte Carlo campaigns and the command-line
//! front end for [`accelnet_core`].

pub mod cli;
mod error;
pub mod io;
pub mod montecarlo;
pub mod report;

pub use error::FormatError;
