//! File formats, figures, parallel experiment drivers and the command line
//! front end for `riskbound-core`.

pub mod error;
pub mod experiments;
pub mod formats;
pub mod gev;
pub mod mps;
pub mod sigma;
pub mod svg;

pub use error::{AppError, AppResult};
