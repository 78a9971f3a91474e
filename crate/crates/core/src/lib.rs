//! Weather-shock spillovers across regional economies linked by trade,
//! estimated as a global vector autoregression.

pub mod alternatives;
pub mod bootstrap;
pub mod calendar;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimation;
pub mod gvar;
pub mod ingest;
pub mod irf;
pub mod ols;
pub mod pipeline;
pub mod shocks;
pub mod states;
pub mod synth;
pub mod weights;

pub use error::{Error, Result};
