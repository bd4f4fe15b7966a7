//! Numerical core for extreme-weather forecast verification, tropical-cyclone
//! tracking and diffusion-based refinement of smooth forecasts.
//!
//! The crate is `no_std` and only needs an allocator. File formats, command-line
//! handling and anything else touching the operating system live in the
//! `stormscope` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod climatology;
pub mod ddpm;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod synth;
pub mod tceval;
pub mod track;
pub mod tracker;

pub use error::{Error, Result};
pub use grid::{Field, FieldSet, GridSpec, LatLon, VarName, VariableId};
