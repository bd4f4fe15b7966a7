//! File formats, parsers and pipelines around `stormscope-core`: FPK1 field
//! packs, best-track CSV, cyclone XML, run manifests and the fixture catalog.

pub mod cli;
pub mod config;
pub mod ddpm_io;
pub mod error;
pub mod fixtures;
pub mod fpk;
pub mod gz;
pub mod ibtracs;
pub mod manifest;
pub mod output;
pub mod synth;
pub mod tigge;
pub mod windows;

pub use error::{IoError, Result};
pub use fpk::{FieldPack, PackTime};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
