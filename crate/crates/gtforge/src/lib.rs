//! File formats, file-backed clips and the command-line workflows of the
//! `gtforge` toolkit. The algorithms live in `gtforge-core`.

pub mod cli;
pub mod clip;
pub mod commands;
pub mod error;
pub mod io;
pub mod report;

pub use clip::FileClip;
pub use error::{Error, Result};
pub use gtforge_core as core;
