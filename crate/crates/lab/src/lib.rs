//! File-based experiment pipeline around `timebin-core`: TOML configs,
//! CSV/JSON artifacts, and the stage runner behind the `timebin` binary.

pub mod config;
pub mod formats;
pub mod pipeline;
