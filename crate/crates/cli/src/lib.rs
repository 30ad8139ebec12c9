//! Library surface of the `omcrep` runner: configuration, the trace file
//! format, and the command implementations. The binary in `main.rs` is a
//! thin argument-parsing and exit-code layer over this.

pub mod commands;
pub mod config;
pub mod trace;
