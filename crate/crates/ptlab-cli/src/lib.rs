//! Library surface of the experiment runner: configuration parsing, the
//! experiment drivers, artifact writers and the SVG emitter. The binary in
//! `main.rs` is a thin argument-parsing shell over these.

pub mod artifacts;
pub mod config;
pub mod experiments;
pub mod svg;
