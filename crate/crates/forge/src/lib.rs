//! File formats, batch pipeline and command line for the Mugen data generator.
//!
//! The simulation itself lives in `mugenforge-core`; this crate adds the
//! canonical episode codec, image/audio/CSV encoders, configuration loading and
//! the parallel batch commands behind the `mugenforge` binary.

pub mod codec;
pub mod config;
pub mod media;
pub mod pipeline;
