//! Core engine for the Mugen platformer data generator.
//!
//! Everything in this crate is a pure function of its inputs: level layouts
//! come from a seed, episodes from a level plus a policy seed, and every
//! derived artifact (RGB frames, semantic maps, audio samples, captions,
//! statistics) from the recorded episode metadata alone. The crate is
//! `no_std` and only needs `alloc`; file formats and the command line live in
//! the companion `mugenforge` crate.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod audio;
pub mod autotext;
pub mod dataset;
pub mod entity;
pub mod episode;
pub mod math;
pub mod policy;
pub mod render;
pub mod scenario;
pub mod sim;
pub mod terrain;
pub mod worldgen;
pub mod xmetrics;

pub use entity::{Ability, EntityKind, Facing, Theme};
pub use episode::{EpisodeMetadata, FrameRecord, ReplayReport, SCHEMA_VERSION};
pub use policy::{AgentIntent, Policy, PolicyProfile, PresetRegistry};
pub use sim::{CharacterState, EndReason, EventKind, GameEvent, PoseId, SimState};
pub use worldgen::{generate_level, validate_level, EntitySpawn, GenConfig, LevelSpec};

/// Simulation and recording rate.
pub const FPS: u32 = 30;

/// Hard episode cap: 21 seconds at 30 fps.
pub const MAX_FRAMES: u32 = 630;

/// Minimum episode length, one 3.2 s clip.
pub const CLIP_FRAMES: u32 = 96;
