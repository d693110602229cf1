//! Recorded episodes: running a policy on a level, the per-frame record,
//! its checksum, and replay verification.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::hash::Hasher;
use core::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::mix64;
use crate::policy::{make_policy, Navigator, PolicyError, PolicyProfile, PresetRegistry};
use crate::sim::{step, CharacterState, EndReason, EventKind, GameEvent, SimState};
use crate::worldgen::{validate_level, LevelSpec};
use crate::{CLIP_FRAMES, FPS, MAX_FRAMES};

pub const SCHEMA_VERSION: &str = "mugen.meta/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_idx: u32,
    pub mugen: CharacterState,
    pub monsters: Vec<CharacterState>,
    /// Bit `i` set once item `i` (in level item order) is collected.
    pub item_flags: u32,
    pub shield_active: bool,
}

impl FrameRecord {
    pub fn from_state(s: &SimState) -> FrameRecord {
        FrameRecord {
            frame_idx: s.frame_idx,
            mugen: s.mugen,
            monsters: s.monsters.clone(),
            item_flags: s.item_flags(),
            shield_active: s.shield_active,
        }
    }

    pub fn item_collected(&self, i: usize) -> bool {
        self.item_flags & (1 << i) != 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetadata {
    pub schema_version: String,
    pub level: LevelSpec,
    pub policy_name: String,
    pub policy_seed: u64,
    pub fps: u32,
    /// Frozen frames prepended so a short episode still fills one clip.
    pub idle_prefix: u32,
    pub frames: Vec<FrameRecord>,
    pub events: Vec<GameEvent>,
    pub end_reason: EndReason,
    pub checksum: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpisodeError {
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("unknown policy preset {0:?}")]
    UnknownPolicyPreset(String),
    #[error("episode invariant violated: {0}")]
    InvariantViolation(String),
}

/// Derive the per-episode policy seed from a level seed and a run seed.
pub fn policy_seed(level_seed: u64, run_seed: u64) -> u64 {
    mix64(level_seed ^ run_seed)
}

fn simulate(
    spec: &LevelSpec,
    profile: &PolicyProfile,
    seed: u64,
    prefix: u32,
) -> Result<(Vec<FrameRecord>, Vec<GameEvent>, EndReason), EpisodeError> {
    let terrain = spec.terrain();
    let mut policy = make_policy(profile, seed)?;
    let mut nav = Navigator::new();
    let mut state = SimState::new(spec, spec.seed ^ seed);
    let mut frames = Vec::with_capacity(MAX_FRAMES as usize);
    let mut events = Vec::new();
    frames.push(FrameRecord::from_state(&state));
    for _ in 0..prefix {
        state = state.held();
        frames.push(FrameRecord::from_state(&state));
    }
    let base = state.frame_idx;
    loop {
        let obs = nav.observe(&terrain, &state);
        let intent = policy.decide(&obs);
        let (next, ev) = step(&terrain, &state, intent).expect("loop stops at termination");
        state = next;
        events.extend(ev);
        frames.push(FrameRecord::from_state(&state));
        if let Some(reason) = state.terminated {
            return Ok((frames, events, reason));
        }
        debug_assert!(state.frame_idx > base);
    }
}

/// Play `profile` on `spec` until termination and record every frame.
///
/// Episodes that end before one clip's worth of frames are replayed with a
/// frozen prefix at the spawn so that every episode has at least
/// [`CLIP_FRAMES`] frames; play after the prefix is unchanged.
pub fn run_episode(
    spec: &LevelSpec,
    profile: &PolicyProfile,
    policy_seed: u64,
) -> Result<EpisodeMetadata, EpisodeError> {
    let report = validate_level(spec);
    if let Some(v) = report.violations.first() {
        return Err(EpisodeError::InvalidLevel(format!("{}: {}", v.rule, v.detail)));
    }
    let (mut frames, mut events, mut end) = simulate(spec, profile, policy_seed, 0)?;
    let mut idle_prefix = 0;
    if (frames.len() as u32) < CLIP_FRAMES {
        idle_prefix = CLIP_FRAMES - frames.len() as u32;
        (frames, events, end) = simulate(spec, profile, policy_seed, idle_prefix)?;
    }
    let mut ep = EpisodeMetadata {
        schema_version: SCHEMA_VERSION.into(),
        level: spec.clone(),
        policy_name: profile.name.clone(),
        policy_seed,
        fps: FPS,
        idle_prefix,
        frames,
        events,
        end_reason: end,
        checksum: 0,
    };
    ep.checksum = ep.compute_checksum();
    Ok(ep)
}

impl EpisodeMetadata {
    /// Wrap externally produced frames and events, e.g. a scripted scenario.
    /// The checksum is computed; nothing else is validated.
    pub fn assemble(
        level: LevelSpec,
        policy_name: &str,
        frames: Vec<FrameRecord>,
        events: Vec<GameEvent>,
        end_reason: EndReason,
    ) -> EpisodeMetadata {
        let mut ep = EpisodeMetadata {
            schema_version: SCHEMA_VERSION.into(),
            level,
            policy_name: policy_name.into(),
            policy_seed: 0,
            fps: FPS,
            idle_prefix: 0,
            frames,
            events,
            end_reason,
            checksum: 0,
        };
        ep.checksum = ep.compute_checksum();
        ep
    }
}

fn write_char(h: &mut fnv::FnvHasher, c: &CharacterState) {
    h.write_u8(c.kind.index() as u8);
    for v in [c.position.0, c.position.1, c.velocity.0, c.velocity.1] {
        h.write(&(libm::round(v * 10_000.0) as i64).to_le_bytes());
    }
    h.write_u8(c.pose.index() as u8);
    h.write_u8(c.alive as u8);
    h.write_u8(c.facing as u8);
}

fn event_code(k: &EventKind) -> (u8, u8) {
    match *k {
        EventKind::CoinCollected => (0, 0),
        EventKind::GemCollected => (1, 0),
        EventKind::MonsterKilled(m) => (2, m.index() as u8),
        EventKind::KilledByMonster(m) => (3, m.index() as u8),
        EventKind::JumpStart => (4, 0),
        EventKind::Land => (5, 0),
        EventKind::BumpHead => (6, 0),
        EventKind::LadderMount => (7, 0),
        EventKind::LadderDismount => (8, 0),
        EventKind::EpisodeEnd(r) => (9, r as u8),
    }
}

impl EpisodeMetadata {
    /// FNV-1a 64 over a little-endian binary encoding of frames and events.
    /// Reals enter as integers in units of 1e-4, matching the text precision.
    pub fn compute_checksum(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        h.write(&(self.frames.len() as u32).to_le_bytes());
        for f in &self.frames {
            h.write(&f.frame_idx.to_le_bytes());
            write_char(&mut h, &f.mugen);
            h.write(&(f.monsters.len() as u32).to_le_bytes());
            for m in &f.monsters {
                write_char(&mut h, m);
            }
            h.write(&f.item_flags.to_le_bytes());
            h.write_u8(f.shield_active as u8);
        }
        h.write(&(self.events.len() as u32).to_le_bytes());
        for e in &self.events {
            h.write(&e.frame_idx.to_le_bytes());
            let (tag, arg) = event_code(&e.kind);
            h.write(&[tag, arg]);
        }
        h.finish()
    }

    pub fn frame_count(&self) -> u32 {
        self.frames.len() as u32
    }

    /// Check every structural invariant, including the checksum.
    pub fn check(&self) -> Result<(), EpisodeError> {
        let bad = |m: String| Err(EpisodeError::InvariantViolation(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema {:?}", self.schema_version));
        }
        if self.fps != FPS {
            return bad(format!("fps {}", self.fps));
        }
        let n = self.frames.len() as u32;
        if !(CLIP_FRAMES..=MAX_FRAMES).contains(&n) {
            return bad(format!("{n} frames"));
        }
        if let Some((i, _)) = self.frames.iter().enumerate().find(|(i, f)| f.frame_idx != *i as u32) {
            return bad(format!("frame {i} has a mismatched index"));
        }
        if self.events.windows(2).any(|w| w[0].frame_idx > w[1].frame_idx) {
            return bad("events out of order".into());
        }
        match self.events.last() {
            Some(GameEvent { kind: EventKind::EpisodeEnd(r), frame_idx }) if *r == self.end_reason && *frame_idx == n - 1 => {}
            _ => return bad("final event is not the episode end".into()),
        }
        if self.checksum != self.compute_checksum() {
            return bad("checksum".into());
        }
        Ok(())
    }
}

/// Outcome of re-simulating an episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub frames_checked: u32,
    /// First frame whose record differs, or where one run ended early.
    pub first_divergence: Option<u32>,
    pub events_match: bool,
}

impl ReplayReport {
    pub fn is_exact(&self) -> bool {
        self.first_divergence.is_none() && self.events_match
    }
}

/// Re-run the recorded level and policy and compare every frame.
pub fn verify_replay(ep: &EpisodeMetadata, presets: &PresetRegistry) -> Result<ReplayReport, EpisodeError> {
    verify_replay_window(ep, presets, 0..ep.frames.len() as u32)
}

/// Like [`verify_replay`] but only compares frames and events in `window`.
pub fn verify_replay_window(
    ep: &EpisodeMetadata,
    presets: &PresetRegistry,
    window: Range<u32>,
) -> Result<ReplayReport, EpisodeError> {
    let profile = presets
        .get(&ep.policy_name)
        .ok_or_else(|| EpisodeError::UnknownPolicyPreset(ep.policy_name.clone()))?;
    let fresh = run_episode(&ep.level, profile, ep.policy_seed)?;
    let mut first_divergence = None;
    for i in window.clone() {
        let (a, b) = (ep.frames.get(i as usize), fresh.frames.get(i as usize));
        if a != b {
            first_divergence = Some(i);
            break;
        }
    }
    let in_window = |e: &&GameEvent| window.contains(&e.frame_idx);
    let events_match = ep.events.iter().filter(in_window).eq(fresh.events.iter().filter(in_window));
    Ok(ReplayReport { frames_checked: window.len() as u32, first_divergence, events_match })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldgen::{generate_level, GenConfig};
    use crate::Theme;

    fn episode(seed: u64, preset: &str) -> EpisodeMetadata {
        let spec = generate_level(seed, Theme::Snow, &GenConfig::default()).unwrap();
        let reg = PresetRegistry::standard();
        run_episode(&spec, reg.get(preset).unwrap(), policy_seed(seed, 0)).unwrap()
    }

    #[test]
    fn recorded_episode_is_well_formed() {
        for seed in 0..10 {
            let ep = episode(seed, "profile-05");
            ep.check().unwrap();
        }
    }

    #[test]
    fn idle_policy_times_out_at_the_cap() {
        let ep = episode(3, "idle");
        assert_eq!(ep.frames.len(), MAX_FRAMES as usize);
        assert_eq!(ep.end_reason, EndReason::Timeout);
        assert_eq!(ep.events.len(), 1);
        assert_eq!(ep.events[0].frame_idx, MAX_FRAMES - 1);
    }

    #[test]
    fn replay_detects_edited_frame() {
        let reg = PresetRegistry::standard();
        let mut ep = episode(4, "profile-02");
        assert!(verify_replay(&ep, &reg).unwrap().is_exact());
        ep.frames[50].mugen.position.0 += 0.0001;
        assert_eq!(verify_replay(&ep, &reg).unwrap().first_divergence, Some(50));
    }

    #[test]
    fn unknown_preset_is_reported() {
        let mut ep = episode(4, "profile-02");
        ep.policy_name = "nobody".into();
        assert!(matches!(
            verify_replay(&ep, &PresetRegistry::standard()),
            Err(EpisodeError::UnknownPolicyPreset(_))
        ));
    }

    #[test]
    fn checksum_covers_events() {
        let mut ep = episode(5, "profile-07");
        let before = ep.compute_checksum();
        ep.events[0].frame_idx += 1;
        assert_ne!(before, ep.compute_checksum());
    }
}
