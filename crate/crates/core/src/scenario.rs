//! Hand-scripted episodes: Mugen follows a fixed trajectory instead of a
//! policy. Useful for reproducing exact situations in captions, audio and
//! statistics without searching for a seed that produces them.

use alloc::vec::Vec;

use crate::entity::{EntityKind, Facing};
use crate::episode::{EpisodeMetadata, FrameRecord};
use crate::math::quantize;
use crate::sim::{CharacterState, EndReason, EventKind, GameEvent, PoseId};
use crate::worldgen::LevelSpec;

pub struct Script {
    level: LevelSpec,
    mugen: CharacterState,
    monsters: Vec<CharacterState>,
    item_flags: u32,
    shield: bool,
    frames: Vec<FrameRecord>,
    events: Vec<GameEvent>,
}

fn character(kind: EntityKind, (x, y): (f64, f64)) -> CharacterState {
    CharacterState { kind, position: (x, y), velocity: (0.0, 0.0), pose: PoseId::Idle, alive: true, facing: Facing::Right }
}

impl Script {
    /// Start with Mugen at `start` (center x, feet y) on frame 0.
    pub fn new(level: LevelSpec, start: (f64, f64)) -> Script {
        let mut s = Script {
            level,
            mugen: character(EntityKind::Mugen, start),
            monsters: Vec::new(),
            item_flags: 0,
            shield: false,
            frames: Vec::new(),
            events: Vec::new(),
        };
        s.record();
        s
    }

    /// Add a stationary monster; it appears from the current frame on.
    pub fn monster(&mut self, kind: EntityKind, at: (f64, f64)) -> usize {
        self.monsters.push(character(kind, at));
        self.monsters.len() - 1
    }

    fn frame_idx(&self) -> u32 {
        self.frames.len() as u32
    }

    fn record(&mut self) {
        let q = |c: &CharacterState| CharacterState {
            position: (quantize(c.position.0), quantize(c.position.1)),
            velocity: (quantize(c.velocity.0), quantize(c.velocity.1)),
            ..*c
        };
        self.frames.push(FrameRecord {
            frame_idx: self.frame_idx(),
            mugen: q(&self.mugen),
            monsters: self.monsters.iter().map(q).collect(),
            item_flags: self.item_flags,
            shield_active: self.shield,
        });
    }

    fn advance(&mut self, pose: PoseId, to: (f64, f64)) {
        let from = self.mugen.position;
        self.mugen.velocity = (to.0 - from.0, to.1 - from.1);
        if to.0 != from.0 {
            self.mugen.facing = if to.0 > from.0 { Facing::Right } else { Facing::Left };
        }
        self.mugen.position = to;
        self.mugen.pose = pose;
        self.record();
    }

    /// Emit an event on the next recorded frame.
    pub fn event(&mut self, kind: EventKind) -> &mut Self {
        self.events.push(GameEvent { frame_idx: self.frame_idx(), kind });
        self
    }

    /// Walk horizontally by `dx` cells per frame.
    pub fn walk(&mut self, frames: u32, dx: f64) -> &mut Self {
        let pose = if dx < 0.0 { PoseId::WalkLeft } else { PoseId::WalkRight };
        for _ in 0..frames {
            let (x, y) = self.mugen.position;
            self.advance(pose, (x + dx, y));
        }
        self
    }

    /// Hold `pose` in place.
    pub fn hold(&mut self, pose: PoseId, frames: u32) -> &mut Self {
        for _ in 0..frames {
            self.advance(pose, self.mugen.position);
        }
        self
    }

    /// Parabolic arc to `to` that rises `apex` cells above the higher end.
    pub fn jump(&mut self, frames: u32, to: (f64, f64), apex: f64) -> &mut Self {
        let from = self.mugen.position;
        let pose = if to.0 > from.0 {
            PoseId::JumpRight
        } else if to.0 < from.0 {
            PoseId::JumpLeft
        } else {
            PoseId::Jump
        };
        self.event(EventKind::JumpStart);
        let top = from.1.max(to.1) + apex;
        for k in 1..=frames {
            let s = k as f64 / frames as f64;
            let base = from.1 + (to.1 - from.1) * s;
            let lift = 4.0 * s * (1.0 - s) * (top - (from.1 + to.1) / 2.0);
            self.advance(pose, (from.0 + (to.0 - from.0) * s, base + lift));
        }
        self
    }

    /// Climb by `dy` cells per frame; zero holds on to the ladder.
    pub fn climb(&mut self, frames: u32, dy: f64) -> &mut Self {
        let pose = if dy > 0.0 {
            PoseId::ClimbUp
        } else if dy < 0.0 {
            PoseId::ClimbDown
        } else {
            PoseId::ClimbIdle
        };
        for _ in 0..frames {
            let (x, y) = self.mugen.position;
            self.advance(pose, (x, y + dy));
        }
        self
    }

    pub fn kill_monster(&mut self, idx: usize) -> &mut Self {
        self.monsters[idx].alive = false;
        self.event(EventKind::MonsterKilled(self.monsters[idx].kind))
    }

    /// Mark item `idx` (level item order) collected on the next frame.
    pub fn collect(&mut self, idx: usize) -> &mut Self {
        self.item_flags |= 1 << idx;
        let kind = self.level.items().nth(idx).expect("item index").kind;
        if kind == EntityKind::Gem {
            self.shield = true;
            self.event(EventKind::GemCollected)
        } else {
            self.shield = false;
            self.event(EventKind::CoinCollected)
        }
    }

    /// Killed by `killer`, followed by `frames` frames of the death pose.
    pub fn die(&mut self, killer: EntityKind, frames: u32) -> &mut Self {
        self.event(EventKind::KilledByMonster(killer));
        self.mugen.alive = false;
        self.hold(PoseId::Die, frames)
    }

    /// Close the episode on its last recorded frame.
    pub fn finish(mut self, reason: EndReason) -> EpisodeMetadata {
        let last = self.frame_idx() - 1;
        self.events.push(GameEvent { frame_idx: last, kind: EventKind::EpisodeEnd(reason) });
        self.events.sort_by_key(|e| e.frame_idx);
        EpisodeMetadata::assemble(self.level, "scripted", self.frames, self.events, reason)
    }
}
