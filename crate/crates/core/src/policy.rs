//! Scripted agents that drive Mugen.
//!
//! A policy is a fixed profile (five weights in `[0, 1]`), a seeded RNG and a
//! tiny memory of its last decision. Each frame it scores the eight intents
//! and picks the best; ties go to the earliest intent in [`AgentIntent::ALL`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::EntityKind;
use crate::math::floor_i;
use crate::sim::SimState;
use crate::terrain::{Move, Terrain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentIntent {
    None,
    Left,
    Right,
    Jump,
    JumpLeft,
    JumpRight,
    Up,
    Down,
}

impl AgentIntent {
    pub const ALL: [AgentIntent; 8] = [
        AgentIntent::None,
        AgentIntent::Left,
        AgentIntent::Right,
        AgentIntent::Jump,
        AgentIntent::JumpLeft,
        AgentIntent::JumpRight,
        AgentIntent::Up,
        AgentIntent::Down,
    ];

    /// -1, 0 or +1.
    pub fn horizontal(self) -> f64 {
        match self {
            AgentIntent::Left | AgentIntent::JumpLeft => -1.0,
            AgentIntent::Right | AgentIntent::JumpRight => 1.0,
            _ => 0.0,
        }
    }

    pub fn is_jump(self) -> bool {
        matches!(self, AgentIntent::Jump | AgentIntent::JumpLeft | AgentIntent::JumpRight)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn walk(dir: i32) -> AgentIntent {
        if dir > 0 {
            AgentIntent::Right
        } else {
            AgentIntent::Left
        }
    }

    fn jump(dir: i32) -> AgentIntent {
        match dir.signum() {
            1 => AgentIntent::JumpRight,
            -1 => AgentIntent::JumpLeft,
            _ => AgentIntent::Jump,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyProfile {
    pub name: String,
    pub coin_greed: f64,
    pub risk_tolerance: f64,
    pub jump_propensity: f64,
    pub climb_preference: f64,
    pub dither: f64,
}

impl PolicyProfile {
    pub fn weights(&self) -> [f64; 5] {
        [self.coin_greed, self.risk_tolerance, self.jump_propensity, self.climb_preference, self.dither]
    }

    pub fn check(&self) -> Result<(), PolicyError> {
        for (axis, w) in ["coin_greed", "risk_tolerance", "jump_propensity", "climb_preference", "dither"]
            .iter()
            .zip(self.weights())
        {
            if !(0.0..=1.0).contains(&w) {
                return Err(PolicyError::InvalidProfile(alloc::format!("{axis} = {w} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("invalid policy profile: {0}")]
    InvalidProfile(String),
}

/// Nearest live monster relative to Mugen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threat {
    pub kind: EntityKind,
    pub offset: (f64, f64),
}

/// What a policy sees each frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub position: (f64, f64),
    pub velocity: (f64, f64),
    pub on_ground: bool,
    pub on_ladder: bool,
    pub shield_active: bool,
    /// First move of the cheapest path to the nearest uncollected item.
    pub route: Option<Move>,
    /// Graph node the route starts from.
    pub node: Option<(i32, i32)>,
    pub threat: Option<Threat>,
    pub ladder_here: bool,
    pub ladder_below: bool,
}

/// Builds observations; caches route lookups per node and item mask.
#[derive(Debug, Default, Clone)]
pub struct Navigator {
    cache: BTreeMap<((i32, i32), u32), Option<Move>>,
}

const EPS: f64 = 1e-6;

impl Navigator {
    pub fn new() -> Navigator {
        Navigator::default()
    }

    pub fn observe(&mut self, terrain: &Terrain, state: &SimState) -> Observation {
        let (x, y) = state.mugen.position;
        let col = floor_i(x);
        let node = if state.on_ladder() {
            Some((col, floor_i(y + EPS))).filter(|&(cx, cy)| terrain.node(cx, cy))
        } else if state.on_ground() {
            let row = libm::round(y) as i32;
            [x, x - 0.35, x + 0.35].iter().map(|&px| (floor_i(px), row)).find(|&(cx, cy)| terrain.node(cx, cy))
        } else {
            None
        };
        let mask = state.item_flags();
        let route = node.and_then(|n| {
            *self.cache.entry((n, mask)).or_insert_with(|| {
                let goals: Vec<(i32, i32)> = state.items.iter().filter(|i| !i.collected).map(|i| i.cell).collect();
                terrain.first_step(n, &goals)
            })
        });
        let threat = state
            .monsters
            .iter()
            .filter(|m| m.alive)
            .map(|m| Threat { kind: m.kind, offset: (m.position.0 - x, m.position.1 - y) })
            .min_by(|a, b| {
                let da = a.offset.0 * a.offset.0 + a.offset.1 * a.offset.1;
                let db = b.offset.0 * b.offset.0 + b.offset.1 * b.offset.1;
                da.total_cmp(&db)
            });
        let row = floor_i(y + EPS);
        Observation {
            position: (x, y),
            velocity: state.mugen.velocity,
            on_ground: state.on_ground(),
            on_ladder: state.on_ladder(),
            shield_active: state.shield_active,
            route,
            node,
            threat,
            ladder_here: terrain.ladder(col, floor_i(y + 0.45)),
            ladder_below: state.on_ground() && terrain.ladder_top(col, row - 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Memory {
    last: Option<AgentIntent>,
    last_x: f64,
    /// Column and feet row of the node being moved to.
    target: Option<(i32, i32)>,
    stuck: u32,
}

/// A seeded scripted agent.
#[derive(Debug, Clone)]
pub struct Policy {
    profile: PolicyProfile,
    rng: ChaCha8Rng,
    memory: Memory,
}

/// Offset into the current cell, measured toward `dir`, at which a running
/// jump is launched.
const LAUNCH_OFFSET: f64 = 0.6;
const HAZARD_RANGE: f64 = 3.0;
const BODY_HALF_WIDTH: f64 = 0.35;
const STEER_STEP: f64 = 0.2;
const STUCK_FRAMES: u32 = 6;

pub fn make_policy(profile: &PolicyProfile, seed: u64) -> Result<Policy, PolicyError> {
    profile.check()?;
    Ok(Policy { profile: profile.clone(), rng: ChaCha8Rng::seed_from_u64(seed), memory: Memory::default() })
}

impl Policy {
    pub fn profile(&self) -> &PolicyProfile {
        &self.profile
    }

    pub fn decide(&mut self, obs: &Observation) -> AgentIntent {
        let p = &self.profile;
        let roll: f64 = self.rng.gen();
        let pick: usize = self.rng.gen_range(0..AgentIntent::ALL.len());
        let (x, _) = obs.position;
        let mem = &mut self.memory;

        if mem.last.is_some_and(|l| l.horizontal() != 0.0) && obs.on_ground && (x - mem.last_x).abs() < 1e-9 {
            mem.stuck += 1;
        } else {
            mem.stuck = 0;
        }

        let mut score = [0.0f64; 8];
        let mut add = |i: AgentIntent, v: f64| score[i.index()] += v;

        let (y, node) = (obs.position.1, obs.node.unwrap_or((floor_i(x), 0)));
        match obs.route {
            Some(Move::Walk { dx }) | Some(Move::Fall { dx, .. }) => {
                add(AgentIntent::walk(dx), p.coin_greed);
                if obs.on_ground {
                    mem.target = Some((node.0 + dx, i32::MIN));
                }
            }
            Some(Move::Climb { dy }) => {
                add(if dy > 0 { AgentIntent::Up } else { AgentIntent::Down }, p.coin_greed);
                mem.target = None;
            }
            Some(Move::Jump { dx, dy }) => {
                let dir = dx.signum();
                let toward = (x - (node.0 as f64 + 0.5)) * dir as f64 + 0.5;
                let (walk, jump) = (AgentIntent::walk(dir), AgentIntent::jump(dir));
                if dx.abs() == 1 && dy > 0 {
                    // Short climb onto a ledge: rise straight up from inside
                    // the source column, then steer over once above it.
                    if toward > 1.0 - BODY_HALF_WIDTH + 1e-6 {
                        add(AgentIntent::walk(-dir), p.coin_greed);
                    } else {
                        add(AgentIntent::Jump, p.coin_greed);
                        add(walk, 0.5 * p.coin_greed);
                    }
                } else if toward >= LAUNCH_OFFSET || mem.stuck > 0 {
                    add(jump, p.coin_greed);
                    add(walk, 0.5 * p.coin_greed);
                } else {
                    add(walk, p.coin_greed);
                    add(jump, 0.5 * p.coin_greed);
                }
                mem.target = Some((node.0 + dx, node.1 + dy));
            }
            None => {
                if let Some((col, row)) = mem.target {
                    let d = col as f64 + 0.5 - x;
                    let dir = if d > 0.0 { 1 } else { -1 };
                    // Stay out of the target column until the feet clear its floor.
                    let lead = x + dir as f64 * (BODY_HALF_WIDTH + STEER_STEP);
                    let below = y < row as f64 - 1e-6;
                    let blocked = below && floor_i(lead) == col;
                    if d.abs() > 0.1 && !blocked {
                        add(AgentIntent::walk(dir), p.coin_greed);
                    } else if obs.on_ground {
                        mem.target = None;
                    }
                }
            }
        }

        if let Some(t) = obs.threat.filter(|_| !obs.shield_active) {
            let (dx, dy) = t.offset;
            if dx.abs() <= HAZARD_RANGE + 0.5 && dy.abs() < 1.5 {
                let prox = (1.0 - (dx.abs() - 1.0) / HAZARD_RANGE).clamp(0.0, 1.0);
                let dir = if dx >= 0.0 { 1 } else { -1 };
                // Scaled by greed like the route terms, so risk tolerance alone
                // sets the balance and an agent with no goal never reacts.
                let caution = (1.0 - p.risk_tolerance) * p.coin_greed;
                add(AgentIntent::walk(dir), -2.0 * caution * prox);
                add(AgentIntent::jump(dir), -2.0 * caution * prox);
                add(AgentIntent::walk(-dir), 0.6 * caution * prox);
                if dx.abs() < 2.0 {
                    add(AgentIntent::jump(dir), 1.2 * p.risk_tolerance * p.coin_greed);
                }
            }
        }

        for j in [AgentIntent::Jump, AgentIntent::JumpLeft, AgentIntent::JumpRight] {
            add(j, 0.4 * p.jump_propensity);
        }

        if obs.ladder_here && !obs.on_ladder {
            add(AgentIntent::Up, 0.45 * p.climb_preference);
        }
        if obs.ladder_below {
            add(AgentIntent::Down, 0.45 * p.climb_preference);
        }
        if obs.on_ladder {
            if let Some(l @ (AgentIntent::Up | AgentIntent::Down)) = mem.last {
                add(l, 0.45 * p.climb_preference);
            }
        }

        if mem.stuck >= STUCK_FRAMES {
            if let Some(l) = mem.last {
                add(AgentIntent::jump(l.horizontal() as i32), 1.5);
            }
        }

        let mut best = AgentIntent::None;
        for i in AgentIntent::ALL {
            if score[i.index()] > score[best.index()] {
                best = i;
            }
        }
        if roll < p.dither {
            best = AgentIntent::ALL[pick];
        }
        mem.last = Some(best);
        mem.last_x = x;
        best
    }
}

/// Names and profiles available for episode generation.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetRegistry {
    presets: Vec<PolicyProfile>,
}

pub const IDLE_PRESET: &str = "idle";
pub const PRESET_COUNT: usize = 14;

impl PresetRegistry {
    /// Fourteen presets laid out on a Latin hypercube over the profile
    /// axes, plus the all-zero `idle` preset. Greed is kept in `[0.35, 1]`
    /// and dither in `[0, 0.3]` so every preset still makes progress.
    pub fn standard() -> PresetRegistry {
        const RANGES: [(f64, f64); 5] = [(0.35, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 0.3)];
        const PERMS: [(usize, usize); 5] = [(1, 0), (3, 1), (5, 4), (9, 2), (11, 7)];
        let n = PRESET_COUNT;
        let mut presets = Vec::with_capacity(n + 1);
        for i in 0..n {
            let mut w = [0.0; 5];
            for (axis, ((lo, hi), (a, b))) in RANGES.iter().zip(PERMS).enumerate() {
                let level = (a * i + b) % n;
                w[axis] = lo + (hi - lo) * (level as f64 + 0.5) / n as f64;
            }
            presets.push(PolicyProfile {
                name: alloc::format!("profile-{:02}", i + 1),
                coin_greed: w[0],
                risk_tolerance: w[1],
                jump_propensity: w[2],
                climb_preference: w[3],
                dither: w[4],
            });
        }
        presets.push(PolicyProfile {
            name: IDLE_PRESET.to_string(),
            coin_greed: 0.0,
            risk_tolerance: 0.0,
            jump_propensity: 0.0,
            climb_preference: 0.0,
            dither: 0.0,
        });
        PresetRegistry { presets }
    }

    pub fn get(&self, name: &str) -> Option<&PolicyProfile> {
        self.presets.iter().find(|p| p.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.presets.iter().map(|p| p.name.as_str())
    }

    /// The fourteen Latin-hypercube presets, without `idle`.
    pub fn agents(&self) -> impl Iterator<Item = &PolicyProfile> {
        self.presets.iter().filter(|p| p.name != IDLE_PRESET)
    }

    pub fn profiles(&self) -> &[PolicyProfile] {
        &self.presets
    }

    /// Add a preset or replace the one with the same name.
    pub fn insert(&mut self, profile: PolicyProfile) -> Result<(), PolicyError> {
        profile.check()?;
        match self.presets.iter_mut().find(|p| p.name == profile.name) {
            Some(slot) => *slot = profile,
            None => self.presets.push(profile),
        }
        Ok(())
    }
}

impl Default for PresetRegistry {
    fn default() -> Self {
        PresetRegistry::standard()
    }
}
