//! Deterministic 30 fps game simulation.
//!
//! One call to [`step`] advances the world by a frame: Mugen's movement
//! (walking, jumping, ladders, gravity and tile collision), monster motion,
//! then interactions with monsters and items. Every position and velocity is
//! quantized to four decimals at the end of the frame so a recorded episode
//! can be replayed bit-for-bit from its text encoding.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{Ability, EntityKind, Facing};
use crate::math::{floor_i, mix64, quantize};
use crate::policy::AgentIntent;
use crate::terrain::Terrain;
use crate::worldgen::LevelSpec;
use crate::MAX_FRAMES;

/// Every tunable physics and timing constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub gravity: f64,
    pub walk_speed: f64,
    pub jump_impulse: f64,
    pub max_fall: f64,
    pub climb_speed: f64,
    pub mugen_half_width: f64,
    pub mugen_height: f64,
    pub monster_half_width: f64,
    pub monster_height: f64,
    /// Monster hit box is narrower and shorter than its sprite.
    pub hit_half_width: f64,
    pub hit_height: f64,
    pub item_half: f64,
    /// Feet may be this far below a monster's top and still count as a stomp.
    pub stomp_slack: f64,
    pub collect_hold: u32,
    pub power_up_hold: u32,
    pub land_hold: u32,
    pub bump_hold: u32,
    pub die_tail: u32,
    pub ladybug_hop: f64,
    pub frog_hop: f64,
    pub hop_pause: (u32, u32),
    pub walker_pause_chance: u32,
    pub bee_range: f64,
    pub bee_bob: f64,
    pub bee_bob_period: u32,
}

pub const PHYSICS: Physics = Physics {
    gravity: 0.08,
    walk_speed: 0.2,
    jump_impulse: 0.65,
    max_fall: 0.6,
    climb_speed: 0.15,
    mugen_half_width: 0.35,
    mugen_height: 0.9,
    monster_half_width: 0.4,
    monster_height: 0.8,
    hit_half_width: 0.33,
    hit_height: 0.7,
    item_half: 0.3,
    stomp_slack: 0.3,
    collect_hold: 6,
    power_up_hold: 8,
    land_hold: 2,
    bump_hold: 3,
    die_tail: 15,
    ladybug_hop: 0.35,
    frog_hop: 0.45,
    hop_pause: (8, 30),
    walker_pause_chance: 160,
    bee_range: 4.0,
    bee_bob: 0.4,
    bee_bob_period: 60,
};

const EPS: f64 = 1e-6;

/// Mugen's 16 poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PoseId {
    Idle,
    WalkLeft,
    WalkRight,
    Jump,
    JumpLeft,
    JumpRight,
    Fall,
    Land,
    ClimbUp,
    ClimbDown,
    ClimbIdle,
    Collect,
    PowerUp,
    BumpHead,
    KillStomp,
    Die,
}

impl PoseId {
    pub const ALL: [PoseId; 16] = [
        PoseId::Idle,
        PoseId::WalkLeft,
        PoseId::WalkRight,
        PoseId::Jump,
        PoseId::JumpLeft,
        PoseId::JumpRight,
        PoseId::Fall,
        PoseId::Land,
        PoseId::ClimbUp,
        PoseId::ClimbDown,
        PoseId::ClimbIdle,
        PoseId::Collect,
        PoseId::PowerUp,
        PoseId::BumpHead,
        PoseId::KillStomp,
        PoseId::Die,
    ];

    pub fn is_jump(self) -> bool {
        matches!(self, PoseId::Jump | PoseId::JumpLeft | PoseId::JumpRight)
    }

    pub fn is_walk(self) -> bool {
        matches!(self, PoseId::WalkLeft | PoseId::WalkRight)
    }

    pub fn is_climb(self) -> bool {
        matches!(self, PoseId::ClimbUp | PoseId::ClimbDown | PoseId::ClimbIdle)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndReason {
    AllCoinsCollected,
    Death,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    CoinCollected,
    GemCollected,
    MonsterKilled(EntityKind),
    KilledByMonster(EntityKind),
    JumpStart,
    Land,
    BumpHead,
    LadderMount,
    LadderDismount,
    EpisodeEnd(EndReason),
}

impl PartialOrd for EndReason {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EndReason {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameEvent {
    pub frame_idx: u32,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterState {
    pub kind: EntityKind,
    /// Center x and feet y, in cells.
    pub position: (f64, f64),
    /// Cells per frame.
    pub velocity: (f64, f64),
    pub pose: PoseId,
    pub alive: bool,
    pub facing: Facing,
}

impl CharacterState {
    pub fn center(&self) -> (f64, f64) {
        let h = if self.kind == EntityKind::Mugen { PHYSICS.mugen_height } else { PHYSICS.monster_height };
        (self.position.0, self.position.1 + h / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemState {
    pub kind: EntityKind,
    pub cell: (i32, i32),
    pub collected: bool,
}

impl ItemState {
    pub fn center(&self) -> (f64, f64) {
        (self.cell.0 as f64 + 0.5, self.cell.1 as f64 + 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct MugenCtl {
    on_ground: bool,
    on_ladder: bool,
    jump_pose: Option<PoseId>,
    hold: Option<(PoseId, u32)>,
    stomping: bool,
    death_frame: Option<u32>,
    /// Vertical speed carried into the next frame.
    vy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct MonsterCtl {
    timer: u32,
    home: (f64, f64),
    on_ground: bool,
    vy: f64,
}

/// Full simulation state. Cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub frame_idx: u32,
    pub mugen: CharacterState,
    pub monsters: Vec<CharacterState>,
    pub items: Vec<ItemState>,
    pub shield_active: bool,
    /// SplitMix64 state driving monster jitter.
    pub rng_state: u64,
    pub terminated: Option<EndReason>,
    ctl: MugenCtl,
    monster_ctl: Vec<MonsterCtl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("step called on a terminated episode")]
    SteppedTerminated,
}

impl SimState {
    /// Initial state for a level. `jitter_seed` seeds monster randomness.
    pub fn new(spec: &LevelSpec, jitter_seed: u64) -> SimState {
        let m = spec.mugen_spawn().copied().unwrap_or(crate::worldgen::EntitySpawn {
            kind: EntityKind::Mugen,
            cell: (0, 1),
            facing: Facing::Right,
        });
        let at = |c: (i32, i32)| (c.0 as f64 + 0.5, c.1 as f64);
        let mugen = CharacterState {
            kind: EntityKind::Mugen,
            position: at(m.cell),
            velocity: (0.0, 0.0),
            pose: PoseId::Idle,
            alive: true,
            facing: m.facing,
        };
        let terrain = spec.terrain();
        let mut monsters = Vec::new();
        let mut monster_ctl = Vec::new();
        for s in spec.monsters() {
            monsters.push(CharacterState {
                kind: s.kind,
                position: at(s.cell),
                velocity: (0.0, 0.0),
                pose: PoseId::Idle,
                alive: true,
                facing: s.facing,
            });
            monster_ctl.push(MonsterCtl {
                timer: PHYSICS.hop_pause.0,
                home: at(s.cell),
                on_ground: terrain.supports(s.cell.0, s.cell.1 - 1),
                vy: 0.0,
            });
        }
        let items = spec.items().map(|s| ItemState { kind: s.kind, cell: s.cell, collected: false }).collect();
        SimState {
            frame_idx: 0,
            mugen,
            monsters,
            items,
            shield_active: false,
            rng_state: mix64(jitter_seed),
            terminated: None,
            ctl: MugenCtl { on_ground: terrain.supports(m.cell.0, m.cell.1 - 1), ..MugenCtl::default() },
            monster_ctl,
        }
    }

    pub fn on_ground(&self) -> bool {
        self.ctl.on_ground
    }

    pub fn on_ladder(&self) -> bool {
        self.ctl.on_ladder
    }

    pub fn coins_left(&self) -> usize {
        self.items.iter().filter(|i| i.kind == EntityKind::Coin && !i.collected).count()
    }

    /// Bit `i` set when item `i` has been collected.
    pub fn item_flags(&self) -> u32 {
        self.items.iter().enumerate().filter(|(_, it)| it.collected).fold(0, |acc, (i, _)| acc | (1 << i))
    }

    /// The same state one frame later with nothing moved. Used to pad short
    /// episodes with a frozen spawn prefix.
    pub fn held(&self) -> SimState {
        let mut s = self.clone();
        s.frame_idx += 1;
        s
    }

    fn next_rand(&mut self) -> u64 {
        self.rng_state = self.rng_state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        mix64(self.rng_state)
    }
}

fn box_hits_solid(t: &Terrain, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
    let (cx0, cx1) = (floor_i(x0 + EPS), floor_i(x1 - EPS));
    let (cy0, cy1) = (floor_i(y0 + EPS), floor_i(y1 - EPS));
    (cx0..=cx1).any(|cx| (cy0..=cy1).any(|cy| t.solid(cx, cy)))
}

fn columns(x0: f64, x1: f64) -> core::ops::RangeInclusive<i32> {
    floor_i(x0 + EPS)..=floor_i(x1 - EPS)
}

struct Body {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    hw: f64,
    h: f64,
}

#[derive(Default)]
struct MoveResult {
    blocked_x: bool,
    bumped: bool,
    landed: bool,
}

/// Axis-separated movement with tile collision. Falling bodies land on solid
/// tiles and on ladder tops; ladders are otherwise transparent.
fn move_body(t: &Terrain, b: &mut Body) -> MoveResult {
    let mut r = MoveResult::default();
    if b.vx != 0.0 {
        let nx = b.x + b.vx;
        if box_hits_solid(t, nx - b.hw, nx + b.hw, b.y, b.y + b.h) {
            r.blocked_x = true;
            b.x = if b.vx > 0.0 {
                floor_i(nx + b.hw - EPS) as f64 - b.hw
            } else {
                floor_i(nx - b.hw + EPS) as f64 + 1.0 + b.hw
            };
        } else {
            b.x = nx;
        }
    }
    if b.vy > 0.0 {
        let ny = b.y + b.vy;
        if box_hits_solid(t, b.x - b.hw, b.x + b.hw, ny, ny + b.h) {
            r.bumped = true;
            b.y = floor_i(ny + b.h - EPS) as f64 - b.h;
            b.vy = 0.0;
        } else {
            b.y = ny;
        }
    } else if b.vy < 0.0 {
        let ny = b.y + b.vy;
        // |vy| < 1, so at most one row boundary is crossed per frame.
        let boundary = floor_i(b.y + EPS);
        let lands = ny < boundary as f64 + EPS
            && columns(b.x - b.hw, b.x + b.hw).any(|cx| t.supports(cx, boundary - 1));
        if lands {
            b.y = boundary as f64;
            b.vy = 0.0;
            r.landed = true;
        } else {
            b.y = ny;
        }
    }
    r
}

fn supported(t: &Terrain, x: f64, y: f64, hw: f64) -> bool {
    let yi = libm::round(y);
    (y - yi).abs() < EPS && columns(x - hw, x + hw).any(|cx| t.supports(cx, yi as i32 - 1))
}

fn overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1 && a.2 < b.3 && b.2 < a.3
}

/// Advance the world by one frame under `intent`.
pub fn step(
    terrain: &Terrain,
    state: &SimState,
    intent: AgentIntent,
) -> Result<(SimState, Vec<GameEvent>), SimError> {
    if state.terminated.is_some() {
        return Err(SimError::SteppedTerminated);
    }
    let mut s = state.clone();
    s.frame_idx += 1;
    let f = s.frame_idx;
    let mut events = Vec::new();
    let emit = |events: &mut Vec<GameEvent>, kind| events.push(GameEvent { frame_idx: f, kind });

    let feet_before = s.mugen.position.1;
    if s.mugen.alive {
        step_mugen(terrain, &mut s, intent, &mut events);
    } else {
        s.mugen.velocity = (0.0, 0.0);
        s.mugen.pose = PoseId::Die;
    }
    step_monsters(terrain, &mut s);

    if s.mugen.alive {
        let p = PHYSICS;
        let (mx, my) = s.mugen.position;
        let mbox = (mx - p.mugen_half_width, mx + p.mugen_half_width, my, my + p.mugen_height);
        for i in 0..s.monsters.len() {
            let m = s.monsters[i];
            if !m.alive {
                continue;
            }
            let (ox, oy) = m.position;
            let hit = (ox - p.hit_half_width, ox + p.hit_half_width, oy, oy + p.hit_height);
            if !overlap(mbox, hit) {
                continue;
            }
            let from_above = s.mugen.velocity.1 < 0.0 && feet_before >= oy + p.hit_height - p.stomp_slack;
            if from_above && m.kind.killable() {
                s.monsters[i].alive = false;
                s.monsters[i].velocity = (0.0, 0.0);
                s.ctl.stomping = true;
                s.mugen.pose = PoseId::KillStomp;
                emit(&mut events, EventKind::MonsterKilled(m.kind));
            } else if !s.shield_active {
                s.mugen.alive = false;
                s.mugen.velocity = (0.0, 0.0);
                s.mugen.pose = PoseId::Die;
                s.ctl.death_frame = Some(f);
                s.ctl.hold = None;
                emit(&mut events, EventKind::KilledByMonster(m.kind));
                break;
            }
        }
    }

    if s.mugen.alive {
        let p = PHYSICS;
        let (mx, my) = s.mugen.position;
        let mbox = (mx - p.mugen_half_width, mx + p.mugen_half_width, my, my + p.mugen_height);
        for i in 0..s.items.len() {
            let it = s.items[i];
            if it.collected {
                continue;
            }
            let (cx, cy) = it.center();
            if !overlap(mbox, (cx - p.item_half, cx + p.item_half, cy - p.item_half, cy + p.item_half)) {
                continue;
            }
            s.items[i].collected = true;
            if it.kind == EntityKind::Gem {
                s.shield_active = true;
                s.ctl.hold = Some((PoseId::PowerUp, p.power_up_hold));
                s.mugen.pose = PoseId::PowerUp;
                emit(&mut events, EventKind::GemCollected);
            } else {
                s.shield_active = false;
                s.ctl.hold = Some((PoseId::Collect, p.collect_hold));
                s.mugen.pose = PoseId::Collect;
                emit(&mut events, EventKind::CoinCollected);
            }
        }
    }

    let end = if s.coins_left() == 0 && s.mugen.alive {
        Some(EndReason::AllCoinsCollected)
    } else if s.ctl.death_frame.is_some_and(|d| f >= d + PHYSICS.die_tail) {
        Some(EndReason::Death)
    } else if f + 1 >= MAX_FRAMES {
        Some(if s.ctl.death_frame.is_some() { EndReason::Death } else { EndReason::Timeout })
    } else {
        None
    };
    if let Some(reason) = end {
        s.terminated = Some(reason);
        emit(&mut events, EventKind::EpisodeEnd(reason));
    }

    quantize_character(&mut s.mugen);
    for m in &mut s.monsters {
        quantize_character(m);
    }
    Ok((s, events))
}

fn quantize_character(c: &mut CharacterState) {
    c.position = (quantize(c.position.0), quantize(c.position.1));
    c.velocity = (quantize(c.velocity.0), quantize(c.velocity.1));
}

fn step_mugen(t: &Terrain, s: &mut SimState, intent: AgentIntent, events: &mut Vec<GameEvent>) {
    let p = PHYSICS;
    let f = s.frame_idx;
    let push = |events: &mut Vec<GameEvent>, kind| events.push(GameEvent { frame_idx: f, kind });
    let hdir = intent.horizontal();
    let (x0, y0) = s.mugen.position;
    let col = floor_i(x0);
    let body_cell = floor_i(y0 + p.mugen_height / 2.0);
    let mut ctl = s.ctl;
    let mut vy = ctl.vy;

    if let Some((pose, left)) = ctl.hold {
        ctl.hold = if left > 1 { Some((pose, left - 1)) } else { None };
    }

    if !ctl.on_ladder {
        let grab_up = intent == AgentIntent::Up && t.ladder(col, body_cell);
        let y_int = libm::round(y0) as i32;
        let grab_down = intent == AgentIntent::Down && ctl.on_ground && t.ladder(col, y_int - 1);
        let fits = !box_hits_solid(t, col as f64 + 0.5 - p.mugen_half_width, col as f64 + 0.5 + p.mugen_half_width, y0, y0 + p.mugen_height);
        if (grab_up || grab_down) && fits {
            ctl.on_ladder = true;
            ctl.on_ground = false;
            ctl.jump_pose = None;
            ctl.stomping = false;
            s.mugen.position.0 = col as f64 + 0.5;
            vy = 0.0;
            push(events, EventKind::LadderMount);
        }
    }

    if ctl.on_ladder {
        let x = s.mugen.position.0;
        if intent.is_jump() || hdir != 0.0 {
            ctl.on_ladder = false;
            push(events, EventKind::LadderDismount);
        } else {
            let mut y = y0;
            let mut pose = PoseId::ClimbIdle;
            if intent == AgentIntent::Up {
                let ny = y + p.climb_speed;
                if box_hits_solid(t, x - p.mugen_half_width, x + p.mugen_half_width, ny, ny + p.mugen_height) {
                    // ceiling over the ladder: hold position
                } else if !t.ladder(col, floor_i(ny)) && t.ladder(col, floor_i(ny) - 1) {
                    y = floor_i(ny) as f64;
                    ctl.on_ladder = false;
                    ctl.on_ground = true;
                    push(events, EventKind::LadderDismount);
                } else {
                    y = ny;
                    pose = PoseId::ClimbUp;
                }
            } else if intent == AgentIntent::Down {
                let ny = y - p.climb_speed;
                if t.solid(col, floor_i(ny)) {
                    y = floor_i(ny) as f64 + 1.0;
                    ctl.on_ladder = false;
                    ctl.on_ground = true;
                    push(events, EventKind::LadderDismount);
                } else if !t.ladder(col, floor_i(ny + p.mugen_height / 2.0)) {
                    y = ny;
                    ctl.on_ladder = false;
                    push(events, EventKind::LadderDismount);
                } else {
                    y = ny;
                    pose = PoseId::ClimbDown;
                }
            }
            if ctl.on_ladder {
                s.mugen.velocity = (0.0, y - y0);
                s.mugen.position.1 = y;
                ctl.vy = 0.0;
                s.ctl = ctl;
                s.mugen.pose = held_pose(&ctl).unwrap_or(pose);
                return;
            }
            s.mugen.position.1 = y;
            vy = 0.0;
            if ctl.on_ground {
                s.mugen.velocity = (0.0, y - y0);
                ctl.vy = 0.0;
                s.ctl = ctl;
                s.mugen.pose = held_pose(&ctl).unwrap_or(PoseId::Idle);
                return;
            }
        }
    }

    if hdir != 0.0 {
        s.mugen.facing = if hdir > 0.0 { Facing::Right } else { Facing::Left };
    }
    if intent.is_jump() && (ctl.on_ground || s.mugen.pose.is_climb()) {
        vy = p.jump_impulse;
        ctl.on_ground = false;
        ctl.jump_pose = Some(match hdir {
            d if d > 0.0 => PoseId::JumpRight,
            d if d < 0.0 => PoseId::JumpLeft,
            _ => PoseId::Jump,
        });
        if matches!(ctl.hold, Some((PoseId::Land | PoseId::BumpHead, _))) {
            ctl.hold = None;
        }
        push(events, EventKind::JumpStart);
    }

    let mut body = Body {
        x: s.mugen.position.0,
        y: s.mugen.position.1,
        vx: hdir * p.walk_speed,
        vy: if ctl.on_ground { 0.0 } else { vy },
        hw: p.mugen_half_width,
        h: p.mugen_height,
    };
    let res = move_body(t, &mut body);
    if res.bumped {
        ctl.hold = Some((PoseId::BumpHead, p.bump_hold));
        push(events, EventKind::BumpHead);
    }
    let was_airborne = !ctl.on_ground;
    if res.landed || supported(t, body.x, body.y, body.hw) && body.vy <= 0.0 {
        ctl.on_ground = true;
        body.vy = 0.0;
        if was_airborne {
            ctl.jump_pose = None;
            ctl.stomping = false;
            ctl.hold = Some((PoseId::Land, p.land_hold));
            push(events, EventKind::Land);
        }
    } else {
        ctl.on_ground = false;
        body.vy = (body.vy - p.gravity).max(-p.max_fall);
    }

    ctl.vy = if ctl.on_ground { 0.0 } else { body.vy };
    s.mugen.velocity = (body.x - x0, body.y - y0);
    s.mugen.position = (body.x, body.y);
    s.mugen.pose = if ctl.stomping {
        PoseId::KillStomp
    } else if let Some(h) = held_pose(&ctl) {
        h
    } else if !ctl.on_ground {
        ctl.jump_pose.unwrap_or(PoseId::Fall)
    } else if body.x - x0 > EPS {
        PoseId::WalkRight
    } else if body.x - x0 < -EPS {
        PoseId::WalkLeft
    } else {
        PoseId::Idle
    };
    s.ctl = ctl;
}

fn held_pose(ctl: &MugenCtl) -> Option<PoseId> {
    ctl.hold.map(|(p, _)| p)
}

fn step_monsters(t: &Terrain, s: &mut SimState) {
    let p = PHYSICS;
    for i in 0..s.monsters.len() {
        if !s.monsters[i].alive {
            s.monsters[i].velocity = (0.0, 0.0);
            continue;
        }
        let roll = s.next_rand();
        let m = &mut s.monsters[i];
        let ctl = &mut s.monster_ctl[i];
        let (x0, y0) = m.position;
        let speed = m.kind.move_speed();
        let hw = p.monster_half_width;
        match m.kind.ability() {
            Ability::Stationary => {
                m.velocity = (0.0, 0.0);
            }
            Ability::Walker => {
                if ctl.timer > 0 && ctl.timer < p.hop_pause.0 {
                    ctl.timer -= 1;
                    m.velocity = (0.0, 0.0);
                    m.pose = PoseId::Idle;
                    continue;
                }
                ctl.timer = 0;
                if roll.is_multiple_of(p.walker_pause_chance as u64) {
                    ctl.timer = 1 + (roll >> 8) as u32 % (p.hop_pause.0 - 1);
                }
                let dir = m.facing.sign();
                let nx = x0 + dir * speed;
                let lead = nx + dir * hw;
                let wall = box_hits_solid(t, nx - hw, nx + hw, y0, y0 + p.monster_height);
                let ledge = !t.supports(floor_i(lead), floor_i(y0 + EPS) - 1);
                if wall || ledge || (roll >> 40).is_multiple_of(400) {
                    m.facing = m.facing.flip();
                    m.velocity = (0.0, 0.0);
                } else {
                    m.position.0 = nx;
                    m.velocity = (nx - x0, 0.0);
                }
                m.pose = if m.velocity.0 > 0.0 {
                    PoseId::WalkRight
                } else if m.velocity.0 < 0.0 {
                    PoseId::WalkLeft
                } else {
                    PoseId::Idle
                };
            }
            Ability::Hopper => {
                if ctl.on_ground {
                    if ctl.timer > 0 {
                        ctl.timer -= 1;
                        m.velocity = (0.0, 0.0);
                        m.pose = PoseId::Idle;
                        continue;
                    }
                    let dir = m.facing.sign();
                    let ahead = floor_i(x0 + dir * 1.2);
                    let row = floor_i(y0 + EPS);
                    if !t.supports(ahead, row - 1) || t.solid(ahead, row) {
                        m.facing = m.facing.flip();
                    }
                    ctl.vy = if m.kind == EntityKind::Frog { p.frog_hop } else { p.ladybug_hop };
                    ctl.on_ground = false;
                }
                let mut body = Body { x: x0, y: y0, vx: m.facing.sign() * speed, vy: ctl.vy, hw, h: p.monster_height };
                let res = move_body(t, &mut body);
                if res.blocked_x {
                    m.facing = m.facing.flip();
                }
                if res.landed {
                    ctl.on_ground = true;
                    let (lo, hi) = p.hop_pause;
                    ctl.timer = lo + (roll % (hi - lo + 1) as u64) as u32;
                    ctl.vy = 0.0;
                    m.position = (body.x, body.y);
                    m.velocity = (body.x - x0, body.y - y0);
                    m.pose = PoseId::Land;
                } else {
                    ctl.vy = (body.vy - p.gravity).max(-p.max_fall);
                    m.position = (body.x, body.y);
                    m.velocity = (body.x - x0, body.y - y0);
                    m.pose = if m.facing == Facing::Right { PoseId::JumpRight } else { PoseId::JumpLeft };
                }
            }
            Ability::Flyer => {
                let dir = m.facing.sign();
                let nx = x0 + dir * speed;
                ctl.timer = (ctl.timer + 1) % p.bee_bob_period;
                let phase = ctl.timer as f64 / p.bee_bob_period as f64;
                let ny = ctl.home.1 + p.bee_bob * libm::sin(core::f64::consts::TAU * phase);
                let blocked = box_hits_solid(t, nx - hw, nx + hw, ny, ny + p.monster_height);
                let far = (nx - ctl.home.0).abs() > p.bee_range;
                if blocked || far {
                    m.facing = m.facing.flip();
                    m.velocity = (0.0, 0.0);
                } else {
                    m.position = (nx, ny);
                    m.velocity = (nx - x0, ny - y0);
                }
                m.pose = if m.facing == Facing::Right { PoseId::WalkRight } else { PoseId::WalkLeft };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldgen::{EntitySpawn, ENGINE_VERSION};
    use crate::Theme;
    use alloc::collections::BTreeSet;
    use alloc::string::String;
    use alloc::vec;

    pub(crate) fn flat_level(spawns: Vec<EntitySpawn>) -> LevelSpec {
        LevelSpec {
            seed: 1,
            theme: Theme::Snow,
            width: 24,
            height: 12,
            platform_cells: (0..24).map(|x| (x, 0)).collect(),
            ladder_cells: BTreeSet::new(),
            spawns,
            engine_version: String::from(ENGINE_VERSION),
        }
    }

    fn spawn(kind: EntityKind, x: i32, y: i32) -> EntitySpawn {
        EntitySpawn { kind, cell: (x, y), facing: Facing::Left }
    }

    fn run(spec: &LevelSpec, intents: &[AgentIntent]) -> (Vec<SimState>, Vec<GameEvent>) {
        let t = spec.terrain();
        let mut s = SimState::new(spec, 9);
        let mut states = vec![s.clone()];
        let mut events = Vec::new();
        for &i in intents {
            if s.terminated.is_some() {
                break;
            }
            let (n, ev) = step(&t, &s, i).unwrap();
            events.extend(ev);
            s = n;
            states.push(s.clone());
        }
        (states, events)
    }

    #[test]
    fn idle_mugen_stays_put() {
        let spec = flat_level(vec![spawn(EntityKind::Mugen, 3, 1), spawn(EntityKind::Coin, 20, 1)]);
        let (states, events) = run(&spec, &[AgentIntent::None; 40]);
        for s in &states {
            assert_eq!(s.mugen.position, (3.5, 1.0));
            assert_eq!(s.mugen.pose, PoseId::Idle);
        }
        assert!(events.is_empty());
    }

    #[test]
    fn overlapping_coin_is_collected() {
        let spec = flat_level(vec![spawn(EntityKind::Mugen, 3, 1), spawn(EntityKind::Coin, 4, 1), spawn(EntityKind::Coin, 20, 1)]);
        let (states, events) = run(&spec, &[AgentIntent::Right; 6]);
        let coin = events.iter().find(|e| e.kind == EventKind::CoinCollected).expect("coin");
        let s = &states[coin.frame_idx as usize];
        assert!(s.items[0].collected);
        assert_eq!(s.mugen.pose, PoseId::Collect);
    }

    #[test]
    fn walking_moves_at_walk_speed() {
        let spec = flat_level(vec![spawn(EntityKind::Mugen, 3, 1), spawn(EntityKind::Coin, 20, 1)]);
        let (states, _) = run(&spec, &[AgentIntent::Right; 5]);
        assert_eq!(states[5].mugen.position, (4.5, 1.0));
        assert_eq!(states[5].mugen.pose, PoseId::WalkRight);
    }

    #[test]
    fn jump_rises_and_lands() {
        let spec = flat_level(vec![spawn(EntityKind::Mugen, 3, 1), spawn(EntityKind::Coin, 20, 1)]);
        let mut intents = vec![AgentIntent::Jump];
        intents.extend([AgentIntent::None; 30]);
        let (states, events) = run(&spec, &intents);
        let peak = states.iter().map(|s| s.mugen.position.1).fold(0.0, f64::max);
        assert!(peak > 3.5 && peak < 4.1, "peak {peak}");
        assert_eq!(events[0].kind, EventKind::JumpStart);
        assert!(events.iter().any(|e| e.kind == EventKind::Land));
        assert_eq!(states.last().unwrap().mugen.position.1, 1.0);
        assert_eq!(states[3].mugen.pose, PoseId::Jump);
    }

    #[test]
    fn ceiling_bumps_head() {
        let mut spec = flat_level(vec![spawn(EntityKind::Mugen, 3, 1), spawn(EntityKind::Coin, 20, 1)]);
        spec.platform_cells.insert((3, 3));
        let (states, events) = run(&spec, &[AgentIntent::Jump, AgentIntent::None, AgentIntent::None]);
        assert!(events.iter().any(|e| e.kind == EventKind::BumpHead));
        assert!(states.iter().all(|s| s.mugen.position.1 + PHYSICS.mugen_height <= 3.0 + 1e-9));
    }

    #[test]
    fn monster_contact_kills_without_shield() {
        let spec = flat_level(vec![spawn(EntityKind::Mugen, 3, 1), spawn(EntityKind::Barnacle, 5, 1), spawn(EntityKind::Coin, 20, 1)]);
        let (states, events) = run(&spec, &[AgentIntent::Right; 40]);
        let death = events.iter().position(|e| matches!(e.kind, EventKind::KilledByMonster(EntityKind::Barnacle))).unwrap();
        assert_eq!(events.len(), death + 2);
        assert_eq!(events.last().unwrap().kind, EventKind::EpisodeEnd(EndReason::Death));
        let d = events[death].frame_idx;
        assert_eq!(events.last().unwrap().frame_idx, d + PHYSICS.die_tail);
        let dead_pos = states[d as usize].mugen.position;
        for s in &states[d as usize..] {
            assert_eq!(s.mugen.position, dead_pos);
            assert_eq!(s.mugen.pose, PoseId::Die);
        }
    }

    #[test]
    fn shield_blocks_death_until_next_coin() {
        let spec = flat_level(vec![
            spawn(EntityKind::Mugen, 2, 1),
            spawn(EntityKind::Gem, 3, 1),
            spawn(EntityKind::Frog, 6, 1),
            spawn(EntityKind::Coin, 14, 1),
            spawn(EntityKind::Coin, 22, 1),
        ]);
        let (states, events) = run(&spec, &[AgentIntent::Right; 70]);
        assert!(events.iter().any(|e| e.kind == EventKind::GemCollected));
        let coin = events.iter().find(|e| e.kind == EventKind::CoinCollected).expect("reached coin");
        assert!(!events.iter().any(|e| matches!(e.kind, EventKind::KilledByMonster(_))));
        assert!(!states[coin.frame_idx as usize].shield_active);
        assert!(states[coin.frame_idx as usize - 1].shield_active);
    }

    #[test]
    fn stomp_kills_killable_monster() {
        let mut spec = flat_level(vec![spawn(EntityKind::Mugen, 3, 3), spawn(EntityKind::Snail, 3, 1), spawn(EntityKind::Coin, 20, 1)]);
        spec.platform_cells.insert((3, 2));
        spec.platform_cells.remove(&(3, 2));
        // Mugen starts in the air above the snail.
        let (_, events) = run(&spec, &[AgentIntent::None; 20]);
        assert!(events.iter().any(|e| e.kind == EventKind::MonsterKilled(EntityKind::Snail)), "{events:?}");
        assert!(!events.iter().any(|e| matches!(e.kind, EventKind::KilledByMonster(_))));
    }

    #[test]
    fn stepping_a_terminated_state_fails() {
        let spec = flat_level(vec![spawn(EntityKind::Mugen, 3, 1), spawn(EntityKind::Coin, 4, 1)]);
        let (states, _) = run(&spec, &[AgentIntent::Right; 10]);
        let last = states.last().unwrap();
        assert_eq!(last.terminated, Some(EndReason::AllCoinsCollected));
        assert_eq!(step(&spec.terrain(), last, AgentIntent::None), Err(SimError::SteppedTerminated));
    }

    #[test]
    fn ladder_climb_up_and_off() {
        let mut spec = flat_level(vec![spawn(EntityKind::Mugen, 4, 1), spawn(EntityKind::Coin, 20, 1)]);
        for x in 6..12 {
            for y in 1..5 {
                spec.platform_cells.insert((x, y));
            }
        }
        for y in 1..5 {
            spec.ladder_cells.insert((5, y));
        }
        let mut intents = vec![AgentIntent::Right; 5];
        intents.extend([AgentIntent::Up; 40]);
        intents.extend([AgentIntent::Right; 10]);
        let (states, events) = run(&spec, &intents);
        assert!(events.iter().any(|e| e.kind == EventKind::LadderMount));
        assert!(events.iter().any(|e| e.kind == EventKind::LadderDismount));
        assert!(states.iter().any(|s| s.mugen.pose == PoseId::ClimbUp));
        let last = states.last().unwrap();
        assert_eq!(last.mugen.position.1, 5.0);
        assert!(last.mugen.position.0 > 6.5);
    }

    #[test]
    fn monster_motion_types() {
        let spec = flat_level(vec![
            spawn(EntityKind::Mugen, 1, 1),
            spawn(EntityKind::Barnacle, 8, 1),
            spawn(EntityKind::Frog, 12, 1),
            spawn(EntityKind::Bee, 16, 5),
            spawn(EntityKind::Snail, 20, 1),
            spawn(EntityKind::Coin, 23, 1),
        ]);
        let (states, _) = run(&spec, &[AgentIntent::None; 300]);
        let barnacle: Vec<_> = states.iter().map(|s| s.monsters[0].position).collect();
        assert!(barnacle.iter().all(|&p| p == barnacle[0]));
        // hopper: each airborne stretch goes up, then down
        let vys: Vec<f64> = states.iter().map(|s| s.monsters[1].velocity.1).collect();
        let mut signs: Vec<i32> = vys.iter().filter(|v| **v != 0.0).map(|v| if *v > 0.0 { 1 } else { -1 }).collect();
        signs.dedup();
        assert!(signs.len() >= 4);
        assert!(signs.windows(2).all(|w| w[0] != w[1]));
        // bee floats off the ground
        assert!(states.iter().all(|s| s.monsters[2].position.1 > 4.0));
        let snail_x: Vec<_> = states.iter().map(|s| s.monsters[3].position.0).collect();
        assert!(snail_x.iter().any(|x| *x != snail_x[0]));
    }
}
