//! Template captions from Mugen's pose track.
//!
//! Frames are grouped into same-pose runs, runs of one pose interrupted by at
//! most [`GAP`] frames are merged, short segments are dropped, and each
//! remaining segment becomes one phrase.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use thiserror::Error;

use crate::entity::EntityKind;
use crate::episode::{EpisodeMetadata, FrameRecord};
use crate::math::floor_i;
use crate::sim::{EventKind, PoseId, PHYSICS};
use crate::terrain::Terrain;

/// Longest interruption bridged when merging runs of one pose.
pub const GAP: u32 = 4;
/// Segments shorter than this many frames are not described.
pub const MIN_SEGMENT_FRAMES: u32 = 5;
pub const STILL_CAPTION: &str = "Mugen stands still.";
/// Net movement, in cells, below which a segment counts as staying put.
const MOVE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Height {
    Higher,
    Lower,
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizontal {
    Left,
    Right,
    NoMove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Platform,
    Ladder,
    Ground,
    Monster,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoseSegment {
    /// Representative pose; jump and climb variants collapse to
    /// [`PoseId::Jump`] and [`PoseId::ClimbUp`].
    pub pose: PoseId,
    pub start_frame: u32,
    /// Inclusive.
    pub end_frame: u32,
    pub merge_count: u32,
    pub height: Height,
    pub horizontal: Horizontal,
    pub jumped_over: Vec<EntityKind>,
    pub landing_surface: Option<Surface>,
    pub kill_at_end: Option<EntityKind>,
    pub interaction: Option<EventKind>,
}

impl PoseSegment {
    pub fn len(&self) -> u32 {
        self.end_frame - self.start_frame + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutotextError {
    #[error("frame range {start}..{end} is outside an episode of {frames} frames")]
    RangeOutOfBounds { start: u32, end: u32, frames: u32 },
}

/// Pose used for grouping: direction-specific jump and climb poses are one
/// activity whose direction comes from the trajectory.
fn family(p: PoseId) -> PoseId {
    if p.is_jump() {
        PoseId::Jump
    } else if p.is_climb() {
        PoseId::ClimbUp
    } else {
        p
    }
}

#[derive(Debug, Clone, Copy)]
struct Run {
    pose: PoseId,
    start: u32,
    end: u32,
    merges: u32,
}

fn check_range(ep: &EpisodeMetadata, range: &Range<u32>) -> Result<(), AutotextError> {
    let n = ep.frame_count();
    if range.start >= range.end || range.end > n {
        return Err(AutotextError::RangeOutOfBounds { start: range.start, end: range.end, frames: n });
    }
    Ok(())
}

fn runs(frames: &[FrameRecord], range: Range<u32>) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for f in range {
        let pose = family(frames[f as usize].mugen.pose);
        match out.last_mut() {
            Some(r) if r.pose == pose => r.end = f,
            _ => out.push(Run { pose, start: f, end: f, merges: 1 }),
        }
    }
    out
}

/// A stomp hold right after a jump is the jump's ending, not a new activity.
fn absorb_stomps(runs: Vec<Run>) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    for r in runs {
        match out.last_mut() {
            Some(prev) if r.pose == PoseId::KillStomp && prev.pose == PoseId::Jump => prev.end = r.end,
            _ => out.push(r),
        }
    }
    out
}

fn merge_gaps(runs: Vec<Run>) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    for r in runs {
        let mut between = 0;
        let mut target = None;
        for (k, prev) in out.iter().enumerate().rev() {
            if prev.pose == r.pose {
                target = Some(k);
                break;
            }
            between += prev.end - prev.start + 1;
            if between > GAP {
                break;
            }
        }
        match target {
            Some(k) if between <= GAP => {
                out.truncate(k + 1);
                let t = &mut out[k];
                t.end = r.end;
                if between > 0 {
                    t.merges += r.merges;
                }
            }
            _ => out.push(r),
        }
    }
    out
}

fn landing_frame(ep: &EpisodeMetadata, end: u32) -> &FrameRecord {
    &ep.frames[(end as usize + 1).min(ep.frames.len() - 1)]
}

fn surface_under(t: &Terrain, f: &FrameRecord) -> Option<Surface> {
    let m = &f.mugen;
    if m.pose.is_climb() {
        return Some(Surface::Ladder);
    }
    if m.pose.is_jump() || m.pose == PoseId::Fall || m.pose == PoseId::Die {
        return None;
    }
    let (x, y) = m.position;
    if (y - libm::round(y)).abs() > 1e-3 {
        return None;
    }
    let row = libm::round(y) as i32 - 1;
    let hw = PHYSICS.mugen_half_width - 1e-6;
    let cols = floor_i(x - hw)..=floor_i(x + hw);
    if cols.clone().any(|c| t.solid(c, row)) {
        Some(if row <= 0 { Surface::Ground } else { Surface::Platform })
    } else if cols.clone().any(|c| t.ladder_top(c, row)) {
        Some(Surface::Ladder)
    } else {
        None
    }
}

/// Events between Mugen and another entity.
fn is_interaction(k: &EventKind) -> bool {
    matches!(
        k,
        EventKind::CoinCollected | EventKind::GemCollected | EventKind::MonsterKilled(_) | EventKind::KilledByMonster(_)
    )
}

fn horizontal(dx: f64) -> Horizontal {
    if dx > MOVE_THRESHOLD {
        Horizontal::Right
    } else if dx < -MOVE_THRESHOLD {
        Horizontal::Left
    } else {
        Horizontal::NoMove
    }
}

fn annotate(ep: &EpisodeMetadata, t: &Terrain, r: &Run) -> PoseSegment {
    let takeoff = &ep.frames[r.start.saturating_sub(1) as usize];
    let after = landing_frame(ep, r.end);
    let (dx, dy) = (after.mugen.position.0 - takeoff.mugen.position.0, after.mugen.position.1 - takeoff.mugen.position.1);
    let height = if dy > MOVE_THRESHOLD {
        Height::Higher
    } else if dy < -MOVE_THRESHOLD {
        Height::Lower
    } else {
        Height::Same
    };
    let horizontal = horizontal(dx);
    let in_seg = |f: u32| (r.start..=r.end).contains(&f);
    let interaction = ep.events.iter().find(|e| in_seg(e.frame_idx) && is_interaction(&e.kind)).map(|e| e.kind);
    let kill_at_end = if r.pose == PoseId::Jump {
        ep.events.iter().rev().find_map(|e| match e.kind {
            EventKind::MonsterKilled(k) if in_seg(e.frame_idx) => Some(k),
            _ => None,
        })
    } else {
        None
    };
    let mut jumped_over = Vec::new();
    if r.pose == PoseId::Jump {
        for f in r.start.max(1)..=r.end {
            let (a, b) = (&ep.frames[f as usize - 1], &ep.frames[f as usize]);
            for (ma, mb) in a.monsters.iter().zip(&b.monsters) {
                if !(ma.alive && mb.alive) || jumped_over.contains(&mb.kind) {
                    continue;
                }
                let crossed = (a.mugen.position.0 - ma.position.0).signum() != (b.mugen.position.0 - mb.position.0).signum();
                let above = b.mugen.position.1 >= mb.position.1 + 0.5 * PHYSICS.monster_height;
                if crossed && above {
                    jumped_over.push(mb.kind);
                }
            }
        }
        jumped_over.retain(|k| Some(*k) != kill_at_end);
    }
    let landing_surface = if kill_at_end.is_some() { Some(Surface::Monster) } else { surface_under(t, after) };
    PoseSegment {
        pose: r.pose,
        start_frame: r.start,
        end_frame: r.end,
        merge_count: r.merges,
        height,
        horizontal,
        jumped_over,
        landing_surface,
        kill_at_end,
        interaction,
    }
}

/// Merged and filtered pose segments within `range`.
pub fn segment_poses(ep: &EpisodeMetadata, range: Range<u32>) -> Result<Vec<PoseSegment>, AutotextError> {
    check_range(ep, &range)?;
    let t = ep.level.terrain();
    let merged = merge_gaps(absorb_stomps(runs(&ep.frames, range)));
    Ok(merged
        .iter()
        .filter(|r| r.end - r.start + 1 >= MIN_SEGMENT_FRAMES)
        .map(|r| annotate(ep, &t, r))
        .collect())
}

/// Entity kinds that appear in `range`: live monsters and uncollected items.
pub fn present_kinds(ep: &EpisodeMetadata, range: Range<u32>) -> BTreeSet<EntityKind> {
    let mut set = BTreeSet::new();
    set.insert(EntityKind::Mugen);
    let items: Vec<EntityKind> = ep.level.items().map(|i| i.kind).collect();
    for f in &ep.frames[range.start as usize..range.end as usize] {
        set.extend(f.monsters.iter().filter(|m| m.alive).map(|m| m.kind));
        set.extend(items.iter().enumerate().filter(|(i, _)| !f.item_collected(*i)).map(|(_, k)| *k));
    }
    set
}

fn count_words(n: u32) -> &'static str {
    match n {
        0 | 1 => "",
        2 => " twice",
        3 => " three times",
        _ => " several times",
    }
}

fn direction(h: Horizontal) -> &'static str {
    match h {
        Horizontal::Left => " to the left",
        Horizontal::Right => " to the right",
        Horizontal::NoMove => "",
    }
}

fn article(kind: EntityKind) -> String {
    format!("a {}", kind.name())
}

/// Phrase for one segment, without the leading "Mugen". `None` for segments
/// that describe nothing (standing idle).
pub fn phrase(seg: &PoseSegment, present: &BTreeSet<EntityKind>) -> Option<String> {
    let known = |k: EntityKind| present.contains(&k);
    let p = match seg.pose {
        PoseId::Idle => return None,
        PoseId::WalkLeft => "walks to the left".into(),
        PoseId::WalkRight => "walks to the right".into(),
        PoseId::Jump | PoseId::JumpLeft | PoseId::JumpRight => {
            let mut s = String::from("jumps");
            s += match seg.height {
                Height::Higher => " up",
                Height::Lower => " down",
                Height::Same => "",
            };
            s += count_words(seg.merge_count);
            s += direction(seg.horizontal);
            let over: Vec<String> = seg.jumped_over.iter().filter(|k| known(**k)).map(|k| article(*k)).collect();
            if !over.is_empty() {
                s += " over ";
                s += &over.join(" and ");
            }
            match seg.landing_surface {
                Some(Surface::Platform) => s += " to a platform",
                Some(Surface::Ladder) => s += " to a ladder",
                Some(Surface::Ground) => s += " to the ground",
                Some(Surface::Monster) | None => {}
            }
            if let Some(k) = seg.kill_at_end.filter(|k| known(*k)) {
                s += " and kills ";
                s += &article(k);
            }
            s
        }
        PoseId::Fall => format!("falls{}", direction(seg.horizontal)),
        PoseId::Land => "lands".into(),
        PoseId::ClimbUp | PoseId::ClimbDown | PoseId::ClimbIdle => match seg.height {
            Height::Higher => "climbs up a ladder".into(),
            Height::Lower => "climbs down a ladder".into(),
            Height::Same => "holds on to a ladder".into(),
        },
        PoseId::Collect => if known(EntityKind::Coin) { "collects a coin" } else { "collects an item" }.into(),
        PoseId::PowerUp => if known(EntityKind::Gem) { "collects a gem and gets a shield" } else { "gets a shield" }.into(),
        PoseId::BumpHead => "bumps its head".into(),
        PoseId::KillStomp => match seg.interaction {
            Some(EventKind::MonsterKilled(k)) if known(k) => format!("kills {}", article(k)),
            _ => "stomps".into(),
        },
        PoseId::Die => match killer(seg) {
            Some(k) if known(k) => format!("killed by {}", article(k)),
            _ => "dies".into(),
        },
    };
    Some(p)
}

fn killer(seg: &PoseSegment) -> Option<EntityKind> {
    match seg.interaction {
        Some(EventKind::KilledByMonster(k)) => Some(k),
        _ => None,
    }
}

/// Caption for `range`: "Mugen " followed by the segment phrases joined by ", and ".
pub fn generate_autotext(ep: &EpisodeMetadata, range: Range<u32>) -> Result<String, AutotextError> {
    let mut segs = segment_poses(ep, range.clone())?;
    // A death tail that starts before the range still names its killer.
    if let Some(s) = segs.iter_mut().find(|s| s.pose == PoseId::Die && s.interaction.is_none()) {
        s.interaction = ep.events.iter().find(|e| matches!(e.kind, EventKind::KilledByMonster(_))).map(|e| e.kind);
    }
    let present = present_kinds(ep, range);
    let phrases: Vec<String> = segs.iter().filter_map(|s| phrase(s, &present)).collect();
    if phrases.is_empty() {
        return Ok(STILL_CAPTION.into());
    }
    Ok(format!("Mugen {}", phrases.join(", and ")))
}
