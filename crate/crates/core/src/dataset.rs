//! Clip extraction, split balancing, manual-text checks and corpus statistics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::EntityKind;
use crate::episode::{EpisodeMetadata, FrameRecord};
use crate::render::{camera_left, VIEW_CELLS};
use crate::sim::{EventKind, PHYSICS};
use crate::CLIP_FRAMES;

/// Start-to-start distance between clips; equal to the clip length, so
/// clips do not overlap.
pub const CLIP_STRIDE: u32 = CLIP_FRAMES;
/// Largest share of plain clips allowed in the validation and test splits.
pub const PLAIN_CAP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interaction {
    CollectCoin,
    CollectGem,
    KillMonster,
    KilledByMonster,
}

impl Interaction {
    pub const ALL: [Interaction; 4] =
        [Interaction::CollectCoin, Interaction::CollectGem, Interaction::KillMonster, Interaction::KilledByMonster];

    pub fn of(kind: &EventKind) -> Option<Interaction> {
        match kind {
            EventKind::CoinCollected => Some(Interaction::CollectCoin),
            EventKind::GemCollected => Some(Interaction::CollectGem),
            EventKind::MonsterKilled(_) => Some(Interaction::KillMonster),
            EventKind::KilledByMonster(_) => Some(Interaction::KilledByMonster),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Interaction::CollectCoin => "collect coin",
            Interaction::CollectGem => "collect gem",
            Interaction::KillMonster => "kill monster",
            Interaction::KilledByMonster => "killed by monster",
        }
    }

    pub fn from_label(s: &str) -> Option<Interaction> {
        Interaction::ALL.iter().copied().find(|i| i.label() == s)
    }
}

/// A fixed-length window of one episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clip {
    pub episode: String,
    pub start_frame: u32,
    pub length: u32,
    /// Kinds seen on camera in at least one frame of the clip.
    pub entities: BTreeSet<EntityKind>,
    pub interactions: BTreeSet<Interaction>,
}

impl Clip {
    pub fn frames(&self) -> core::ops::Range<u32> {
        self.start_frame..self.start_frame + self.length
    }

    /// Only Mugen, or only Mugen and coins.
    pub fn is_plain(&self) -> bool {
        self.entities.iter().all(|k| matches!(k, EntityKind::Mugen | EntityKind::Coin))
    }

    /// Tag strings: entity names followed by interaction labels.
    pub fn tags(&self) -> Vec<&'static str> {
        self.entities.iter().map(|k| k.name()).chain(self.interactions.iter().map(|i| i.label())).collect()
    }
}

/// One entity instance drawn on a frame, with its center in camera space
/// (x from the left edge, y up from the bottom, both in cells).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnCamera {
    pub kind: EntityKind,
    pub x: f64,
    pub y: f64,
}

/// Every live monster, uncollected item and Mugen whose center lies in the
/// camera window.
pub fn on_camera(ep: &EpisodeMetadata, f: &FrameRecord) -> Vec<OnCamera> {
    let cam = camera_left(f.mugen.position.0);
    let mut out = Vec::new();
    let mut push = |kind, cx: f64, cy: f64| {
        let (x, y) = (cx - cam, cy);
        if (0.0..VIEW_CELLS).contains(&x) && (0.0..VIEW_CELLS).contains(&y) {
            out.push(OnCamera { kind, x, y });
        }
    };
    push(EntityKind::Mugen, f.mugen.position.0, f.mugen.position.1 + PHYSICS.mugen_height / 2.0);
    for m in f.monsters.iter().filter(|m| m.alive) {
        push(m.kind, m.position.0, m.position.1 + PHYSICS.monster_height / 2.0);
    }
    for (i, it) in ep.level.items().enumerate() {
        if !f.item_collected(i) {
            push(it.kind, it.cell.0 as f64 + 0.5, it.cell.1 as f64 + 0.5);
        }
    }
    out
}

/// Non-overlapping clips from frame 0; a trailing remainder is dropped.
pub fn split_clips(ep: &EpisodeMetadata, episode: &str) -> Vec<Clip> {
    let n = ep.frame_count();
    (0..)
        .map(|k| k * CLIP_STRIDE)
        .take_while(|s| s + CLIP_FRAMES <= n)
        .map(|start| {
            let range = start..start + CLIP_FRAMES;
            let entities = ep.frames[start as usize..range.end as usize]
                .iter()
                .flat_map(|f| on_camera(ep, f))
                .map(|o| o.kind)
                .collect();
            let interactions = ep
                .events
                .iter()
                .filter(|e| range.contains(&e.frame_idx))
                .filter_map(|e| Interaction::of(&e.kind))
                .collect();
            Clip { episode: episode.into(), start_frame: start, length: CLIP_FRAMES, entities, interactions }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcReject {
    NoMugen,
    TooFewWords,
    TooShort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcVerdict {
    Accept,
    Reject(QcReject),
}

/// Mechanical acceptance rules for human-written descriptions: Mugen must be
/// mentioned, and the text needs more than 3 words and more than 20 characters.
pub fn qc_manual_text(text: &str) -> QcVerdict {
    if !text.to_lowercase().contains("mugen") {
        QcVerdict::Reject(QcReject::NoMugen)
    } else if text.split_whitespace().count() <= 3 {
        QcVerdict::Reject(QcReject::TooFewWords)
    } else if text.chars().count() <= 20 {
        QcVerdict::Reject(QcReject::TooShort)
    } else {
        QcVerdict::Accept
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Clip indices per split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitAssignment {
    pub fn split_of(&self, clip: usize) -> Option<Split> {
        [(Split::Train, &self.train), (Split::Val, &self.val), (Split::Test, &self.test)]
            .into_iter()
            .find(|(_, v)| v.binary_search(&clip).is_ok())
            .map(|(s, _)| s)
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("split ratios must be non-negative and sum to 1")]
    BadRatios,
    #[error("{needed} diverse clips are needed to keep plain clips at or below the cap, only {available} exist")]
    InsufficientDiverseClips { needed: usize, available: usize },
}

/// Assign clips to train/val/test by seeded shuffle, keeping plain clips at
/// no more than [`PLAIN_CAP`] of each of val and test.
pub fn balance_split(clips: &[Clip], seed: u64, ratios: SplitRatios) -> Result<SplitAssignment, DatasetError> {
    let r = [ratios.train, ratios.val, ratios.test];
    if r.iter().any(|v| !v.is_finite() || *v < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DatasetError::BadRatios);
    }
    let n = clips.len();
    let sizes = [libm::round(n as f64 * ratios.val) as usize, libm::round(n as f64 * ratios.test) as usize];
    if sizes[0] + sizes[1] > n {
        return Err(DatasetError::BadRatios);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut plain, mut diverse): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| clips[i].is_plain());
    plain.shuffle(&mut rng);
    diverse.shuffle(&mut rng);
    let frac = if n == 0 { 0.0 } else { plain.len() as f64 / n as f64 };

    // How many plain clips each held-out split takes: its natural share, or
    // more when diverse clips run short, but never above the cap.
    let mut plain_left = plain.len();
    let mut quota = [0usize; 2];
    for k in 0..2 {
        let cap = libm::floor(sizes[k] as f64 * PLAIN_CAP + 1e-9) as usize;
        quota[k] = cap.min(plain_left).min(libm::round(sizes[k] as f64 * frac) as usize);
        plain_left -= quota[k];
    }
    for k in 0..2 {
        let cap = libm::floor(sizes[k] as f64 * PLAIN_CAP + 1e-9) as usize;
        let diverse_needed: usize = (0..2).map(|j| sizes[j] - quota[j]).sum();
        if diverse_needed > diverse.len() {
            let extra = (diverse_needed - diverse.len()).min(cap - quota[k]).min(plain_left);
            quota[k] += extra;
            plain_left -= extra;
        }
    }
    let needed: usize = (0..2).map(|k| sizes[k] - quota[k]).sum();
    if needed > diverse.len() {
        return Err(DatasetError::InsufficientDiverseClips { needed, available: diverse.len() });
    }
    let mut out = SplitAssignment::default();
    let (mut p, mut d) = (plain.into_iter(), diverse.into_iter());
    for (k, dest) in [&mut out.val, &mut out.test].into_iter().enumerate() {
        dest.extend(p.by_ref().take(quota[k]));
        dest.extend(d.by_ref().take(sizes[k] - quota[k]));
        dest.sort_unstable();
    }
    out.train = p.chain(d).collect();
    out.train.sort_unstable();
    Ok(out)
}

/// Per kind, the number of clips it appears in.
pub fn occurrence_stats(clips: &[Clip]) -> BTreeMap<EntityKind, u64> {
    let mut counts: BTreeMap<EntityKind, u64> = EntityKind::ALL.iter().map(|k| (*k, 0)).collect();
    for c in clips {
        for k in &c.entities {
            *counts.get_mut(k).expect("all kinds present") += 1;
        }
    }
    counts
}

/// Grid of counts, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heatmap2D {
    pub cols: usize,
    pub rows: usize,
    pub counts: Vec<u64>,
}

impl Heatmap2D {
    pub fn new(cols: usize, rows: usize) -> Heatmap2D {
        assert!(cols >= 1 && rows >= 1, "heatmap grid must be at least 1x1");
        Heatmap2D { cols, rows, counts: vec![0; cols * rows] }
    }

    pub fn get(&self, col: usize, row: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `ln(1 + count)` per cell.
    pub fn log_display(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| libm::log1p(c as f64)).collect()
    }
}

/// Accumulate on-camera centers of `kind` over every frame of every clip.
pub fn location_heatmap(clips: &[(&EpisodeMetadata, &Clip)], kind: EntityKind, cols: usize, rows: usize) -> Heatmap2D {
    let mut h = Heatmap2D::new(cols, rows);
    for (ep, clip) in clips {
        for f in &ep.frames[clip.start_frame as usize..(clip.start_frame + clip.length) as usize] {
            for o in on_camera(ep, f).into_iter().filter(|o| o.kind == kind) {
                let c = ((o.x / VIEW_CELLS * cols as f64) as usize).min(cols - 1);
                let r = (((VIEW_CELLS - o.y) / VIEW_CELLS * rows as f64) as usize).min(rows - 1);
                h.counts[r * cols + c] += 1;
            }
        }
    }
    h
}

/// Within-clip frame histogram of an interaction.
pub fn temporal_heatmap(clips: &[(&EpisodeMetadata, &Clip)], interaction: Interaction) -> Vec<u64> {
    let mut bins = vec![0u64; CLIP_FRAMES as usize];
    for (ep, clip) in clips {
        for e in &ep.events {
            if clip.frames().contains(&e.frame_idx) && Interaction::of(&e.kind) == Some(interaction) {
                bins[(e.frame_idx - clip.start_frame) as usize] += 1;
            }
        }
    }
    bins
}

/// Whole-episode histogram of an interaction, with time normalized by
/// episode length into `bins` bins.
pub fn episode_temporal_heatmap(episodes: &[&EpisodeMetadata], interaction: Interaction, bins: usize) -> Vec<u64> {
    let mut out = vec![0u64; bins];
    for ep in episodes {
        let n = ep.frame_count() as usize;
        for e in &ep.events {
            if Interaction::of(&e.kind) == Some(interaction) {
                out[(e.frame_idx as usize * bins / n).min(bins - 1)] += 1;
            }
        }
    }
    out
}
