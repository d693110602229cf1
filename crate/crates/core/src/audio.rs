//! Event-triggered sound effects over a per-theme music loop.
//!
//! One effect plays at a time. Schedules are built for the whole episode and
//! then cut to the requested range, and music is keyed to absolute episode
//! time, so clip audio is an exact slice of episode audio.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::Theme;
use crate::episode::EpisodeMetadata;
use crate::math::mix64;
use crate::sim::{EventKind, PoseId};
use crate::FPS;

pub const SAMPLE_RATE: u32 = 22_050;
pub const SAMPLES_PER_FRAME: u32 = SAMPLE_RATE / FPS;

/// Mix gains and limiter knee, as linear amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixLevels {
    pub music_dbfs: f64,
    pub sfx_dbfs: f64,
    /// Output magnitude above which the soft clipper engages.
    pub knee: f64,
}

pub const MIX: MixLevels = MixLevels { music_dbfs: -12.0, sfx_dbfs: -6.0, knee: 0.9 };

fn db(v: f64) -> f64 {
    libm::pow(10.0, v / 20.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SfxId {
    Walk,
    Jump,
    CollectCoin,
    KillMonster,
    PowerUp,
    ClimbLadder,
    BumpHead,
    Die,
}

impl SfxId {
    pub const ALL: [SfxId; 8] = [
        SfxId::Walk,
        SfxId::Jump,
        SfxId::CollectCoin,
        SfxId::KillMonster,
        SfxId::PowerUp,
        SfxId::ClimbLadder,
        SfxId::BumpHead,
        SfxId::Die,
    ];

    /// Higher wins when two effects would overlap.
    pub fn priority(self) -> u8 {
        match self {
            SfxId::Walk => 0,
            SfxId::ClimbLadder => 1,
            SfxId::Jump => 2,
            SfxId::BumpHead => 3,
            SfxId::CollectCoin => 4,
            SfxId::PowerUp => 5,
            SfxId::KillMonster => 6,
            SfxId::Die => 7,
        }
    }

    /// Fixed length of one-shot effects; loops last as long as their pose.
    pub fn one_shot_samples(self) -> Option<u32> {
        match self {
            SfxId::Walk | SfxId::ClimbLadder => None,
            SfxId::Jump => Some(4_800),
            SfxId::CollectCoin => Some(5_400),
            SfxId::KillMonster => Some(6_600),
            SfxId::PowerUp => Some(11_025),
            SfxId::BumpHead => Some(3_300),
            SfxId::Die => Some(17_640),
        }
    }

    pub fn for_event(kind: &EventKind) -> Option<SfxId> {
        match kind {
            EventKind::CoinCollected => Some(SfxId::CollectCoin),
            EventKind::GemCollected => Some(SfxId::PowerUp),
            EventKind::MonsterKilled(_) => Some(SfxId::KillMonster),
            EventKind::KilledByMonster(_) => Some(SfxId::Die),
            EventKind::JumpStart => Some(SfxId::Jump),
            EventKind::BumpHead => Some(SfxId::BumpHead),
            _ => None,
        }
    }

    pub fn for_pose(pose: PoseId) -> Option<SfxId> {
        match pose {
            PoseId::WalkLeft | PoseId::WalkRight => Some(SfxId::Walk),
            PoseId::ClimbUp | PoseId::ClimbDown => Some(SfxId::ClimbLadder),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfxEntry {
    pub sfx: SfxId,
    /// Relative to the schedule origin.
    pub start_sample: u32,
    pub duration_samples: u32,
    /// Offset into the effect waveform at `start_sample`; nonzero when the
    /// effect began before the scheduled range.
    pub phase: u32,
}

impl SfxEntry {
    pub fn end_sample(&self) -> u32 {
        self.start_sample + self.duration_samples
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfxSchedule {
    pub entries: Vec<SfxEntry>,
    pub sample_rate: u32,
    /// Episode sample index of relative sample 0.
    pub origin: u64,
}

impl SfxSchedule {
    pub fn empty(origin: u64) -> SfxSchedule {
        SfxSchedule { entries: Vec::new(), sample_rate: SAMPLE_RATE, origin }
    }

    /// Sorted, non-overlapping and non-empty entries.
    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(|e| e.duration_samples > 0)
            && self.entries.windows(2).all(|w| w[0].end_sample() <= w[1].start_sample)
    }

    pub fn active_at(&self, sample: u32) -> Option<&SfxEntry> {
        self.entries.iter().find(|e| (e.start_sample..e.end_sample()).contains(&sample))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioTrack {
    pub sample_rate: u32,
    pub samples: Vec<i16>,
    pub schedule: SfxSchedule,
    pub theme: Theme,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AudioError {
    #[error("frame range {start}..{end} is outside an episode of {frames} frames")]
    RangeOutOfBounds { start: u32, end: u32, frames: u32 },
}

/// Sample count for `frames` video frames: frames/30 seconds at 22050 Hz.
pub fn samples_for_frames(frames: u32) -> usize {
    (frames * SAMPLES_PER_FRAME) as usize
}

/// Resolve overlapping candidates into a monophonic timeline. At every
/// instant the covering candidate with the highest priority plays, ties going
/// to the later trigger; a candidate that regains the channel resumes at the
/// phase it would have reached.
fn resolve(cands: &[SfxEntry]) -> Vec<SfxEntry> {
    let mut cuts: Vec<u32> = cands.iter().flat_map(|c| [c.start_sample, c.end_sample()]).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut out: Vec<SfxEntry> = Vec::new();
    let mut prev: Option<usize> = None;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let winner = cands
            .iter()
            .enumerate()
            .filter(|(_, c)| c.start_sample <= a && c.end_sample() >= b)
            .max_by_key(|(i, c)| (c.sfx.priority(), c.start_sample, *i))
            .map(|(i, _)| i);
        match (winner, prev) {
            (Some(i), Some(p)) if i == p => out.last_mut().expect("previous run").duration_samples += b - a,
            (Some(i), _) => {
                let c = &cands[i];
                out.push(SfxEntry { sfx: c.sfx, start_sample: a, duration_samples: b - a, phase: c.phase + (a - c.start_sample) });
            }
            (None, _) => {}
        }
        prev = winner;
    }
    out
}

fn episode_schedule(ep: &EpisodeMetadata) -> Vec<SfxEntry> {
    let total = samples_for_frames(ep.frame_count()) as u32;
    let mut cands = Vec::new();
    for e in &ep.events {
        if let Some(sfx) = SfxId::for_event(&e.kind) {
            let len = sfx.one_shot_samples().expect("events map to one-shots");
            cands.push(SfxEntry { sfx, start_sample: e.frame_idx * SAMPLES_PER_FRAME, duration_samples: len, phase: 0 });
        }
    }
    let mut i = 0;
    while i < ep.frames.len() {
        let sfx = SfxId::for_pose(ep.frames[i].mugen.pose);
        let mut j = i + 1;
        while j < ep.frames.len() && SfxId::for_pose(ep.frames[j].mugen.pose) == sfx {
            j += 1;
        }
        if let Some(sfx) = sfx {
            cands.push(SfxEntry {
                sfx,
                start_sample: i as u32 * SAMPLES_PER_FRAME,
                duration_samples: (j - i) as u32 * SAMPLES_PER_FRAME,
                phase: 0,
            });
        }
        i = j;
    }
    for c in &mut cands {
        c.duration_samples = c.duration_samples.min(total.saturating_sub(c.start_sample));
    }
    cands.retain(|c| c.duration_samples > 0);
    resolve(&cands)
}

/// Schedule of effects audible during `range`, with sample 0 at its first frame.
pub fn build_sfx_schedule(ep: &EpisodeMetadata, range: Range<u32>) -> Result<SfxSchedule, AudioError> {
    let n = ep.frame_count();
    if range.start > range.end || range.end > n {
        return Err(AudioError::RangeOutOfBounds { start: range.start, end: range.end, frames: n });
    }
    let (lo, hi) = (range.start * SAMPLES_PER_FRAME, range.end * SAMPLES_PER_FRAME);
    let entries = episode_schedule(ep)
        .into_iter()
        .filter(|e| e.end_sample() > lo && e.start_sample < hi)
        .map(|e| {
            let start = e.start_sample.max(lo);
            let end = e.end_sample().min(hi);
            SfxEntry { sfx: e.sfx, start_sample: start - lo, duration_samples: end - start, phase: e.phase + (start - e.start_sample) }
        })
        .collect();
    Ok(SfxSchedule { entries, sample_rate: SAMPLE_RATE, origin: lo as u64 })
}

fn noise(n: u64) -> f64 {
    (mix64(n) >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn square(phase: f64) -> f64 {
    if libm::fmod(phase, 1.0) < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Effect waveform in [-1, 1] at `phase` samples after its trigger.
pub fn sfx_sample(sfx: SfxId, phase: u32) -> f64 {
    let sr = SAMPLE_RATE as f64;
    let t = phase as f64 / sr;
    match sfx {
        SfxId::Walk => {
            // One footstep every quarter second.
            let s = libm::fmod(t, 0.25);
            0.7 * libm::exp(-s * 45.0) * (libm::sin(TAU * 110.0 * s) + 0.4 * noise(phase as u64))
        }
        SfxId::ClimbLadder => {
            let s = libm::fmod(t, 0.2);
            0.6 * libm::exp(-s * 60.0) * libm::sin(TAU * 720.0 * s)
        }
        SfxId::Jump => {
            // Rising sweep 300 -> 900 Hz.
            let d = 4_800.0 / sr;
            let ph = 300.0 * t + 300.0 * t * t / d;
            0.5 * square(ph) * (1.0 - t / d)
        }
        SfxId::CollectCoin => {
            let f = if t < 0.08 { 988.0 } else { 1319.0 };
            let env = if t < 0.08 { 1.0 } else { libm::exp(-(t - 0.08) * 14.0) };
            0.55 * square(f * t) * env
        }
        SfxId::KillMonster => {
            let d = 6_600.0 / sr;
            let ph = 600.0 * t - 225.0 * t * t / d;
            let env = 1.0 - t / d;
            env * (0.6 * libm::sin(TAU * ph) + 0.3 * noise(phase as u64 ^ 0x51))
        }
        SfxId::PowerUp => {
            const NOTES: [f64; 4] = [523.25, 659.25, 783.99, 1046.5];
            let k = ((t / 0.125) as usize).min(3);
            let s = t - k as f64 * 0.125;
            0.6 * libm::sin(TAU * NOTES[k] * t) * libm::exp(-s * 6.0)
        }
        SfxId::BumpHead => {
            let d = 3_300.0 / sr;
            0.8 * square(180.0 * t) * (1.0 - t / d)
        }
        SfxId::Die => {
            // Falling sweep 700 -> 100 Hz with vibrato.
            let d = 17_640.0 / sr;
            let ph = 700.0 * t - 300.0 * t * t / d + 0.8 * libm::sin(TAU * 6.0 * t);
            0.8 * libm::sin(TAU * ph) * (1.0 - t / d)
        }
    }
}

fn midi(n: f64) -> f64 {
    440.0 * libm::pow(2.0, (n - 69.0) / 12.0)
}

/// Theme music in [-1, 1] at an absolute episode sample; loops every 8 s.
pub fn music_sample(theme: Theme, abs: u64) -> f64 {
    let sr = SAMPLE_RATE as f64;
    let t = (abs % (8 * SAMPLE_RATE as u64)) as f64 / sr;
    let (bpm, melody, bass): (f64, &[f64], &[f64]) = match theme {
        Theme::Snow => (120.0, &[76.0, 79.0, 81.0, 84.0, 81.0, 79.0, 76.0, 74.0], &[52.0, 52.0, 57.0, 55.0]),
        Theme::Space => (90.0, &[62.0, 65.0, 69.0, 72.0, 74.0, 72.0, 69.0, 65.0], &[38.0, 41.0, 36.0, 43.0]),
    };
    let beat = 60.0 / bpm;
    let k = (t / beat) as usize;
    let s = t - k as f64 * beat;
    let note = midi(melody[k % melody.len()]);
    let root = midi(bass[(k / 4) % bass.len()]);
    match theme {
        Theme::Snow => {
            let bell = libm::sin(TAU * note * t) + 0.3 * libm::sin(TAU * 2.0 * note * t);
            0.55 * bell * libm::exp(-s * 5.0) + 0.3 * libm::sin(TAU * root * t)
        }
        Theme::Space => {
            let pad = libm::sin(TAU * root * t) + 0.5 * libm::sin(TAU * root * 1.005 * t) + 0.25 * libm::sin(TAU * root * 2.0 * t);
            0.35 * pad / 1.75 * 1.6 + 0.4 * libm::sin(TAU * note * t) * libm::exp(-s * 3.0)
        }
    }
}

/// Memoryless soft clipper: identity below the knee, asymptotic to full scale.
pub fn soft_clip(x: f64, knee: f64) -> f64 {
    let a = x.abs();
    if a <= knee {
        x
    } else {
        let head = 1.0 - knee;
        x.signum() * (knee + head * libm::tanh((a - knee) / head))
    }
}

/// Mix music and effects for `frame_count` frames starting at the schedule origin.
pub fn synthesize_audio(schedule: &SfxSchedule, theme: Theme, frame_count: u32) -> AudioTrack {
    let n = samples_for_frames(frame_count);
    let (gm, gs) = (db(MIX.music_dbfs), db(MIX.sfx_dbfs));
    let mut mix: Vec<f64> = (0..n).map(|i| gm * music_sample(theme, schedule.origin + i as u64)).collect();
    for e in &schedule.entries {
        let end = (e.end_sample() as usize).min(n);
        for i in e.start_sample as usize..end {
            mix[i] += gs * sfx_sample(e.sfx, e.phase + (i as u32 - e.start_sample));
        }
    }
    let samples = mix.into_iter().map(|x| libm::round(soft_clip(x, MIX.knee) * i16::MAX as f64) as i16).collect();
    AudioTrack { sample_rate: SAMPLE_RATE, samples, schedule: schedule.clone(), theme }
}

/// Schedule and mix the audio for `range` of an episode.
pub fn episode_audio(ep: &EpisodeMetadata, range: Range<u32>) -> Result<AudioTrack, AudioError> {
    let schedule = build_sfx_schedule(ep, range.clone())?;
    Ok(synthesize_audio(&schedule, ep.level.theme, range.end - range.start))
}
