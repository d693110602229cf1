//! Batch commands. Each one processes its inputs on a worker pool, names
//! outputs from the inputs alone (never from scheduling order) and writes a
//! `summary.json` next to its outputs.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mugenforge_core::audio::episode_audio;
use mugenforge_core::autotext::generate_autotext;
use mugenforge_core::dataset::{
    balance_split, episode_temporal_heatmap, location_heatmap, occurrence_stats, split_clips, temporal_heatmap, Clip,
    Interaction,
};
use mugenforge_core::episode::{policy_seed, run_episode, verify_replay};
use mugenforge_core::render::render_frame;
use mugenforge_core::xmetrics::{
    contrastive_loss, ensemble_scores, recall_at_k, relative_similarity, EmbeddingBatch, MetricConfig, SimilarityMatrix,
};
use mugenforge_core::{generate_level, EntityKind, EpisodeMetadata, PresetRegistry, Theme, CLIP_FRAMES};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::codec::{canonical_json, deserialize_episode, serialize_episode, EXTENSION};
use crate::config::Config;
use crate::media;

pub const SUMMARY_FILE: &str = "summary.json";
pub const INDEX_FILE: &str = "index.jsonl";
/// Preset name that cycles through the fourteen standard agents by seed.
pub const MIXED_POLICY: &str = "mixed";

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<Config> {
        match &self.config {
            Some(p) => Config::load(p),
            None => Ok(Config::default()),
        }
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| anyhow::Error::new(UsageError("--out is required".into())))
    }
}

/// Bad flags or arguments; reported with exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThemeChoice {
    Snow,
    Space,
    /// Snow for even seeds, Space for odd ones.
    Alternate,
}

impl ThemeChoice {
    fn for_seed(self, seed: u64) -> Theme {
        match self {
            ThemeChoice::Snow => Theme::Snow,
            ThemeChoice::Space => Theme::Space,
            ThemeChoice::Alternate if seed.is_multiple_of(2) => Theme::Snow,
            ThemeChoice::Alternate => Theme::Space,
        }
    }
}

/// Parse `A..B` into a non-empty half-open range.
pub fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
    if a >= b {
        return Err(format!("seed range {s:?} is empty"));
    }
    Ok(a..b)
}

fn parse_subsample(s: &str) -> Result<u32, String> {
    match s.parse() {
        Ok(n @ (8 | 16 | 32)) => Ok(n),
        _ => Err(format!("frames per clip must be 8, 16 or 32, got {s:?}")),
    }
}

fn parse_resolution(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(r) if (64..=1400).contains(&r) => Ok(r),
        _ => Err(format!("resolution must be an integer in 64..=1400, got {s:?}")),
    }
}

/// Machine-readable record of one command run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub command: &'static str,
    pub inputs: usize,
    pub outputs: usize,
    pub failures: Failures,
    pub details: Value,
    pub elapsed_ms: u128,
    /// One-line human report.
    pub report: String,
}

impl Summary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "failures": self.failures.iter().map(|(k, e)| json!({"item": k, "error": e})).collect::<Vec<_>>(),
            "details": self.details,
            "elapsed_ms": self.elapsed_ms as u64,
        })
    }

    fn write(&self, out: Option<&Path>) -> Result<()> {
        if let Some(dir) = out {
            media::write_atomic(&dir.join(SUMMARY_FILE), canonical_json(&self.to_json())?.as_bytes())?;
        }
        Ok(())
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return usage("--workers must be at least 1");
        }
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

/// Episode files under `input`: the file itself, or the sorted
/// `.mugen.json` files directly inside a directory.
pub fn episode_files(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    if !input.is_dir() {
        bail!("{} does not exist", input.display());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(EXTENSION)))
        .collect();
    files.sort();
    Ok(files)
}

/// File name without the `.mugen.json` extension.
pub fn episode_stem(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("episode");
    name.strip_suffix(EXTENSION).unwrap_or(name).to_string()
}

fn load(path: &Path) -> Result<EpisodeMetadata> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize_episode(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn error_chain(e: &anyhow::Error) -> String {
    format!("{e:#}")
}

/// `(item, error)` pairs reported in the summary.
type Failures = Vec<(String, String)>;

/// Load every episode, keeping file order; failures are reported per file.
fn load_all(files: &[PathBuf]) -> (Vec<(String, EpisodeMetadata)>, Failures) {
    let loaded: Vec<_> = files.par_iter().map(|p| (episode_stem(p), load(p))).collect();
    let mut eps = Vec::new();
    let mut failures = Vec::new();
    for (stem, r) in loaded {
        match r {
            Ok(ep) => eps.push((stem, ep)),
            Err(e) => failures.push((stem, error_chain(&e))),
        }
    }
    (eps, failures)
}

fn name_of<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Level seeds as a half-open range `A..B`.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Range<u64>,
    #[arg(long, value_enum, default_value = "snow")]
    pub theme: ThemeChoice,
    /// Policy preset name, or `mixed` to cycle the fourteen agents by seed.
    #[arg(long, default_value = "profile-01")]
    pub policy: String,
    /// Run seed mixed into every policy seed; overrides `run_seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

pub fn file_name(seed: u64) -> String {
    format!("level-{seed:06}{EXTENSION}")
}

pub fn gen(args: &GenArgs) -> Result<Summary> {
    let t0 = Instant::now();
    let cfg = args.common.config()?;
    let out = args.common.out()?;
    let reg = cfg.registry()?;
    let run_seed = args.seed.unwrap_or(cfg.run_seed);
    let agents: Vec<_> = reg.agents().cloned().collect();
    if args.policy != MIXED_POLICY && reg.get(&args.policy).is_none() {
        let names: Vec<&str> = reg.names().collect();
        return usage(format!("unknown policy {:?}; known: {}, {MIXED_POLICY}", args.policy, names.join(", ")));
    }
    let seeds: Vec<u64> = args.seeds.clone().collect();
    let results: Vec<(u64, Result<Value>)> = pool(args.common.workers)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let r = (|| {
                    let theme = args.theme.for_seed(seed);
                    let profile = if args.policy == MIXED_POLICY {
                        &agents[(seed % agents.len() as u64) as usize]
                    } else {
                        reg.get(&args.policy).expect("checked above")
                    };
                    let spec = generate_level(seed, theme, &cfg.level)?;
                    let ep = run_episode(&spec, profile, policy_seed(seed, run_seed))?;
                    let name = file_name(seed);
                    media::write_atomic(&out.join(&name), &serialize_episode(&ep)?)?;
                    Ok(json!({
                        "path": name,
                        "seed": seed,
                        "theme": theme.name(),
                        "policy": profile.name,
                        "frames": ep.frame_count(),
                        "clips": ep.frame_count() / CLIP_FRAMES,
                        "end_reason": name_of(&ep.end_reason),
                    }))
                })();
                (seed, r)
            })
            .collect()
    });
    let mut index = String::new();
    let mut failures = Vec::new();
    for (seed, r) in &results {
        match r {
            Ok(rec) => {
                index.push_str(&canonical_json(rec)?);
                index.push('\n');
            }
            Err(e) => failures.push((format!("seed {seed}"), error_chain(e))),
        }
    }
    media::write_atomic(&out.join(INDEX_FILE), index.as_bytes())?;
    let written = results.len() - failures.len();
    let s = Summary {
        command: "gen",
        inputs: seeds.len(),
        outputs: written,
        report: format!("generated {written}/{} episodes in {}", seeds.len(), out.display()),
        failures,
        details: json!({"seeds": [args.seeds.start, args.seeds.end], "policy": args.policy, "run_seed": run_seed}),
        elapsed_ms: t0.elapsed().as_millis(),
    };
    s.write(Some(out))?;
    Ok(s)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Episode file or directory of episode files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Square output resolution in pixels.
    #[arg(long, value_parser = parse_resolution)]
    pub res: Option<u32>,
    /// Render only this many evenly spaced frames per 96-frame clip.
    #[arg(long = "fps-subsample", value_parser = parse_subsample)]
    pub fps_subsample: Option<u32>,
    #[command(flatten)]
    pub common: Common,
}

/// Frames to render: every frame, or `n` evenly spaced frames per clip.
pub fn frames_to_render(frame_count: u32, per_clip: Option<u32>) -> Vec<u32> {
    match per_clip {
        None => (0..frame_count).collect(),
        Some(n) => (0..frame_count / CLIP_FRAMES)
            .flat_map(|c| (0..n).map(move |k| c * CLIP_FRAMES + k * CLIP_FRAMES / n))
            .collect(),
    }
}

pub fn render(args: &RenderArgs) -> Result<Summary> {
    let t0 = Instant::now();
    let cfg = args.common.config()?;
    let out = args.common.out()?;
    let rc = cfg.render_config(args.res)?;
    let files = episode_files(&args.input)?;
    let (eps, mut failures) = load_all(&files);
    let mut frames_written = 0;
    pool(args.common.workers)?.install(|| -> Result<()> {
        for (stem, ep) in &eps {
            let dir = out.join(stem);
            let frames = frames_to_render(ep.frame_count(), args.fps_subsample);
            let results: Vec<(u32, Result<Option<Value>>)> = frames
                .par_iter()
                .map(|&f| {
                    let r = (|| {
                        let (img, sem) = render_frame(ep, f, &rc)?;
                        media::write_atomic(&dir.join(format!("rgb/frame-{f:05}.png")), &media::png_rgb(&img))?;
                        media::write_atomic(&dir.join(format!("semantic/frame-{f:05}.png")), &media::png_semantic(&sem))?;
                        Ok((f == 0).then(|| media::palette_json(&sem)))
                    })();
                    (f, r)
                })
                .collect();
            let mut palette = None;
            for (f, r) in results {
                match r {
                    Ok(p) => {
                        frames_written += 1;
                        palette = palette.or(p);
                    }
                    Err(e) => failures.push((format!("{stem} frame {f}"), error_chain(&e))),
                }
            }
            let palette = palette.unwrap_or_else(|| {
                Value::Array(
                    mugenforge_core::render::class_palette().into_iter().map(|(id, n)| json!({"id": id, "name": n})).collect(),
                )
            });
            media::write_atomic(&dir.join("palette.json"), canonical_json(&palette)?.as_bytes())?;
            let clips: Vec<Value> = (0..ep.frame_count() / CLIP_FRAMES)
                .map(|c| {
                    let start = c * CLIP_FRAMES;
                    json!({
                        "start_frame": start,
                        "frames": frames.iter().filter(|&&f| (start..start + CLIP_FRAMES).contains(&f)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let manifest = json!({
                "episode": stem,
                "resolution": rc.resolution,
                "fps": ep.fps,
                "frames": frames,
                "clips": clips,
            });
            media::write_atomic(&dir.join("manifest.json"), canonical_json(&manifest)?.as_bytes())?;
        }
        Ok(())
    })?;
    let s = Summary {
        command: "render",
        inputs: files.len(),
        outputs: frames_written,
        report: format!("rendered {frames_written} frames from {} episodes at {}px", eps.len(), rc.resolution),
        failures,
        details: json!({"resolution": rc.resolution, "frames_per_clip": args.fps_subsample}),
        elapsed_ms: t0.elapsed().as_millis(),
    };
    s.write(Some(out))?;
    Ok(s)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct AudioArgs {
    /// Episode file or directory of episode files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// One WAV per 96-frame clip instead of one per episode.
    #[arg(long)]
    pub clips: bool,
    #[command(flatten)]
    pub common: Common,
}

pub fn audio(args: &AudioArgs) -> Result<Summary> {
    let t0 = Instant::now();
    let out = args.common.out()?;
    args.common.config()?;
    let files = episode_files(&args.input)?;
    let (eps, mut failures) = load_all(&files);
    let jobs: Vec<(usize, String, Range<u32>)> = eps
        .iter()
        .enumerate()
        .flat_map(|(i, (stem, ep))| {
            if args.clips {
                (0..ep.frame_count() / CLIP_FRAMES)
                    .map(|c| (i, format!("{stem}/clip-{c:03}"), c * CLIP_FRAMES..(c + 1) * CLIP_FRAMES))
                    .collect::<Vec<_>>()
            } else {
                vec![(i, stem.clone(), 0..ep.frame_count())]
            }
        })
        .collect();
    let results: Vec<(String, Result<usize>)> = pool(args.common.workers)?.install(|| {
        jobs.par_iter()
            .map(|(i, name, range)| {
                let r = (|| {
                    let track = episode_audio(&eps[*i].1, range.clone())?;
                    media::write_atomic(&out.join(format!("{name}.wav")), &media::wav_bytes(&track))?;
                    let sched = serde_json::to_value(&track.schedule)?;
                    media::write_atomic(&out.join(format!("{name}.sfx.json")), canonical_json(&sched)?.as_bytes())?;
                    Ok(track.samples.len())
                })();
                (name.clone(), r)
            })
            .collect()
    });
    let mut samples = 0;
    for (name, r) in &results {
        match r {
            Ok(n) => samples += n,
            Err(e) => failures.push((name.clone(), error_chain(e))),
        }
    }
    let written = results.iter().filter(|r| r.1.is_ok()).count();
    let s = Summary {
        command: "audio",
        inputs: files.len(),
        outputs: written,
        report: format!("wrote {written} WAV files ({samples} samples)"),
        failures,
        details: json!({"clips": args.clips, "samples": samples, "sample_rate": mugenforge_core::audio::SAMPLE_RATE}),
        elapsed_ms: t0.elapsed().as_millis(),
    };
    s.write(Some(out))?;
    Ok(s)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct AutotextArgs {
    /// Episode file or directory of episode files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// One caption per 96-frame clip instead of one per episode.
    #[arg(long)]
    pub clips: bool,
    #[command(flatten)]
    pub common: Common,
}

pub const CAPTIONS_FILE: &str = "captions.jsonl";

pub fn autotext(args: &AutotextArgs) -> Result<Summary> {
    let t0 = Instant::now();
    let out = args.common.out()?;
    args.common.config()?;
    let files = episode_files(&args.input)?;
    let (eps, mut failures) = load_all(&files);
    let per_episode: Vec<Result<Vec<Value>>> = pool(args.common.workers)?.install(|| {
        eps.par_iter()
            .map(|(stem, ep)| {
                let ranges: Vec<Range<u32>> = if args.clips {
                    (0..ep.frame_count() / CLIP_FRAMES).map(|c| c * CLIP_FRAMES..(c + 1) * CLIP_FRAMES).collect()
                } else {
                    vec![0..ep.frame_count()]
                };
                ranges
                    .into_iter()
                    .map(|r| {
                        let text = generate_autotext(ep, r.clone())?;
                        Ok(json!({"episode": stem, "start_frame": r.start, "end_frame": r.end, "text": text}))
                    })
                    .collect()
            })
            .collect()
    });
    let mut lines = String::new();
    let mut count = 0;
    for ((stem, _), r) in eps.iter().zip(per_episode) {
        match r {
            Ok(recs) => {
                for rec in recs {
                    lines.push_str(&canonical_json(&rec)?);
                    lines.push('\n');
                    count += 1;
                }
            }
            Err(e) => failures.push((stem.clone(), error_chain(&e))),
        }
    }
    media::write_atomic(&out.join(CAPTIONS_FILE), lines.as_bytes())?;
    let s = Summary {
        command: "autotext",
        inputs: files.len(),
        outputs: count,
        report: format!("wrote {count} captions to {}", out.join(CAPTIONS_FILE).display()),
        failures,
        details: json!({"clips": args.clips, "captions": count}),
        elapsed_ms: t0.elapsed().as_millis(),
    };
    s.write(Some(out))?;
    Ok(s)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    /// Episode file or directory of episode files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Shuffle seed for the split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

pub const CLIPS_FILE: &str = "clips.jsonl";

fn all_clips(eps: &[(String, EpisodeMetadata)]) -> Vec<Clip> {
    eps.par_iter().flat_map_iter(|(stem, ep)| split_clips(ep, stem)).collect()
}

pub fn dataset_split(args: &SplitArgs) -> Result<Summary> {
    let t0 = Instant::now();
    let cfg = args.common.config()?;
    let out = args.common.out()?;
    let files = episode_files(&args.input)?;
    let (eps, failures) = load_all(&files);
    let clips = pool(args.common.workers)?.install(|| all_clips(&eps));
    let split = balance_split(&clips, args.seed, cfg.ratios())?;
    let mut lines = String::new();
    for (i, c) in clips.iter().enumerate() {
        let rec = json!({
            "episode": c.episode,
            "start_frame": c.start_frame,
            "length": c.length,
            "tags": c.tags(),
            "plain": c.is_plain(),
            "split": split.split_of(i).expect("split covers every clip").name(),
        });
        lines.push_str(&canonical_json(&rec)?);
        lines.push('\n');
    }
    media::write_atomic(&out.join(CLIPS_FILE), lines.as_bytes())?;
    let plain_in = |idx: &[usize]| idx.iter().filter(|&&i| clips[i].is_plain()).count();
    let (tr, va, te) = split.sizes();
    let s = Summary {
        command: "dataset-split",
        inputs: files.len(),
        outputs: clips.len(),
        report: format!("split {} clips into {tr}/{va}/{te}", clips.len()),
        failures,
        details: json!({
            "seed": args.seed,
            "sizes": {"train": tr, "val": va, "test": te},
            "plain": {"train": plain_in(&split.train), "val": plain_in(&split.val), "test": plain_in(&split.test)},
        }),
        elapsed_ms: t0.elapsed().as_millis(),
    };
    s.write(Some(out))?;
    Ok(s)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// Episode file or directory of episode files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Location heatmap grid as COLSxROWS.
    #[arg(long, default_value = "16x16", value_parser = parse_grid)]
    pub grid: (usize, usize),
    #[command(flatten)]
    pub common: Common,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (c, r) = s.split_once('x').ok_or_else(|| format!("expected COLSxROWS, got {s:?}"))?;
    match (c.parse::<usize>(), r.parse::<usize>()) {
        (Ok(c), Ok(r)) if c >= 1 && r >= 1 => Ok((c, r)),
        _ => Err(format!("bad grid {s:?}")),
    }
}

fn bins_csv(bins: &[u64]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin", "count"]).expect("in-memory CSV");
    for (i, c) in bins.iter().enumerate() {
        w.write_record([i.to_string(), c.to_string()]).expect("in-memory CSV");
    }
    w.into_inner().expect("in-memory CSV")
}

fn interaction_file(i: Interaction) -> String {
    i.label().replace(' ', "_")
}

pub fn stats(args: &StatsArgs) -> Result<Summary> {
    let t0 = Instant::now();
    let out = args.common.out()?;
    args.common.config()?;
    let files = episode_files(&args.input)?;
    let (eps, failures) = load_all(&files);
    let p = pool(args.common.workers)?;
    let clips = p.install(|| all_clips(&eps));
    let by_stem: std::collections::BTreeMap<&str, &EpisodeMetadata> = eps.iter().map(|(s, e)| (s.as_str(), e)).collect();
    let pairs: Vec<(&EpisodeMetadata, &Clip)> = clips.iter().map(|c| (by_stem[c.episode.as_str()], c)).collect();

    let occ = occurrence_stats(&clips);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["entity", "clips"])?;
    for (k, n) in &occ {
        w.write_record([k.name().to_string(), n.to_string()])?;
    }
    media::write_atomic(&out.join("occurrence.csv"), &w.into_inner()?)?;

    let (cols, rows) = args.grid;
    let maps: Vec<(EntityKind, mugenforge_core::dataset::Heatmap2D)> =
        p.install(|| EntityKind::ALL.par_iter().map(|&k| (k, location_heatmap(&pairs, k, cols, rows))).collect());
    for (k, h) in &maps {
        media::write_atomic(&out.join(format!("location/{}.csv", k.name())), &media::heatmap_csv(h))?;
        media::write_atomic(&out.join(format!("location/{}.png", k.name())), &media::heatmap_png(h))?;
    }
    let refs: Vec<&EpisodeMetadata> = eps.iter().map(|(_, e)| e).collect();
    let mut temporal = serde_json::Map::new();
    for i in Interaction::ALL {
        let within = temporal_heatmap(&pairs, i);
        let whole = episode_temporal_heatmap(&refs, i, CLIP_FRAMES as usize);
        media::write_atomic(&out.join(format!("temporal/{}.csv", interaction_file(i))), &bins_csv(&within))?;
        media::write_atomic(&out.join(format!("temporal_episode/{}.csv", interaction_file(i))), &bins_csv(&whole))?;
        temporal.insert(i.label().into(), json!({"clip_events": within.iter().sum::<u64>(), "episode_events": whole.iter().sum::<u64>()}));
    }
    let occurrence: serde_json::Map<String, Value> = occ.iter().map(|(k, n)| (k.name().to_string(), json!(n))).collect();
    let s = Summary {
        command: "stats",
        inputs: files.len(),
        outputs: clips.len(),
        report: format!("statistics over {} clips from {} episodes", clips.len(), eps.len()),
        failures,
        details: json!({"clips": clips.len(), "occurrence": occurrence, "interactions": temporal, "grid": [cols, rows]}),
        elapsed_ms: t0.elapsed().as_millis(),
    };
    s.write(Some(out))?;
    Ok(s)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Episode file or directory of episode files.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

pub fn verify(args: &VerifyArgs) -> Result<Summary> {
    let t0 = Instant::now();
    let cfg = args.common.config()?;
    let reg: PresetRegistry = cfg.registry()?;
    let files = episode_files(&args.input)?;
    let results: Vec<(String, Result<Option<u32>>)> = pool(args.common.workers)?.install(|| {
        files
            .par_iter()
            .map(|p| {
                let r = (|| {
                    let ep = load(p)?;
                    let rep = verify_replay(&ep, &reg)?;
                    Ok(if rep.is_exact() { None } else { Some(rep.first_divergence.unwrap_or(ep.frame_count())) })
                })();
                (episode_stem(p), r)
            })
            .collect()
    });
    let mut failures = Vec::new();
    let mut exact = 0;
    let mut divergent = Vec::new();
    for (stem, r) in results {
        match r {
            Ok(None) => exact += 1,
            Ok(Some(f)) => {
                failures.push((stem.clone(), format!("replay diverges at frame {f}")));
                divergent.push(json!({"episode": stem, "frame": f}));
            }
            Err(e) => failures.push((stem, error_chain(&e))),
        }
    }
    let s = Summary {
        command: "verify",
        inputs: files.len(),
        outputs: exact,
        report: format!("{exact}/{} exact replay", files.len()),
        failures,
        details: json!({"exact": exact, "divergent": divergent}),
        elapsed_ms: t0.elapsed().as_millis(),
    };
    s.write(args.common.out.as_deref())?;
    Ok(s)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// Square similarity matrix CSV (queries by rows); repeat to ensemble by summing.
    #[arg(long)]
    pub scores: Vec<PathBuf>,
    /// Cutoffs for recall@k.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub ks: Vec<usize>,
    /// Input-output and input-ground-truth similarity lists for relative similarity.
    #[arg(long, num_args = 2, value_names = ["IN_OUT", "IN_GT"])]
    pub rsim: Option<Vec<PathBuf>>,
    /// Paired embedding batches (one row per item) for the contrastive loss.
    #[arg(long, num_args = 2, value_names = ["P", "Q"])]
    pub embeddings: Option<Vec<PathBuf>>,
    /// Log-scale temperature; the scale is min(exp(tau), 100). Defaults to ln(1/0.07).
    #[arg(long, conflicts_with = "scale")]
    pub tau: Option<f64>,
    /// Multiplicative scale, capped at 100.
    #[arg(long)]
    pub scale: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

pub const METRICS_FILE: &str = "metrics.json";

pub fn metrics(args: &MetricsArgs) -> Result<Summary> {
    let t0 = Instant::now();
    if args.scores.is_empty() && args.rsim.is_none() && args.embeddings.is_none() {
        return usage("metrics needs --scores, --rsim or --embeddings");
    }
    let mut out = serde_json::Map::new();
    let mut inputs = 0;
    if !args.scores.is_empty() {
        let mut total: Option<SimilarityMatrix> = None;
        for p in &args.scores {
            let m = SimilarityMatrix::from_rows(&media::read_matrix_csv(p)?).with_context(|| p.display().to_string())?;
            total = Some(match total {
                None => m,
                Some(t) => ensemble_scores(&t, &m).with_context(|| p.display().to_string())?,
            });
            inputs += 1;
        }
        let s = total.expect("at least one matrix");
        let ks: Vec<usize> = args.ks.iter().copied().filter(|&k| k <= s.cols()).collect();
        let r = recall_at_k(&s, &ks)?;
        let recall: serde_json::Map<String, Value> = ks.iter().zip(r).map(|(k, v)| (format!("r@{k}"), json!(v))).collect();
        out.insert("queries".into(), json!(s.rows()));
        out.insert("recall".into(), Value::Object(recall));
    }
    if let Some(files) = &args.rsim {
        let flat = |p: &Path| -> Result<Vec<f64>> { Ok(media::read_matrix_csv(p)?.into_iter().flatten().collect()) };
        let (a, b) = (flat(&files[0])?, flat(&files[1])?);
        out.insert("relative_similarity".into(), json!(relative_similarity(&a, &b)?));
        inputs += 2;
    }
    if let Some(files) = &args.embeddings {
        let cfg = match (args.tau, args.scale) {
            (Some(t), _) => MetricConfig::new(t, MetricConfig::DEFAULT_CAP)?,
            (None, Some(s)) => MetricConfig::from_scale(s, MetricConfig::DEFAULT_CAP)?,
            (None, None) => MetricConfig::temperature_default(),
        };
        let batch = |p: &Path| -> Result<EmbeddingBatch> { Ok(EmbeddingBatch::from_rows(&media::read_matrix_csv(p)?)?) };
        let loss = contrastive_loss(&batch(&files[0])?, &batch(&files[1])?, &cfg)?;
        out.insert("contrastive_loss".into(), json!(loss));
        out.insert("scale".into(), json!(cfg.scale()));
        inputs += 2;
    }
    let report = canonical_json(&Value::Object(out.clone()))?;
    if let Some(dir) = &args.common.out {
        media::write_atomic(&dir.join(METRICS_FILE), report.as_bytes())?;
    }
    let s = Summary {
        command: "metrics",
        inputs,
        outputs: 1,
        report,
        failures: Vec::new(),
        details: Value::Object(out),
        elapsed_ms: t0.elapsed().as_millis(),
    };
    s.write(args.common.out.as_deref())?;
    Ok(s)
}
