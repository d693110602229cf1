use std::collections::BTreeSet;

use mugenforge_core::audio::{
    build_sfx_schedule, episode_audio, samples_for_frames, synthesize_audio, SfxEntry, SfxId, SfxSchedule, SAMPLE_RATE,
};
use mugenforge_core::episode::{policy_seed, run_episode};
use mugenforge_core::scenario::Script;
use mugenforge_core::worldgen::ENGINE_VERSION;
use mugenforge_core::{generate_level, EndReason, EntityKind, EventKind, GenConfig, LevelSpec, PoseId, PresetRegistry, Theme};
use proptest::prelude::*;

fn flat_level() -> LevelSpec {
    LevelSpec {
        seed: 0,
        theme: Theme::Space,
        width: 40,
        height: 12,
        platform_cells: (0..40).map(|x| (x, 0)).collect::<BTreeSet<_>>(),
        ladder_cells: BTreeSet::new(),
        spawns: Vec::new(),
        engine_version: ENGINE_VERSION.into(),
    }
}

fn expected_samples(frames: u32) -> usize {
    (frames as f64 / 30.0 * 22050.0).round() as usize
}

#[test]
fn sample_counts_follow_frame_counts() {
    assert_eq!(samples_for_frames(96), 70_560);
    for frames in [1, 2, 29, 30, 96, 97, 630] {
        assert_eq!(samples_for_frames(frames), expected_samples(frames));
    }
    let mut s = Script::new(flat_level(), (3.5, 1.0));
    s.hold(PoseId::Idle, 199);
    let ep = s.finish(EndReason::Timeout);
    assert_eq!(episode_audio(&ep, 0..96).unwrap().samples.len(), 70_560);
    assert_eq!(episode_audio(&ep, 0..200).unwrap().samples.len(), expected_samples(200));
}

#[test]
fn coin_at_frame_thirty_starts_at_one_second() {
    let mut s = Script::new(flat_level(), (3.5, 1.0));
    s.hold(PoseId::Idle, 29).event(EventKind::CoinCollected).hold(PoseId::Idle, 70);
    let ep = s.finish(EndReason::Timeout);
    let sched = build_sfx_schedule(&ep, 0..ep.frame_count()).unwrap();
    assert_eq!(sched.entries.len(), 1);
    let e = sched.entries[0];
    assert_eq!((e.sfx, e.start_sample, e.phase), (SfxId::CollectCoin, SAMPLE_RATE, 0));
    assert_eq!(e.duration_samples, SfxId::CollectCoin.one_shot_samples().unwrap());
}

#[test]
fn death_changes_only_its_own_span() {
    let build = |die: bool| {
        let mut s = Script::new(flat_level(), (3.5, 1.0));
        s.walk(40, 0.1);
        if die {
            s.event(EventKind::KilledByMonster(EntityKind::Slime));
        }
        s.walk(80, 0.1);
        s.finish(EndReason::Timeout)
    };
    let (a, b) = (build(false), build(true));
    let n = a.frame_count();
    let (wa, wb) = (episode_audio(&a, 0..n).unwrap(), episode_audio(&b, 0..n).unwrap());
    let span = 41 * 735..41 * 735 + SfxId::Die.one_shot_samples().unwrap() as usize;
    let differing: Vec<usize> = (0..wa.samples.len()).filter(|&i| wa.samples[i] != wb.samples[i]).collect();
    assert!(!differing.is_empty());
    assert!(differing.iter().all(|i| span.contains(i)), "diff outside {span:?}");
}

#[test]
fn higher_priority_interrupts_and_loop_resumes() {
    let mut s = Script::new(flat_level(), (3.5, 1.0));
    s.walk(10, 0.1).event(EventKind::CoinCollected).walk(40, 0.1);
    let ep = s.finish(EndReason::Timeout);
    let sched = build_sfx_schedule(&ep, 0..ep.frame_count()).unwrap();
    assert!(sched.is_valid());
    let sfx: Vec<SfxId> = sched.entries.iter().map(|e| e.sfx).collect();
    assert_eq!(sfx, [SfxId::Walk, SfxId::CollectCoin, SfxId::Walk]);
    let resumed = sched.entries[2];
    // The footsteps keep their rhythm across the interruption.
    assert_eq!(resumed.phase, resumed.start_sample - 735);
}

fn played(seed: u64, preset: usize) -> mugenforge_core::EpisodeMetadata {
    let theme = if seed % 2 == 0 { Theme::Snow } else { Theme::Space };
    let spec = generate_level(seed, theme, &GenConfig::default()).unwrap();
    let reg = PresetRegistry::standard();
    run_episode(&spec, reg.get(&format!("profile-{preset:02}")).unwrap(), policy_seed(seed, 5)).unwrap()
}

/// Direct per-sample mix over an explicit winner table, without run merging.
fn naive_mix(entries: &[SfxEntry], origin: u64, theme: Theme, n: usize) -> Vec<i16> {
    let gm = 10f64.powf(-12.0 / 20.0);
    let gs = 10f64.powf(-6.0 / 20.0);
    (0..n)
        .map(|i| {
            let mut x = gm * mugenforge_core::audio::music_sample(theme, origin + i as u64);
            for e in entries {
                let (a, b) = (e.start_sample as usize, e.end_sample() as usize);
                if (a..b).contains(&i) {
                    x += gs * mugenforge_core::audio::sfx_sample(e.sfx, e.phase + (i - a) as u32);
                }
            }
            let clipped = if x.abs() <= 0.9 { x } else { x.signum() * (0.9 + 0.1 * ((x.abs() - 0.9) / 0.1).tanh()) };
            (clipped * 32767.0).round() as i16
        })
        .collect()
}

#[test]
fn mix_matches_direct_evaluation() {
    let ep = played(77, 3);
    let track = episode_audio(&ep, 96..192).unwrap();
    let direct = naive_mix(&track.schedule.entries, track.schedule.origin, ep.level.theme, track.samples.len());
    assert_eq!(track.samples, direct);
}

#[test]
fn empty_schedule_is_music_only() {
    let t = synthesize_audio(&SfxSchedule::empty(0), Theme::Snow, 30);
    assert_eq!(t.samples, naive_mix(&[], 0, Theme::Snow, 22_050));
    assert!(t.samples.iter().any(|&s| s != 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn clip_audio_is_a_slice_of_episode_audio(seed in 0u64..3000, preset in 1usize..=14, k in 0u32..6) {
        let ep = played(seed, preset);
        let n = ep.frame_count();
        let start = (k * 96).min(n - 96);
        let whole = episode_audio(&ep, 0..n).unwrap();
        let clip = episode_audio(&ep, start..start + 96).unwrap();
        let a = start as usize * 735;
        prop_assert_eq!(&clip.samples[..], &whole.samples[a..a + 70_560]);
    }

    #[test]
    fn schedules_are_monophonic_and_prioritized(seed in 0u64..3000, preset in 1usize..=14) {
        let ep = played(seed, preset);
        let sched = build_sfx_schedule(&ep, 0..ep.frame_count()).unwrap();
        prop_assert!(sched.is_valid());
        let total = samples_for_frames(ep.frame_count()) as u32;
        for e in &ep.events {
            let Some(sfx) = SfxId::for_event(&e.kind) else { continue };
            let at = e.frame_idx * 735;
            if at >= total {
                continue;
            }
            let playing = sched.active_at(at).expect("an effect sounds at its trigger");
            prop_assert!(playing.sfx.priority() >= sfx.priority());
        }
        for e in &sched.entries {
            prop_assert!(e.end_sample() <= total);
            if let Some(len) = e.sfx.one_shot_samples() {
                prop_assert!(e.phase + e.duration_samples <= len);
            }
        }
    }
}
