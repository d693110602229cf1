//! Seeded procedural level layouts and their validation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{Ability, EntityKind, Facing, Theme};
use crate::math::mix64;
use crate::terrain::Terrain;

/// Identifies the generator and simulator revision that produced a level.
pub const ENGINE_VERSION: &str = concat!("mugenforge/", env!("CARGO_PKG_VERSION"));

/// Internal attempts before `generate_level` gives up.
pub const RETRY_BUDGET: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub width: i32,
    pub height: i32,
    pub monsters: u32,
    pub coins: u32,
    pub gems: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { width: 32, height: 12, monsters: 3, coins: 3, gems: 1 }
    }
}

impl GenConfig {
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |what: &str| Err(GenError::InvalidConfig(String::from(what)));
        if !(20..=64).contains(&self.width) {
            return bad("width must be in 20..=64");
        }
        if !(10..=16).contains(&self.height) {
            return bad("height must be in 10..=16");
        }
        if self.monsters > 6 {
            return bad("monsters must be in 0..=6");
        }
        if !(1..=8).contains(&self.coins) {
            return bad("coins must be in 1..=8");
        }
        if self.gems > 2 {
            return bad("gems must be in 0..=2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("level generation failed after {0} attempts")]
    GenerationFailed(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpawn {
    pub kind: EntityKind,
    pub cell: (i32, i32),
    pub facing: Facing,
}

/// A complete level layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub seed: u64,
    pub theme: Theme,
    pub width: i32,
    pub height: i32,
    pub platform_cells: BTreeSet<(i32, i32)>,
    pub ladder_cells: BTreeSet<(i32, i32)>,
    pub spawns: Vec<EntitySpawn>,
    pub engine_version: String,
}

impl LevelSpec {
    pub fn terrain(&self) -> Terrain {
        Terrain::new(self.width, self.height, &self.platform_cells, &self.ladder_cells)
    }

    pub fn mugen_spawn(&self) -> Option<&EntitySpawn> {
        self.spawns.iter().find(|s| s.kind == EntityKind::Mugen)
    }

    /// Monster spawns in level order.
    pub fn monsters(&self) -> impl Iterator<Item = &EntitySpawn> {
        self.spawns.iter().filter(|s| s.kind.is_monster())
    }

    /// Coin and gem spawns in level order.
    pub fn items(&self) -> impl Iterator<Item = &EntitySpawn> {
        self.spawns.iter().filter(|s| s.kind.is_item())
    }
}

/// Everything `validate_level` found wrong with a level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Coins reachable from Mugen's spawn over the move graph.
    pub reachable_coins: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Short rule name, e.g. `"unsupported spawn"`.
    pub rule: &'static str,
    pub detail: String,
}

/// Check every layout invariant and coin reachability.
pub fn validate_level(spec: &LevelSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |rule: &'static str, detail: String| report.violations.push(Violation { rule, detail });

    if spec.width < 1 || spec.height < 1 {
        push("bad grid", format!("{}x{}", spec.width, spec.height));
        return report;
    }
    let terrain = spec.terrain();
    let mugens = spec.spawns.iter().filter(|s| s.kind == EntityKind::Mugen).count();
    if mugens != 1 {
        push("mugen count", format!("expected exactly one Mugen, found {mugens}"));
    }
    if !spec.spawns.iter().any(|s| s.kind == EntityKind::Coin) {
        push("no coin", String::from("level has no coin"));
    }
    for c in spec.platform_cells.iter().chain(spec.ladder_cells.iter()) {
        if !terrain.in_bounds(c.0, c.1) {
            push("cell out of bounds", format!("{c:?}"));
        }
    }
    for c in spec.platform_cells.intersection(&spec.ladder_cells) {
        push("overlapping cells", format!("{c:?} is both platform and ladder"));
    }
    let mut occupied = BTreeSet::new();
    for s in &spec.spawns {
        let (x, y) = s.cell;
        if !occupied.insert(s.cell) {
            push("shared cell", format!("{} at {:?} shares its cell", s.kind, s.cell));
        }
        if !terrain.in_bounds(x, y) || terrain.solid(x, y) {
            push("blocked spawn", format!("{} at {:?}", s.kind, s.cell));
        } else if s.kind.needs_support() && !spec.platform_cells.contains(&(x, y - 1)) {
            push("unsupported spawn", format!("{} at {:?} has no platform below", s.kind, s.cell));
        }
    }

    if let Some(m) = spec.mugen_spawn() {
        let field = terrain.reachable_from(m.cell);
        for s in spec.spawns.iter().filter(|s| s.kind == EntityKind::Coin) {
            if terrain.distance(&field, s.cell.0, s.cell.1).is_some() {
                report.reachable_coins += 1;
            } else {
                report.violations.push(Violation {
                    rule: "unreachable coin",
                    detail: format!("coin at {:?} cannot be reached from {:?}", s.cell, m.cell),
                });
            }
        }
    }
    report
}

/// Build a level from a seed.
///
/// The layout depends only on `(seed, config)`; the theme only changes art
/// and music downstream, so it is recorded but does not steer the generator.
pub fn generate_level(seed: u64, theme: Theme, config: &GenConfig) -> Result<LevelSpec, GenError> {
    config.check()?;
    for attempt in 0..RETRY_BUDGET {
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(attempt as u64)));
        if let Some(spec) = try_generate(&mut rng, seed, theme, config) {
            if validate_level(&spec).is_valid() {
                return Ok(spec);
            }
        }
    }
    Err(GenError::GenerationFailed(RETRY_BUDGET))
}

/// Columns of the contiguous standing cells on `cell`'s row around it.
fn standing_run(t: &Terrain, (x, y): (i32, i32)) -> core::ops::RangeInclusive<i32> {
    let (mut lo, mut hi) = (x, x);
    while t.standing(lo - 1, y) {
        lo -= 1;
    }
    while t.standing(hi + 1, y) {
        hi += 1;
    }
    lo..=hi
}

/// Standing cells a hopper starting at `start` could land on. Deliberately
/// generous: one hop covers up to three columns, rises at most two rows and
/// may fall any distance, ignoring obstacles on the way.
fn hopper_reach(t: &Terrain, start: (i32, i32)) -> BTreeSet<(i32, i32)> {
    let mut seen = BTreeSet::new();
    let mut stack = alloc::vec![start];
    while let Some((x, y)) = stack.pop() {
        if !seen.insert((x, y)) {
            continue;
        }
        for nx in x - HOP_REACH..=x + HOP_REACH {
            for ny in 1..=y + 2 {
                if t.standing(nx, ny) && !seen.contains(&(nx, ny)) {
                    stack.push((nx, ny));
                }
            }
        }
    }
    seen
}

/// Whether a hopper moving within `reach` could pass through Mugen's cell.
fn hopper_threatens(reach: &BTreeSet<(i32, i32)>, mugen: (i32, i32)) -> bool {
    reach.iter().any(|&(x, y)| (x - mugen.0).abs() <= HOP_REACH && mugen.1 >= y - 1 && mugen.1 <= y + 3)
}

const HOP_REACH: i32 = 3;

fn try_generate(rng: &mut ChaCha8Rng, seed: u64, theme: Theme, cfg: &GenConfig) -> Option<LevelSpec> {
    let (w, h) = (cfg.width, cfg.height);
    let max_col = h - 6;
    let mut heights = Vec::with_capacity(w as usize);
    let mut ladders = BTreeSet::new();

    // Terrain columns: runs of equal height with bounded steps. Big rises
    // get a ladder on the low side so the map stays traversable both ways.
    let mut col = rng.gen_range(1..=2);
    while (heights.len() as i32) < w {
        let run = rng.gen_range(2..=5);
        let x0 = heights.len() as i32;
        if x0 > 0 {
            let delta: i32 = *[-2, -1, -1, 0, 1, 1, 2, 3, -3].choose(rng).unwrap();
            let next = (col + delta).clamp(1, max_col);
            if next - col >= 3 {
                for y in col..next {
                    ladders.insert((x0 - 1, y));
                }
            } else if col - next >= 3 {
                for y in next..col {
                    ladders.insert((x0, y));
                }
            }
            col = next;
        }
        for _ in 0..run {
            if (heights.len() as i32) < w {
                heights.push(col);
            }
        }
    }

    let mut platforms = BTreeSet::new();
    for (x, &top) in heights.iter().enumerate() {
        for y in 0..top {
            platforms.insert((x as i32, y));
        }
    }

    // Floating ledges: low ones sit one free row above the terrain and are
    // reached by jumping; high ones get their own ladder.
    let ledges = rng.gen_range(0..=w / 10);
    for _ in 0..ledges {
        let len = rng.gen_range(2..=4);
        let x0 = rng.gen_range(2..w - len - 1);
        let span = x0..x0 + len;
        let top = span.clone().map(|x| heights[x as usize]).max().unwrap();
        let high = rng.gen_bool(0.4);
        let row = if high { top + 3 } else { top + 1 };
        if row + 4 > h {
            continue;
        }
        let clash = (x0 - 1..x0 + len + 1).any(|x| (0..h).any(|y| ladders.contains(&(x, y))));
        if clash {
            continue;
        }
        if high {
            let lx = x0 - 1;
            if (heights[lx as usize]..=row).any(|y| platforms.contains(&(lx, y))) {
                continue;
            }
            for y in heights[lx as usize]..=row {
                ladders.insert((lx, y));
            }
        }
        for x in span {
            platforms.insert((x, row));
        }
    }

    let terrain = Terrain::new(w, h, &platforms, &ladders);
    let supported: Vec<(i32, i32)> = (0..w)
        .flat_map(|x| (1..h).map(move |y| (x, y)))
        .filter(|&(x, y)| terrain.standing(x, y) && !terrain.ladder(x, y) && platforms.contains(&(x, y - 1)))
        .collect();

    let left: Vec<_> = supported.iter().copied().filter(|c| c.0 >= 1 && c.0 <= w / 4).collect();
    let mugen = *left.choose(rng)?;
    let field = terrain.reachable_from(mugen);
    let reachable: Vec<_> = supported
        .iter()
        .copied()
        .filter(|&(x, y)| terrain.distance(&field, x, y).is_some() && (x - mugen.0).abs() >= 3)
        .collect();

    let mut taken = BTreeSet::new();
    taken.insert(mugen);
    let mut spawns = Vec::new();
    spawns.push(EntitySpawn { kind: EntityKind::Mugen, cell: mugen, facing: Facing::Right });

    let pick = |pool: &[(i32, i32)], taken: &mut BTreeSet<(i32, i32)>, rng: &mut ChaCha8Rng| {
        let free: Vec<_> = pool.iter().copied().filter(|c| !taken.contains(c)).collect();
        let c = *free.choose(rng)?;
        taken.insert(c);
        Some(c)
    };
    for _ in 0..cfg.coins {
        let cell = pick(&reachable, &mut taken, rng)?;
        spawns.push(EntitySpawn { kind: EntityKind::Coin, cell, facing: Facing::Right });
    }
    for _ in 0..cfg.gems {
        let cell = pick(&reachable, &mut taken, rng)?;
        spawns.push(EntitySpawn { kind: EntityKind::Gem, cell, facing: Facing::Right });
    }

    // Ground monsters patrol the run of standing cells they start on; keeping
    // them off Mugen's run means an agent that never moves is never caught.
    let far_ground: Vec<_> = supported
        .iter()
        .copied()
        .filter(|&c| (c.0 - mugen.0).abs() >= 6 && !(c.1 == mugen.1 && standing_run(&terrain, c).contains(&mugen.0)))
        .collect();
    let open_air: Vec<_> = (0..w)
        .flat_map(|x| (1..h - 3).map(move |y| (x, y)))
        .filter(|&(x, y)| {
            (x - mugen.0).abs() >= 6
                && (y - 1..=y + 1).all(|yy| !terrain.solid(x, yy) && !terrain.ladder(x, yy))
                && !terrain.supports(x, y - 1)
        })
        .collect();
    // Hoppers can clear small steps and drop off ledges mid-hop.
    let hopper_ground: Vec<_> =
        far_ground.iter().copied().filter(|&c| !hopper_threatens(&hopper_reach(&terrain, c), mugen)).collect();
    let pool_for = |kind: EntityKind| match kind.ability() {
        Ability::Hopper => &hopper_ground,
        _ if kind.needs_support() => &far_ground,
        _ => &open_air,
    };
    for _ in 0..cfg.monsters {
        // Kinds with nowhere safe left to stand are skipped for this slot.
        let kinds: Vec<EntityKind> =
            EntityKind::MONSTERS.iter().copied().filter(|&k| pool_for(k).iter().any(|c| !taken.contains(c))).collect();
        let kind = *kinds.choose(rng)?;
        let cell = pick(pool_for(kind), &mut taken, rng)?;
        let facing = if rng.gen_bool(0.5) { Facing::Left } else { Facing::Right };
        spawns.push(EntitySpawn { kind, cell, facing });
    }

    Some(LevelSpec {
        seed,
        theme,
        width: w,
        height: h,
        platform_cells: platforms,
        ladder_cells: ladders,
        spawns,
        engine_version: String::from(ENGINE_VERSION),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floor_spec(width: i32, height: i32) -> LevelSpec {
        LevelSpec {
            seed: 0,
            theme: Theme::Snow,
            width,
            height,
            platform_cells: (0..width).map(|x| (x, 0)).collect(),
            ladder_cells: BTreeSet::new(),
            spawns: alloc::vec![
                EntitySpawn { kind: EntityKind::Mugen, cell: (1, 1), facing: Facing::Right },
                EntitySpawn { kind: EntityKind::Coin, cell: (10, 1), facing: Facing::Right },
            ],
            engine_version: String::from(ENGINE_VERSION),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig::default();
        assert_eq!(generate_level(7, Theme::Snow, &cfg), generate_level(7, Theme::Snow, &cfg));
        assert_ne!(generate_level(7, Theme::Snow, &cfg), generate_level(8, Theme::Snow, &cfg));
    }

    #[test]
    fn ground_monsters_start_off_mugens_run() {
        for seed in 0..300 {
            let spec = generate_level(seed, Theme::Snow, &GenConfig::default()).unwrap();
            let t = spec.terrain();
            let m = spec.mugen_spawn().unwrap().cell;
            for s in spec.monsters().filter(|s| s.kind.needs_support()) {
                assert!(!(s.cell.1 == m.1 && standing_run(&t, s.cell).contains(&m.0)), "seed {seed}: {s:?}");
                if s.kind.ability() == Ability::Hopper {
                    assert!(!hopper_reach(&t, s.cell).contains(&m));
                }
            }
        }
    }

    #[test]
    fn hopper_reach_clears_gaps_but_not_high_walls() {
        let mut spec = floor_spec(20, 12);
        spec.platform_cells.remove(&(5, 0));
        // Wider than one hop, and taller than a hop rises.
        for x in 12..16 {
            for y in 0..4 {
                spec.platform_cells.insert((x, y));
            }
        }
        let reach = hopper_reach(&spec.terrain(), (2, 1));
        assert!(reach.contains(&(8, 1)));
        assert!(!reach.iter().any(|c| c.0 >= 12));
        assert!(reach.contains(&(11, 1)));
    }

    #[test]
    fn config_passthrough_single_coin_no_monsters() {
        let cfg = GenConfig { coins: 1, monsters: 0, ..GenConfig::default() };
        for seed in 0..50 {
            for theme in Theme::ALL {
                let spec = generate_level(seed, theme, &cfg).unwrap();
                let count = |k| spec.spawns.iter().filter(|s| s.kind == k).count();
                assert_eq!(count(EntityKind::Coin), 1);
                assert_eq!(count(EntityKind::Mugen), 1);
                assert_eq!(spec.monsters().count(), 0);
            }
        }
    }

    #[test]
    fn config_bounds_are_enforced() {
        for bad in [
            GenConfig { width: 19, ..GenConfig::default() },
            GenConfig { width: 65, ..GenConfig::default() },
            GenConfig { height: 9, ..GenConfig::default() },
            GenConfig { height: 17, ..GenConfig::default() },
            GenConfig { monsters: 7, ..GenConfig::default() },
            GenConfig { coins: 0, ..GenConfig::default() },
            GenConfig { coins: 9, ..GenConfig::default() },
            GenConfig { gems: 3, ..GenConfig::default() },
        ] {
            assert!(matches!(generate_level(1, Theme::Snow, &bad), Err(GenError::InvalidConfig(_))));
        }
    }

    #[test]
    fn extreme_configs_still_generate() {
        for (width, height) in [(20, 10), (64, 16), (20, 16), (64, 10)] {
            let cfg = GenConfig { width, height, monsters: 6, coins: 8, gems: 2 };
            for seed in 0..40 {
                let spec = generate_level(seed, Theme::Space, &cfg).unwrap();
                assert!(validate_level(&spec).is_valid());
            }
        }
    }

    #[test]
    fn floating_coin_is_unsupported() {
        let mut spec = floor_spec(20, 10);
        spec.spawns[1].cell = (10, 4);
        let report = validate_level(&spec);
        assert!(report.has("unsupported spawn"), "{report:?}");
    }

    #[test]
    fn flying_bee_needs_no_support() {
        let mut spec = floor_spec(20, 10);
        spec.spawns.push(EntitySpawn { kind: EntityKind::Bee, cell: (12, 5), facing: Facing::Left });
        assert!(validate_level(&spec).is_valid());
    }

    #[test]
    fn shared_cells_and_mugen_count() {
        let mut spec = floor_spec(20, 10);
        spec.spawns.push(EntitySpawn { kind: EntityKind::Snail, cell: (10, 1), facing: Facing::Left });
        spec.spawns.push(EntitySpawn { kind: EntityKind::Mugen, cell: (3, 1), facing: Facing::Left });
        let r = validate_level(&spec);
        assert!(r.has("shared cell"));
        assert!(r.has("mugen count"));
    }

    #[test]
    fn wall_blocks_coin() {
        let mut spec = floor_spec(20, 12);
        for y in 1..=10 {
            spec.platform_cells.insert((6, y));
        }
        let r = validate_level(&spec);
        assert!(r.has("unreachable coin"), "{r:?}");
        assert_eq!(r.reachable_coins, 0);
    }
}
