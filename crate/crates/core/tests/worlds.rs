use std::collections::BTreeSet;

use mugenforge_core::{generate_level, validate_level, GenConfig, Theme};
use proptest::prelude::*;

#[test]
fn thousand_seeds_give_distinct_valid_layouts() {
    let cfg = GenConfig::default();
    let mut seen = BTreeSet::new();
    for seed in 0..1000u64 {
        let spec = generate_level(seed, Theme::Snow, &cfg).unwrap();
        assert!(validate_level(&spec).violations.is_empty(), "seed {seed}");
        let spawns: Vec<_> = spec.spawns.iter().map(|s| (s.kind, s.cell, s.facing)).collect();
        assert!(seen.insert((spec.platform_cells, spec.ladder_cells, spawns)), "seed {seed} repeats a layout");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_is_pure_and_valid(
        seed in any::<u64>(),
        space in any::<bool>(),
        width in 24i32..48,
        monsters in 0u32..6,
        coins in 1u32..6,
        gems in 0u32..3,
    ) {
        let theme = if space { Theme::Space } else { Theme::Snow };
        let cfg = GenConfig { width, monsters, coins, gems, ..GenConfig::default() };
        let a = generate_level(seed, theme, &cfg).unwrap();
        prop_assert_eq!(&a, &generate_level(seed, theme, &cfg).unwrap());
        prop_assert!(validate_level(&a).violations.is_empty());
        prop_assert_eq!(a.monsters().count(), monsters as usize);
    }
}
