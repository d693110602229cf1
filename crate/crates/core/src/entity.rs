//! The 13 entity kinds, themes and facing.

use core::fmt;

use serde::{Deserialize, Serialize};

/// World variant: drives tiles, background art and music.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Theme {
    Snow,
    Space,
}

impl Theme {
    pub const ALL: [Theme; 2] = [Theme::Snow, Theme::Space];

    pub fn name(self) -> &'static str {
        match self {
            Theme::Snow => "snow",
            Theme::Space => "space",
        }
    }

    pub fn from_name(s: &str) -> Option<Theme> {
        match s {
            "snow" | "Snow" => Some(Theme::Snow),
            "space" | "Space" => Some(Theme::Space),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Facing {
    Left,
    Right,
}

impl Facing {
    pub fn sign(self) -> f64 {
        match self {
            Facing::Left => -1.0,
            Facing::Right => 1.0,
        }
    }

    pub fn flip(self) -> Facing {
        match self {
            Facing::Left => Facing::Right,
            Facing::Right => Facing::Left,
        }
    }
}

/// How a monster moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ability {
    Walker,
    Hopper,
    Flyer,
    Stationary,
}

/// Every object or character that can appear in a level.
///
/// Declaration order is significant: it fixes the semantic class ids
/// (`class_id`) and the ordering of sets in serialized output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Mugen,
    Coin,
    Gem,
    Snail,
    Worm,
    Face,
    Ladybug,
    Frog,
    Barnacle,
    Bee,
    Mouse,
    Slime,
    Ghost,
}

impl EntityKind {
    pub const ALL: [EntityKind; 13] = [
        EntityKind::Mugen,
        EntityKind::Coin,
        EntityKind::Gem,
        EntityKind::Snail,
        EntityKind::Worm,
        EntityKind::Face,
        EntityKind::Ladybug,
        EntityKind::Frog,
        EntityKind::Barnacle,
        EntityKind::Bee,
        EntityKind::Mouse,
        EntityKind::Slime,
        EntityKind::Ghost,
    ];

    pub const MONSTERS: [EntityKind; 10] = [
        EntityKind::Snail,
        EntityKind::Worm,
        EntityKind::Face,
        EntityKind::Ladybug,
        EntityKind::Frog,
        EntityKind::Barnacle,
        EntityKind::Bee,
        EntityKind::Mouse,
        EntityKind::Slime,
        EntityKind::Ghost,
    ];

    pub fn is_monster(self) -> bool {
        !matches!(self, EntityKind::Mugen | EntityKind::Coin | EntityKind::Gem)
    }

    pub fn is_item(self) -> bool {
        matches!(self, EntityKind::Coin | EntityKind::Gem)
    }

    /// Monsters Mugen can stomp.
    pub fn killable(self) -> bool {
        matches!(self, EntityKind::Snail | EntityKind::Worm | EntityKind::Face)
    }

    /// Movement class. Mugen and items report `Stationary`; only monsters
    /// move on their own.
    pub fn ability(self) -> Ability {
        match self {
            EntityKind::Ladybug | EntityKind::Frog => Ability::Hopper,
            EntityKind::Bee => Ability::Flyer,
            EntityKind::Barnacle => Ability::Stationary,
            EntityKind::Mugen | EntityKind::Coin | EntityKind::Gem => Ability::Stationary,
            _ => Ability::Walker,
        }
    }

    /// Every kind except the bee must stand on a platform.
    pub fn needs_support(self) -> bool {
        self != EntityKind::Bee
    }

    /// Horizontal speed in cells per frame. No two monsters share a value.
    pub fn move_speed(self) -> f64 {
        match self {
            EntityKind::Snail => 0.025,
            EntityKind::Worm => 0.04,
            EntityKind::Face => 0.055,
            EntityKind::Ladybug => 0.07,
            EntityKind::Frog => 0.09,
            EntityKind::Barnacle => 0.0,
            EntityKind::Bee => 0.06,
            EntityKind::Mouse => 0.11,
            EntityKind::Slime => 0.03,
            EntityKind::Ghost => 0.075,
            _ => 0.0,
        }
    }

    /// Lowercase display name used in captions and file formats.
    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Mugen => "Mugen",
            EntityKind::Coin => "coin",
            EntityKind::Gem => "gem",
            EntityKind::Snail => "snail",
            EntityKind::Worm => "worm",
            EntityKind::Face => "face",
            EntityKind::Ladybug => "ladybug",
            EntityKind::Frog => "frog",
            EntityKind::Barnacle => "barnacle",
            EntityKind::Bee => "bee",
            EntityKind::Mouse => "mouse",
            EntityKind::Slime => "slime",
            EntityKind::Ghost => "ghost",
        }
    }

    pub fn from_name(s: &str) -> Option<EntityKind> {
        EntityKind::ALL.iter().copied().find(|k| k.name().eq_ignore_ascii_case(s))
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
