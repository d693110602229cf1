//! Software rasterizer for RGB frames and semantic class maps.
//!
//! Every pixel is point-sampled at its center in world space, so the RGB
//! image and the class map come out of the same pass and agree exactly on
//! sprite coverage. The camera is 16 cells wide and tall, follows Mugen in
//! x only and always shows rows `[0, 16)`.
//!
//! Layers, back to front: background, platforms and ladders, items,
//! monsters, Mugen. The gem shield tints Mugen's own pixels and has no class.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{EntityKind, Facing, Theme};
use crate::episode::EpisodeMetadata;
use crate::math::{floor_i, hash2};
use crate::sim::{PoseId, PHYSICS};
use crate::terrain::Terrain;

/// Camera window side, in cells.
pub const VIEW_CELLS: f64 = 16.0;
pub const MIN_RESOLUTION: u32 = 64;
pub const MAX_RESOLUTION: u32 = 1400;

pub const CLASS_BACKGROUND: u8 = 0;
pub const CLASS_PLATFORM: u8 = 1;
pub const CLASS_LADDER: u8 = 2;

/// Texture grain cells per world cell.
const GRAIN_PER_CELL: f64 = 64.0;

/// Semantic class id of an entity kind.
pub fn entity_class(kind: EntityKind) -> u8 {
    3 + kind.index() as u8
}

/// Every class id with its name, in id order.
pub fn class_palette() -> Vec<(u8, &'static str)> {
    let mut v = vec![(CLASS_BACKGROUND, "background"), (CLASS_PLATFORM, "platform"), (CLASS_LADDER, "ladder")];
    v.extend(EntityKind::ALL.iter().map(|k| (entity_class(*k), k.name())));
    v
}

pub fn class_kind(class: u8) -> Option<EntityKind> {
    EntityKind::ALL.get(class.checked_sub(3)? as usize).copied()
}

pub type Rgb = [u8; 3];

/// Theme-level colors for the static world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeColors {
    pub sky_top: Rgb,
    pub sky_bottom: Rgb,
    pub speck: Rgb,
    pub platform: Rgb,
    pub platform_top: Rgb,
    pub ladder: Rgb,
    /// Texture noise amplitude.
    pub grain: u8,
}

/// Missing fields fall back to the built-in palette when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Palette {
    pub snow: ThemeColors,
    pub space: ThemeColors,
    /// Base color per entity kind, indexed by [`EntityKind::index`].
    pub entities: [Rgb; 13],
    pub shield: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            snow: ThemeColors {
                sky_top: [120, 170, 225],
                sky_bottom: [205, 225, 245],
                speck: [250, 252, 255],
                platform: [110, 120, 140],
                platform_top: [240, 246, 252],
                ladder: [150, 105, 60],
                grain: 6,
            },
            space: ThemeColors {
                sky_top: [8, 8, 30],
                sky_bottom: [40, 25, 70],
                speck: [235, 235, 200],
                platform: [90, 95, 110],
                platform_top: [170, 200, 220],
                ladder: [190, 190, 200],
                grain: 6,
            },
            entities: [
                [235, 120, 40],  // Mugen
                [250, 205, 40],  // Coin
                [60, 220, 230],  // Gem
                [170, 110, 60],  // Snail
                [230, 140, 160], // Worm
                [240, 80, 60],   // Face
                [215, 30, 40],   // Ladybug
                [70, 180, 70],   // Frog
                [120, 90, 140],  // Barnacle
                [245, 200, 30],  // Bee
                [150, 150, 155], // Mouse
                [110, 220, 120], // Slime
                [225, 225, 240], // Ghost
            ],
            shield: [120, 200, 255],
        }
    }
}

impl Palette {
    pub fn theme(&self, theme: Theme) -> &ThemeColors {
        match theme {
            Theme::Snow => &self.snow,
            Theme::Space => &self.space,
        }
    }

    pub fn entity(&self, kind: EntityKind) -> Rgb {
        self.entities[kind.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub resolution: u32,
    pub palette: Palette,
}

impl RenderConfig {
    pub fn new(resolution: u32) -> Result<RenderConfig, RenderError> {
        if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
            return Err(RenderError::BadResolution(resolution));
        }
        Ok(RenderConfig { resolution, palette: Palette::default() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("frame {0} is out of range")]
    FrameOutOfRange(u32),
    #[error("resolution {0} is outside [64, 1400]")]
    BadResolution(u32),
}

/// Packed 8-bit RGB, row-major, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let i = 3 * (y * self.width + x) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Per-pixel class ids, row-major, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticFrame {
    pub width: u32,
    pub height: u32,
    pub classes: Vec<u8>,
}

impl SemanticFrame {
    pub fn class(&self, x: u32, y: u32) -> u8 {
        self.classes[(y * self.width + x) as usize]
    }

    /// Sorted distinct class ids present.
    pub fn class_set(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &c in &self.classes {
            seen[c as usize] = true;
        }
        (0..=255u8).filter(|&c| seen[c as usize]).collect()
    }

    pub fn palette(&self) -> Vec<(u8, &'static str)> {
        class_palette()
    }
}

/// One drawable character or item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sprite {
    pub kind: EntityKind,
    /// Center x and bottom y, in cells.
    pub x: f64,
    pub y: f64,
    pub facing: Facing,
    pub pose: PoseId,
    pub shield: bool,
}

impl Sprite {
    /// Width and height in cells.
    pub fn size(&self) -> (f64, f64) {
        if self.kind == EntityKind::Mugen {
            (2.0 * PHYSICS.mugen_half_width, PHYSICS.mugen_height)
        } else if self.kind.is_item() {
            (2.0 * PHYSICS.item_half, 2.0 * PHYSICS.item_half)
        } else {
            (2.0 * PHYSICS.monster_half_width, PHYSICS.monster_height)
        }
    }

    /// `(x0, x1, y0, y1)` in world cells.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let (w, h) = self.size();
        (self.x - w / 2.0, self.x + w / 2.0, self.y, self.y + h)
    }
}

/// Everything needed to draw one frame.
#[derive(Debug, Clone)]
pub struct Scene {
    pub theme: Theme,
    pub terrain: Terrain,
    /// World x of the left edge of the camera window.
    pub camera_left: f64,
    /// Drawn in order, so later sprites cover earlier ones.
    pub sprites: Vec<Sprite>,
}

pub fn camera_left(mugen_x: f64) -> f64 {
    mugen_x - VIEW_CELLS / 2.0
}

impl Scene {
    pub fn from_frame(ep: &EpisodeMetadata, frame_idx: u32) -> Result<Scene, RenderError> {
        let f = ep.frames.get(frame_idx as usize).ok_or(RenderError::FrameOutOfRange(frame_idx))?;
        let mut sprites = Vec::new();
        for (i, it) in ep.level.items().enumerate() {
            if !f.item_collected(i) {
                sprites.push(Sprite {
                    kind: it.kind,
                    x: it.cell.0 as f64 + 0.5,
                    y: it.cell.1 as f64 + 0.5 - PHYSICS.item_half,
                    facing: it.facing,
                    pose: PoseId::Idle,
                    shield: false,
                });
            }
        }
        for m in f.monsters.iter().filter(|m| m.alive) {
            sprites.push(Sprite {
                kind: m.kind,
                x: m.position.0,
                y: m.position.1,
                facing: m.facing,
                pose: m.pose,
                shield: false,
            });
        }
        sprites.push(Sprite {
            kind: EntityKind::Mugen,
            x: f.mugen.position.0,
            y: f.mugen.position.1,
            facing: f.mugen.facing,
            pose: f.mugen.pose,
            shield: f.shield_active,
        });
        Ok(Scene { theme: ep.level.theme, terrain: ep.level.terrain(), camera_left: camera_left(f.mugen.position.0), sprites })
    }

    /// Pixel-center sample point in world space.
    fn world(&self, res: u32, i: u32, j: u32) -> (f64, f64) {
        let s = VIEW_CELLS / res as f64;
        (self.camera_left + (i as f64 + 0.5) * s, VIEW_CELLS - (j as f64 + 0.5) * s)
    }
}

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let mut o = [0u8; 3];
    for c in 0..3 {
        o[c] = libm::round(a[c] as f64 + (b[c] as f64 - a[c] as f64) * t) as u8;
    }
    o
}

fn grain(c: Rgb, amp: u8, wx: f64, wy: f64, salt: u64) -> Rgb {
    if amp == 0 {
        return c;
    }
    let h = hash2(floor_i(wx * GRAIN_PER_CELL) as i64, floor_i(wy * GRAIN_PER_CELL) as i64, salt);
    let d = (h % (2 * amp as u64 + 1)) as i32 - amp as i32;
    c.map(|v| (v as i32 + d).clamp(0, 255) as u8)
}

fn shade(c: Rgb, f: f64) -> Rgb {
    c.map(|v| libm::round((v as f64 * f).clamp(0.0, 255.0)) as u8)
}

/// Background color at a world point.
pub fn background_color(theme: Theme, colors: &ThemeColors, wx: f64, wy: f64) -> Rgb {
    let t = (wy / VIEW_CELLS).clamp(0.0, 1.0);
    let base = lerp(colors.sky_bottom, colors.sky_top, t);
    let (sx, sy) = (floor_i(wx * 5.0), floor_i(wy * 5.0));
    let h = hash2(sx as i64, sy as i64, theme as u64 + 11);
    let rarity = if theme == Theme::Snow { 37 } else { 53 };
    if h.is_multiple_of(rarity) {
        let (fx, fy) = (wx * 5.0 - sx as f64 - 0.5, wy * 5.0 - sy as f64 - 0.5);
        let r = 0.12 + (h >> 20) as f64 % 7.0 * 0.03;
        if fx * fx + fy * fy < r * r {
            return colors.speck;
        }
    }
    grain(base, colors.grain, wx, wy, 1)
}

/// Tile class and color at a world point, if a platform or ladder covers it.
fn tile(terrain: &Terrain, colors: &ThemeColors, wx: f64, wy: f64) -> Option<(u8, Rgb)> {
    let (cx, cy) = (floor_i(wx), floor_i(wy));
    let (u, v) = (wx - cx as f64, wy - cy as f64);
    if terrain.solid(cx, cy) {
        let c = if v > 0.82 && !terrain.solid(cx, cy + 1) { colors.platform_top } else { colors.platform };
        let edge = if u < 0.04 || v < 0.04 { 0.85 } else { 1.0 };
        return Some((CLASS_PLATFORM, grain(shade(c, edge), colors.grain, wx, wy, 2)));
    }
    if terrain.ladder(cx, cy) {
        let rail = (0.12..0.24).contains(&u) || (0.76..0.88).contains(&u);
        let rung = (0.24..0.76).contains(&u) && ((0.15..0.27).contains(&v) || (0.65..0.77).contains(&v));
        if rail || rung {
            return Some((CLASS_LADDER, grain(colors.ladder, colors.grain, wx, wy, 3)));
        }
    }
    None
}

fn ell(u: f64, v: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> bool {
    let (a, b) = ((u - cx) / rx, (v - cy) / ry);
    a * a + b * b <= 1.0
}

fn rect(u: f64, v: f64, u0: f64, u1: f64, v0: f64, v1: f64) -> bool {
    u >= u0 && u < u1 && v >= v0 && v < v1
}

const DARK: Rgb = [25, 20, 30];
const WHITE: Rgb = [245, 245, 245];

/// Sprite color at local coordinates `u` (0 = back, 1 = front) and `v`
/// (0 = bottom), or `None` where the sprite is transparent.
pub fn sprite_texel(kind: EntityKind, pose: PoseId, base: Rgb, u: f64, v: f64) -> Option<Rgb> {
    let light = shade(base, 1.25);
    let dark = shade(base, 0.6);
    match kind {
        EntityKind::Mugen => mugen_texel(pose, base, u, v),
        EntityKind::Coin => {
            let r2 = (u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5);
            if r2 > 0.2 {
                None
            } else if r2 > 0.13 || rect(u, v, 0.45, 0.55, 0.28, 0.72) {
                Some(dark)
            } else {
                Some(base)
            }
        }
        EntityKind::Gem => {
            let d = (u - 0.5).abs() + (v - 0.5).abs();
            if d > 0.48 {
                None
            } else if v > 0.5 && d < 0.25 {
                Some(light)
            } else {
                Some(base)
            }
        }
        EntityKind::Snail => {
            if ell(u, v, 0.85, 0.5, 0.04, 0.3) && v > 0.2 {
                Some(dark)
            } else if ell(u, v, 0.42, 0.48, 0.3, 0.32) {
                let ring = ell(u, v, 0.42, 0.48, 0.15, 0.16);
                Some(if ring { dark } else { base })
            } else if rect(u, v, 0.05, 0.95, 0.0, 0.2) {
                Some([200, 190, 150])
            } else {
                None
            }
        }
        EntityKind::Worm => {
            if !(0.04..0.96).contains(&u) {
                return None;
            }
            let mid = 0.28 + 0.1 * libm::sin(u * core::f64::consts::TAU * 1.5);
            if (v - mid).abs() < 0.13 {
                if ell(u, v, 0.88, mid + 0.03, 0.03, 0.04) {
                    Some(DARK)
                } else if libm::fmod(u * 10.0, 2.0) < 0.35 {
                    Some(dark)
                } else {
                    Some(base)
                }
            } else {
                None
            }
        }
        EntityKind::Face => {
            if !ell(u, v, 0.5, 0.48, 0.45, 0.45) {
                None
            } else if ell(u, v, 0.4, 0.58, 0.07, 0.09) || ell(u, v, 0.68, 0.58, 0.07, 0.09) || rect(u, v, 0.35, 0.75, 0.22, 0.3) {
                // Eyes and mouth.
                Some(DARK)
            } else {
                Some(base)
            }
        }
        EntityKind::Ladybug => {
            if ell(u, v, 0.88, 0.22, 0.12, 0.14) && v >= 0.05 {
                Some(DARK)
            } else if ell(u, v, 0.45, 0.05, 0.4, 0.6) && v >= 0.05 {
                let spot = ell(u, v, 0.3, 0.35, 0.07, 0.07) || ell(u, v, 0.55, 0.42, 0.07, 0.07) || ell(u, v, 0.42, 0.18, 0.06, 0.06);
                Some(if spot || (u - 0.45).abs() < 0.02 { DARK } else { base })
            } else {
                None
            }
        }
        EntityKind::Frog => {
            let eye = ell(u, v, 0.32, 0.62, 0.12, 0.12) || ell(u, v, 0.7, 0.62, 0.12, 0.12);
            let pupil = ell(u, v, 0.35, 0.64, 0.05, 0.05) || ell(u, v, 0.73, 0.64, 0.05, 0.05);
            if pupil {
                Some(DARK)
            } else if eye {
                Some(WHITE)
            } else if ell(u, v, 0.5, 0.3, 0.45, 0.3) {
                Some(if v < 0.15 { light } else { base })
            } else {
                None
            }
        }
        EntityKind::Barnacle => {
            let w = 0.45 * (1.0 - v * 0.6);
            if (u - 0.5).abs() > w || v > 0.9 {
                return None;
            }
            let tooth = v > 0.62 && libm::fmod(u * 8.0, 1.0) < 0.5;
            if tooth {
                Some(WHITE)
            } else if v > 0.55 {
                Some(DARK)
            } else {
                Some(base)
            }
        }
        EntityKind::Bee => {
            if ell(u, v, 0.42, 0.8, 0.18, 0.14) || ell(u, v, 0.6, 0.78, 0.14, 0.12) {
                Some([220, 235, 250])
            } else if ell(u, v, 0.5, 0.42, 0.42, 0.26) {
                let stripe = libm::fmod(u * 6.0, 2.0) < 0.7 && u < 0.8;
                Some(if stripe { DARK } else { base })
            } else if rect(u, v, 0.0, 0.12, 0.38, 0.46) {
                Some(DARK)
            } else {
                None
            }
        }
        EntityKind::Mouse => {
            if ell(u, v, 0.75, 0.58, 0.09, 0.1) {
                Some(shade(base, 1.15))
            } else if ell(u, v, 0.82, 0.34, 0.16, 0.16) {
                Some(if ell(u, v, 0.87, 0.38, 0.03, 0.03) { DARK } else { base })
            } else if ell(u, v, 0.45, 0.28, 0.34, 0.24) {
                Some(base)
            } else if rect(u, v, 0.0, 0.14, 0.1, 0.15) {
                Some(dark)
            } else {
                None
            }
        }
        EntityKind::Slime => {
            let x = (u - 0.5) / 0.47;
            if x.abs() >= 1.0 {
                return None;
            }
            let top = 0.62 * libm::sqrt(1.0 - x * x);
            if v > top {
                None
            } else if ell(u, v, 0.62, 0.35, 0.05, 0.07) {
                Some(DARK)
            } else if ell(u, v, 0.35, 0.45, 0.08, 0.05) {
                Some(light)
            } else {
                Some(base)
            }
        }
        EntityKind::Ghost => {
            let wave = 0.12 + 0.06 * libm::sin(u * core::f64::consts::TAU * 3.0);
            let body = ell(u, v, 0.5, 0.55, 0.4, 0.4) || rect(u, v, 0.1, 0.9, wave, 0.55);
            if !body {
                None
            } else if ell(u, v, 0.58, 0.6, 0.06, 0.09) || ell(u, v, 0.78, 0.6, 0.06, 0.09) {
                Some(DARK)
            } else {
                Some(base)
            }
        }
    }
}

fn mugen_texel(pose: PoseId, base: Rgb, u: f64, v: f64) -> Option<Rgb> {
    let skin: Rgb = [250, 210, 170];
    let pants = shade(base, 0.55);
    if pose == PoseId::Die {
        return if ell(u, v, 0.7, 0.22, 0.22, 0.2) {
            let x_eye = (u - 0.76).abs() < 0.05 && (v - 0.26).abs() < 0.05;
            Some(if x_eye { DARK } else { skin })
        } else if ell(u, v, 0.35, 0.15, 0.32, 0.15) {
            Some(base)
        } else {
            None
        };
    }
    let squash = if pose == PoseId::BumpHead { 0.06 } else { 0.0 };
    let head = ell(u, v, 0.52, 0.76 - squash, 0.3, 0.2 - squash);
    if head {
        let eye = ell(u, v, 0.68, 0.79 - squash, 0.06, 0.05);
        return Some(if eye { DARK } else { skin });
    }
    let arms_up = matches!(
        pose,
        PoseId::Jump | PoseId::JumpLeft | PoseId::JumpRight | PoseId::ClimbUp | PoseId::ClimbDown | PoseId::ClimbIdle | PoseId::PowerUp | PoseId::Collect
    );
    if arms_up && (rect(u, v, 0.08, 0.2, 0.48, 0.88) || rect(u, v, 0.8, 0.92, 0.48, 0.88)) {
        return Some(skin);
    }
    if !arms_up && (rect(u, v, 0.08, 0.2, 0.28, 0.55) || rect(u, v, 0.8, 0.92, 0.28, 0.55)) {
        return Some(skin);
    }
    if ell(u, v, 0.5, 0.42, 0.32, 0.18) {
        return Some(base);
    }
    let tucked = pose.is_jump() || pose == PoseId::Fall || pose == PoseId::KillStomp;
    let (lv0, lv1) = if tucked { (0.1, 0.3) } else { (0.0, 0.3) };
    let stride = if pose.is_walk() { 0.06 } else { 0.0 };
    if rect(u, v, 0.22 - stride, 0.42 - stride, lv0, lv1) || rect(u, v, 0.58 + stride, 0.78 + stride, lv0, lv1) {
        return Some(pants);
    }
    None
}

struct Target<'a> {
    res: u32,
    rgb: Option<&'a mut [u8]>,
    classes: &'a mut [u8],
}

impl Target<'_> {
    fn put(&mut self, i: u32, j: u32, class: u8, c: Rgb) {
        let k = (j * self.res + i) as usize;
        self.classes[k] = class;
        if let Some(rgb) = self.rgb.as_deref_mut() {
            rgb[3 * k..3 * k + 3].copy_from_slice(&c);
        }
    }
}

/// Which layers to draw; used to produce the background-only reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layers {
    All,
    BackgroundOnly,
}

/// Rasterize a scene. The RGB buffer is skipped when `want_rgb` is false.
pub fn render_scene(scene: &Scene, cfg: &RenderConfig, want_rgb: bool, layers: Layers) -> (Option<Image>, SemanticFrame) {
    let res = cfg.resolution;
    let n = (res * res) as usize;
    let colors = cfg.palette.theme(scene.theme);
    let mut rgb = if want_rgb { Some(vec![0u8; 3 * n]) } else { None };
    let mut classes = vec![CLASS_BACKGROUND; n];
    {
        let mut t = Target { res, rgb: rgb.as_deref_mut(), classes: &mut classes };
        for j in 0..res {
            for i in 0..res {
                let (wx, wy) = scene.world(res, i, j);
                let tile = if layers == Layers::All { tile(&scene.terrain, colors, wx, wy) } else { None };
                match tile {
                    Some((class, c)) => t.put(i, j, class, c),
                    None if want_rgb => t.put(i, j, CLASS_BACKGROUND, background_color(scene.theme, colors, wx, wy)),
                    None => {}
                }
            }
        }
        if layers == Layers::All {
            for s in &scene.sprites {
                draw_sprite(&mut t, scene, cfg, s);
            }
        }
    }
    let image = rgb.map(|pixels| Image { width: res, height: res, pixels });
    (image, SemanticFrame { width: res, height: res, classes })
}

fn draw_sprite(t: &mut Target, scene: &Scene, cfg: &RenderConfig, s: &Sprite) {
    let res = t.res;
    let px = VIEW_CELLS / res as f64;
    let (x0, x1, y0, y1) = s.bounds();
    let (w, h) = s.size();
    // Pixel-index range whose centers may fall inside the sprite box.
    let i0 = libm::floor((x0 - scene.camera_left) / px - 0.5).max(0.0) as u32;
    let i1 = (libm::ceil((x1 - scene.camera_left) / px - 0.5).max(-1.0) + 1.0).min(res as f64) as u32;
    let j0 = libm::floor((VIEW_CELLS - y1) / px - 0.5).max(0.0) as u32;
    let j1 = (libm::ceil((VIEW_CELLS - y0) / px - 0.5).max(-1.0) + 1.0).min(res as f64) as u32;
    let base = cfg.palette.entity(s.kind);
    let class = entity_class(s.kind);
    for j in j0..j1 {
        for i in i0..i1 {
            let (wx, wy) = scene.world(res, i, j);
            if wx < x0 || wx >= x1 || wy < y0 || wy >= y1 {
                continue;
            }
            let mut u = (wx - x0) / w;
            let v = (wy - y0) / h;
            if s.facing == Facing::Left {
                u = 1.0 - u;
            }
            if let Some(mut c) = sprite_texel(s.kind, s.pose, base, u, v) {
                if s.shield {
                    c = lerp(c, cfg.palette.shield, 0.45);
                }
                t.put(i, j, class, c);
            }
        }
    }
}

pub fn render_rgb(ep: &EpisodeMetadata, frame_idx: u32, cfg: &RenderConfig) -> Result<Image, RenderError> {
    let scene = Scene::from_frame(ep, frame_idx)?;
    Ok(render_scene(&scene, cfg, true, Layers::All).0.expect("rgb requested"))
}

pub fn render_semantic(ep: &EpisodeMetadata, frame_idx: u32, cfg: &RenderConfig) -> Result<SemanticFrame, RenderError> {
    let scene = Scene::from_frame(ep, frame_idx)?;
    Ok(render_scene(&scene, cfg, false, Layers::All).1)
}

/// RGB and semantic map from one pass.
pub fn render_frame(ep: &EpisodeMetadata, frame_idx: u32, cfg: &RenderConfig) -> Result<(Image, SemanticFrame), RenderError> {
    let scene = Scene::from_frame(ep, frame_idx)?;
    let (img, sem) = render_scene(&scene, cfg, true, Layers::All);
    Ok((img.expect("rgb requested"), sem))
}

/// The frame with no tiles or sprites composited, only the background.
pub fn render_background(ep: &EpisodeMetadata, frame_idx: u32, cfg: &RenderConfig) -> Result<Image, RenderError> {
    let scene = Scene::from_frame(ep, frame_idx)?;
    Ok(render_scene(&scene, cfg, true, Layers::BackgroundOnly).0.expect("rgb requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episode::{policy_seed, run_episode};
    use crate::policy::PresetRegistry;
    use crate::worldgen::{generate_level, GenConfig};
    use alloc::collections::BTreeSet;

    fn ep(seed: u64) -> EpisodeMetadata {
        let spec = generate_level(seed, Theme::Space, &GenConfig::default()).unwrap();
        run_episode(&spec, PresetRegistry::standard().get("profile-04").unwrap(), policy_seed(seed, 1)).unwrap()
    }

    #[test]
    fn resolution_bounds() {
        assert!(RenderConfig::new(63).is_err());
        assert!(RenderConfig::new(1401).is_err());
        assert!(RenderConfig::new(64).is_ok());
    }

    #[test]
    fn frame_out_of_range() {
        let e = ep(1);
        let cfg = RenderConfig::new(64).unwrap();
        assert_eq!(render_rgb(&e, e.frame_count(), &cfg), Err(RenderError::FrameOutOfRange(e.frame_count())));
    }

    #[test]
    fn empty_scene_is_all_background() {
        let terrain = Terrain::new(20, 12, &BTreeSet::new(), &BTreeSet::new());
        let scene = Scene { theme: Theme::Snow, terrain, camera_left: 2.0, sprites: Vec::new() };
        let (_, sem) = render_scene(&scene, &RenderConfig::new(128).unwrap(), true, Layers::All);
        assert_eq!(sem.class_set(), vec![CLASS_BACKGROUND]);
    }

    #[test]
    fn mugen_on_platform_classes() {
        let platforms: BTreeSet<_> = (-20..40).map(|x| (x, 0)).collect();
        let terrain = Terrain::new(40, 12, &platforms, &BTreeSet::new());
        let mugen = Sprite { kind: EntityKind::Mugen, x: 10.5, y: 1.0, facing: Facing::Right, pose: PoseId::Idle, shield: false };
        let scene = Scene { theme: Theme::Snow, terrain, camera_left: camera_left(10.5), sprites: vec![mugen] };
        let (_, sem) = render_scene(&scene, &RenderConfig::new(256).unwrap(), false, Layers::All);
        assert_eq!(sem.class_set(), vec![CLASS_BACKGROUND, CLASS_PLATFORM, entity_class(EntityKind::Mugen)]);
    }

    #[test]
    fn mugen_covers_coin() {
        let terrain = Terrain::new(40, 12, &BTreeSet::new(), &BTreeSet::new());
        let coin = Sprite { kind: EntityKind::Coin, x: 10.5, y: 3.2, facing: Facing::Right, pose: PoseId::Idle, shield: false };
        let mugen = Sprite { kind: EntityKind::Mugen, x: 10.6, y: 3.0, facing: Facing::Right, pose: PoseId::Idle, shield: false };
        let cfg = RenderConfig::new(512).unwrap();
        let alone = Scene { theme: Theme::Snow, terrain: terrain.clone(), camera_left: 3.0, sprites: vec![coin] };
        let both = Scene { theme: Theme::Snow, terrain, camera_left: 3.0, sprites: vec![coin, mugen] };
        let (_, a) = render_scene(&alone, &cfg, false, Layers::All);
        let (_, b) = render_scene(&both, &cfg, false, Layers::All);
        let (_, m) = render_scene(&Scene { sprites: vec![mugen], ..both.clone() }, &cfg, false, Layers::All);
        let mugen_id = entity_class(EntityKind::Mugen);
        let mut overlap = 0;
        for k in 0..a.classes.len() {
            if a.classes[k] == entity_class(EntityKind::Coin) && m.classes[k] == mugen_id {
                assert_eq!(b.classes[k], mugen_id);
                overlap += 1;
            }
        }
        assert!(overlap > 0);
    }

    #[test]
    fn shield_changes_color_not_classes() {
        let terrain = Terrain::new(40, 12, &BTreeSet::new(), &BTreeSet::new());
        let mut mugen = Sprite { kind: EntityKind::Mugen, x: 10.5, y: 3.0, facing: Facing::Left, pose: PoseId::Jump, shield: false };
        let cfg = RenderConfig::new(256).unwrap();
        let plain = Scene { theme: Theme::Space, terrain, camera_left: 2.5, sprites: vec![mugen] };
        mugen.shield = true;
        let shielded = Scene { sprites: vec![mugen], ..plain.clone() };
        let (ia, sa) = render_scene(&plain, &cfg, true, Layers::All);
        let (ib, sb) = render_scene(&shielded, &cfg, true, Layers::All);
        assert_eq!(sa, sb);
        assert_ne!(ia, ib);
    }

    #[test]
    fn deterministic_and_consistent() {
        let e = ep(2);
        let cfg = RenderConfig::new(128).unwrap();
        for f in [0, e.frame_count() / 2, e.frame_count() - 1] {
            let (img, sem) = render_frame(&e, f, &cfg).unwrap();
            assert_eq!(img, render_rgb(&e, f, &cfg).unwrap());
            assert_eq!(sem, render_semantic(&e, f, &cfg).unwrap());
            let bg = render_background(&e, f, &cfg).unwrap();
            for k in 0..sem.classes.len() {
                if sem.classes[k] == CLASS_BACKGROUND {
                    assert_eq!(img.pixels[3 * k..3 * k + 3], bg.pixels[3 * k..3 * k + 3]);
                }
            }
        }
    }
}
