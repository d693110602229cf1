//! Cell grid lookups and the conservative move graph used for reachability.
//!
//! World space is measured in cells with `y` pointing up. Cell `(x, y)`
//! covers `[x, x+1) × [y, y+1)`. Columns outside `[0, width)` and rows below
//! zero behave as solid walls; rows at or above `height` are open sky.

use alloc::collections::{BinaryHeap, VecDeque};
use core::cmp::Reverse;
use alloc::vec;
use alloc::vec::Vec;

/// Vertical reach of a standing jump, in cells.
pub const JUMP_REACH_UP: i32 = 2;
/// Horizontal reach of a running jump, in cells.
pub const JUMP_REACH_ACROSS: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Empty,
    Solid,
    Ladder,
}

#[derive(Debug, Clone)]
pub struct Terrain {
    width: i32,
    height: i32,
    cells: Vec<Cell>,
}

/// One edge of the move graph, seen from its source node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Walk { dx: i32 },
    /// Walk off a ledge and drop `dy` (< 0) rows.
    Fall { dx: i32, dy: i32 },
    Climb { dy: i32 },
    Jump { dx: i32, dy: i32 },
}

impl Move {
    pub fn delta(self) -> (i32, i32) {
        match self {
            Move::Walk { dx } => (dx, 0),
            Move::Fall { dx, dy } | Move::Jump { dx, dy } => (dx, dy),
            Move::Climb { dy } => (0, dy),
        }
    }
}

impl Terrain {
    pub fn new<'a>(
        width: i32,
        height: i32,
        platforms: impl IntoIterator<Item = &'a (i32, i32)>,
        ladders: impl IntoIterator<Item = &'a (i32, i32)>,
    ) -> Terrain {
        let mut cells = vec![Cell::Empty; (width.max(0) * height.max(0)) as usize];
        let mut set = |&(x, y): &(i32, i32), c: Cell| {
            if x >= 0 && x < width && y >= 0 && y < height {
                cells[(y * width + x) as usize] = c;
            }
        };
        for p in ladders {
            set(p, Cell::Ladder);
        }
        for p in platforms {
            set(p, Cell::Solid);
        }
        Terrain { width, height, cells }
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    fn cell(&self, x: i32, y: i32) -> Cell {
        if x < 0 || x >= self.width || y < 0 {
            Cell::Solid
        } else if y >= self.height {
            Cell::Empty
        } else {
            self.cells[(y * self.width + x) as usize]
        }
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && x < self.width && y >= 0 && y < self.height
    }

    pub fn solid(&self, x: i32, y: i32) -> bool {
        self.cell(x, y) == Cell::Solid
    }

    pub fn ladder(&self, x: i32, y: i32) -> bool {
        self.cell(x, y) == Cell::Ladder
    }

    /// Top rung of a ladder; acts as a one-way platform.
    pub fn ladder_top(&self, x: i32, y: i32) -> bool {
        self.ladder(x, y) && !self.ladder(x, y + 1)
    }

    /// Whether something can stand on top of cell `(x, y)`.
    pub fn supports(&self, x: i32, y: i32) -> bool {
        self.solid(x, y) || self.ladder_top(x, y)
    }

    /// A feet cell that is free and resting on something.
    pub fn standing(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y) && !self.solid(x, y) && self.supports(x, y - 1)
    }

    /// Graph node: a feet cell Mugen can occupy while at rest.
    pub fn node(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y) && !self.solid(x, y) && (self.supports(x, y - 1) || self.ladder(x, y))
    }

    fn column_free(&self, x: i32, y_lo: i32, y_hi: i32) -> bool {
        (y_lo..=y_hi).all(|y| !self.solid(x, y))
    }

    /// Clearance test for a jump arc between two resting cells.
    fn jump_clear(&self, x0: i32, y0: i32, x1: i32, y1: i32) -> bool {
        let dx = x1 - x0;
        let apex = y0.max(y1) + if dx.abs() <= 1 { 1 } else { 2 };
        if !self.column_free(x0, y0, apex) || !self.column_free(x1, y1, apex) {
            return false;
        }
        let lo = y0.min(y1);
        let step = dx.signum();
        let mut x = x0 + step;
        while x != x1 {
            if !self.column_free(x, lo, apex) {
                return false;
            }
            x += step;
        }
        true
    }

    /// Outgoing moves from a node, in a fixed order: walks, climbs, falls,
    /// then jumps by increasing distance.
    pub fn moves(&self, x: i32, y: i32) -> Vec<Move> {
        let mut out = Vec::new();
        if !self.node(x, y) {
            return out;
        }
        let grounded = self.supports(x, y - 1);
        for dx in [-1, 1] {
            let nx = x + dx;
            if self.standing(nx, y) && grounded {
                out.push(Move::Walk { dx });
            }
        }
        if self.ladder(x, y) && self.node(x, y + 1) {
            out.push(Move::Climb { dy: 1 });
        }
        if self.ladder(x, y - 1) && self.node(x, y - 1) {
            out.push(Move::Climb { dy: -1 });
        }
        if grounded {
            for dx in [-1, 1] {
                let nx = x + dx;
                if !self.in_bounds(nx, y) || self.solid(nx, y) || self.supports(nx, y - 1) {
                    continue;
                }
                let mut ny = y - 1;
                while ny > 0 && !self.supports(nx, ny - 1) {
                    ny -= 1;
                }
                if self.standing(nx, ny) {
                    out.push(Move::Fall { dx, dy: ny - y });
                }
            }
            for dist in 1..=JUMP_REACH_ACROSS {
                for dx in [-dist, dist] {
                    let nx = x + dx;
                    for ny in (0..=y + JUMP_REACH_UP).rev() {
                        if ny == y && dist == 1 {
                            continue;
                        }
                        if self.standing(nx, ny) && self.jump_clear(x, y, nx, ny) {
                            out.push(Move::Jump { dx, dy: ny - y });
                        }
                    }
                }
            }
        }
        out
    }

    fn idx(&self, x: i32, y: i32) -> usize {
        (y * self.width + x) as usize
    }

    /// Breadth-first search over the move graph from `start`.
    ///
    /// Returns, for every cell, the hop distance from `start` (or `u32::MAX`).
    pub fn reachable_from(&self, start: (i32, i32)) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.cells.len()];
        if !self.node(start.0, start.1) {
            return dist;
        }
        let mut queue = VecDeque::new();
        dist[self.idx(start.0, start.1)] = 0;
        queue.push_back(start);
        while let Some((x, y)) = queue.pop_front() {
            let d = dist[self.idx(x, y)];
            for m in self.moves(x, y) {
                let (dx, dy) = m.delta();
                let (nx, ny) = (x + dx, y + dy);
                let i = self.idx(nx, ny);
                if dist[i] == u32::MAX {
                    dist[i] = d + 1;
                    queue.push_back((nx, ny));
                }
            }
        }
        dist
    }

    pub fn distance(&self, field: &[u32], x: i32, y: i32) -> Option<u32> {
        if !self.in_bounds(x, y) {
            return None;
        }
        match field[self.idx(x, y)] {
            u32::MAX => None,
            d => Some(d),
        }
    }

    /// First move of a cheapest path from `start` to any of `goals`.
    ///
    /// Walking and climbing cost one per cell, falls a little more, and
    /// jumps cost their horizontal span plus two, so flat stretches are
    /// walked rather than hopped. `None` when already on a goal or when no
    /// goal is reachable.
    pub fn first_step(&self, start: (i32, i32), goals: &[(i32, i32)]) -> Option<Move> {
        if goals.contains(&start) || !self.node(start.0, start.1) {
            return None;
        }
        let n = self.cells.len();
        let mut best = vec![u32::MAX; n];
        let mut first: Vec<Option<Move>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        let s = self.idx(start.0, start.1);
        best[s] = 0;
        heap.push(Reverse((0u32, s)));
        while let Some(Reverse((cost, i))) = heap.pop() {
            if cost > best[i] {
                continue;
            }
            let (x, y) = (i as i32 % self.width, i as i32 / self.width);
            if i != s && goals.contains(&(x, y)) {
                return first[i];
            }
            for m in self.moves(x, y) {
                let (dx, dy) = m.delta();
                let j = self.idx(x + dx, y + dy);
                let step = match m {
                    Move::Walk { .. } | Move::Climb { .. } => 1,
                    Move::Fall { .. } => 2,
                    Move::Jump { dx, .. } => dx.unsigned_abs() + 2,
                };
                let c = cost + step;
                if c < best[j] {
                    best[j] = c;
                    first[j] = if i == s { Some(m) } else { first[i] };
                    heap.push(Reverse((c, j)));
                }
            }
        }
        None
    }
}
