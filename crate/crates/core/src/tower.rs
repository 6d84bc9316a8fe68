//! Towers DSL: a cursor drops dominoes onto a 20x20 grid.
//!
//! `(left n canvas block)` evaluates `canvas`, moves the cursor `n` cells to
//! the left (negative `n` moves right) and drops `block`; `right` mirrors it.
//! `(empty)` is the initial canvas with the cursor at column 10. A block rests
//! at the lowest height where every column of its footprint is free, i.e. on
//! the highest occupied cell beneath it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::program::Expr;

pub const GRID: usize = 20;
pub const START_CURSOR: i64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// 1 wide, 2 tall.
    VerticalRed,
    /// 2 wide, 1 tall.
    HorizontalBlue,
}

impl BlockKind {
    pub fn width(self) -> usize {
        match self {
            BlockKind::VerticalRed => 1,
            BlockKind::HorizontalBlue => 2,
        }
    }

    pub fn height(self) -> usize {
        match self {
            BlockKind::VerticalRed => 2,
            BlockKind::HorizontalBlue => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockPlacement {
    pub x: usize,
    pub y: usize,
    pub kind: BlockKind,
}

impl BlockPlacement {
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.kind.width())
            .flat_map(move |dx| (0..self.kind.height()).map(move |dy| (self.x + dx, self.y + dy)))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TowerError {
    /// `placement` is the 1-based ordinal of the offending block.
    #[error("block {placement} extends beyond the {GRID}x{GRID} grid")]
    OutOfBounds { placement: usize },
    #[error("cursor moved to column {cursor} before block {placement}")]
    CursorOutOfRange { cursor: i64, placement: usize },
    #[error("move distance {0} is not an integer")]
    BadMove(f64),
    #[error("symbol `{0}` has no towers semantics")]
    NoSemantics(String),
    #[error("block {0} overlaps an earlier block")]
    Overlap(usize),
}

/// Cursor, placements so far and the occupancy grid (`occupied[y][x]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerState {
    pub cursor: i64,
    pub placements: Vec<BlockPlacement>,
    pub occupied: [[bool; GRID]; GRID],
}

impl Default for TowerState {
    fn default() -> Self {
        TowerState {
            cursor: START_CURSOR,
            placements: Vec::new(),
            occupied: [[false; GRID]; GRID],
        }
    }
}

impl TowerState {
    fn column_top(&self, x: usize) -> usize {
        (0..GRID)
            .rev()
            .find(|&y| self.occupied[y][x])
            .map_or(0, |y| y + 1)
    }

    fn drop_block(&mut self, kind: BlockKind) -> Result<(), TowerError> {
        let placement = self.placements.len() + 1;
        let x = self.cursor as usize;
        if x + kind.width() > GRID {
            return Err(TowerError::OutOfBounds { placement });
        }
        let y = (x..x + kind.width())
            .map(|c| self.column_top(c))
            .max()
            .unwrap_or(0);
        if y + kind.height() > GRID {
            return Err(TowerError::OutOfBounds { placement });
        }
        let block = BlockPlacement { x, y, kind };
        for (cx, cy) in block.cells() {
            self.occupied[cy][cx] = true;
        }
        self.placements.push(block);
        Ok(())
    }

    fn shift(&mut self, by: i64) -> Result<(), TowerError> {
        self.cursor += by;
        if !(0..GRID as i64).contains(&self.cursor) {
            return Err(TowerError::CursorOutOfRange {
                cursor: self.cursor,
                placement: self.placements.len() + 1,
            });
        }
        Ok(())
    }
}

fn block_kind(e: &Expr) -> Result<BlockKind, TowerError> {
    match e.name() {
        Some("vertical_red") if e.arity() == 0 => Ok(BlockKind::VerticalRed),
        Some("horizontal_blue") if e.arity() == 0 => Ok(BlockKind::HorizontalBlue),
        Some(other) => Err(TowerError::NoSemantics(other.to_string())),
        None => Err(TowerError::NoSemantics(e.to_string())),
    }
}

fn eval_state(e: &Expr) -> Result<TowerState, TowerError> {
    match (e.name(), e.args()) {
        (Some("empty"), []) => Ok(TowerState::default()),
        (Some(dir @ ("left" | "right")), [n, canvas, block]) => {
            let n = n
                .as_number()
                .ok_or_else(|| TowerError::NoSemantics(n.to_string()))?;
            if n.fract() != 0.0 {
                return Err(TowerError::BadMove(n));
            }
            let mut state = eval_state(canvas)?;
            let kind = block_kind(block)?;
            state.shift(if dir == "left" { -(n as i64) } else { n as i64 })?;
            state.drop_block(kind)?;
            Ok(state)
        }
        (Some(other), _) => Err(TowerError::NoSemantics(other.to_string())),
        (None, _) => Err(TowerError::NoSemantics(e.to_string())),
    }
}

/// Evaluates a base-library towers program to its final state.
pub fn eval_tower_state(program: &Expr) -> Result<TowerState, TowerError> {
    eval_state(program)
}

/// Evaluates a base-library towers program to placements in placement order.
pub fn eval_tower(program: &Expr) -> Result<Vec<BlockPlacement>, TowerError> {
    eval_state(program).map(|s| s.placements)
}

/// Occupancy grid rebuilt from placements, checking for overlaps.
pub fn occupancy(placements: &[BlockPlacement]) -> Result<[[bool; GRID]; GRID], TowerError> {
    let mut grid = [[false; GRID]; GRID];
    for (i, p) in placements.iter().enumerate() {
        for (x, y) in p.cells() {
            if x >= GRID || y >= GRID {
                return Err(TowerError::OutOfBounds { placement: i + 1 });
            }
            if grid[y][x] {
                return Err(TowerError::Overlap(i + 1));
            }
            grid[y][x] = true;
        }
    }
    Ok(grid)
}

/// Twenty rows of `0`/`1`, top row first, joined by `/`.
pub fn occupancy_bits(grid: &[[bool; GRID]; GRID]) -> String {
    (0..GRID)
        .rev()
        .map(|y| {
            grid[y]
                .iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("/")
}

/// Hex SHA-256 over the placement list (kind and cell) in canonical order.
pub fn placement_digest(placements: &[BlockPlacement]) -> String {
    let mut sorted: Vec<_> = placements.iter().map(|p| (p.y, p.x, p.kind)).collect();
    sorted.sort();
    let mut text = String::new();
    for (y, x, k) in sorted {
        let _ = writeln!(text, "{k:?} {x} {y}");
    }
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// One `rect` per block, red for vertical and blue for horizontal, on a
/// 20x20 viewbox with the y axis flipped.
pub fn render_tower_svg(placements: &[BlockPlacement]) -> Result<String, TowerError> {
    occupancy(placements)?;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {GRID} {GRID}">"#
    );
    for p in placements {
        let (w, h) = (p.kind.width(), p.kind.height());
        let fill = match p.kind {
            BlockKind::VerticalRed => "#d62728",
            BlockKind::HorizontalBlue => "#1f77b4",
        };
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{w}" height="{h}" fill="{fill}" stroke="#000000" stroke-width="0.05"/>"##,
            p.x,
            GRID - p.y - h
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
