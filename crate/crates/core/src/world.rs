//! The 9×9 block world.
//!
//! Coordinates are grid millimetres: `x` and `z` step by 100 over
//! `-400..=400`, `y` is the block centre height, 50 on the ground and
//! +100 per level up to 450. A [`Structure`] keeps blocks in placement
//! order so that "the most recently built" stack is always recoverable.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GRID_MIN: i32 = -400;
pub const GRID_MAX: i32 = 400;
pub const CELL: i32 = 100;
pub const GROUND_Y: i32 = 50;
pub const MAX_Y: i32 = 450;
/// Number of vertical levels on the grid.
pub const LEVELS: usize = 5;

/// Wire form of an empty grid.
pub const EMPTY_WIRE: &str = "nan";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("coordinate ({x},{y},{z}) is off the grid")]
    OutOfGrid { x: i32, y: i32, z: i32 },
    #[error("position ({x},{y},{z}) is already occupied")]
    Occupied { x: i32, y: i32, z: i32 },
    #[error("block at ({x},{y},{z}) has nothing underneath")]
    Unsupported { x: i32, y: i32, z: i32 },
    #[error("parse error at token {index} ({token:?}): {reason}")]
    Parse {
        index: usize,
        token: String,
        reason: String,
    },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Blue,
    Green,
    Red,
    Yellow,
    Purple,
}

impl Color {
    pub const ALL: [Color; 5] = [
        Color::Blue,
        Color::Green,
        Color::Red,
        Color::Yellow,
        Color::Purple,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Blue => "Blue",
            Color::Green => "Green",
            Color::Red => "Red",
            Color::Yellow => "Yellow",
            Color::Purple => "Purple",
        }
    }

    /// Lower-case word used inside instructions.
    pub fn word(self) -> &'static str {
        match self {
            Color::Blue => "blue",
            Color::Green => "green",
            Color::Red => "red",
            Color::Yellow => "yellow",
            Color::Purple => "purple",
        }
    }

    /// Case-insensitive lookup of a color word.
    pub fn from_word(word: &str) -> Option<Color> {
        Color::ALL
            .into_iter()
            .find(|c| c.word().eq_ignore_ascii_case(word))
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Color {
    type Err = WorldError;

    /// Wire colors must be capitalized exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Color::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| WorldError::Parse {
                index: 0,
                token: s.to_string(),
                reason: "unknown color".into(),
            })
    }
}

fn on_axis(v: i32) -> bool {
    (GRID_MIN..=GRID_MAX).contains(&v) && v % CELL == 0
}

fn on_level(y: i32) -> bool {
    (GROUND_Y..=MAX_Y).contains(&y) && (y - GROUND_Y) % CELL == 0
}

/// A ground cell of the grid, identified by its `x` and `z` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub z: i32,
}

impl Cell {
    pub fn new(x: i32, z: i32) -> Result<Self, WorldError> {
        if on_axis(x) && on_axis(z) {
            Ok(Cell { x, z })
        } else {
            Err(WorldError::OutOfGrid { x, y: GROUND_Y, z })
        }
    }

    /// Neighbouring cell by a step of `dx`, `dz` cells, if still on the grid.
    pub fn offset(self, dx: i32, dz: i32) -> Result<Cell, WorldError> {
        Cell::new(self.x + dx * CELL, self.z + dz * CELL)
    }

    /// The position at a given level (0 = ground).
    pub fn at_level(self, level: usize) -> Result<Position, WorldError> {
        Position::new(self.x, GROUND_Y + CELL * level as i32, self.z)
    }

    /// Every cell, row-major from the back-left corner.
    pub fn all() -> impl Iterator<Item = Cell> {
        (GRID_MIN..=GRID_MAX)
            .step_by(CELL as usize)
            .flat_map(|z| {
                (GRID_MIN..=GRID_MAX)
                    .step_by(CELL as usize)
                    .map(move |x| Cell { x, z })
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    x: i32,
    y: i32,
    z: i32,
}

impl Position {
    pub fn new(x: i32, y: i32, z: i32) -> Result<Self, WorldError> {
        if on_axis(x) && on_axis(z) && on_level(y) {
            Ok(Position { x, y, z })
        } else {
            Err(WorldError::OutOfGrid { x, y, z })
        }
    }

    pub fn x(self) -> i32 {
        self.x
    }

    pub fn y(self) -> i32 {
        self.y
    }

    pub fn z(self) -> i32 {
        self.z
    }

    pub fn cell(self) -> Cell {
        Cell {
            x: self.x,
            z: self.z,
        }
    }

    /// 0 for the ground level, 4 for the top.
    pub fn level(self) -> usize {
        ((self.y - GROUND_Y) / CELL) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Block {
    pub color: Color,
    pub position: Position,
}

impl Block {
    pub fn new(color: Color, position: Position) -> Self {
        Block { color, position }
    }

    /// Convenience constructor that validates the coordinates.
    pub fn at(color: Color, x: i32, y: i32, z: i32) -> Result<Self, WorldError> {
        Ok(Block::new(color, Position::new(x, y, z)?))
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.position;
        write!(f, "{},{},{},{}", self.color, p.x, p.y, p.z)
    }
}

/// Blocks on the grid in placement order.
///
/// Derived equality compares placement order too; use [`structures_equal`]
/// for the order-insensitive comparison used when scoring builds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Structure {
    blocks: Vec<Block>,
}

impl Structure {
    pub fn empty() -> Self {
        Structure::default()
    }

    /// Builds a structure by placing every block in order.
    pub fn from_blocks<I: IntoIterator<Item = Block>>(blocks: I) -> Result<Self, WorldError> {
        blocks
            .into_iter()
            .try_fold(Structure::empty(), |s, b| s.place(b))
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_at(&self, p: Position) -> Option<&Block> {
        self.blocks.iter().find(|b| b.position == p)
    }

    /// Returns a copy of `self` with `block` added on top.
    pub fn place(&self, block: Block) -> Result<Structure, WorldError> {
        let p = block.position;
        if self.block_at(p).is_some() {
            return Err(WorldError::Occupied {
                x: p.x,
                y: p.y,
                z: p.z,
            });
        }
        if p.y > GROUND_Y {
            let below = Position {
                x: p.x,
                y: p.y - CELL,
                z: p.z,
            };
            if self.block_at(below).is_none() {
                return Err(WorldError::Unsupported {
                    x: p.x,
                    y: p.y,
                    z: p.z,
                });
            }
        }
        let mut blocks = Vec::with_capacity(self.blocks.len() + 1);
        blocks.extend_from_slice(&self.blocks);
        blocks.push(block);
        Ok(Structure { blocks })
    }

    /// Highest occupied `y` in a cell.
    pub fn top_of(&self, x: i32, z: i32) -> Result<Option<i32>, WorldError> {
        let cell = Cell::new(x, z)?;
        Ok(self.top_of_cell(cell))
    }

    pub fn top_of_cell(&self, cell: Cell) -> Option<i32> {
        self.blocks
            .iter()
            .filter(|b| b.position.cell() == cell)
            .map(|b| b.position.y)
            .max()
    }

    /// Number of blocks stacked in a cell.
    pub fn height_at(&self, cell: Cell) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.position.cell() == cell)
            .count()
    }

    /// Adds a vertical run of `count` blocks of one color on top of `cell`.
    pub fn stack(&self, cell: Cell, color: Color, count: usize) -> Result<Structure, WorldError> {
        let base = self.height_at(cell);
        (0..count).try_fold(self.clone(), |s, i| {
            s.place(Block::new(color, cell.at_level(base + i)?))
        })
    }

    /// The most recently built stack: the longest run at the end of the
    /// placement history that shares the cell and color of the last block.
    pub fn last_stack(&self) -> Option<StackSummary> {
        let last = self.blocks.last()?;
        let cell = last.position.cell();
        let height = self
            .blocks
            .iter()
            .rev()
            .take_while(|b| b.position.cell() == cell && b.color == last.color)
            .count();
        Some(StackSummary {
            cell,
            color: last.color,
            height,
        })
    }

    /// Blocks of `self` that are absent from `base`, in placement order.
    pub fn added_since<'a>(&'a self, base: &Structure) -> impl Iterator<Item = &'a Block> + 'a {
        let existing: HashSet<Block> = base.blocks.iter().copied().collect();
        self.blocks.iter().filter(move |b| !existing.contains(b))
    }

    /// Checks the occupancy and support invariants over the whole history.
    pub fn validate(&self) -> Result<(), WorldError> {
        Structure::from_blocks(self.blocks.iter().copied()).map(|_| ())
    }

    /// Blocks per cell, bottom-up.
    pub fn columns(&self) -> BTreeMap<Cell, Vec<Color>> {
        let mut cols: BTreeMap<Cell, Vec<(i32, Color)>> = BTreeMap::new();
        for b in &self.blocks {
            cols.entry(b.position.cell())
                .or_default()
                .push((b.position.y, b.color));
        }
        cols.into_iter()
            .map(|(cell, mut v)| {
                v.sort_by_key(|(y, _)| *y);
                (cell, v.into_iter().map(|(_, c)| c).collect())
            })
            .collect()
    }

    pub fn to_wire(&self) -> String {
        render_wire(self)
    }
}

/// Summary of a stack: where it is, its color and how many blocks it has.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackSummary {
    pub cell: Cell,
    pub color: Color,
    pub height: usize,
}

/// Order-insensitive structure equality.
pub fn structures_equal(a: &Structure, b: &Structure) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let left: HashSet<&Block> = a.blocks.iter().collect();
    b.blocks.iter().all(|blk| left.contains(blk))
}

/// `Color,x,y,z` per block joined by `;`, or `nan` when empty.
pub fn render_wire(s: &Structure) -> String {
    if s.is_empty() {
        return EMPTY_WIRE.to_string();
    }
    s.blocks
        .iter()
        .map(Block::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_block(index: usize, token: &str) -> Result<Block, WorldError> {
    let err = |reason: &str| WorldError::Parse {
        index,
        token: token.to_string(),
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = token.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(err("expected Color,x,y,z"));
    }
    let color: Color = fields[0].parse().map_err(|_| err("unknown color"))?;
    let mut coords = [0i32; 3];
    for (slot, raw) in coords.iter_mut().zip(&fields[1..]) {
        *slot = raw.parse().map_err(|_| err("coordinate is not an integer"))?;
    }
    let position =
        Position::new(coords[0], coords[1], coords[2]).map_err(|_| err("invalid coordinate"))?;
    Ok(Block::new(color, position))
}

/// Parses the `Color,x,y,z;...` wire format.
///
/// Whitespace around tokens, a trailing `;` and a final `.` are accepted.
/// When the listed order stacks a block before the one beneath it, each
/// cell's blocks are re-sorted bottom-up in the slots that cell occupies.
pub fn parse_wire(text: &str) -> Result<Structure, WorldError> {
    let trimmed = text.trim();
    let trimmed = trimmed.strip_suffix('.').unwrap_or(trimmed).trim_end();
    if trimmed == EMPTY_WIRE || trimmed.is_empty() {
        return Ok(Structure::empty());
    }
    let blocks = trimmed
        .split(';')
        .map(str::trim)
        .enumerate()
        .filter(|(_, tok)| !tok.is_empty())
        .map(|(i, tok)| parse_block(i, tok))
        .collect::<Result<Vec<_>, _>>()?;

    match Structure::from_blocks(blocks.iter().copied()) {
        Ok(s) => Ok(s),
        Err(WorldError::Unsupported { .. }) => Structure::from_blocks(reorder_columns(&blocks))
            .map_err(|e| WorldError::InvalidStructure(e.to_string())),
        Err(e) => Err(WorldError::InvalidStructure(e.to_string())),
    }
}

/// Keeps the interleaving of cells but sorts each cell's blocks by height.
fn reorder_columns(blocks: &[Block]) -> Vec<Block> {
    let mut per_cell: BTreeMap<Cell, Vec<Block>> = BTreeMap::new();
    for b in blocks {
        per_cell.entry(b.position.cell()).or_default().push(*b);
    }
    for col in per_cell.values_mut() {
        // reversed so that pop() yields the lowest block first
        col.sort_by_key(|b| std::cmp::Reverse(b.position.y));
    }
    blocks
        .iter()
        .map(|b| {
            per_cell
                .get_mut(&b.position.cell())
                .and_then(Vec::pop)
                .expect("one slot per listed block")
        })
        .collect()
}

impl Serialize for Structure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&render_wire(self))
    }
}

impl<'de> Deserialize<'de> for Structure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_wire(&text).map_err(serde::de::Error::custom)
    }
}
