use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::WorldError;

/// A grid cell coordinate. `x` grows east, `y` grows south.
///
/// Ordering is row-major (`y` first, then `x`), which is the canonical
/// order used for event logs and tie-breaking throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dir: Direction) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// Neighbours in the fixed order N, S, E, W.
    pub fn neighbours(self) -> [Pos; 4] {
        Direction::ALL.map(|d| self.step(d))
    }

    /// Direction of a 4-adjacent cell, if `other` is adjacent.
    pub fn direction_to(self, other: Pos) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| self.step(*d) == other)
    }
}

impl Ord for Pos {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Pos {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    S,
    E,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::S, Direction::E, Direction::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::N => (0, -1),
            Direction::S => (0, 1),
            Direction::E => (1, 0),
            Direction::W => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Empty,
    Solid,
    Box,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridMap {
    width: u32,
    height: u32,
    cells: Vec<CellKind>,
}

impl GridMap {
    /// Builds a grid with a Solid border and the given interior kind.
    pub fn filled(width: u32, height: u32, interior: CellKind) -> Self {
        let mut grid = GridMap {
            width,
            height,
            cells: vec![interior; (width * height) as usize],
        };
        for y in 0..height as i32 {
            for x in 0..width as i32 {
                if x == 0 || y == 0 || x == width as i32 - 1 || y == height as i32 - 1 {
                    grid.set(Pos::new(x, y), CellKind::Solid);
                }
            }
        }
        grid
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as u32) < self.width && (p.y as u32) < self.height
    }

    fn index(&self, p: Pos) -> usize {
        p.y as usize * self.width as usize + p.x as usize
    }

    /// Cell kind at `p`; off-grid reads as Solid.
    pub fn get(&self, p: Pos) -> CellKind {
        if self.in_bounds(p) {
            self.cells[self.index(p)]
        } else {
            CellKind::Solid
        }
    }

    /// Overwrites a cell. Only meaningful while building a map or when a
    /// Box is destroyed; callers must not touch Solid cells mid-match.
    pub fn set(&mut self, p: Pos, kind: CellKind) {
        if self.in_bounds(p) {
            let i = self.index(p);
            self.cells[i] = kind;
        }
    }

    pub fn is_solid(&self, p: Pos) -> bool {
        self.get(p) == CellKind::Solid
    }

    pub fn is_box(&self, p: Pos) -> bool {
        self.get(p) == CellKind::Box
    }

    /// Row-major iterator over every cell.
    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height as i32).flat_map(move |y| (0..self.width as i32).map(move |x| Pos::new(x, y)))
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.cells.iter().filter(|c| **c == kind).count()
    }

    /// Renders the grid with the map glyphs (no spawns).
    pub fn render(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                out.push(match self.get(Pos::new(x, y)) {
                    CellKind::Empty => '.',
                    CellKind::Solid => '#',
                    CellKind::Box => '+',
                });
            }
            out.push('\n');
        }
        out
    }
}

/// Team identifier. Maps carry spawns for teams 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TeamId(pub u8);

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "team{}", self.0)
    }
}

/// A spawn glyph found in a map: `1`-`4` for team 1, `a`-`d` for team 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Spawn {
    pub team: TeamId,
    pub glyph: char,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedMap {
    pub grid: GridMap,
    /// Sorted by (team, glyph).
    pub spawns: Vec<Spawn>,
}

impl ParsedMap {
    /// Renders the map back to text, spawns included.
    pub fn render(&self) -> String {
        let mut rows: Vec<Vec<char>> = self.grid.render().lines().map(|l| l.chars().collect()).collect();
        for s in &self.spawns {
            rows[s.pos.y as usize][s.pos.x as usize] = s.glyph;
        }
        rows.into_iter()
            .map(|r| r.into_iter().collect::<String>() + "\n")
            .collect()
    }
}

/// Parses the ASCII map format.
///
/// `#` Solid, `+` Box, `.` Empty, `1`-`4` team-1 spawn, `a`-`d` team-2
/// spawn. Rows must be of equal length and the border must be Solid.
/// Trailing blank lines are ignored.
pub fn parse_map(text: &str) -> Result<ParsedMap, WorldError> {
    let mut rows: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    while rows.last().is_some_and(|l| l.trim().is_empty()) {
        rows.pop();
    }
    if rows.is_empty() {
        return Err(WorldError::MapParse("map is empty".into()));
    }
    let width = rows[0].chars().count();
    if width == 0 {
        return Err(WorldError::MapParse("first row is empty".into()));
    }
    let height = rows.len();
    let mut grid = GridMap::filled(width as u32, height as u32, CellKind::Empty);
    let mut spawns: BTreeMap<(TeamId, char), Pos> = BTreeMap::new();

    for (y, row) in rows.iter().enumerate() {
        let len = row.chars().count();
        if len != width {
            return Err(WorldError::MapParse(format!(
                "row {y} has length {len}, expected {width}"
            )));
        }
        for (x, glyph) in row.chars().enumerate() {
            let pos = Pos::new(x as i32, y as i32);
            let kind = match glyph {
                '#' => CellKind::Solid,
                '+' => CellKind::Box,
                '.' => CellKind::Empty,
                '1'..='4' | 'a'..='d' => {
                    let team = if glyph.is_ascii_digit() { TeamId(1) } else { TeamId(2) };
                    if spawns.insert((team, glyph), pos).is_some() {
                        return Err(WorldError::MapParse(format!("duplicate spawn glyph '{glyph}'")));
                    }
                    CellKind::Empty
                }
                other => return Err(WorldError::MapParse(format!("unknown glyph '{other}' at {pos}"))),
            };
            let border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
            if border && kind != CellKind::Solid {
                return Err(WorldError::MapParse(format!("border cell {pos} is not '#'")));
            }
            grid.set(pos, kind);
        }
    }

    let spawns = spawns
        .into_iter()
        .map(|((team, glyph), pos)| Spawn { team, glyph, pos })
        .collect();
    Ok(ParsedMap { grid, spawns })
}
