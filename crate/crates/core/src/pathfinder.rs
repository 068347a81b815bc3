//! A* path planning over per-cell punishment costs.
//!
//! Entering a cell costs `1 + punishment(cell)`. Boxes are passable during
//! search but normally carry a punishment, so a route through a box is only
//! chosen when every box-free detour is costlier. When the winning route
//! does cross a box the plan names an intermediate target: the cell where a
//! bomb must be dropped to clear that box.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{blast_footprint, ActionIntent, BombState, CellKind, GridMap, Pos, WorldState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("no path")]
    NoPath,
    #[error("endpoint {0} is solid or off-grid")]
    BadCell(Pos),
    #[error("{0} is not on the plan")]
    OffPlan(Pos),
}

/// Extra cost for entering each cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PunishmentMap {
    width: u32,
    height: u32,
    values: Vec<u32>,
}

impl PunishmentMap {
    pub fn zeros(grid: &GridMap) -> Self {
        PunishmentMap {
            width: grid.width(),
            height: grid.height(),
            values: vec![0; (grid.width() * grid.height()) as usize],
        }
    }

    /// Zero everywhere except `box_cost` on every Box cell.
    pub fn for_boxes(grid: &GridMap, box_cost: u32) -> Self {
        let mut map = Self::zeros(grid);
        for p in grid.positions() {
            if grid.is_box(p) {
                map.set(p, box_cost);
            }
        }
        map
    }

    fn index(&self, p: Pos) -> Option<usize> {
        (p.x >= 0 && p.y >= 0 && (p.x as u32) < self.width && (p.y as u32) < self.height)
            .then(|| p.y as usize * self.width as usize + p.x as usize)
    }

    pub fn get(&self, p: Pos) -> u32 {
        self.index(p).map(|i| self.values[i]).unwrap_or(0)
    }

    pub fn set(&mut self, p: Pos, value: u32) {
        if let Some(i) = self.index(p) {
            self.values[i] = value;
        }
    }

    pub fn add(&mut self, p: Pos, value: u32) {
        if let Some(i) = self.index(p) {
            self.values[i] = self.values[i].saturating_add(value);
        }
    }
}

/// Weights for [`danger_punishments`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DangerWeights {
    /// Cost per unit of fuse urgency for a cell a bomb will hit.
    pub threat: u32,
    /// Floor cost of a cell inside a live explosion.
    pub explosion: u32,
    /// Longest fuse considered; a bomb this far from detonating has urgency 1.
    pub fuse_horizon: u32,
}

impl Default for DangerWeights {
    fn default() -> Self {
        DangerWeights {
            threat: 10,
            explosion: 50,
            fuse_horizon: 8,
        }
    }
}

impl DangerWeights {
    fn horizon(&self) -> u32 {
        self.fuse_horizon.max(1)
    }

    /// Urgency in `1..=horizon`; fuse 1 (or less) is the most urgent.
    pub fn urgency(&self, fuse: u32) -> u32 {
        self.horizon() + 1 - fuse.clamp(1, self.horizon())
    }

    pub fn threat_cost(&self, fuse: u32) -> u32 {
        self.threat.saturating_mul(self.urgency(fuse))
    }

    /// Never below the costliest threat, so a burning cell is always at
    /// least as punished as any merely threatened one.
    pub fn explosion_cost(&self) -> u32 {
        self.explosion.max(self.threat.saturating_mul(self.horizon()))
    }
}

/// Effective fuse of every live bomb, accounting for chain detonation.
pub fn effective_fuses(state: &WorldState) -> BTreeMap<Pos, u32> {
    let mut fuse: BTreeMap<Pos, u32> = state.bombs.iter().map(|b| (b.position, b.fuse_remaining)).collect();
    let prints: Vec<(Pos, BTreeSet<Pos>)> = state.bombs.iter().map(|b| (b.position, state.footprint(b))).collect();
    loop {
        let mut changed = false;
        for (src, cells) in &prints {
            let f = fuse[src];
            for (dst, _) in &prints {
                if dst != src && cells.contains(dst) && fuse[dst] > f {
                    fuse.insert(*dst, f);
                    changed = true;
                }
            }
        }
        if !changed {
            return fuse;
        }
    }
}

/// Base punishments plus danger: cells a live bomb will hit get
/// `threat * urgency`, burning cells get the explosion cost. Overlapping
/// dangers take the maximum rather than summing.
pub fn danger_punishments(state: &WorldState, base: &PunishmentMap, weights: &DangerWeights) -> PunishmentMap {
    let mut danger: BTreeMap<Pos, u32> = BTreeMap::new();
    let fuses = effective_fuses(state);
    for b in &state.bombs {
        let cost = weights.threat_cost(fuses[&b.position]);
        for c in state.footprint(b) {
            let slot = danger.entry(c).or_default();
            *slot = (*slot).max(cost);
        }
    }
    for e in &state.explosions {
        for c in &e.cells {
            let slot = danger.entry(*c).or_default();
            *slot = (*slot).max(weights.explosion_cost());
        }
    }
    let mut out = base.clone();
    for (c, d) in danger {
        out.add(c, d);
    }
    out
}

/// Cells that are in some live bomb's footprint or a live explosion.
pub fn danger_zone(state: &WorldState) -> BTreeSet<Pos> {
    let mut cells: BTreeSet<Pos> = state.bombs.iter().flat_map(|b| state.footprint(b)).collect();
    cells.extend(state.explosions.iter().flat_map(|e| e.cells.iter().copied()));
    cells
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intermediate {
    /// Where the bomb goes; the step right before `box_cell`.
    pub bomb_cell: Pos,
    /// First Box on the path.
    pub box_cell: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathPlan {
    /// Cells from the start (inclusive) to the destination (inclusive).
    pub steps: Vec<Pos>,
    pub intermediate: Option<Intermediate>,
    pub augmented_cost: u64,
}

impl PathPlan {
    /// Number of moves, i.e. `steps.len() - 1`.
    pub fn moves(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn boxes(&self, grid: &GridMap) -> usize {
        self.steps.iter().skip(1).filter(|p| grid.is_box(**p)).count()
    }
}

/// Lexicographic search cost: augmented cost first, then boxes crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cost {
    augmented: u64,
    boxes: u32,
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, o: Cost) -> Cost {
        Cost {
            augmented: self.augmented + o.augmented,
            boxes: self.boxes + o.boxes,
        }
    }
}

/// Minimum augmented-cost path from `start` to `target`.
///
/// Ties are broken by fewer boxes crossed, then by the lexicographically
/// smallest step sequence (row-major cell order). The search runs A*
/// backwards from the target with a Manhattan heuristic toward the start,
/// settling every cell that can lie on an optimal path, then walks forward
/// from the start greedily picking the smallest optimal successor.
pub fn plan_path(grid: &GridMap, start: Pos, target: Pos, punishment: &PunishmentMap) -> Result<PathPlan, PathError> {
    for p in [start, target] {
        if !grid.in_bounds(p) || grid.is_solid(p) {
            return Err(PathError::BadCell(p));
        }
    }
    let width = grid.width() as usize;
    let idx = |p: Pos| p.y as usize * width + p.x as usize;
    let enter = |p: Pos| Cost {
        augmented: 1 + punishment.get(p) as u64,
        boxes: grid.is_box(p) as u32,
    };
    let heuristic = |p: Pos| Cost {
        augmented: p.manhattan(start) as u64,
        boxes: 0,
    };

    let n = width * grid.height() as usize;
    let mut to_go: Vec<Option<Cost>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut open = BinaryHeap::new();
    to_go[idx(target)] = Some(Cost { augmented: 0, boxes: 0 });
    open.push(Reverse((heuristic(target), target)));
    let mut best: Option<Cost> = None;

    while let Some(Reverse((f, v))) = open.pop() {
        if settled[idx(v)] {
            continue;
        }
        if best.is_some_and(|b| f > b) {
            break;
        }
        settled[idx(v)] = true;
        let g = to_go[idx(v)].expect("queued cells have a cost");
        if v == start {
            best = Some(g);
        }
        let step_in = enter(v);
        for u in v.neighbours() {
            if !grid.in_bounds(u) || grid.is_solid(u) || settled[idx(u)] {
                continue;
            }
            let cand = g + step_in;
            if to_go[idx(u)].is_none_or(|old| cand < old) {
                to_go[idx(u)] = Some(cand);
                open.push(Reverse((cand + heuristic(u), u)));
            }
        }
    }
    let Some(total) = best else {
        return Err(PathError::NoPath);
    };

    let mut steps = vec![start];
    let mut cur = start;
    while cur != target {
        let here = to_go[idx(cur)].expect("optimal cells are settled");
        let mut succ: Vec<Pos> = cur
            .neighbours()
            .into_iter()
            .filter(|w| grid.in_bounds(*w) && settled[idx(*w)])
            .filter(|w| to_go[idx(*w)].is_some_and(|c| enter(*w) + c == here))
            .collect();
        succ.sort();
        cur = succ[0];
        steps.push(cur);
    }

    let intermediate = steps
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, p)| grid.is_box(**p))
        .map(|(i, p)| Intermediate {
            bomb_cell: steps[i - 1],
            box_cell: *p,
        });
    Ok(PathPlan {
        steps,
        intermediate,
        augmented_cost: total.augmented,
    })
}

/// The intent that advances `current` along `plan`.
///
/// At the bomb cell with the box still standing this is `PlaceBomb`; at the
/// end of the plan it is `Wait`.
pub fn next_step(plan: &PathPlan, current: Pos, grid: &GridMap) -> Result<ActionIntent, PathError> {
    if let Some(i) = plan.intermediate {
        if current == i.bomb_cell && grid.is_box(i.box_cell) {
            return Ok(ActionIntent::PlaceBomb);
        }
    }
    let at = plan
        .steps
        .iter()
        .position(|p| *p == current)
        .ok_or(PathError::OffPlan(current))?;
    match plan.steps.get(at + 1) {
        None => Ok(ActionIntent::Wait),
        Some(next) => current
            .direction_to(*next)
            .map(ActionIntent::Move)
            .ok_or(PathError::OffPlan(current)),
    }
}

/// Shortest escape from a hypothetical bomb at `bomb.position`.
///
/// The bomb's owner spends the placement tick dropping it and the fuse then
/// runs out at the start of tick `fuse_remaining`, so there are
/// `fuse_remaining - 1` moves to get outside the footprint. Walkable cells
/// are Empty, bomb-free (other than the origin) and not burning. Returns the
/// path from `from` (inclusive) or `None` when the owner would be trapped.
pub fn is_safe_retreat(state: &WorldState, from: Pos, bomb: &BombState) -> Option<Vec<Pos>> {
    let footprint = blast_footprint(&state.grid, bomb.position, bomb.blast_range);
    let budget = bomb.fuse_remaining.saturating_sub(1) as usize;
    let walkable =
        |p: Pos| state.grid.get(p) == CellKind::Empty && state.bomb_at(p).is_none() && !state.in_explosion(p);
    let mut parent: BTreeMap<Pos, Pos> = BTreeMap::new();
    let mut queue = VecDeque::from([(from, 0usize)]);
    parent.insert(from, from);
    while let Some((p, d)) = queue.pop_front() {
        if !footprint.contains(&p) {
            let mut path = vec![p];
            let mut cur = p;
            while cur != from {
                cur = parent[&cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        if d == budget {
            continue;
        }
        for q in p.neighbours() {
            if walkable(q) && !parent.contains_key(&q) {
                parent.insert(q, p);
                queue.push_back((q, d + 1));
            }
        }
    }
    None
}
