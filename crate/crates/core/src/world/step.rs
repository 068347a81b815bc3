use std::collections::{BTreeMap, BTreeSet};

use super::{
    blast_footprint, is_terminal, ActionIntent, AgentId, BombState, CellKind, ExplosionState, Pos, WorldError,
    WorldEvent, WorldState,
};

/// Resolves one tick.
///
/// Phases, in order:
/// 1. fuses tick down; bombs at zero detonate together, chaining to a
///    fixpoint, destroying boxes and killing agents in the union footprint;
/// 2. older explosions age and retire;
/// 3. `PlaceBomb` intents;
/// 4. `Move` intents, then anyone standing in a live explosion dies;
/// 5. the tick counter advances and the terminal check runs.
///
/// Events come out in phase order, then row-major cell, then agent id.
pub fn apply_actions(
    state: &WorldState,
    intents: &BTreeMap<AgentId, ActionIntent>,
) -> Result<(WorldState, Vec<WorldEvent>), WorldError> {
    if let Some(a) = state.alive_agents().find(|a| !intents.contains_key(&a.id)) {
        return Err(WorldError::MissingIntent(a.id));
    }
    let mut next = state.clone();
    let mut events = Vec::new();

    detonate(&mut next, &mut events);
    place_bombs(&mut next, intents, &mut events);
    move_agents(&mut next, intents, &mut events);

    next.tick += 1;
    if next.outcome.is_none() {
        if let Some(outcome) = is_terminal(&next) {
            next.outcome = Some(outcome);
            events.push(WorldEvent::MatchWon { outcome });
        }
    }
    Ok((next, events))
}

fn detonate(next: &mut WorldState, events: &mut Vec<WorldEvent>) {
    for b in &mut next.bombs {
        b.fuse_remaining = b.fuse_remaining.saturating_sub(1);
    }
    let mut firing: BTreeSet<Pos> = next
        .bombs
        .iter()
        .filter(|b| b.fuse_remaining == 0)
        .map(|b| b.position)
        .collect();

    let mut footprints: BTreeMap<Pos, BTreeSet<Pos>> = BTreeMap::new();
    loop {
        for b in next.bombs.iter().filter(|b| firing.contains(&b.position)) {
            footprints
                .entry(b.position)
                .or_insert_with(|| blast_footprint(&next.grid, b.position, b.blast_range));
        }
        let hit: BTreeSet<Pos> = footprints.values().flatten().copied().collect();
        let chained: Vec<Pos> = next
            .bombs
            .iter()
            .map(|b| b.position)
            .filter(|p| hit.contains(p) && !firing.contains(p))
            .collect();
        if chained.is_empty() {
            break;
        }
        firing.extend(chained);
    }

    let hit: BTreeSet<Pos> = footprints.values().flatten().copied().collect();
    let (fired, kept): (Vec<BombState>, Vec<BombState>) =
        next.bombs.drain(..).partition(|b| firing.contains(&b.position));
    next.bombs = kept;

    for b in &fired {
        events.push(WorldEvent::BombExploded {
            owner: b.owner,
            cell: b.position,
        });
        if let Some(owner) = next.agents.iter_mut().find(|a| a.id == b.owner) {
            owner.bombs_available = (owner.bombs_available + 1).min(owner.bombs_capacity);
        }
    }
    for cell in &hit {
        if next.grid.get(*cell) == CellKind::Box {
            next.grid.set(*cell, CellKind::Empty);
            events.push(WorldEvent::BoxDestroyed { cell: *cell });
        }
    }
    kill_in(next, &hit, events);

    // Explosions spawned this tick do not age until the next one.
    for e in &mut next.explosions {
        e.ticks_remaining = e.ticks_remaining.saturating_sub(1);
    }
    next.explosions.retain(|e| e.ticks_remaining > 0);
    if next.rules.explosion_linger > 0 {
        for b in &fired {
            next.explosions.push(ExplosionState {
                cells: footprints[&b.position].clone(),
                ticks_remaining: next.rules.explosion_linger,
            });
        }
    }
}

fn kill_in(next: &mut WorldState, cells: &BTreeSet<Pos>, events: &mut Vec<WorldEvent>) {
    let mut dead: Vec<(Pos, AgentId)> = Vec::new();
    for a in next.agents.iter_mut().filter(|a| a.alive) {
        if cells.contains(&a.position) {
            a.alive = false;
            dead.push((a.position, a.id));
        }
    }
    dead.sort();
    events.extend(
        dead.into_iter()
            .map(|(cell, agent)| WorldEvent::AgentDied { agent, cell }),
    );
}

fn place_bombs(next: &mut WorldState, intents: &BTreeMap<AgentId, ActionIntent>, events: &mut Vec<WorldEvent>) {
    let rules = next.rules;
    let mut placed = Vec::new();
    for a in next.agents.iter_mut().filter(|a| a.alive) {
        if intents.get(&a.id) != Some(&ActionIntent::PlaceBomb) || a.bombs_available == 0 {
            continue;
        }
        let occupied = next.bombs.iter().any(|b| b.position == a.position)
            || placed.iter().any(|b: &BombState| b.position == a.position);
        if occupied {
            continue;
        }
        a.bombs_available -= 1;
        placed.push(BombState {
            owner: a.id,
            position: a.position,
            fuse_remaining: rules.fuse_ticks,
            blast_range: rules.blast_range,
        });
    }
    placed.sort_by_key(|b| b.position);
    for b in &placed {
        events.push(WorldEvent::BombPlaced {
            agent: b.owner,
            cell: b.position,
        });
    }
    next.bombs.extend(placed);
    next.bombs.sort_by_key(|b| b.position);
}

fn move_agents(next: &mut WorldState, intents: &BTreeMap<AgentId, ActionIntent>, events: &mut Vec<WorldEvent>) {
    let occupied: BTreeSet<Pos> = next.alive_agents().map(|a| a.position).collect();
    // Lowest id claims a contested cell; agents iterate in id order.
    let mut claims: BTreeMap<Pos, AgentId> = BTreeMap::new();
    for a in next.alive_agents() {
        let Some(ActionIntent::Move(dir)) = intents.get(&a.id) else {
            continue;
        };
        let target = a.position.step(*dir);
        let open = next.grid.in_bounds(target)
            && next.grid.get(target) == CellKind::Empty
            && next.bomb_at(target).is_none()
            && !occupied.contains(&target);
        if open {
            claims.entry(target).or_insert(a.id);
        }
    }
    for (target, id) in claims {
        if let Some(a) = next.agents.iter_mut().find(|a| a.id == id) {
            a.position = target;
        }
    }
    let burning: BTreeSet<Pos> = next.explosions.iter().flat_map(|e| e.cells.iter().copied()).collect();
    kill_in(next, &burning, events);
}
