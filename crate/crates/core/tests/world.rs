mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use arena_core::world::gen::{random_arena, random_grid};
use arena_core::world::{
    apply_actions, audit, blast_footprint, is_terminal, ActionIntent, CellKind, Direction, Rules, WorldEvent,
    WorldState,
};
use common::ray_walk;

fn random_intent(rng: &mut impl Rng) -> ActionIntent {
    match rng.gen_range(0..10) {
        0 => ActionIntent::PlaceBomb,
        1 => ActionIntent::Wait,
        n => ActionIntent::Move(Direction::ALL[n % 4]),
    }
}

/// Plays random intents and checks the cross-tick invariants. Returns the
/// event stream so callers can compare runs.
fn random_play(seed: u64, ticks: u64) -> Result<Vec<WorldEvent>, String> {
    let map = random_arena(seed, 11, 11);
    let rules = Rules {
        fuse_ticks: 4,
        ..Rules::default()
    };
    let mut state = WorldState::from_map(&map, rules, seed).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let solids = state.grid.count(CellKind::Solid);
    let mut stream = Vec::new();
    let mut won = 0;
    for _ in 0..ticks {
        let intents: BTreeMap<_, _> = state.alive_agents().map(|a| (a.id, random_intent(&mut rng))).collect();
        let (next, events) = apply_actions(&state, &intents).map_err(|e| e.to_string())?;
        audit(&next)?;
        let destroyed = events
            .iter()
            .filter(|e| matches!(e, WorldEvent::BoxDestroyed { .. }))
            .count();
        if next.grid.count(CellKind::Box) + destroyed != state.grid.count(CellKind::Box) {
            return Err(format!("tick {}: box count moved without BoxDestroyed", state.tick));
        }
        if next.grid.count(CellKind::Solid) != solids {
            return Err("solid count changed".into());
        }
        for (a, b) in state.agents.iter().zip(&next.agents) {
            if !a.alive && (b.alive || b.position != a.position) {
                return Err(format!("agent {} moved or came back after dying", a.id));
            }
        }
        let wins = events
            .iter()
            .filter(|e| matches!(e, WorldEvent::MatchWon { .. }))
            .count();
        won += wins;
        if wins == 1 && (state.outcome.is_some() || is_terminal(&next).is_none()) {
            return Err("MatchWon without a fresh terminal state".into());
        }
        if won > 1 {
            return Err("MatchWon emitted twice".into());
        }
        stream.extend(events);
        state = next;
    }
    Ok(stream)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn footprint_matches_ray_walk(seed in any::<u64>(), range in 1u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_grid(&mut rng, 9, 9, 200, 250);
        for origin in g.positions().filter(|p| !g.is_solid(*p)) {
            prop_assert_eq!(blast_footprint(&g, origin, range), ray_walk(&g, origin, range));
        }
    }

    #[test]
    fn random_play_keeps_invariants(seed in any::<u64>()) {
        random_play(seed, 120).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn same_intents_same_events() {
    for seed in 0..10 {
        assert_eq!(random_play(seed, 80), random_play(seed, 80));
    }
}

#[test]
fn percept_shares_the_snapshot() {
    let map = random_arena(3, 11, 11);
    let state = Arc::new(WorldState::from_map(&map, Rules::default(), 3).unwrap());
    let id = state.agents[0].id;
    let p = arena_core::world::percept_for(&state, id).unwrap();
    assert!(Arc::ptr_eq(&p.world, &state));
    assert_eq!(p.tick, 0);
}
