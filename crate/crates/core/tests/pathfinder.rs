mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use arena_core::pathfinder::{plan_path, PathError, PunishmentMap};
use arena_core::world::gen::random_grid;
use arena_core::world::{CellKind, GridMap, Pos};
use common::{bfs, corridor, dijkstra, random_punishments};

fn open_cells(g: &GridMap) -> Vec<Pos> {
    g.positions().filter(|p| g.get(*p) != CellKind::Solid).collect()
}

fn pick(rng: &mut impl Rng, cells: &[Pos]) -> Pos {
    cells[rng.gen_range(0..cells.len())]
}

fn check_plan_shape(g: &GridMap, start: Pos, target: Pos, plan: &arena_core::pathfinder::PathPlan) {
    assert_eq!(plan.steps.first(), Some(&start));
    assert_eq!(plan.steps.last(), Some(&target));
    for w in plan.steps.windows(2) {
        assert_eq!(w[0].manhattan(w[1]), 1, "steps not adjacent: {:?}", plan.steps);
    }
    assert!(plan.steps.iter().all(|p| !g.is_solid(*p)));
    let first_box = plan.steps.iter().position(|p| g.is_box(*p) && *p != start);
    match (plan.intermediate, first_box) {
        (None, None) => {}
        (Some(i), Some(at)) => {
            assert_eq!(i.box_cell, plan.steps[at]);
            assert_eq!(i.bomb_cell, plan.steps[at - 1]);
        }
        other => panic!("intermediate and boxes disagree: {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn augmented_cost_matches_dijkstra(seed in any::<u64>(), w in 3u32..=9, h in 3u32..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_grid(&mut rng, w, h, 200, 250);
        let cells = open_cells(&g);
        prop_assume!(!cells.is_empty());
        let pun = random_punishments(&g, &mut rng, 12);
        let (a, b) = (pick(&mut rng, &cells), pick(&mut rng, &cells));
        match (plan_path(&g, a, b, &pun), dijkstra(&g, a, b, &pun)) {
            (Ok(plan), Some(cost)) => {
                prop_assert_eq!(plan.augmented_cost, cost);
                let walked: u64 = plan.steps.iter().skip(1).map(|p| 1 + pun.get(*p) as u64).sum();
                prop_assert_eq!(walked, cost);
                check_plan_shape(&g, a, b, &plan);
            }
            (Err(PathError::NoPath), None) => {}
            other => prop_assert!(false, "mismatch {:?}", other),
        }
    }

    #[test]
    fn zero_punishment_gives_shortest_path(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_grid(&mut rng, 9, 9, 250, 0);
        let cells = open_cells(&g);
        prop_assume!(!cells.is_empty());
        let (a, b) = (pick(&mut rng, &cells), pick(&mut rng, &cells));
        let dist = bfs(&g, a, |p| !g.is_solid(p));
        match plan_path(&g, a, b, &PunishmentMap::zeros(&g)) {
            Ok(plan) => prop_assert_eq!(plan.moves() as u32, dist[&b]),
            Err(_) => prop_assert!(!dist.contains_key(&b)),
        }
    }

    #[test]
    fn detour_bound(seed in any::<u64>(), k in 0u32..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_grid(&mut rng, 9, 9, 150, 250);
        let cells = open_cells(&g);
        prop_assume!(!cells.is_empty());
        let (a, b) = (pick(&mut rng, &cells), pick(&mut rng, &cells));
        prop_assume!(!g.is_box(a) && !g.is_box(b));
        let plain = bfs(&g, a, |p| !g.is_solid(p));
        let free = bfs(&g, a, |p| g.get(p) == CellKind::Empty);
        let (Some(&any), Some(&clear)) = (plain.get(&b), free.get(&b)) else {
            return Ok(());
        };
        let plan = plan_path(&g, a, b, &PunishmentMap::for_boxes(&g, k)).unwrap();
        if clear <= any + k {
            prop_assert!(plan.intermediate.is_none(), "box route chosen: free {} shortest {} k {}", clear, any, k);
        }
    }
}

#[test]
fn corridor_detours_around_the_box_punishment() {
    for depth in 1..=5 {
        let (g, a, b, bx) = corridor(11, depth);
        let pun = PunishmentMap::for_boxes(&g, 5);
        let plan = plan_path(&g, a, b, &pun).unwrap();
        assert_eq!(Some(plan.augmented_cost), dijkstra(&g, a, b, &pun));
        let extra = 2 * depth as u32;
        if extra <= 5 {
            assert!(plan.intermediate.is_none(), "depth {depth}");
            assert_eq!(plan.moves() as u32, 10 + extra);
        } else {
            let i = plan.intermediate.expect("through the box");
            assert_eq!(i.box_cell, bx);
            assert_eq!(i.bomb_cell, Pos::new(bx.x - 1, 1));
            assert_eq!(plan.augmented_cost, 10 + 5);
        }
    }
}

#[test]
fn equal_cost_prefers_fewer_boxes() {
    for k in [2, 4, 6] {
        let (g, a, b, _) = corridor(11, k / 2);
        let plan = plan_path(&g, a, b, &PunishmentMap::for_boxes(&g, k as u32)).unwrap();
        assert!(plan.intermediate.is_none());
        assert_eq!(plan.augmented_cost, 10 + k as u64);
    }
}
