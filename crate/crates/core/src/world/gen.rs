//! Seeded random maps for property tests and soak runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CellKind, GridMap, ParsedMap, Pos, Spawn, TeamId};

/// Random grid with a Solid border; interior cells are Solid/Box/Empty with
/// the given per-mille weights for Solid and Box.
pub fn random_grid(rng: &mut impl Rng, width: u32, height: u32, solid_pm: u32, box_pm: u32) -> GridMap {
    let mut grid = GridMap::filled(width, height, CellKind::Empty);
    for y in 1..height as i32 - 1 {
        for x in 1..width as i32 - 1 {
            let roll = rng.gen_range(0..1000);
            let kind = if roll < solid_pm {
                CellKind::Solid
            } else if roll < solid_pm + box_pm {
                CellKind::Box
            } else {
                CellKind::Empty
            };
            grid.set(Pos::new(x, y), kind);
        }
    }
    grid
}

/// Random arena with two spawns per team on distinct Empty cells.
pub fn random_arena(seed: u64, width: u32, height: u32) -> ParsedMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let grid = random_grid(&mut rng, width, height, 120, 250);
        let mut empties: Vec<Pos> = grid.positions().filter(|p| grid.get(*p) == CellKind::Empty).collect();
        if empties.len() < 4 {
            continue;
        }
        empties.shuffle(&mut rng);
        let spawns = vec![
            Spawn {
                team: TeamId(1),
                glyph: '1',
                pos: empties[0],
            },
            Spawn {
                team: TeamId(1),
                glyph: '2',
                pos: empties[1],
            },
            Spawn {
                team: TeamId(2),
                glyph: 'a',
                pos: empties[2],
            },
            Spawn {
                team: TeamId(2),
                glyph: 'b',
                pos: empties[3],
            },
        ];
        return ParsedMap { grid, spawns };
    }
}
