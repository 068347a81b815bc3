//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Limits are pinned below.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use arena_core::harness::{
    compare_lines, load_config, replay, run_batch, run_match, HarnessError, Match, ScenarioConfig, Strategy,
    TeamBinding, Verdict,
};
use arena_core::orgmodel::{load_org_spec, OrgEvent, OrgKernel, OrgOp};
use arena_core::pathfinder::{plan_path, PathError, PunishmentMap};
use arena_core::world::gen::{random_arena, random_grid};
use arena_core::world::{audit, AgentId, CellKind, Pos, WorldEvent};
use common::{
    corridor, data, dijkstra, explorer_timeline, frontier_case, random_punishments, read_data, POCKET_TRANSCRIPT,
};

const BOX_PUNISHMENT: u32 = 5;
const CORRIDOR_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_GRIDS: u64 = 1000;
const ORACLE_BUDGET: Duration = Duration::from_secs(10);
const FRONTIER_TREES: u64 = 1000;
const FRONTIER_ATTEMPTS: usize = 40;
const FRONTIER_BUDGET: Duration = Duration::from_secs(10);
const LATENCY_SEEDS: u64 = 20;
const LATENCY_BUDGET: Duration = Duration::from_secs(30);
const RESCUE_SEEDS: u64 = 20;
const GATE_CASES: u64 = 100;
const WORLD_MATCHES: u64 = 100;
const WORLD_TICKS: u64 = 200;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(start: Instant, budget: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    if took < budget {
        Ok(took)
    } else {
        Err(format!("took {took:?}, budget {budget:?}"))
    }
}

fn punishment_rule() -> Outcome {
    let start = Instant::now();
    let mut checked = Vec::new();
    for depth in 1..=5 {
        let (g, a, b, bx) = corridor(11, depth);
        let pun = PunishmentMap::for_boxes(&g, BOX_PUNISHMENT);
        let plan = plan_path(&g, a, b, &pun).map_err(|e| e.to_string())?;
        if Some(plan.augmented_cost) != dijkstra(&g, a, b, &pun) {
            return Err(format!(
                "depth {depth}: cost {} disagrees with Dijkstra",
                plan.augmented_cost
            ));
        }
        let extra = 2 * depth as u32;
        match plan.intermediate {
            None if extra <= BOX_PUNISHMENT => {}
            Some(i) if extra > BOX_PUNISHMENT && i.box_cell == bx && i.bomb_cell == Pos::new(bx.x - 1, 1) => {}
            other => return Err(format!("detour +{extra}: intermediate {other:?}")),
        }
        checked.push(extra);
    }
    let took = within(start, CORRIDOR_BUDGET)?;
    Ok(format!(
        "detours {checked:?} with punishment {BOX_PUNISHMENT}, {took:?}"
    ))
}

fn pathfinder_oracle() -> Outcome {
    let start = Instant::now();
    let mut reachable = 0;
    for seed in 0..ORACLE_GRIDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_grid(&mut rng, 9, 9, 200, 250);
        let cells: Vec<Pos> = g.positions().filter(|p| g.get(*p) != CellKind::Solid).collect();
        if cells.is_empty() {
            return Err(format!("seed {seed}: no open cell"));
        }
        let pun = random_punishments(&g, &mut rng, 12);
        let a = cells[rng.gen_range(0..cells.len())];
        let b = cells[rng.gen_range(0..cells.len())];
        match (plan_path(&g, a, b, &pun), dijkstra(&g, a, b, &pun)) {
            (Ok(plan), Some(cost)) if plan.augmented_cost == cost => reachable += 1,
            (Err(PathError::NoPath), None) => {}
            (got, want) => return Err(format!("seed {seed}: {:?} vs {want:?}", got.map(|p| p.augmented_cost))),
        }
    }
    let took = within(start, ORACLE_BUDGET)?;
    Ok(format!(
        "{ORACLE_GRIDS}/{ORACLE_GRIDS} agree ({reachable} reachable), {took:?}"
    ))
}

fn scheme_frontier() -> Outcome {
    let start = Instant::now();
    for seed in 0..FRONTIER_TREES {
        frontier_case(seed, FRONTIER_ATTEMPTS).map_err(|e| format!("tree {seed}: {e}"))?;
    }
    let took = within(start, FRONTIER_BUDGET)?;
    Ok(format!(
        "{FRONTIER_TREES} trees x {FRONTIER_ATTEMPTS} attempts, {took:?}"
    ))
}

fn explorer_pipeline() -> Outcome {
    const SEQUENCE: [&str; 7] = [
        "goal findUnexploredArea",
        "done findUnexploredArea",
        "goal moveToUnexploredArea",
        "done moveToUnexploredArea",
        "goal exploreMap",
        "done exploreMap",
        "finished",
    ];
    for delay in [1, 0] {
        let t = explorer_timeline(delay, 0);
        let names: Vec<&str> = t.iter().map(|(_, n)| n.as_str()).collect();
        if names != SEQUENCE {
            return Err(format!("delay {delay}: {names:?}"));
        }
        for w in t.windows(2).filter(|w| w[0].1.starts_with("done")) {
            if w[1].0 - w[0].0 != delay {
                return Err(format!("delay {delay}: {:?} -> {:?}", w[0], w[1]));
            }
        }
    }
    Ok("three goals then SchemeFinished, gaps equal the delay for 1 and 0".into())
}

fn latency_differential() -> Outcome {
    let start = Instant::now();
    let cfg = load_config(&data("configs/solo_latency.json")).map_err(|e| e.to_string())?;
    let seeds: Vec<u64> = (1..=LATENCY_SEEDS).collect();
    let b = run_batch(&cfg, &seeds).map_err(|e| e.to_string())?;
    let mean = |s: Strategy| {
        b.teams
            .iter()
            .find(|t| t.strategy == s)
            .and_then(|t| (t.latency_samples > 0).then_some(t.mean_latency).flatten())
            .ok_or(format!("no {s:?} samples"))
    };
    let (o, a) = (mean(Strategy::Ocmas)?, mean(Strategy::Acmas)?);
    if o - a != cfg.mediation_delay as f64 {
        return Err(format!("OCMAS {o} - ACMAS {a} != {}", cfg.mediation_delay));
    }
    let took = within(start, LATENCY_BUDGET)?;
    Ok(format!(
        "OCMAS {o} - ACMAS {a} = {} over {LATENCY_SEEDS} seeds, {took:?}",
        cfg.mediation_delay
    ))
}

fn stuck_rescue() -> Outcome {
    let mut cfg = load_config(&data("configs/pocket_rescue.json")).map_err(|e| e.to_string())?;
    let bound = cfg.bid_window + 1 + 6 + 1 + cfg.fuse_ticks as u64 + cfg.explosion_linger as u64 + 2;
    let mut latest = 0;
    for seed in 1..=RESCUE_SEEDS {
        cfg.seed = seed;
        let (_, log) = run_match(&cfg).map_err(|e| e.to_string())?;
        let cnp: Vec<&str> = log
            .lines()
            .iter()
            .map(String::as_str)
            .filter(|l| l.contains(r#""source":"cnp""#))
            .collect();
        if cnp != POCKET_TRANSCRIPT {
            return Err(format!("seed {seed}: transcript {cnp:#?}"));
        }
        let opened = log
            .records()
            .find(|r| r.kind == "BoxDestroyed")
            .map(|r| r.tick)
            .ok_or(format!("seed {seed}: pocket never opened"))?;
        if opened > bound {
            return Err(format!("seed {seed}: opened at {opened}, bound {bound}"));
        }
        latest = latest.max(opened);
    }
    Ok(format!(
        "{RESCUE_SEEDS}/{RESCUE_SEEDS} transcripts exact, opened by tick {latest} (bound {bound})"
    ))
}

fn deontic_gate() -> Outcome {
    let spec = Arc::new(load_org_spec(&read_data("org/ocmas_team.json")).map_err(|e| e.to_string())?);
    let agents: Vec<AgentId> = (1..=6).map(AgentId).collect();
    let caps = [("explorer", 1), ("attacker", 2), ("defender", 2)];
    let (mut commits, mut adopts) = (0, 0);
    for case in 0..GATE_CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let delay = rng.gen_range(0..3u64);
        let mut k = OrgKernel::new(Arc::clone(&spec), agents.clone(), delay);
        let g = k.create_group(agents[0], "team", 0).map_err(|e| e.to_string())?;
        let mut held: BTreeMap<AgentId, &str> = BTreeMap::new();
        for &(role, cap) in &caps {
            for _ in 0..rng.gen_range(0..=cap) {
                let free: Vec<AgentId> = agents.iter().copied().filter(|a| !held.contains_key(a)).collect();
                let a = free[rng.gen_range(0..free.len())];
                k.adopt_role(a, role, g, 0).map_err(|e| format!("case {case}: {e}"))?;
                held.insert(a, role);
            }
        }
        let which = rng.gen_range(0..2);
        let s = k
            .create_scheme(agents[0], ["exploration", "attack"][which], g, 0)
            .map_err(|e| e.to_string())?;
        k.deliver(u64::MAX);
        let (groups, schemes) = (k.groups().clone(), k.schemes().clone());
        let now = rng.gen_range(1..20u64);

        let full: Vec<&str> = caps
            .iter()
            .filter(|(r, cap)| k.group(g).is_some_and(|gi| gi.players(r) >= *cap))
            .map(|(r, _)| *r)
            .collect();
        let mission = ["m_explore", "m_attack"][which];
        let barred: Vec<AgentId> = agents
            .iter()
            .copied()
            .filter(|a| !k.is_permitted(*a, mission, g).unwrap_or(false))
            .collect();
        let (who, result, op) = if !full.is_empty() && (barred.is_empty() || rng.gen_bool(0.5)) {
            adopts += 1;
            let role = full[rng.gen_range(0..full.len())];
            // holders may re-adopt their own role
            let others: Vec<AgentId> = agents.iter().copied().filter(|a| held.get(a) != Some(&role)).collect();
            let who = others[rng.gen_range(0..others.len())];
            (who, k.adopt_role(who, role, g, now), OrgOp::AdoptRole)
        } else if !barred.is_empty() {
            let who = barred[rng.gen_range(0..barred.len())];
            commits += 1;
            (who, k.commit_mission(who, mission, s, now), OrgOp::CommitMission)
        } else {
            return Err(format!("case {case}: no faulting request available"));
        };
        if result.is_ok() {
            return Err(format!("case {case}: {op:?} by {who} accepted"));
        }
        if k.groups() != &groups || k.schemes() != &schemes {
            return Err(format!("case {case}: {op:?} by {who} changed state"));
        }
        let notices = k.deliver(u64::MAX);
        match notices.as_slice() {
            [n] if n.to == who && n.event == (OrgEvent::OrgError { op }) && n.deliver_at == now + delay => {}
            other => return Err(format!("case {case}: notices {other:?}")),
        }
    }
    Ok(format!(
        "{GATE_CASES} cases ({commits} commits, {adopts} adopts), one opaque error each"
    ))
}

fn determinism_and_replay() -> Outcome {
    let cfg = load_config(&data("configs/acmas_vs_ocmas.json")).map_err(|e| e.to_string())?;
    let (_, log) = run_match(&cfg).map_err(|e| e.to_string())?;
    let text = log.to_text();
    let n = log.lines().len();
    match replay(&text).map_err(|e| e.to_string())? {
        Verdict::Identical { lines } if lines == n => {}
        other => return Err(format!("reference replay: {other:?}")),
    }
    let lines = log.lines();
    let tick_of = |l: &str| -> Option<u64> { serde_json::from_str::<serde_json::Value>(l).ok()?["tick"].as_u64() };
    let mut mutated = 0;
    for i in 1..n {
        let t = tick_of(&lines[i]).ok_or(format!("line {}: no tick", i + 1))?;
        let changed = lines[i].replacen(&format!("{{\"tick\":{t},"), &format!("{{\"tick\":{},", t + 1), 1);
        if changed == lines[i] {
            return Err(format!("line {}: mutation did not apply", i + 1));
        }
        let mut copy = String::with_capacity(text.len() + 4);
        for (j, l) in lines.iter().enumerate() {
            copy.push_str(if j == i { &changed } else { l });
            copy.push('\n');
        }
        match compare_lines(lines, &copy) {
            Verdict::Diverged { line, .. } if line == i + 1 => mutated += 1,
            other => return Err(format!("line {} mutation: {other:?}", i + 1)),
        }
        if i == 1 || i == n / 2 || i == n - 1 {
            match replay(&copy).map_err(|e| e.to_string())? {
                Verdict::Diverged { line, .. } if line == i + 1 => {}
                other => return Err(format!("line {} mutation under replay: {other:?}", i + 1)),
            }
        }
    }
    let header = lines[0].replacen(
        &format!("\"seed\":{}", cfg.seed),
        &format!("\"seed\":{}", cfg.seed + 1),
        1,
    );
    let copy = std::iter::once(header.as_str())
        .chain(lines[1..].iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join("\n");
    if !matches!(replay(&copy), Err(HarnessError::VersionMismatch(_))) {
        return Err("header mutation not rejected".into());
    }
    Ok(format!(
        "{n} lines identical, {mutated} record mutations and the header mutation caught"
    ))
}

fn world_conservation() -> Outcome {
    let spec: serde_json::Value = serde_json::from_str(&read_data("org/ocmas_team.json")).map_err(|e| e.to_string())?;
    let runs: Vec<Result<u64, String>> = (0..WORLD_MATCHES)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let teams = (1..=2)
                .map(|id| {
                    let ocmas = rng.gen_bool(0.5);
                    TeamBinding {
                        id,
                        strategy: if ocmas { Strategy::Ocmas } else { Strategy::Acmas },
                        org_spec_file: None,
                        org_spec: ocmas.then(|| spec.clone()),
                        mediation_delay: None,
                    }
                })
                .collect();
            let mut cfg = ScenarioConfig::inline(&random_arena(seed, 11, 11).render(), teams);
            cfg.seed = seed;
            cfg.max_ticks = WORLD_TICKS;
            let mut m = Match::new(&cfg).map_err(|e| format!("seed {seed}: {e}"))?;
            let mut wins = 0;
            let mut ticks = 0;
            while m.outcome().is_none() {
                let before = m.state().clone();
                let events = m.step().map_err(|e| format!("seed {seed}: {e}"))?;
                let after = m.state();
                let at = |e: &str| format!("seed {seed} tick {}: {e}", before.tick);
                audit(after).map_err(|e| at(&e))?;
                let destroyed = events
                    .iter()
                    .filter(|e| matches!(e, WorldEvent::BoxDestroyed { .. }))
                    .count();
                if after.grid.count(CellKind::Box) + destroyed != before.grid.count(CellKind::Box) {
                    return Err(at("box count moved without BoxDestroyed"));
                }
                for (a, b) in before.agents.iter().zip(&after.agents) {
                    if !a.alive && b.alive {
                        return Err(at(&format!("agent {} came back", a.id)));
                    }
                }
                wins += events
                    .iter()
                    .filter(|e| matches!(e, WorldEvent::MatchWon { .. }))
                    .count();
                if wins > 1 {
                    return Err(at("second MatchWon"));
                }
                ticks += 1;
            }
            Ok(ticks)
        })
        .collect();
    let mut total = 0;
    for r in runs {
        total += r?;
    }
    Ok(format!("{WORLD_MATCHES} matches, {total} ticks, zero violations"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("punishment rule", punishment_rule),
        ("pathfinder oracle", pathfinder_oracle),
        ("scheme frontier", scheme_frontier),
        ("explorer pipeline", explorer_pipeline),
        ("latency differential", latency_differential),
        ("stuck-agent rescue", stuck_rescue),
        ("deontic gate", deontic_gate),
        ("determinism and replay", determinism_and_replay),
        ("world conservation", world_conservation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
