//! Plan libraries for the two team strategies.
//!
//! Both teams share the reflexes (taking cover, helping a stuck teammate)
//! and the world actions. The agent-centred library chains goals directly
//! in plan bodies; the organisation-centred one only reacts to goal events
//! from the kernel and reports every achieved goal back to it.

use std::sync::{Arc, OnceLock};

use crate::beliefs::PlanRule;
use crate::orgmodel::{GoalOp, OrgSpec};

use super::config::Strategy;

/// Goals whose completion counts toward throughput and latency.
pub const WORKFLOW_GOALS: [&str; 6] = [
    "exploreMap",
    "findUnexploredArea",
    "moveToUnexploredArea",
    "attackEnemy",
    "locateEnemy",
    "reachEnemy",
];

fn shared() -> Vec<PlanRule> {
    vec![
        PlanRule::belief("cover", "threatened", "true", &["!takeCover"]),
        PlanRule::goal("flee", "takeCover", "threatened", &["flee", "!takeCover"]),
        PlanRule::goal("safe", "takeCover", "true", &[]),
        PlanRule::goal("helped", "helpTeammate", "help_done", &["-help(_,_,_,_)", "-help_done"]),
        PlanRule::goal(
            "help_bomb",
            "helpTeammate",
            "help(BX,BY,X,Y) & pos(X,Y) & bombs(N) & N > 0",
            &["bomb", "!helpTeammate"],
        ),
        PlanRule::goal(
            "help_move",
            "helpTeammate",
            "help(BX,BY,X,Y)",
            &["step_toward(X,Y)", "!helpTeammate"],
        ),
    ]
}

fn acmas() -> Vec<PlanRule> {
    let mut lib = shared();
    lib.extend([
        PlanRule::goal("start_explorer", "start", "rank(0)", &["!exploreMap", "!start"]),
        PlanRule::goal("start_attacker", "start", "true", &["!attackEnemy", "!start"]),
        PlanRule::goal(
            "explore",
            "exploreMap",
            "true",
            &["!findUnexploredArea", "!moveToUnexploredArea"],
        ),
        PlanRule::goal(
            "find",
            "findUnexploredArea",
            "true",
            &[".choose_unexplored(X,Y)", "-target(_,_)", "+target(X,Y)"],
        ),
        PlanRule::goal("arrived", "moveToUnexploredArea", "target(X,Y) & pos(X,Y)", &[]),
        PlanRule::goal("give_up", "moveToUnexploredArea", "target(X,Y) & unreachable(X,Y)", &[]),
        PlanRule::goal(
            "move",
            "moveToUnexploredArea",
            "target(X,Y)",
            &["step_toward(X,Y)", "!moveToUnexploredArea"],
        ),
        PlanRule::goal("attack", "attackEnemy", "true", &["!locateEnemy", "!reachEnemy"]),
        PlanRule::goal(
            "locate",
            "locateEnemy",
            "true",
            &[".locate_enemy(X,Y)", "-target(_,_)", "+target(X,Y)"],
        ),
        PlanRule::goal("strike", "reachEnemy", "enemy_in_range & bombs(N) & N > 0", &["bomb"]),
        PlanRule::goal("hold", "reachEnemy", "target(X,Y) & pos(X,Y)", &["wait"]),
        PlanRule::goal("approach", "reachEnemy", "target(X,Y)", &["step_toward(X,Y)"]),
    ]);
    lib
}

fn ocmas() -> Vec<PlanRule> {
    let mut lib = shared();
    lib.extend([
        PlanRule::goal("found_group", "start", "rank(0)", &["org.create_group(team)"]),
        PlanRule::goal("join_later", "start", "true", &[]),
        PlanRule::belief("join", "group(team,G)", "pref(R)", &["org.adopt_role(R,G)"]),
        PlanRule::belief(
            "join_other",
            "org_error(adopt_role)",
            "group(team,G) & fallback(R)",
            &["-fallback(R)", "org.adopt_role(R,G)"],
        ),
        PlanRule::belief(
            "as_explorer",
            "role(explorer,G)",
            "true",
            &["org.create_scheme(exploration,G)"],
        ),
        PlanRule::belief(
            "as_attacker",
            "role(attacker,G)",
            "true",
            &["org.create_scheme(attack,G)"],
        ),
        PlanRule::belief(
            "as_defender",
            "role(defender,G)",
            "true",
            &["org.create_scheme(attack,G)"],
        ),
        PlanRule::belief(
            "commit_explore",
            "scheme(exploration,S,C)",
            "me(C)",
            &["org.commit_mission(m_explore,S)"],
        ),
        PlanRule::belief(
            "commit_attack",
            "scheme(attack,S,C)",
            "me(C)",
            &["org.commit_mission(m_attack,S)"],
        ),
        PlanRule::belief(
            "again_explore",
            "finished(exploration,S)",
            "scheme(exploration,S,C) & me(C) & group(team,G)",
            &["-scheme(exploration,S,C)", "org.create_scheme(exploration,G)"],
        ),
        PlanRule::belief(
            "again_attack",
            "finished(attack,S)",
            "scheme(attack,S,C) & me(C) & group(team,G)",
            &["-scheme(attack,S,C)", "org.create_scheme(attack,G)"],
        ),
        PlanRule::goal(
            "explore",
            "exploreMap[scheme(S)]",
            "true",
            &["org.set_goal_state(S,exploreMap)"],
        ),
        PlanRule::goal(
            "find",
            "findUnexploredArea[scheme(S)]",
            "true",
            &[
                ".choose_unexplored(X,Y)",
                "-target(_,_)",
                "+target(X,Y)",
                "org.set_goal_state(S,findUnexploredArea)",
            ],
        ),
        PlanRule::goal(
            "arrived",
            "moveToUnexploredArea[scheme(S)]",
            "target(X,Y) & pos(X,Y)",
            &["org.set_goal_state(S,moveToUnexploredArea)"],
        ),
        PlanRule::goal(
            "give_up",
            "moveToUnexploredArea[scheme(S)]",
            "target(X,Y) & unreachable(X,Y)",
            &["org.set_goal_state(S,moveToUnexploredArea)"],
        ),
        PlanRule::goal(
            "move",
            "moveToUnexploredArea[scheme(S)]",
            "target(X,Y)",
            &["step_toward(X,Y)", "!moveToUnexploredArea[scheme(S)]"],
        ),
        PlanRule::goal(
            "attack",
            "attackEnemy[scheme(S)]",
            "true",
            &["org.set_goal_state(S,attackEnemy)"],
        ),
        PlanRule::goal(
            "locate",
            "locateEnemy[scheme(S)]",
            "true",
            &[
                ".locate_enemy(X,Y)",
                "-target(_,_)",
                "+target(X,Y)",
                "org.set_goal_state(S,locateEnemy)",
            ],
        ),
        PlanRule::goal(
            "strike",
            "reachEnemy[scheme(S)]",
            "enemy_in_range & bombs(N) & N > 0",
            &["bomb", "org.set_goal_state(S,reachEnemy)"],
        ),
        PlanRule::goal(
            "reached",
            "reachEnemy[scheme(S)]",
            "target(X,Y) & pos(X,Y)",
            &["org.set_goal_state(S,reachEnemy)"],
        ),
        PlanRule::goal(
            "approach",
            "reachEnemy[scheme(S)]",
            "target(X,Y)",
            &["step_toward(X,Y)", "!reachEnemy[scheme(S)]"],
        ),
    ]);
    lib
}

pub fn library(strategy: Strategy) -> Arc<Vec<PlanRule>> {
    static ACMAS: OnceLock<Arc<Vec<PlanRule>>> = OnceLock::new();
    static OCMAS: OnceLock<Arc<Vec<PlanRule>>> = OnceLock::new();
    match strategy {
        Strategy::Acmas => ACMAS.get_or_init(|| Arc::new(acmas())).clone(),
        Strategy::Ocmas => OCMAS.get_or_init(|| Arc::new(ocmas())).clone(),
    }
}

/// Role an agent asks for first, by its rank in the team, and the roles it
/// tries after an error, in order.
pub fn role_preferences(rank: usize) -> (&'static str, &'static [&'static str]) {
    if rank == 0 {
        ("explorer", &["attacker", "defender"])
    } else {
        ("attacker", &["defender"])
    }
}

/// The organisation-centred library refers to the group `team`, the
/// schemes `exploration` and `attack` and their missions by name.
pub fn check_org_spec(spec: &OrgSpec) -> Result<(), String> {
    let group = spec.structural.groups.get("team").ok_or("spec has no group 'team'")?;
    for role in ["explorer", "attacker", "defender"] {
        if !group.roles.contains_key(role) {
            return Err(format!("group 'team' lacks role '{role}'"));
        }
    }
    let expect = [
        (
            "exploration",
            "m_explore",
            ["exploreMap", "findUnexploredArea", "moveToUnexploredArea"],
        ),
        ("attack", "m_attack", ["attackEnemy", "locateEnemy", "reachEnemy"]),
    ];
    for (scheme, mission, goals) in expect {
        let s = spec
            .schemes
            .get(scheme)
            .ok_or_else(|| format!("spec has no scheme '{scheme}'"))?;
        let m = s
            .missions
            .get(mission)
            .ok_or_else(|| format!("scheme '{scheme}' has no mission '{mission}'"))?;
        if s.root().id != goals[0] || s.root().op != GoalOp::Sequence {
            return Err(format!("scheme '{scheme}' must be a sequence rooted at '{}'", goals[0]));
        }
        for g in goals {
            if !m.contains(g) {
                return Err(format!("mission '{mission}' lacks goal '{g}'"));
            }
        }
    }
    Ok(())
}
