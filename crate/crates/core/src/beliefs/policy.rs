//! Move decision over the beliefs `pos`, `target`, `intermediate`, `clear`
//! and `bombs`.
//!
//! Written as an ordered plan library so that it runs through the same plan
//! selection as every other agent decision.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::base::BeliefBase;
use super::plan::{select_plan, Event, PlanRule};
use super::term::atom;
use super::BeliefError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveDecision {
    TowardIntermediate,
    TowardTarget,
    PlaceBombAndRetreat,
    WaitForBomb,
    Done,
}

fn library() -> &'static [PlanRule] {
    static LIB: OnceLock<Vec<PlanRule>> = OnceLock::new();
    LIB.get_or_init(|| {
        let blocked = "intermediate(X,Y) & not clear(X,Y)";
        vec![
            PlanRule::goal("done", "decide", "pos(X,Y) & target(X,Y)", &[]),
            PlanRule::goal(
                "bomb",
                "decide",
                &format!("{blocked} & pos(X,Y) & bombs(N) & N > 0"),
                &[],
            ),
            PlanRule::goal("wait", "decide", &format!("{blocked} & pos(X,Y)"), &[]),
            PlanRule::goal("intermediate", "decide", blocked, &[]),
            PlanRule::goal("target", "decide", "true", &[]),
        ]
    })
}

/// Chooses what to do next on the way to `target`. A missing `bombs` belief
/// counts as no bombs.
pub fn decide_move(base: &BeliefBase) -> Result<MoveDecision, BeliefError> {
    for required in ["pos(_,_)", "target(_,_)"] {
        if base.unify(&atom(required), &Default::default()).next().is_none() {
            return Err(BeliefError::MissingBelief(required.to_string()));
        }
    }
    let plan = select_plan(&Event::goal(atom("decide")), library(), base).expect("the last rule has an empty context");
    Ok(match plan.label.as_str() {
        "done" => MoveDecision::Done,
        "bomb" => MoveDecision::PlaceBombAndRetreat,
        "wait" => MoveDecision::WaitForBomb,
        "intermediate" => MoveDecision::TowardIntermediate,
        _ => MoveDecision::TowardTarget,
    })
}
