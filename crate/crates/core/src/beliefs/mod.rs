//! Belief base, plan rules and the intention executor agents reason with.

mod base;
mod engine;
mod plan;
mod policy;
mod term;

pub use base::{context, solve, BeliefBase, CmpOp, Expr, Guard, Literal, FUNCTIONAL};
pub use engine::{Effect, Host, Reasoner, Tick, DEFAULT_MAX_DEPTH, DEFAULT_STEP_BUDGET};
pub use plan::{
    goal_event, parse_annotated, select_plan, vacuum_library, Event, EventFailed, PlanInstance, PlanRule, Step,
    Trigger, TriggerKind,
};
pub use policy::{decide_move, MoveDecision};
pub use term::{atom, BeliefAtom, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BeliefError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("missing belief {0}")]
    MissingBelief(String),
    #[error("variable {0} unbound in plan {1}")]
    UnboundVariable(String, String),
}
