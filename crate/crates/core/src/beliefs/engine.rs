//! Single-stack intention executor.
//!
//! Each call to [`Reasoner::step`] runs plan bodies until one world action
//! is released, the agent runs out of work, or the per-tick step budget is
//! spent. Subgoals are expanded depth-first on the same stack; external
//! events push a new intention root on top of whatever was running.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::world::ActionIntent;

use super::base::{solve, BeliefBase, Literal};
use super::plan::{resolve_step, select_plan, Event, PlanRule, Step, TriggerKind};
use super::term::{BeliefAtom, Substitution, Term};

/// What the engine needs from its surroundings.
pub trait Host {
    /// Maps a world action to an intent. `Err` means the action is refused.
    fn world_action(&mut self, name: &str, args: &[Term], beliefs: &mut BeliefBase) -> Result<ActionIntent, String>;

    /// Runs an internal action and returns its output arguments, which are
    /// unified with the call's arguments. `None` fails the step.
    fn internal_action(&mut self, name: &str, args: &[Term], beliefs: &BeliefBase) -> Option<Vec<Term>>;

    fn send(&mut self, to: &Term, message: &BeliefAtom);

    /// Forwards an organisational request. Returned events are queued for
    /// this agent immediately; beliefs they refer to should already be in
    /// `beliefs`.
    fn org(&mut self, name: &str, args: &[Term], beliefs: &mut BeliefBase) -> Result<Vec<Event>, String>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    /// A goal event was handled. `continuation` marks a goal re-posting
    /// itself as the last step of its own plan.
    GoalPosted {
        goal: BeliefAtom,
        annotations: Vec<(String, Term)>,
        continuation: bool,
    },
    GoalCompleted {
        goal: BeliefAtom,
    },
    /// No applicable plan for a goal event.
    EventFailed {
        event: String,
    },
    /// An intention was dropped after a failing step.
    IntentionFailed {
        goal: BeliefAtom,
        reason: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tick {
    pub action: Option<ActionIntent>,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone)]
struct Frame {
    label: String,
    event: Event,
    body: Vec<Step>,
    pc: usize,
    bindings: Substitution,
    root: bool,
}

pub const DEFAULT_STEP_BUDGET: usize = 512;
pub const DEFAULT_MAX_DEPTH: usize = 64;

pub struct Reasoner {
    beliefs: BeliefBase,
    library: Arc<Vec<PlanRule>>,
    stack: Vec<Frame>,
    queue: VecDeque<Event>,
    pub step_budget: usize,
    pub max_depth: usize,
}

impl Reasoner {
    pub fn new(library: Arc<Vec<PlanRule>>) -> Self {
        Reasoner {
            beliefs: BeliefBase::new(),
            library,
            stack: Vec::new(),
            queue: VecDeque::new(),
            step_budget: DEFAULT_STEP_BUDGET,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn beliefs(&self) -> &BeliefBase {
        &self.beliefs
    }

    /// Adds a belief and queues `+atom` if it is new.
    pub fn add_belief(&mut self, atom: BeliefAtom) -> bool {
        let changed = self.beliefs.add(atom.clone());
        if changed {
            self.queue.push_back(Event::belief(atom));
        }
        changed
    }

    pub fn remove_beliefs(&mut self, pattern: &BeliefAtom) -> usize {
        self.beliefs.remove_matching(pattern)
    }

    pub fn post(&mut self, event: Event) {
        self.queue.push_back(event);
    }

    /// No running intention and nothing queued.
    pub fn is_idle(&self) -> bool {
        self.stack.is_empty() && self.queue.is_empty()
    }

    /// Trigger of every frame on the stack, bottom first.
    pub fn intentions(&self) -> Vec<String> {
        self.stack.iter().map(|f| format!("{}:{}", f.label, f.event)).collect()
    }

    /// Does the stack hold a frame for this goal predicate?
    pub fn pursuing(&self, predicate: &str) -> bool {
        self.stack
            .iter()
            .any(|f| f.event.kind == TriggerKind::GoalAddition && f.event.atom.predicate == predicate)
    }

    /// Drops every intention and queued event.
    pub fn clear_intentions(&mut self) {
        self.stack.clear();
        self.queue.clear();
    }

    pub fn step(&mut self, host: &mut impl Host) -> Tick {
        let mut tick = Tick::default();
        for _ in 0..self.step_budget {
            if let Some(event) = self.queue.pop_front() {
                self.handle_event(event, true, false, &mut tick);
                continue;
            }
            let Some(frame) = self.stack.last_mut() else {
                break;
            };
            if frame.pc >= frame.body.len() {
                let done = self.stack.pop().expect("non-empty stack");
                if done.event.kind == TriggerKind::GoalAddition {
                    tick.effects.push(Effect::GoalCompleted { goal: done.event.atom });
                }
                continue;
            }
            let step = resolve_step(&frame.body[frame.pc], &frame.bindings);
            frame.pc += 1;
            let last = frame.pc == frame.body.len();
            if let Err(reason) = self.run_step(step, last, host, &mut tick) {
                self.fail(reason, &mut tick);
            }
            if tick.action.is_some() {
                break;
            }
        }
        tick
    }

    fn handle_event(&mut self, event: Event, root: bool, continuation: bool, tick: &mut Tick) -> bool {
        if event.kind == TriggerKind::GoalAddition {
            tick.effects.push(Effect::GoalPosted {
                goal: event.atom.clone(),
                annotations: event.annotations.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
                continuation,
            });
        }
        match select_plan(&event, &self.library, &self.beliefs) {
            Ok(inst) => {
                self.stack.push(Frame {
                    label: inst.label,
                    event: inst.event,
                    body: inst.body,
                    pc: 0,
                    bindings: inst.bindings,
                    root,
                });
                true
            }
            Err(_) => {
                if event.kind == TriggerKind::GoalAddition {
                    tick.effects.push(Effect::EventFailed {
                        event: event.to_string(),
                    });
                }
                false
            }
        }
    }

    fn run_step(&mut self, step: Step, last: bool, host: &mut impl Host, tick: &mut Tick) -> Result<(), String> {
        match step {
            Step::Action { name, args } if name.starts_with('.') => {
                let out = host
                    .internal_action(&name, &args, &self.beliefs)
                    .ok_or_else(|| format!("{name} failed"))?;
                let frame = self.stack.last_mut().expect("running frame");
                if out.len() != args.len() || !args.iter().zip(&out).all(|(p, v)| p.unify_with(v, &mut frame.bindings))
                {
                    return Err(format!("{name} output mismatch"));
                }
                Ok(())
            }
            Step::Action { name, args } => {
                if args.iter().any(|t| !t.is_ground()) {
                    return Err(format!("{name} has unbound arguments"));
                }
                let intent = host.world_action(&name, &args, &mut self.beliefs)?;
                tick.action = Some(intent);
                Ok(())
            }
            Step::Subgoal { atom, annotations } => {
                if !atom.is_ground() || annotations.iter().any(|(_, t)| !t.is_ground()) {
                    return Err(format!("subgoal {atom} not ground"));
                }
                let mut event = Event::goal(atom);
                for (k, v) in annotations {
                    event = event.annotated(&k, v);
                }
                let frame = self.stack.last().expect("running frame");
                let tail = last
                    && frame.event.kind == TriggerKind::GoalAddition
                    && frame.event.atom.predicate == event.atom.predicate
                    && frame.event.atom.arity() == event.atom.arity();
                let root = if tail {
                    self.stack.pop().expect("running frame").root
                } else {
                    false
                };
                if self.stack.len() >= self.max_depth {
                    return Err("intention too deep".into());
                }
                if self.handle_event(event.clone(), root, tail, tick) {
                    Ok(())
                } else if tail && root {
                    // the popped frame was the root; nothing is left to unwind
                    tick.effects.push(Effect::IntentionFailed {
                        goal: event.atom,
                        reason: "no plan".into(),
                    });
                    Ok(())
                } else {
                    Err(format!("no plan for {event}"))
                }
            }
            Step::AddBelief(atom) => {
                if !atom.is_ground() {
                    return Err(format!("belief {atom} not ground"));
                }
                self.add_belief(atom);
                Ok(())
            }
            Step::DelBelief(pattern) => {
                self.beliefs.remove_matching(&pattern);
                Ok(())
            }
            Step::Query(pattern) => {
                let frame = self.stack.last_mut().expect("running frame");
                let sols = solve(&[Literal::Holds(pattern.clone())], &self.beliefs, &frame.bindings);
                let s = sols
                    .into_iter()
                    .next()
                    .ok_or_else(|| format!("query {pattern} failed"))?;
                frame.bindings = s;
                Ok(())
            }
            Step::Send { to, message } => {
                host.send(&to, &message);
                Ok(())
            }
            Step::OrgDirective { name, args } => {
                let events = host.org(&name, &args, &mut self.beliefs)?;
                self.queue.extend(events);
                Ok(())
            }
        }
    }

    /// Unwinds the stack down to and including the nearest intention root.
    fn fail(&mut self, reason: String, tick: &mut Tick) {
        while let Some(frame) = self.stack.pop() {
            if frame.root {
                tick.effects.push(Effect::IntentionFailed {
                    goal: frame.event.atom,
                    reason,
                });
                return;
            }
        }
    }
}
