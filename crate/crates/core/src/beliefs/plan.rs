use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::base::{context, solve, BeliefBase, Literal};
use super::term::{BeliefAtom, Substitution, Term};
use super::BeliefError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TriggerKind {
    /// `+!goal`
    GoalAddition,
    /// `+belief`
    BeliefAddition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trigger {
    pub kind: TriggerKind,
    pub atom: BeliefAtom,
    /// Annotation patterns the event must carry, e.g. `scheme(Sch)`.
    pub annotations: Vec<(String, Term)>,
}

/// Something that happened to the agent: a goal to pursue or a new belief.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub kind: TriggerKind,
    pub atom: BeliefAtom,
    pub annotations: BTreeMap<String, Term>,
}

impl Event {
    pub fn goal(atom: BeliefAtom) -> Self {
        Event {
            kind: TriggerKind::GoalAddition,
            atom,
            annotations: BTreeMap::new(),
        }
    }

    pub fn belief(atom: BeliefAtom) -> Self {
        Event {
            kind: TriggerKind::BeliefAddition,
            atom,
            annotations: BTreeMap::new(),
        }
    }

    pub fn annotated(mut self, name: &str, value: Term) -> Self {
        self.annotations.insert(name.to_string(), value);
        self
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bang = if self.kind == TriggerKind::GoalAddition {
            "!"
        } else {
            ""
        };
        write!(f, "+{bang}{}", self.atom)?;
        if !self.annotations.is_empty() {
            let anns: Vec<String> = self.annotations.iter().map(|(k, v)| format!("{k}({v})")).collect();
            write!(f, "[{}]", anns.join(","))?;
        }
        Ok(())
    }
}

impl Trigger {
    /// Unifies the trigger with an event. Event annotations the trigger does
    /// not mention are ignored.
    pub fn matches(&self, event: &Event) -> Option<Substitution> {
        if self.kind != event.kind {
            return None;
        }
        let mut s = self.atom.match_ground(&event.atom, &Substitution::new())?;
        for (name, pattern) in &self.annotations {
            let value = event.annotations.get(name)?;
            if !pattern.unify_with(value, &mut s) {
                return None;
            }
        }
        Some(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// World action, or internal action when the name starts with `.`.
    Action {
        name: String,
        args: Vec<Term>,
    },
    Subgoal {
        atom: BeliefAtom,
        annotations: Vec<(String, Term)>,
    },
    AddBelief(BeliefAtom),
    /// Removes every belief matching the pattern.
    DelBelief(BeliefAtom),
    /// `?pattern`: binds variables from the first matching belief.
    Query(BeliefAtom),
    Send {
        to: Term,
        message: BeliefAtom,
    },
    /// `org.name(args)`: request to the organisation.
    OrgDirective {
        name: String,
        args: Vec<Term>,
    },
}

impl Step {
    pub fn is_internal(&self) -> bool {
        matches!(self, Step::Action { name, .. } if name.starts_with('.'))
    }

    fn vars(&self) -> Vec<String> {
        let terms: Vec<&Term> = match self {
            Step::Action { args, .. } | Step::OrgDirective { args, .. } => args.iter().collect(),
            Step::Subgoal { atom, annotations } => atom.args.iter().chain(annotations.iter().map(|(_, t)| t)).collect(),
            Step::AddBelief(a) | Step::DelBelief(a) | Step::Query(a) => a.args.iter().collect(),
            Step::Send { to, message } => std::iter::once(to).chain(&message.args).collect(),
        };
        terms
            .into_iter()
            .filter_map(|t| match t {
                Term::Var(v) => Some(v.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Splits `name(args)[k(v),...]` into the atom and its annotations.
pub fn parse_annotated(text: &str) -> Result<(BeliefAtom, Vec<(String, Term)>), BeliefError> {
    let text = text.trim();
    let (head, anns) = match text.find('[') {
        None => (text, ""),
        Some(i) => {
            let inner = text[i + 1..]
                .strip_suffix(']')
                .ok_or_else(|| BeliefError::Parse(format!("unbalanced '{text}'")))?;
            (&text[..i], inner)
        }
    };
    let atom: BeliefAtom = head.parse()?;
    let mut annotations = Vec::new();
    if !anns.trim().is_empty() {
        // annotations are unary, so splitting on `),` is safe
        for part in anns.split("),") {
            let part = if part.ends_with(')') {
                part.to_string()
            } else {
                format!("{part})")
            };
            let a: BeliefAtom = part.parse()?;
            if a.arity() != 1 {
                return Err(BeliefError::Parse(format!("annotation '{part}' must be unary")));
            }
            annotations.push((a.predicate, a.args[0].clone()));
        }
    }
    Ok((atom, annotations))
}

impl std::str::FromStr for Step {
    type Err = BeliefError;

    /// `!goal[ann]`, `+belief`, `-belief`, `?query`, `org.op(args)`,
    /// `.internal(args)` or `action(args)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('!') {
            let (atom, annotations) = parse_annotated(rest)?;
            return Ok(Step::Subgoal { atom, annotations });
        }
        if let Some(rest) = s.strip_prefix('+') {
            return Ok(Step::AddBelief(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix('-') {
            return Ok(Step::DelBelief(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix('?') {
            return Ok(Step::Query(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix("org.") {
            let a: BeliefAtom = rest.parse()?;
            return Ok(Step::OrgDirective {
                name: a.predicate,
                args: a.args,
            });
        }
        let (internal, rest) = match s.strip_prefix('.') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let a: BeliefAtom = rest.parse()?;
        let name = if internal {
            format!(".{}", a.predicate)
        } else {
            a.predicate
        };
        Ok(Step::Action { name, args: a.args })
    }
}

/// `trigger : context <- body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanRule {
    pub label: String,
    pub trigger: Trigger,
    pub context: Vec<Literal>,
    pub body: Vec<Step>,
}

impl PlanRule {
    /// Builds a rule from source text; panics on malformed input.
    ///
    /// ```
    /// use arena_core::beliefs::PlanRule;
    /// let r = PlanRule::goal("suck", "cleaning", "in(X,Y) & dirt(X,Y)", &["do(suck)"]);
    /// assert_eq!(r.body.len(), 1);
    /// ```
    pub fn goal(label: &str, trigger: &str, ctx: &str, body: &[&str]) -> Self {
        Self::build(label, TriggerKind::GoalAddition, trigger, ctx, body)
    }

    pub fn belief(label: &str, trigger: &str, ctx: &str, body: &[&str]) -> Self {
        Self::build(label, TriggerKind::BeliefAddition, trigger, ctx, body)
    }

    fn build(label: &str, kind: TriggerKind, trigger: &str, ctx: &str, body: &[&str]) -> Self {
        let (atom, annotations) = parse_annotated(trigger).unwrap_or_else(|e| panic!("bad trigger '{trigger}': {e}"));
        let body = body
            .iter()
            .map(|s| s.parse().unwrap_or_else(|e| panic!("bad step '{s}': {e}")))
            .collect();
        let rule = PlanRule {
            label: label.to_string(),
            trigger: Trigger {
                kind,
                atom,
                annotations,
            },
            context: context(ctx),
            body,
        };
        if let Err(e) = rule.validate() {
            panic!("plan {label}: {e}");
        }
        rule
    }

    /// Every body variable must be bound by the trigger, a positive context
    /// literal, an earlier query, or an earlier internal action's output.
    pub fn validate(&self) -> Result<(), BeliefError> {
        let mut bound: BTreeSet<String> = self.trigger.atom.vars().map(str::to_string).collect();
        for (_, t) in &self.trigger.annotations {
            if let Term::Var(v) = t {
                bound.insert(v.clone());
            }
        }
        for lit in &self.context {
            match lit {
                Literal::Holds(a) => bound.extend(a.vars().map(str::to_string)),
                Literal::Guard(g) => {
                    if let Some(v) = g.vars().into_iter().find(|v| !bound.contains(v)) {
                        return Err(BeliefError::UnboundVariable(v, self.label.clone()));
                    }
                }
                Literal::Not(_) => {}
            }
        }
        for step in &self.body {
            let vars = step.vars();
            match step {
                Step::Query(_) | Step::DelBelief(_) => bound.extend(vars),
                s if s.is_internal() => bound.extend(vars),
                _ => {
                    if let Some(v) = vars.into_iter().find(|v| !bound.contains(v)) {
                        return Err(BeliefError::UnboundVariable(v, self.label.clone()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// An applicable rule together with the substitution that made it so.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanInstance {
    pub label: String,
    pub event: Event,
    pub body: Vec<Step>,
    pub bindings: Substitution,
}

impl PlanInstance {
    /// The body with the current bindings applied.
    pub fn resolved_body(&self) -> Vec<Step> {
        self.body.iter().map(|s| resolve_step(s, &self.bindings)).collect()
    }
}

pub(crate) fn resolve_step(step: &Step, s: &Substitution) -> Step {
    let r = |args: &[Term]| args.iter().map(|t| t.resolve(s)).collect::<Vec<_>>();
    match step {
        Step::Action { name, args } => Step::Action {
            name: name.clone(),
            args: r(args),
        },
        Step::Subgoal { atom, annotations } => Step::Subgoal {
            atom: atom.resolve(s),
            annotations: annotations.iter().map(|(k, v)| (k.clone(), v.resolve(s))).collect(),
        },
        Step::AddBelief(a) => Step::AddBelief(a.resolve(s)),
        Step::DelBelief(a) => Step::DelBelief(a.resolve(s)),
        Step::Query(a) => Step::Query(a.resolve(s)),
        Step::Send { to, message } => Step::Send {
            to: to.resolve(s),
            message: message.resolve(s),
        },
        Step::OrgDirective { name, args } => Step::OrgDirective {
            name: name.clone(),
            args: r(args),
        },
    }
}

/// No rule in the library applies to the event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFailed(pub Event);

/// Scans the library in order and returns the first rule whose trigger
/// matches and whose context holds.
pub fn select_plan(event: &Event, library: &[PlanRule], base: &BeliefBase) -> Result<PlanInstance, EventFailed> {
    for rule in library {
        let Some(s) = rule.trigger.matches(event) else {
            continue;
        };
        if let Some(bindings) = solve(&rule.context, base, &s).into_iter().next() {
            return Ok(PlanInstance {
                label: rule.label.clone(),
                event: event.clone(),
                body: rule.body.clone(),
                bindings,
            });
        }
    }
    Err(EventFailed(event.clone()))
}

/// The two vacuum-cleaner plans for `+!cleaning`.
pub fn vacuum_library() -> Vec<PlanRule> {
    vec![
        PlanRule::goal("suck", "cleaning", "in(X,Y) & dirt(X,Y)", &["do(suck)"]),
        PlanRule::goal("right", "cleaning", "in(X,Y) & dirt(X2,Y) & X2 == X+1", &["do(right)"]),
    ]
}

#[doc(hidden)]
pub fn goal_event(text: &str) -> Event {
    let (a, anns) = parse_annotated(text).unwrap_or_else(|e| panic!("bad event '{text}': {e}"));
    let mut ev = Event::goal(a);
    for (k, v) in anns {
        ev = ev.annotated(&k, v);
    }
    ev
}
