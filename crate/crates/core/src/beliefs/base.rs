use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::term::{BeliefAtom, Substitution, Term};
use super::BeliefError;

/// Predicates holding at most one atom at a time; adding a new one
/// replaces the old.
pub const FUNCTIONAL: [(&str, usize); 4] = [("pos", 2), ("target", 2), ("intermediate", 2), ("bombs", 1)];

/// Ground facts, kept sorted so queries enumerate in a fixed order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BeliefBase {
    atoms: BTreeSet<BeliefAtom>,
}

impl BeliefBase {
    pub fn new() -> Self {
        Self::default()
    }

    fn is_functional(atom: &BeliefAtom) -> bool {
        FUNCTIONAL
            .iter()
            .any(|(p, n)| *p == atom.predicate && *n == atom.arity())
    }

    /// Adds a ground atom. Returns `true` if the base changed.
    pub fn add(&mut self, atom: BeliefAtom) -> bool {
        debug_assert!(atom.is_ground(), "non-ground belief {atom}");
        if self.atoms.contains(&atom) {
            return false;
        }
        if Self::is_functional(&atom) {
            let (pred, arity) = (atom.predicate.clone(), atom.arity());
            self.atoms.retain(|a| !(a.predicate == pred && a.arity() == arity));
        }
        self.atoms.insert(atom)
    }

    pub fn remove(&mut self, atom: &BeliefAtom) -> bool {
        self.atoms.remove(atom)
    }

    /// Removes every atom matching a pattern.
    pub fn remove_matching(&mut self, pattern: &BeliefAtom) -> usize {
        let before = self.atoms.len();
        let s = Substitution::new();
        self.atoms.retain(|a| pattern.match_ground(a, &s).is_none());
        before - self.atoms.len()
    }

    pub fn contains(&self, atom: &BeliefAtom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BeliefAtom> {
        self.atoms.iter()
    }

    /// Every substitution extending `bindings` that makes `pattern` a member
    /// of the base, in sorted-atom order.
    pub fn unify<'a>(
        &'a self,
        pattern: &'a BeliefAtom,
        bindings: &'a Substitution,
    ) -> impl Iterator<Item = Substitution> + 'a {
        let lower = BeliefAtom {
            predicate: pattern.predicate.clone(),
            args: Vec::new(),
        };
        self.atoms
            .range(lower..)
            .take_while(move |a| a.predicate == pattern.predicate)
            .filter_map(move |a| pattern.match_ground(a, bindings))
    }

    /// First value bound to `var` by a query, if any.
    pub fn lookup(&self, pattern: &str, var: &str) -> Option<Term> {
        let pattern: BeliefAtom = pattern.parse().ok()?;
        let empty = Substitution::new();
        let mut it = self.unify(&pattern, &empty);
        it.next().and_then(|s| s.get(var).cloned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Term(Term),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

impl Expr {
    fn eval(&self, s: &Substitution) -> Option<Term> {
        match self {
            Expr::Term(t) => Some(t.resolve(s)).filter(Term::is_ground),
            Expr::Add(a, b) => Some(Term::Int(a.eval(s)?.as_int()? + b.eval(s)?.as_int()?)),
            Expr::Sub(a, b) => Some(Term::Int(a.eval(s)?.as_int()? - b.eval(s)?.as_int()?)),
        }
    }

    fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Term(Term::Var(v)) => out.push(v.clone()),
            Expr::Term(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

/// Arithmetic comparison over bound variables, e.g. `N > 0` or `X2 == X+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

impl Guard {
    /// A guard with an unbound side is false.
    pub fn holds(&self, s: &Substitution) -> bool {
        let (Some(l), Some(r)) = (self.lhs.eval(s), self.rhs.eval(s)) else {
            return false;
        };
        match self.op {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            op => match (l.as_int(), r.as_int()) {
                (Some(l), Some(r)) => match op {
                    CmpOp::Lt => l < r,
                    CmpOp::Le => l <= r,
                    CmpOp::Gt => l > r,
                    CmpOp::Ge => l >= r,
                    CmpOp::Eq | CmpOp::Ne => unreachable!(),
                },
                _ => false,
            },
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.lhs.vars(&mut out);
        self.rhs.vars(&mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Holds(BeliefAtom),
    /// Negation as failure.
    Not(BeliefAtom),
    Guard(Guard),
}

impl Literal {
    /// `bombs(N_{>0})`: shorthand for `bombs(N) & N > 0`.
    pub fn bombs_positive(var: &str) -> [Literal; 2] {
        [
            Literal::Holds(BeliefAtom::new("bombs", vec![Term::var(var)])),
            Literal::Guard(Guard {
                lhs: Expr::Term(Term::var(var)),
                op: CmpOp::Gt,
                rhs: Expr::Term(Term::Int(0)),
            }),
        ]
    }
}

/// All solutions of a conjunction, in deterministic order.
pub fn solve(context: &[Literal], base: &BeliefBase, bindings: &Substitution) -> Vec<Substitution> {
    let Some((first, rest)) = context.split_first() else {
        return vec![bindings.clone()];
    };
    match first {
        Literal::Holds(pattern) => base
            .unify(pattern, bindings)
            .flat_map(|s| solve(rest, base, &s))
            .collect(),
        Literal::Not(pattern) => {
            if base.unify(pattern, bindings).next().is_some() {
                Vec::new()
            } else {
                solve(rest, base, bindings)
            }
        }
        Literal::Guard(g) => {
            if g.holds(bindings) {
                solve(rest, base, bindings)
            } else {
                Vec::new()
            }
        }
    }
}

fn parse_expr(text: &str) -> Result<Expr, BeliefError> {
    let text = text.trim();
    // left-associative: split at the last top-level + or - that is not a sign
    for (i, c) in text.char_indices().rev() {
        if (c == '+' || c == '-') && i > 0 {
            let (l, r) = (&text[..i], &text[i + 1..]);
            if l.trim().is_empty() {
                continue;
            }
            let (l, r) = (Box::new(parse_expr(l)?), Box::new(parse_expr(r)?));
            return Ok(if c == '+' { Expr::Add(l, r) } else { Expr::Sub(l, r) });
        }
    }
    Ok(Expr::Term(text.parse()?))
}

impl FromStr for Literal {
    type Err = BeliefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("not ") {
            return Ok(Literal::Not(rest.parse()?));
        }
        for (tok, op) in [
            ("==", CmpOp::Eq),
            ("!=", CmpOp::Ne),
            (">=", CmpOp::Ge),
            ("<=", CmpOp::Le),
            (">", CmpOp::Gt),
            ("<", CmpOp::Lt),
        ] {
            if let Some(at) = s.find(tok) {
                return Ok(Literal::Guard(Guard {
                    lhs: parse_expr(&s[..at])?,
                    op,
                    rhs: parse_expr(&s[at + tok.len()..])?,
                }));
            }
        }
        Ok(Literal::Holds(s.parse()?))
    }
}

/// Parses `a & b & not c & N > 0`; `true` or an empty string is the empty
/// conjunction. Panics on malformed text (plan libraries live in source).
pub fn context(text: &str) -> Vec<Literal> {
    let text = text.trim();
    if text.is_empty() || text == "true" {
        return Vec::new();
    }
    text.split('&')
        .map(|l| l.parse().unwrap_or_else(|e| panic!("bad literal '{l}': {e}")))
        .collect()
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Holds(a) => write!(f, "{a}"),
            Literal::Not(a) => write!(f, "not {a}"),
            Literal::Guard(g) => write!(f, "{g:?}"),
        }
    }
}
