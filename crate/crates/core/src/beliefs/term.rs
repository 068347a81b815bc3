use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::BeliefError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Int(i64),
    Atom(String),
    /// Names start with an uppercase letter.
    Var(String),
    /// `_`: matches anything, binds nothing.
    Wildcard,
}

pub type Substitution = BTreeMap<String, Term>;

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(name.to_string())
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, Term::Int(_) | Term::Atom(_))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// Replaces bound variables; unbound ones stay as they are.
    pub fn resolve(&self, s: &Substitution) -> Term {
        match self {
            Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            other => other.clone(),
        }
    }

    /// Matches this pattern term against a ground value, extending `s`.
    pub fn unify_with(&self, value: &Term, s: &mut Substitution) -> bool {
        match self {
            Term::Wildcard => true,
            Term::Var(v) => match s.get(v) {
                Some(bound) => bound == value,
                None => {
                    s.insert(v.clone(), value.clone());
                    true
                }
            },
            ground => ground == value,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(v) => write!(f, "{v}"),
            Term::Atom(a) | Term::Var(a) => f.write_str(a),
            Term::Wildcard => f.write_str("_"),
        }
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Self {
        Term::Int(v)
    }
}

impl From<&str> for Term {
    fn from(a: &str) -> Self {
        Term::Atom(a.to_string())
    }
}

impl FromStr for Term {
    type Err = BeliefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "_" {
            return Ok(Term::Wildcard);
        }
        if let Ok(v) = s.parse::<i64>() {
            return Ok(Term::Int(v));
        }
        let mut chars = s.chars();
        let first = chars.next().ok_or_else(|| BeliefError::Parse("empty term".into()))?;
        if !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(BeliefError::Parse(format!("bad term '{s}'")));
        }
        if first.is_ascii_uppercase() || first == '_' {
            Ok(Term::Var(s.to_string()))
        } else if first.is_ascii_lowercase() {
            Ok(Term::Atom(s.to_string()))
        } else {
            Err(BeliefError::Parse(format!("bad term '{s}'")))
        }
    }
}

/// A predicate applied to terms: `pos(3,4)`, `bombs(N)`, `threatened`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeliefAtom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl BeliefAtom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        BeliefAtom {
            predicate: predicate.to_string(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn resolve(&self, s: &Substitution) -> BeliefAtom {
        BeliefAtom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| t.resolve(s)).collect(),
        }
    }

    /// Matches this pattern against a ground atom.
    pub fn match_ground(&self, ground: &BeliefAtom, s: &Substitution) -> Option<Substitution> {
        if self.predicate != ground.predicate || self.arity() != ground.arity() {
            return None;
        }
        let mut out = s.clone();
        self.args
            .iter()
            .zip(&ground.args)
            .all(|(p, g)| p.unify_with(g, &mut out))
            .then_some(out)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for BeliefAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            let args: Vec<String> = self.args.iter().map(Term::to_string).collect();
            write!(f, "({})", args.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for BeliefAtom {
    type Err = BeliefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            None => (s, Vec::new()),
            Some(open) => {
                let inner = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| BeliefError::Parse(format!("unbalanced '{s}'")))?;
                let args = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(str::parse).collect::<Result<Vec<Term>, _>>()?
                };
                (&s[..open], args)
            }
        };
        let name = name.trim();
        if name.is_empty() || !name.starts_with(|c: char| c.is_ascii_lowercase()) {
            return Err(BeliefError::Parse(format!("bad predicate in '{s}'")));
        }
        Ok(BeliefAtom::new(name, args))
    }
}

/// Parses an atom literal; panics on malformed text. Meant for plan
/// libraries written in source.
pub fn atom(text: &str) -> BeliefAtom {
    text.parse().unwrap_or_else(|e| panic!("bad atom '{text}': {e}"))
}
