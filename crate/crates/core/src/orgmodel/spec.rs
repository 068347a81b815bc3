use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Acquaintance,
    Communication,
    Authority,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub from: String,
    pub to: String,
    pub kind: LinkKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    /// role -> [min, max]
    pub roles: BTreeMap<String, (u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StructuralSpec {
    pub roles: BTreeSet<String>,
    pub links: BTreeSet<Link>,
    pub groups: BTreeMap<String, GroupSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoalOp {
    #[serde(rename = "seq")]
    Sequence,
    #[serde(rename = "choice")]
    Choice,
    #[serde(rename = "par")]
    Parallel,
    #[serde(rename = "leaf")]
    Leaf,
}

/// Goal tree node as written in a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: String,
    pub op: GoalOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub card: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeDoc>,
}

/// Goal tree node after validation, stored in a flat arena.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalNode {
    pub id: String,
    pub op: GoalOp,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub card: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub name: String,
    /// Pre-order; index 0 is the root.
    pub nodes: Vec<GoalNode>,
    pub missions: BTreeMap<String, BTreeSet<String>>,
    index: BTreeMap<String, usize>,
}

impl Scheme {
    pub fn node(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn root(&self) -> &GoalNode {
        &self.nodes[0]
    }

    /// Missions that include `goal`.
    pub fn missions_with<'a>(&'a self, goal: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.missions
            .iter()
            .filter(move |(_, g)| g.contains(goal))
            .map(|(m, _)| m.as_str())
    }

    pub fn in_any_mission(&self, goal: &str) -> bool {
        self.missions_with(goal).next().is_some()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &GoalNode> {
        self.nodes.iter().filter(|n| n.op == GoalOp::Leaf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modality {
    #[serde(alias = "obl", rename = "obligation")]
    Obligation,
    #[serde(alias = "per", rename = "permission")]
    Permission,
}

/// When a deontic relation applies, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TcDoc", into = "TcDoc")]
pub enum TimeConstraint {
    Anytime,
    Before(u64),
    During(u64, u64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TcDoc {
    Word(String),
    Before { before: u64 },
    During { during: (u64, u64) },
}

impl TryFrom<TcDoc> for TimeConstraint {
    type Error = String;

    fn try_from(doc: TcDoc) -> Result<Self, String> {
        match doc {
            TcDoc::Word(w) if w == "anytime" => Ok(TimeConstraint::Anytime),
            TcDoc::Word(w) => Err(format!("unknown time constraint '{w}'")),
            TcDoc::Before { before } => Ok(TimeConstraint::Before(before)),
            TcDoc::During { during: (s, e) } if s <= e => Ok(TimeConstraint::During(s, e)),
            TcDoc::During { during: (s, e) } => Err(format!("empty interval [{s},{e}]")),
        }
    }
}

impl From<TimeConstraint> for TcDoc {
    fn from(tc: TimeConstraint) -> Self {
        match tc {
            TimeConstraint::Anytime => TcDoc::Word("anytime".into()),
            TimeConstraint::Before(before) => TcDoc::Before { before },
            TimeConstraint::During(s, e) => TcDoc::During { during: (s, e) },
        }
    }
}

impl TimeConstraint {
    pub fn expired(&self, now: u64) -> bool {
        match *self {
            TimeConstraint::Anytime => false,
            TimeConstraint::Before(t) => now > t,
            TimeConstraint::During(_, end) => now > end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeonticRelation {
    pub modality: Modality,
    pub role: String,
    pub mission: String,
    #[serde(default = "anytime_default")]
    pub tc: TimeConstraint,
}

fn anytime_default() -> TimeConstraint {
    TimeConstraint::Anytime
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct LinkDoc {
    from: String,
    to: String,
    kind: LinkKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct GroupDoc {
    name: String,
    roles: BTreeMap<String, [u32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SchemeDoc {
    name: String,
    root: NodeDoc,
    missions: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrgDoc {
    roles: Vec<String>,
    #[serde(default)]
    links: Vec<LinkDoc>,
    #[serde(default)]
    groups: Vec<GroupDoc>,
    #[serde(default)]
    schemes: Vec<SchemeDoc>,
    #[serde(default)]
    deontics: Vec<DeonticRelation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrgSpec {
    pub structural: StructuralSpec,
    pub schemes: BTreeMap<String, Scheme>,
    pub deontics: Vec<DeonticRelation>,
}

impl OrgSpec {
    /// Which scheme defines `mission`.
    pub fn scheme_of_mission(&self, mission: &str) -> Option<&Scheme> {
        self.schemes.values().find(|s| s.missions.contains_key(mission))
    }

    /// Multi-line summary: roles, groups, goal trees, missions, deontics.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let roles: Vec<&str> = self.structural.roles.iter().map(String::as_str).collect();
        out.push_str(&format!("roles: {}\n", roles.join(", ")));
        for g in self.structural.groups.values() {
            let parts: Vec<String> = g.roles.iter().map(|(r, (lo, hi))| format!("{r}[{lo},{hi}]")).collect();
            out.push_str(&format!("group {}: {}\n", g.name, parts.join(" ")));
        }
        for s in self.schemes.values() {
            out.push_str(&format!(
                "scheme {}: {} goals, {} missions\n",
                s.name,
                s.nodes.len(),
                s.missions.len()
            ));
            render_tree(s, 0, 1, &mut out);
            for (m, goals) in &s.missions {
                let g: Vec<&str> = goals.iter().map(String::as_str).collect();
                out.push_str(&format!("  mission {m}: {}\n", g.join(", ")));
            }
        }
        for d in &self.deontics {
            let m = match d.modality {
                Modality::Obligation => "obl",
                Modality::Permission => "per",
            };
            out.push_str(&format!("{m}({}, {}, {:?})\n", d.role, d.mission, d.tc));
        }
        out
    }
}

fn render_tree(s: &Scheme, at: usize, depth: usize, out: &mut String) {
    let n = &s.nodes[at];
    let card = if n.card > 1 {
        format!(" card={}", n.card)
    } else {
        String::new()
    };
    out.push_str(&format!("{}{} ({:?}){card}\n", "  ".repeat(depth), n.id, n.op));
    for &c in &n.children {
        render_tree(s, c, depth + 1, out);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecFault {
    Json(String),
    UnknownRole {
        used_in: String,
        role: String,
    },
    DuplicateName {
        kind: &'static str,
        name: String,
    },
    CardinalityBounds {
        group: String,
        role: String,
        min: u32,
        max: u32,
    },
    ZeroCardinality {
        scheme: String,
        goal: String,
    },
    Arity {
        scheme: String,
        goal: String,
    },
    CyclicGoal {
        scheme: String,
        goal: String,
    },
    DuplicateGoal {
        scheme: String,
        goal: String,
    },
    DanglingMission {
        scheme: String,
        mission: String,
        goal: String,
    },
    UnknownMission {
        mission: String,
    },
}

impl fmt::Display for SpecFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecFault::Json(e) => write!(f, "malformed document: {e}"),
            SpecFault::UnknownRole { used_in, role } => {
                write!(f, "unknown role '{role}' in {used_in}")
            }
            SpecFault::DuplicateName { kind, name } => write!(f, "duplicate {kind} '{name}'"),
            SpecFault::CardinalityBounds { group, role, min, max } => {
                write!(f, "group '{group}' role '{role}': min {min} > max {max}")
            }
            SpecFault::ZeroCardinality { scheme, goal } => {
                write!(f, "scheme '{scheme}' goal '{goal}': card must be >= 1")
            }
            SpecFault::Arity { scheme, goal } => {
                write!(
                    f,
                    "scheme '{scheme}' goal '{goal}': leaves take no children, other nodes need some"
                )
            }
            SpecFault::CyclicGoal { scheme, goal } => {
                write!(f, "scheme '{scheme}' goal '{goal}' contains itself")
            }
            SpecFault::DuplicateGoal { scheme, goal } => {
                write!(f, "scheme '{scheme}' goal id '{goal}' repeated")
            }
            SpecFault::DanglingMission { scheme, mission, goal } => {
                write!(f, "scheme '{scheme}' mission '{mission}' names unknown goal '{goal}'")
            }
            SpecFault::UnknownMission { mission } => {
                write!(f, "deontic relation names unknown mission '{mission}'")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid organisation spec: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct SpecError(pub Vec<SpecFault>);

/// Parses and validates an organisation document.
pub fn load_org_spec(text: &str) -> Result<OrgSpec, SpecError> {
    let doc: OrgDoc = serde_json::from_str(text).map_err(|e| SpecError(vec![SpecFault::Json(e.to_string())]))?;
    from_doc(doc)
}

pub fn load_org_value(value: &serde_json::Value) -> Result<OrgSpec, SpecError> {
    let doc: OrgDoc =
        serde_json::from_value(value.clone()).map_err(|e| SpecError(vec![SpecFault::Json(e.to_string())]))?;
    from_doc(doc)
}

fn from_doc(doc: OrgDoc) -> Result<OrgSpec, SpecError> {
    let mut faults = Vec::new();
    let mut roles = BTreeSet::new();
    for r in &doc.roles {
        if !roles.insert(r.clone()) {
            faults.push(SpecFault::DuplicateName {
                kind: "role",
                name: r.clone(),
            });
        }
    }
    let check_role = |role: &str, used_in: String, faults: &mut Vec<SpecFault>| {
        if !roles.contains(role) {
            faults.push(SpecFault::UnknownRole {
                used_in,
                role: role.to_string(),
            });
        }
    };

    let mut links = BTreeSet::new();
    for l in doc.links {
        check_role(&l.from, format!("link {}->{}", l.from, l.to), &mut faults);
        check_role(&l.to, format!("link {}->{}", l.from, l.to), &mut faults);
        links.insert(Link {
            from: l.from,
            to: l.to,
            kind: l.kind,
        });
    }

    let mut groups = BTreeMap::new();
    for g in doc.groups {
        let mut role_cards = BTreeMap::new();
        for (role, [min, max]) in g.roles {
            check_role(&role, format!("group {}", g.name), &mut faults);
            if min > max {
                faults.push(SpecFault::CardinalityBounds {
                    group: g.name.clone(),
                    role: role.clone(),
                    min,
                    max,
                });
            }
            role_cards.insert(role, (min, max));
        }
        let spec = GroupSpec {
            name: g.name.clone(),
            roles: role_cards,
        };
        if groups.insert(g.name.clone(), spec).is_some() {
            faults.push(SpecFault::DuplicateName {
                kind: "group",
                name: g.name,
            });
        }
    }

    let mut schemes = BTreeMap::new();
    let mut mission_names = BTreeSet::new();
    for s in doc.schemes {
        let mut nodes = Vec::new();
        let mut index = BTreeMap::new();
        let mut ancestors = Vec::new();
        flatten(
            &s.name,
            &s.root,
            None,
            &mut ancestors,
            &mut nodes,
            &mut index,
            &mut faults,
        );
        let mut missions = BTreeMap::new();
        for (m, goals) in s.missions {
            if !mission_names.insert(m.clone()) {
                faults.push(SpecFault::DuplicateName {
                    kind: "mission",
                    name: m.clone(),
                });
            }
            for g in &goals {
                if !index.contains_key(g) {
                    faults.push(SpecFault::DanglingMission {
                        scheme: s.name.clone(),
                        mission: m.clone(),
                        goal: g.clone(),
                    });
                }
            }
            missions.insert(m, goals.into_iter().collect());
        }
        let scheme = Scheme {
            name: s.name.clone(),
            nodes,
            missions,
            index,
        };
        if schemes.insert(s.name.clone(), scheme).is_some() {
            faults.push(SpecFault::DuplicateName {
                kind: "scheme",
                name: s.name,
            });
        }
    }

    for d in &doc.deontics {
        check_role(&d.role, format!("deontic {}/{}", d.role, d.mission), &mut faults);
        if !mission_names.contains(&d.mission) {
            faults.push(SpecFault::UnknownMission {
                mission: d.mission.clone(),
            });
        }
    }

    if !faults.is_empty() {
        return Err(SpecError(faults));
    }
    Ok(OrgSpec {
        structural: StructuralSpec { roles, links, groups },
        schemes,
        deontics: doc.deontics,
    })
}

fn flatten(
    scheme: &str,
    doc: &NodeDoc,
    parent: Option<usize>,
    ancestors: &mut Vec<String>,
    nodes: &mut Vec<GoalNode>,
    index: &mut BTreeMap<String, usize>,
    faults: &mut Vec<SpecFault>,
) {
    if ancestors.contains(&doc.id) {
        faults.push(SpecFault::CyclicGoal {
            scheme: scheme.into(),
            goal: doc.id.clone(),
        });
        return;
    }
    if index.contains_key(&doc.id) {
        faults.push(SpecFault::DuplicateGoal {
            scheme: scheme.into(),
            goal: doc.id.clone(),
        });
    }
    let card = doc.card.unwrap_or(1);
    if card == 0 {
        faults.push(SpecFault::ZeroCardinality {
            scheme: scheme.into(),
            goal: doc.id.clone(),
        });
    }
    if (doc.op == GoalOp::Leaf) != doc.children.is_empty() {
        faults.push(SpecFault::Arity {
            scheme: scheme.into(),
            goal: doc.id.clone(),
        });
    }
    let at = nodes.len();
    index.entry(doc.id.clone()).or_insert(at);
    nodes.push(GoalNode {
        id: doc.id.clone(),
        op: doc.op,
        children: Vec::new(),
        parent,
        card,
    });
    ancestors.push(doc.id.clone());
    for child in &doc.children {
        let c = nodes.len();
        let before = nodes.len();
        flatten(scheme, child, Some(at), ancestors, nodes, index, faults);
        if nodes.len() > before {
            nodes[at].children.push(c);
        }
    }
    ancestors.pop();
}
