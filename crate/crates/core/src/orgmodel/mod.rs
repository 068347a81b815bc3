//! Organisation specifications and the kernel that runs them.
//!
//! A spec has three parts: roles and groups, goal trees (schemes) split into
//! missions, and the obligations and permissions tying roles to missions.
//! The kernel instantiates groups and schemes, checks every request against
//! the spec, tracks goal states and tells committed agents which goals they
//! can pursue next.
//!
//! Goal states follow these rules. The root is enabled when the scheme is
//! created. A sequence enables its children one at a time, while choice and
//! parallel nodes enable all of them. A leaf is satisfied once `card`
//! distinct agents have reported it. An inner goal becomes available when
//! its children allow it: all of them for sequence and parallel, any one for
//! choice. It is then achieved the same way as a leaf. If no mission names
//! it, it is achieved right away. Once a choice child is satisfied, its
//! siblings become impossible.

mod kernel;
mod spec;

pub use kernel::{
    DebugEntry, GoalState, GroupId, GroupInstance, Notice, Obligation, OrgEvent, OrgFault, OrgKernel, OrgOp, SchemeId,
    SchemeInstance,
};
pub use spec::{
    load_org_spec, load_org_value, DeonticRelation, GoalNode, GoalOp, GroupSpec, Link, LinkKind, Modality, NodeDoc,
    OrgSpec, Scheme, SpecError, SpecFault, StructuralSpec, TimeConstraint,
};
