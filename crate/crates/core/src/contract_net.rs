//! Contract net for freeing a boxed-in agent.
//!
//! The stuck agent calls for proposals, teammates bid the cost of reaching a
//! cell from which they can bomb the blocking box, the cheapest bidder wins
//! and reports back when the box is gone.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pathfinder::{is_safe_retreat, plan_path, PunishmentMap};
use crate::world::{AgentId, BombState, CellKind, GridMap, Percept, Pos, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId {
    pub initiator: AgentId,
    pub seq: u32,
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}.{}", self.initiator.0, self.seq)
    }
}

/// Destroy the box at `box_cell` so that `requester` can get out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeBoxAt {
    pub box_cell: Pos,
    pub requester: AgentId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CnpMessage {
    Cfp {
        task_id: TaskId,
        task: FreeBoxAt,
        deadline: u64,
    },
    Propose {
        task_id: TaskId,
        bid: u64,
    },
    Refuse {
        task_id: TaskId,
    },
    Award {
        task_id: TaskId,
        winner: AgentId,
    },
    Reject {
        task_id: TaskId,
    },
    InformDone {
        task_id: TaskId,
    },
    InformFailure {
        task_id: TaskId,
        reason: String,
    },
}

impl CnpMessage {
    pub fn task_id(&self) -> TaskId {
        match self {
            CnpMessage::Cfp { task_id, .. }
            | CnpMessage::Propose { task_id, .. }
            | CnpMessage::Refuse { task_id }
            | CnpMessage::Award { task_id, .. }
            | CnpMessage::Reject { task_id }
            | CnpMessage::InformDone { task_id }
            | CnpMessage::InformFailure { task_id, .. } => *task_id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CnpMessage::Cfp { .. } => "Cfp",
            CnpMessage::Propose { .. } => "Propose",
            CnpMessage::Refuse { .. } => "Refuse",
            CnpMessage::Award { .. } => "Award",
            CnpMessage::Reject { .. } => "Reject",
            CnpMessage::InformDone { .. } => "InformDone",
            CnpMessage::InformFailure { .. } => "InformFailure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub from: AgentId,
    pub to: AgentId,
    pub message: CnpMessage,
}

/// Empty cells 4-connected to `from`, bombs and agents ignored.
pub fn empty_region(grid: &GridMap, from: Pos) -> BTreeSet<Pos> {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        for q in p.neighbours() {
            if grid.get(q) == CellKind::Empty && seen.insert(q) {
                queue.push_back(q);
            }
        }
    }
    seen
}

fn hypothetical_bomb(state: &WorldState, owner: AgentId, at: Pos) -> BombState {
    BombState {
        owner,
        position: at,
        fuse_remaining: state.rules.fuse_ticks,
        blast_range: state.rules.blast_range,
    }
}

/// Whether the agent is walled in by boxes it cannot safely bomb itself.
///
/// Returns a task when the agent's empty region touches at least one box,
/// no live bomb is about to blow any of those boxes, no cell of the region
/// next to a box allows a safe retreat from a fresh bomb, and some teammate
/// is outside the region. The box asked for is the
/// boundary box nearest to such a teammate, ties to the smaller cell.
pub fn detect_stuck(percept: &Percept) -> Option<FreeBoxAt> {
    if !percept.alive {
        return None;
    }
    let w = &percept.world;
    let region = empty_region(&w.grid, percept.position);
    let boxes: BTreeSet<Pos> = region
        .iter()
        .flat_map(|p| p.neighbours())
        .filter(|q| w.grid.is_box(*q))
        .collect();
    if boxes.is_empty() {
        return None;
    }
    if w.bombs.iter().any(|b| w.footprint(b).iter().any(|c| boxes.contains(c))) {
        return None;
    }
    let can_free_itself = region
        .iter()
        .filter(|p| p.neighbours().iter().any(|q| boxes.contains(q)))
        .any(|&p| is_safe_retreat(w, p, &hypothetical_bomb(w, percept.agent, p)).is_some());
    if can_free_itself {
        return None;
    }
    let mates: Vec<Pos> = percept
        .teammates_alive()
        .map(|a| a.position)
        .filter(|p| !region.contains(p))
        .collect();
    let box_cell = boxes
        .into_iter()
        .min_by_key(|b| (mates.iter().map(|m| m.manhattan(*b)).min(), *b))
        .filter(|_| !mates.is_empty())?;
    Some(FreeBoxAt {
        box_cell,
        requester: percept.agent,
    })
}

/// Cheapest cell from which `me` can bomb `box_cell` and still get away,
/// with the augmented cost of reaching it.
pub fn bomb_cell_for(percept: &Percept, box_cell: Pos, punishment: &PunishmentMap) -> Option<(u64, Pos)> {
    let w = &percept.world;
    if !percept.alive || !w.grid.is_box(box_cell) {
        return None;
    }
    let mine = empty_region(&w.grid, percept.position);
    box_cell
        .neighbours()
        .into_iter()
        .filter(|c| mine.contains(c))
        .filter(|c| w.agent_at(*c).is_none_or(|a| a.id == percept.agent))
        .filter(|c| is_safe_retreat(w, *c, &hypothetical_bomb(w, percept.agent, *c)).is_some())
        .filter_map(|c| {
            plan_path(&w.grid, percept.position, c, punishment)
                .ok()
                .map(|p| (p.augmented_cost, c))
        })
        .min()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitiatorPhase {
    Collecting,
    Awarded,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Auction {
    pub id: TaskId,
    pub task: FreeBoxAt,
    pub deadline: u64,
    pub bids: BTreeMap<AgentId, u64>,
    pub refused: BTreeSet<AgentId>,
    pub phase: InitiatorPhase,
    pub winner: Option<AgentId>,
    /// When a failed task may be issued again.
    pub retry_at: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct CnpInitiator {
    pub me: AgentId,
    pub bid_window: u64,
    pub backoff: u64,
    next_seq: u32,
    pub auction: Option<Auction>,
    pub issued: u32,
    pub completed: u32,
}

impl CnpInitiator {
    pub fn new(me: AgentId, bid_window: u64, backoff: u64) -> Self {
        CnpInitiator {
            me,
            bid_window,
            backoff,
            next_seq: 1,
            auction: None,
            issued: 0,
            completed: 0,
        }
    }

    fn send(&self, to: AgentId, message: CnpMessage, out: &mut Vec<Envelope>) {
        out.push(Envelope {
            from: self.me,
            to,
            message,
        });
    }

    /// One protocol step. `need` is the current stuck task, if any;
    /// `mates` are the alive teammates, excluding this agent.
    pub fn step(&mut self, inbox: &[Envelope], now: u64, need: Option<FreeBoxAt>, mates: &[AgentId]) -> Vec<Envelope> {
        let mut out = Vec::new();
        for env in inbox {
            let current = self.auction.as_ref().map(|a| a.id);
            let msg = &env.message;
            if Some(msg.task_id()) != current {
                if matches!(msg, CnpMessage::Propose { .. }) {
                    self.send(env.from, CnpMessage::Reject { task_id: msg.task_id() }, &mut out);
                }
                continue;
            }
            let a = self.auction.as_mut().expect("current auction");
            match msg {
                CnpMessage::Propose { bid, .. } if a.phase == InitiatorPhase::Collecting && now <= a.deadline => {
                    a.bids.insert(env.from, *bid);
                }
                CnpMessage::Propose { task_id, .. } => {
                    let task_id = *task_id;
                    self.send(env.from, CnpMessage::Reject { task_id }, &mut out);
                }
                CnpMessage::Refuse { .. } => {
                    a.refused.insert(env.from);
                }
                CnpMessage::InformDone { .. } if a.winner == Some(env.from) => {
                    if a.phase != InitiatorPhase::Done {
                        self.completed += 1;
                    }
                    a.phase = InitiatorPhase::Done;
                }
                CnpMessage::InformFailure { .. } if a.winner == Some(env.from) => {
                    a.phase = InitiatorPhase::Failed;
                    a.retry_at = Some(now);
                }
                _ => {}
            }
        }

        if let Some(a) = self.auction.as_mut() {
            if a.phase == InitiatorPhase::Collecting && now >= a.deadline {
                let best = a.bids.iter().min_by_key(|(id, bid)| (**bid, **id)).map(|(id, _)| *id);
                let (id, bids) = (a.id, a.bids.clone());
                match best.filter(|_| need.is_some()) {
                    Some(w) => {
                        a.phase = InitiatorPhase::Awarded;
                        a.winner = Some(w);
                        self.send(w, CnpMessage::Award { task_id: id, winner: w }, &mut out);
                    }
                    None if need.is_none() => a.phase = InitiatorPhase::Done,
                    None => {
                        a.phase = InitiatorPhase::Failed;
                        a.retry_at = Some(now + self.backoff);
                    }
                }
                for (&who, _) in bids.iter().filter(|(who, _)| Some(**who) != best || need.is_none()) {
                    self.send(who, CnpMessage::Reject { task_id: id }, &mut out);
                }
            }
        }
        if let Some(a) = self.auction.as_mut() {
            if a.phase == InitiatorPhase::Awarded {
                if a.winner.is_some_and(|w| !mates.contains(&w)) {
                    a.phase = InitiatorPhase::Failed;
                    a.retry_at = Some(now);
                } else if need.is_none() {
                    self.completed += 1;
                    a.phase = InitiatorPhase::Done;
                }
            }
        }

        let may_issue = match &self.auction {
            None => true,
            Some(a) => match a.phase {
                InitiatorPhase::Done => true,
                InitiatorPhase::Failed => a.retry_at.is_some_and(|t| t <= now),
                InitiatorPhase::Collecting | InitiatorPhase::Awarded => false,
            },
        };
        if let (Some(task), true) = (need, may_issue) {
            if mates.is_empty() {
                return out;
            }
            let id = TaskId {
                initiator: self.me,
                seq: self.next_seq,
            };
            self.next_seq += 1;
            self.issued += 1;
            let deadline = now + self.bid_window;
            let mut mates = mates.to_vec();
            mates.sort();
            for m in mates.into_iter().filter(|m| *m != self.me) {
                self.send(
                    m,
                    CnpMessage::Cfp {
                        task_id: id,
                        task,
                        deadline,
                    },
                    &mut out,
                );
            }
            self.auction = Some(Auction {
                id,
                task,
                deadline,
                bids: BTreeMap::new(),
                refused: BTreeSet::new(),
                phase: InitiatorPhase::Collecting,
                winner: None,
                retry_at: None,
            });
        }
        out
    }
}

/// A task this agent has won.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub task_id: TaskId,
    pub initiator: AgentId,
    pub box_cell: Pos,
    pub bomb_cell: Pos,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParticipantOutput {
    pub outbox: Vec<Envelope>,
    pub adopted: Option<Assignment>,
    /// The assignment ended this step, successfully or not.
    pub finished: Option<TaskId>,
}

#[derive(Debug, Clone)]
pub struct CnpParticipant {
    pub me: AgentId,
    pub assignment: Option<Assignment>,
    /// Cfps answered with a proposal and not yet awarded or rejected.
    pending: BTreeMap<TaskId, FreeBoxAt>,
}

impl CnpParticipant {
    pub fn new(me: AgentId) -> Self {
        CnpParticipant {
            me,
            assignment: None,
            pending: BTreeMap::new(),
        }
    }

    pub fn step(
        &mut self,
        inbox: &[Envelope],
        percept: &Percept,
        punishment: &PunishmentMap,
        stuck: bool,
    ) -> ParticipantOutput {
        let mut out = ParticipantOutput::default();
        let w = &percept.world;

        if let Some(a) = self.assignment {
            let reply = if !w.grid.is_box(a.box_cell) {
                Some(CnpMessage::InformDone { task_id: a.task_id })
            } else {
                let bombing = w
                    .bombs
                    .iter()
                    .any(|b| b.owner == self.me && w.footprint(b).contains(&a.box_cell));
                if bombing || bomb_cell_for(percept, a.box_cell, punishment).is_some() {
                    None
                } else {
                    Some(CnpMessage::InformFailure {
                        task_id: a.task_id,
                        reason: "unreachable".into(),
                    })
                }
            };
            if let Some(message) = reply {
                out.outbox.push(Envelope {
                    from: self.me,
                    to: a.initiator,
                    message,
                });
                out.finished = Some(a.task_id);
                self.assignment = None;
            }
        }

        for env in inbox {
            match &env.message {
                CnpMessage::Cfp { task_id, task, .. } => {
                    if task.requester == self.me {
                        continue;
                    }
                    let bid = if stuck || self.assignment.is_some() {
                        None
                    } else {
                        bomb_cell_for(percept, task.box_cell, punishment)
                    };
                    let message = match bid {
                        Some((cost, _)) => {
                            self.pending.insert(*task_id, *task);
                            CnpMessage::Propose {
                                task_id: *task_id,
                                bid: cost,
                            }
                        }
                        None => CnpMessage::Refuse { task_id: *task_id },
                    };
                    out.outbox.push(Envelope {
                        from: self.me,
                        to: env.from,
                        message,
                    });
                }
                CnpMessage::Award { task_id, winner } if *winner == self.me => {
                    let Some(task) = self.pending.remove(task_id) else {
                        continue;
                    };
                    if !w.grid.is_box(task.box_cell) {
                        out.outbox.push(Envelope {
                            from: self.me,
                            to: env.from,
                            message: CnpMessage::InformDone { task_id: *task_id },
                        });
                        out.finished = Some(*task_id);
                        continue;
                    }
                    match bomb_cell_for(percept, task.box_cell, punishment) {
                        Some((_, bomb_cell)) if self.assignment.is_none() => {
                            let a = Assignment {
                                task_id: *task_id,
                                initiator: env.from,
                                box_cell: task.box_cell,
                                bomb_cell,
                            };
                            self.assignment = Some(a);
                            out.adopted = Some(a);
                        }
                        _ => out.outbox.push(Envelope {
                            from: self.me,
                            to: env.from,
                            message: CnpMessage::InformFailure {
                                task_id: *task_id,
                                reason: "unreachable".into(),
                            },
                        }),
                    }
                }
                CnpMessage::Reject { task_id } => {
                    self.pending.remove(task_id);
                }
                _ => {}
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{new_world, percept_for, Rules};
    use std::sync::Arc;

    const POCKET: &str = "\
###########
#1........#
#.........#
#....+....#
#...+2+...#
#....+....#
#.........#
###########
#a###b#####
###########
";

    fn percept(map: &str, id: u32) -> Percept {
        let w = Arc::new(new_world(map, Rules::default(), 1).unwrap());
        percept_for(&w, AgentId(id)).unwrap()
    }

    #[test]
    fn pocket_is_stuck_and_open_field_is_not() {
        let p = percept(POCKET, 2);
        assert_eq!(
            detect_stuck(&p),
            Some(FreeBoxAt {
                box_cell: Pos::new(5, 3),
                requester: AgentId(2)
            })
        );
        assert_eq!(detect_stuck(&percept(POCKET, 1)), None);
        // sealed without boxes: nothing to ask for
        assert_eq!(detect_stuck(&percept(POCKET, 3)), None);
    }

    #[test]
    fn roomy_pocket_frees_itself() {
        let l_map = "\
###########
#1........#
#.........#
#....++...#
#...+2.+..#
#....+.+..#
#.....+...#
###########
#a###b#####
###########
";
        assert_eq!(detect_stuck(&percept(l_map, 2)), None);
    }

    #[test]
    fn bid_is_cost_to_nearest_bomb_cell() {
        let p = percept(POCKET, 1);
        let punish = PunishmentMap::for_boxes(&p.world.grid, 5);
        assert_eq!(bomb_cell_for(&p, Pos::new(5, 3), &punish), Some((5, Pos::new(5, 2))));
        assert_eq!(bomb_cell_for(&p, Pos::new(2, 2), &punish), None);
    }

    fn env(from: u32, to: u32, message: CnpMessage) -> Envelope {
        Envelope {
            from: AgentId(from),
            to: AgentId(to),
            message,
        }
    }

    #[test]
    fn lowest_bid_wins_ties_to_lowest_id() {
        let task = FreeBoxAt {
            box_cell: Pos::new(5, 3),
            requester: AgentId(1),
        };
        for (bids, winner) in [([(3, 7), (5, 4)], 5), ([(3, 4), (5, 4)], 3)] {
            let mut ini = CnpInitiator::new(AgentId(1), 2, 5);
            let out = ini.step(&[], 0, Some(task), &[AgentId(3), AgentId(5)]);
            assert_eq!(out.len(), 2);
            let id = out[0].message.task_id();
            let inbox: Vec<_> = bids
                .iter()
                .map(|&(a, b)| env(a, 1, CnpMessage::Propose { task_id: id, bid: b }))
                .collect();
            assert!(ini.step(&inbox, 1, Some(task), &[AgentId(3), AgentId(5)]).is_empty());
            let out = ini.step(&[], 2, Some(task), &[AgentId(3), AgentId(5)]);
            let loser = if winner == 3 { 5 } else { 3 };
            assert_eq!(
                out,
                vec![
                    env(
                        1,
                        winner,
                        CnpMessage::Award {
                            task_id: id,
                            winner: AgentId(winner)
                        }
                    ),
                    env(1, loser, CnpMessage::Reject { task_id: id }),
                ]
            );
        }
    }

    #[test]
    fn no_bids_fails_then_reissues_after_backoff() {
        let task = FreeBoxAt {
            box_cell: Pos::new(5, 3),
            requester: AgentId(2),
        };
        let mates = [AgentId(1), AgentId(3)];
        let mut ini = CnpInitiator::new(AgentId(2), 2, 5);
        let first = ini.step(&[], 0, Some(task), &mates);
        let id = first[0].message.task_id();
        let refusals = [
            env(1, 2, CnpMessage::Refuse { task_id: id }),
            env(3, 2, CnpMessage::Refuse { task_id: id }),
        ];
        assert!(ini.step(&refusals, 1, Some(task), &mates).is_empty());
        assert!(ini.step(&[], 2, Some(task), &mates).is_empty());
        assert_eq!(ini.auction.as_ref().unwrap().phase, InitiatorPhase::Failed);
        for t in 3..7 {
            assert!(ini.step(&[], t, Some(task), &mates).is_empty(), "tick {t}");
        }
        let again = ini.step(&[], 7, Some(task), &mates);
        assert_eq!(again.len(), 2);
        assert_eq!(again[0].message.task_id().seq, 2);
        assert_eq!(ini.issued, 2);
    }

    #[test]
    fn dead_awardee_triggers_reissue() {
        let task = FreeBoxAt {
            box_cell: Pos::new(5, 3),
            requester: AgentId(2),
        };
        let mut ini = CnpInitiator::new(AgentId(2), 2, 5);
        let id = ini.step(&[], 0, Some(task), &[AgentId(1), AgentId(3)])[0]
            .message
            .task_id();
        ini.step(
            &[env(1, 2, CnpMessage::Propose { task_id: id, bid: 3 })],
            1,
            Some(task),
            &[AgentId(1), AgentId(3)],
        );
        ini.step(&[], 2, Some(task), &[AgentId(1), AgentId(3)]);
        let out = ini.step(&[], 3, Some(task), &[AgentId(3)]);
        assert_eq!(
            out,
            vec![env(
                2,
                3,
                CnpMessage::Cfp {
                    task_id: TaskId {
                        initiator: AgentId(2),
                        seq: 2
                    },
                    task,
                    deadline: 5
                }
            )]
        );
    }

    #[test]
    fn participant_proposes_refuses_and_completes() {
        let p = percept(POCKET, 1);
        let punish = PunishmentMap::for_boxes(&p.world.grid, 5);
        let task = FreeBoxAt {
            box_cell: Pos::new(5, 3),
            requester: AgentId(2),
        };
        let id = TaskId {
            initiator: AgentId(2),
            seq: 1,
        };
        let mut part = CnpParticipant::new(AgentId(1));
        let out = part.step(
            &[env(
                2,
                1,
                CnpMessage::Cfp {
                    task_id: id,
                    task,
                    deadline: 2,
                },
            )],
            &p,
            &punish,
            false,
        );
        assert_eq!(out.outbox, vec![env(1, 2, CnpMessage::Propose { task_id: id, bid: 5 })]);
        let stuck_out = CnpParticipant::new(AgentId(1)).step(
            &[env(
                2,
                1,
                CnpMessage::Cfp {
                    task_id: id,
                    task,
                    deadline: 2,
                },
            )],
            &p,
            &punish,
            true,
        );
        assert_eq!(stuck_out.outbox, vec![env(1, 2, CnpMessage::Refuse { task_id: id })]);

        let out = part.step(
            &[env(
                2,
                1,
                CnpMessage::Award {
                    task_id: id,
                    winner: AgentId(1),
                },
            )],
            &p,
            &punish,
            false,
        );
        let a = out.adopted.unwrap();
        assert_eq!(a.bomb_cell, Pos::new(5, 2));

        // someone else clears the box
        let mut world = (*p.world).clone();
        world.grid.set(Pos::new(5, 3), CellKind::Empty);
        let p2 = percept_for(&Arc::new(world), AgentId(1)).unwrap();
        let out = part.step(&[], &p2, &punish, false);
        assert_eq!(out.outbox, vec![env(1, 2, CnpMessage::InformDone { task_id: id })]);
        assert!(part.assignment.is_none());
    }

    #[test]
    fn award_after_box_gone_is_done_at_once() {
        let p = percept(POCKET, 1);
        let punish = PunishmentMap::for_boxes(&p.world.grid, 5);
        let task = FreeBoxAt {
            box_cell: Pos::new(5, 3),
            requester: AgentId(2),
        };
        let id = TaskId {
            initiator: AgentId(2),
            seq: 1,
        };
        let mut part = CnpParticipant::new(AgentId(1));
        part.step(
            &[env(
                2,
                1,
                CnpMessage::Cfp {
                    task_id: id,
                    task,
                    deadline: 2,
                },
            )],
            &p,
            &punish,
            false,
        );
        let mut world = (*p.world).clone();
        world.grid.set(Pos::new(5, 3), CellKind::Empty);
        let p2 = percept_for(&Arc::new(world), AgentId(1)).unwrap();
        let out = part.step(
            &[env(
                2,
                1,
                CnpMessage::Award {
                    task_id: id,
                    winner: AgentId(1),
                },
            )],
            &p2,
            &punish,
            false,
        );
        assert_eq!(out.outbox, vec![env(1, 2, CnpMessage::InformDone { task_id: id })]);
        assert!(out.adopted.is_none());
    }
}
