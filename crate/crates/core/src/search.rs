//! Execution and bounded exhaustive reachability: the complete transition
//! relation, prototype rewriting, and breadth-first search for terminal
//! (`=>!`) or reachable (`=>+`) states satisfying a goal, with canonical-state
//! deduplication, solution counting and witness traces.

use crate::attack;
use crate::coap::{self, Label, TimeBound, Transition};
use crate::dialect::{self, DialectError};
use crate::model::*;
use crate::props::PropertyExpr;
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("state cap exceeded after {explored} states ({solutions_so_far} solutions so far)")]
    StateCapExceeded {
        explored: usize,
        solutions_so_far: usize,
    },
    #[error("solution index {ix} out of range ({count} solutions)")]
    SolutionIndexOutOfRange { ix: usize, count: usize },
    #[error("rewrite exceeded the step cap of {cap}")]
    RewriteCapExceeded { cap: u64 },
    #[error(transparent)]
    Dialect(#[from] DialectError),
}

/// Every enabled rule instance of a system, in a fixed rule order, with
/// duplicate successors removed.
pub fn transitions(sys: &System) -> Vec<Transition> {
    let mut out: Vec<Transition> = vec![];
    for agent in &sys.agents {
        out.extend(coap::devsend(sys, &agent.id));
    }
    for idx in 0..sys.net.output.len() {
        out.extend(coap::rcv(sys, idx));
    }
    for agent in &sys.agents {
        if let Some(e) = agent.endpoint_attrs() {
            for idx in 0..e.w4_ack.len() {
                out.extend(coap::ack_timeout(sys, &agent.id, idx));
            }
        }
    }
    for idx in 0..sys.net.input.len() {
        out.extend(coap::net_move(sys, idx));
    }
    out.extend(attack::attack_transitions(sys));
    out.extend(attack::mcx_transitions(sys));
    for agent in &sys.agents {
        out.extend(dialect::local_net_moves(sys, &agent.id));
        out.extend(dialect::ddevsend_transitions(sys, &agent.id));
    }
    for idx in 0..sys.net.output.len() {
        out.extend(dialect::ddevrcv(sys, idx));
    }
    out.extend(coap::tick(sys));

    let mut seen: HashMap<&System, ()> = HashMap::new();
    let mut keep = vec![true; out.len()];
    for (i, t) in out.iter().enumerate() {
        if seen.contains_key(&t.next) {
            keep[i] = false;
        } else {
            seen.insert(&t.next, ());
        }
    }
    let mut it = keep.iter();
    out.retain(|_| *it.next().unwrap());
    out
}

/// A configuration with no enabled rule instance.
pub fn terminal(sys: &System) -> bool {
    transitions(sys).is_empty()
}

/// Follow one arbitrary-but-deterministic transition for `steps` steps (or
/// until terminal when `steps` is `None`, guarded by `step_cap`).
pub fn rewrite(
    sys: &System,
    steps: Option<u64>,
    step_cap: u64,
) -> Result<(System, u64), SearchError> {
    let mut current = sys.clone().canonical();
    let mut taken = 0u64;
    let mut since_tick = 0u64;
    loop {
        if let Some(n) = steps {
            if taken >= n {
                return Ok((current, taken));
            }
        }
        if taken >= step_cap {
            return Err(SearchError::RewriteCapExceeded { cap: step_cap });
        }
        let mut ts = transitions(&current);
        if ts.is_empty() {
            return Ok((current, taken));
        }
        let t = ts.remove(0);
        // Time divergence guard: only finitely many instantaneous steps may
        // separate ticks.
        if matches!(t.label, Label::Tick { .. }) {
            since_tick = 0;
        } else {
            since_tick += 1;
            assert!(
                since_tick < 100_000,
                "instantaneous run exceeded bound: time divergence"
            );
        }
        current = t.next;
        taken += 1;
    }
}

/// What counts as a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Terminal states satisfying the goal (`=>!`).
    Final,
    /// Every reachable non-initial state satisfying the goal (`=>+`).
    ReachablePlus,
}

#[derive(Debug, Clone)]
pub struct SearchQuery {
    pub initial: System,
    pub mode: SearchMode,
    pub bound: Option<usize>,
    pub goal: PropertyExpr,
    /// Restrict solutions to states where the attacker has no capabilities
    /// left (the all-capabilities-used search pattern).
    pub require_caps_exhausted: bool,
    /// Apply the dialect transform to the initial system before exploring.
    pub dialected: bool,
    pub max_states: usize,
    /// Assert the mte trichotomy on every expanded state.
    pub debug_invariants: bool,
    pub workers: usize,
}

impl SearchQuery {
    pub fn new(initial: System, mode: SearchMode, goal: PropertyExpr) -> SearchQuery {
        SearchQuery {
            initial,
            mode,
            bound: None,
            goal,
            require_caps_exhausted: false,
            dialected: false,
            max_states: 1_000_000,
            debug_invariants: false,
            workers: 1,
        }
    }

    pub fn bounded(mut self, n: usize) -> SearchQuery {
        self.bound = Some(n);
        self
    }

    pub fn caps_exhausted(mut self) -> SearchQuery {
        self.require_caps_exhausted = true;
        self
    }

    pub fn dialected(mut self) -> SearchQuery {
        self.dialected = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Discovery index of the solution state.
    pub state_ix: usize,
    pub system: System,
    pub log: Vec<LogItem>,
}

struct Node {
    sys: System,
    parent: Option<(usize, Label)>,
}

pub struct SearchResult {
    pub solutions: Vec<Solution>,
    /// Distinct states discovered up to and including the last solution, or
    /// the whole explored set when there are none.
    pub visited: usize,
    /// Total distinct states discovered.
    pub explored: usize,
    nodes: Vec<Node>,
}

impl SearchResult {
    /// The labelled path from the initial state to a solution.
    pub fn witness_trace(&self, ix: usize) -> Result<Vec<(Label, System)>, SearchError> {
        let sol = self
            .solutions
            .get(ix)
            .ok_or(SearchError::SolutionIndexOutOfRange {
                ix,
                count: self.solutions.len(),
            })?;
        let mut steps = vec![];
        let mut at = sol.state_ix;
        while let Some((parent, label)) = self.nodes[at].parent.clone() {
            steps.push((label, self.nodes[at].sys.clone()));
            at = parent;
        }
        steps.reverse();
        Ok(steps)
    }
}

fn caps_exhausted(sys: &System) -> bool {
    match sys.attacker() {
        Some((_, att)) => att.caps.is_empty(),
        None => true,
    }
}

/// Reachable-state shape assertion: the mte value, the enabled core rules and
/// terminality must line up. Attacker moves, net moves and anytime deliveries
/// are timing-independent and exempt.
pub fn assert_trichotomy(sys: &System) {
    let rcv0 = sys.net.output.iter().any(|d| {
        d.delay == 0
            && !d.anytime
            && sys
                .agent(&d.msg.tgt)
                .is_some_and(|a| !matches!(a.kind, AgentKind::Attacker(_)))
    });
    let input0 = sys.net.input.iter().any(|d| d.delay == 0 && !d.anytime);
    let mut ack0 = false;
    let mut sendable = false;
    let mut local = false;
    for agent in &sys.agents {
        if let Some(e) = agent.endpoint_attrs() {
            ack0 |= e.w4_ack.iter().any(|d| d.delay == 0);
            if let Some(AMsgItem::Msg(_)) = e.send_reqs.first() {
                sendable |= e.snd_ctr == 0 && e.w4_ack.len() as u64 <= e.cfg("w4AckBd");
            }
        }
        if let Some(w) = agent.as_wrapper() {
            local |= !w.local_net.is_empty();
        }
    }
    let any_core = rcv0 | input0 | ack0 | sendable | local;
    match coap::mte(sys) {
        TimeBound::Finite(0) => assert!(
            any_core,
            "trichotomy violated: mte = 0 but no core rule enabled"
        ),
        TimeBound::Finite(_) | TimeBound::Infinite => assert!(
            !any_core,
            "trichotomy violated: nonzero mte with a core rule enabled"
        ),
    }
}

/// Breadth-first exhaustive reachability with canonical-state deduplication.
///
/// States are numbered in discovery order; the reported `visited` count is
/// the number of states discovered up to the last solution, matching the
/// convention of reading the state number of the final reported solution.
pub fn search(q: &SearchQuery) -> Result<SearchResult, SearchError> {
    let initial = if q.dialected {
        dialect::dialect(&q.initial)?
    } else {
        q.initial.clone().canonical()
    };

    let mut nodes: Vec<Node> = vec![Node {
        sys: initial.clone(),
        parent: None,
    }];
    let mut index: HashMap<System, usize> = HashMap::from([(initial, 0usize)]);
    let mut queue: VecDeque<usize> = VecDeque::from([0usize]);
    let mut solutions: Vec<Solution> = vec![];
    let bound = q.bound.unwrap_or(usize::MAX);

    let pool = (q.workers > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(q.workers)
            .build()
            .expect("worker pool")
    });

    let accept = |sys: &System, goal: &PropertyExpr| {
        goal.eval(sys) && (!q.require_caps_exhausted || caps_exhausted(sys))
    };

    'outer: while !queue.is_empty() {
        // One BFS level at a time; parallel expansion preserves the
        // sequential discovery order because results merge in id order.
        let level: Vec<usize> = queue.drain(..).collect();
        let expand = |&id: &usize| {
            let sys = &nodes[id].sys;
            if q.debug_invariants {
                assert_trichotomy(sys);
            }
            transitions(sys)
        };
        let expanded: Vec<Vec<Transition>> = match &pool {
            Some(pool) => pool.install(|| {
                use rayon::prelude::*;
                level.par_iter().map(expand).collect()
            }),
            None => level.iter().map(expand).collect(),
        };
        for (&id, ts) in level.iter().zip(expanded) {
            if q.mode == SearchMode::Final && ts.is_empty() {
                let sys = &nodes[id].sys;
                if accept(sys, &q.goal) {
                    solutions.push(Solution {
                        state_ix: id,
                        system: sys.clone(),
                        log: sys.log.clone().unwrap_or_default(),
                    });
                    if solutions.len() >= bound {
                        break 'outer;
                    }
                }
            }
            for t in ts {
                if index.contains_key(&t.next) {
                    continue;
                }
                let new_id = nodes.len();
                index.insert(t.next.clone(), new_id);
                nodes.push(Node {
                    sys: t.next,
                    parent: Some((id, t.label)),
                });
                queue.push_back(new_id);
                if nodes.len() > q.max_states {
                    return Err(SearchError::StateCapExceeded {
                        explored: nodes.len(),
                        solutions_so_far: solutions.len(),
                    });
                }
                if q.mode == SearchMode::ReachablePlus {
                    let sys = &nodes[new_id].sys;
                    if accept(sys, &q.goal) {
                        solutions.push(Solution {
                            state_ix: new_id,
                            system: sys.clone(),
                            log: sys.log.clone().unwrap_or_default(),
                        });
                        if solutions.len() >= bound {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    let visited = match solutions.last() {
        Some(s) => s.state_ix + 1,
        None => nodes.len(),
    };
    Ok(SearchResult {
        solutions,
        visited,
        explored: nodes.len(),
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::props::{parse_goal, LogPat};
    use crate::scenarios::*;

    #[test]
    fn transitions_match_hand_enumeration() {
        // Oracle: a state with two delayed net messages, nothing else
        // pending, enables exactly the two net moves plus one tick.
        let mut sys = i_sys0();
        if let AgentKind::Endpoint(e) = &mut sys.agent_mut("dev0").unwrap().kind {
            e.send_reqs.clear();
        }
        let mk = |mid: &str| {
            DelayedMessage::at(
                Message::plain(
                    "dev1",
                    "dev0",
                    Content {
                        head: Head {
                            msg_type: MsgType::Non,
                            code: "0.01".into(),
                            mid: mid.into(),
                        },
                        token: format!("{mid}-t"),
                        options: vec![Opt::uri_path("door")],
                        body: Body::Empty,
                    },
                ),
                3,
            )
        };
        sys.net.input.push(mk("a-m0"));
        sys.net.input.push(mk("b-m0"));
        let sys = sys.canonical();
        let ts = transitions(&sys);
        let mut labels: Vec<_> = ts
            .iter()
            .map(|t| match &t.label {
                Label::NetMove { .. } => "net",
                Label::Tick { .. } => "tick",
                other => panic!("unexpected rule {other}"),
            })
            .collect();
        labels.sort();
        assert_eq!(labels, vec!["net", "net", "tick"]);
    }

    #[test]
    fn fresh_client_server_state_has_one_devsend() {
        let ts = transitions(&i_sys0());
        assert_eq!(ts.len(), 1);
        assert!(matches!(ts[0].label, Label::DevSend { .. }));
    }

    #[test]
    fn rewrite_zero_steps_is_identity() {
        let sys = i_sys0();
        let (out, taken) = rewrite(&sys, Some(0), 1000).unwrap();
        assert_eq!(out, sys);
        assert_eq!(taken, 0);
    }

    #[test]
    fn rewrite_runs_i_sys0_to_locked_door() {
        let (out, _) = rewrite(&i_sys0(), None, 100_000).unwrap();
        assert!(terminal(&out));
        assert!(crate::props::check_rsrc(&out, "dev1", "door", "lock"));
    }

    #[test]
    fn rewrite_runs_bridge_round_to_idle() {
        let (out, _) = rewrite(&br_init(), None, 100_000).unwrap();
        assert!(terminal(&out));
        assert!(crate::props::has_av(&out, "bctl", "status", "idle"));
        assert!(crate::props::check_rsrc(&out, "br", "bridge", "close"));
        assert!(crate::props::check_rsrc(&out, "ga", "gate", "open"));
    }

    #[test]
    fn i_sys0_cannot_end_unlocked() {
        let goal = parse_goal("checkRsrc dev1 door unlock").unwrap();
        let q = SearchQuery::new(i_sys0(), SearchMode::Final, goal).bounded(1);
        let r = search(&q).unwrap();
        assert!(r.solutions.is_empty());
    }

    #[test]
    fn request_drop_attack_has_two_outcomes() {
        let goal =
            parse_goal("and (not (hasRspTSnt dev1 dev0 putN)) (rspPend dev0 dev1 putN)").unwrap();
        let q = SearchQuery::new(ca_fig1_2(5, 0), SearchMode::Final, goal).caps_exhausted();
        let r = search(&q).unwrap();
        assert_eq!(r.solutions.len(), 2);
        assert_eq!(r.visited, 7);
    }

    #[test]
    fn witness_traces_replay_to_their_solutions() {
        let goal = PropertyExpr::SubLil {
            pats: vec![
                LogPat::new("dev1", "door", "lock"),
                LogPat::new("dev1", "door", "unlock"),
            ],
        };
        let q = SearchQuery::new(i_sys2(), SearchMode::Final, goal);
        let r = search(&q).unwrap();
        assert!(!r.solutions.is_empty());
        for (ix, sol) in r.solutions.iter().enumerate() {
            let trace = r.witness_trace(ix).unwrap();
            let mut at = if q.dialected {
                unreachable!()
            } else {
                q.initial.clone().canonical()
            };
            for (label, next) in &trace {
                let ts = transitions(&at);
                let step = ts
                    .iter()
                    .find(|t| t.next == *next)
                    .unwrap_or_else(|| panic!("missing edge for {label}"));
                assert_eq!(&step.label, label);
                at = step.next.clone();
            }
            assert_eq!(at, sol.system);
        }
        assert!(r.witness_trace(r.solutions.len()).is_err());
    }

    #[test]
    fn search_is_deterministic_and_worker_independent() {
        let goal = parse_goal("checkRsrc dev1 door lock").unwrap();
        let base = SearchQuery::new(ra_r1(5, 0, 10, false), SearchMode::Final, goal);
        let a = search(&base).unwrap();
        let b = search(&base).unwrap();
        let mut par = base.clone();
        par.workers = 4;
        let c = search(&par).unwrap();
        for other in [&b, &c] {
            assert_eq!(a.visited, other.visited);
            assert_eq!(
                a.solutions.iter().map(|s| &s.system).collect::<Vec<_>>(),
                other
                    .solutions
                    .iter()
                    .map(|s| &s.system)
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn state_cap_reports_partial_counts() {
        let goal = parse_goal("checkRsrc dev1 door lock").unwrap();
        let mut q = SearchQuery::new(ra_r1(5, 0, 10, false), SearchMode::Final, goal);
        q.max_states = 10;
        match search(&q) {
            Err(SearchError::StateCapExceeded { explored, .. }) => assert!(explored > 10),
            other => panic!(
                "expected a state-cap error, got {:?}",
                other.map(|r| r.explored)
            ),
        }
    }

    /// Independent depth-bounded enumeration: plain recursive exploration
    /// with its own bookkeeping, used to cross-check the search results.
    fn dfs_terminals(sys: &System, limit: usize) -> Vec<System> {
        fn go(
            sys: System,
            seen: &mut std::collections::HashSet<System>,
            out: &mut Vec<System>,
            limit: usize,
        ) {
            if seen.contains(&sys) || seen.len() > limit {
                return;
            }
            seen.insert(sys.clone());
            let ts = transitions(&sys);
            if ts.is_empty() {
                out.push(sys);
                return;
            }
            for t in ts {
                go(t.next, seen, out, limit);
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = vec![];
        go(sys.clone().canonical(), &mut seen, &mut out, limit);
        out
    }

    #[test]
    fn bfs_agrees_with_independent_enumeration() {
        for (sys, goal_text) in [
            (i_sys0(), "checkRsrc dev1 door unlock"),
            (
                ca_fig1_2(5, 0),
                "and (not (hasRspTSnt dev1 dev0 putN)) (rspPend dev0 dev1 putN)",
            ),
        ] {
            let goal = parse_goal(goal_text).unwrap();
            let mut q = SearchQuery::new(sys.clone(), SearchMode::Final, goal.clone());
            q.require_caps_exhausted = true;
            let r = search(&q).unwrap();
            let mut expected: Vec<System> = dfs_terminals(&sys, 100_000)
                .into_iter()
                .filter(|s| goal.eval(s) && caps_exhausted(s))
                .collect();
            expected.sort();
            expected.dedup();
            let mut got: Vec<System> = r.solutions.iter().map(|s| s.system.clone()).collect();
            got.sort();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn trichotomy_holds_across_a_small_search() {
        let goal = parse_goal("checkRsrc dev1 door unlock").unwrap();
        let mut q = SearchQuery::new(i_sys2(), SearchMode::Final, goal);
        q.debug_invariants = true;
        search(&q).unwrap();
    }
}
