//! Planning graphs, plans, and the visit loop shared by the forward planners.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use crate::dkb::{Action, PlanningProblem, Transition};
use crate::kb::{ABox, Symbol};
use crate::query::Substitution;
use crate::reasoner::{Reasoner, ReasonerError};

pub type StateId = usize;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Strategy {
    /// Breadth-first.
    #[default]
    Fifo,
    /// Depth-first.
    Lifo,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Mode {
    #[default]
    AllPlans,
    FirstPlan,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SearchConfig {
    pub strategy: Strategy,
    pub mode: Mode,
    /// Abandon the run once this much wall time has passed.
    pub time_limit: Option<Duration>,
    /// Abandon the run once this many transitions have been recorded.
    pub edge_limit: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct RunMetrics {
    /// |P|
    pub edges: usize,
    /// |V|
    pub visited: usize,
    /// Inc
    pub inconsistent: usize,
    pub elapsed: Duration,
    /// Wall time including any preceding phase (equal to `elapsed` for single-phase runs).
    pub total_elapsed: Duration,
    /// The time or state budget ran out.
    pub timed_out: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StateStatus {
    /// Generated but never popped.
    Unvisited,
    Expanded,
    Goal,
    Inconsistent,
}

/// Transition triple `⟨source, action, ϑ⟩` with its target id cached.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Edge {
    pub source: StateId,
    pub action: Symbol,
    pub subst: Substitution,
    pub target: StateId,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Step {
    pub action: Symbol,
    pub subst: Substitution,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.action)?;
        for (i, (v, t)) in self.subst.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "?{v}={t}")?;
        }
        f.write_str(")")
    }
}

/// Sequence of action instantiations.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Plan(pub Vec<Step>);

impl Plan {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn action_names(&self) -> Vec<&str> {
        self.0.iter().map(|s| s.action.as_str()).collect()
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PlanningGraph {
    states: Vec<ABox>,
    status: Vec<StateStatus>,
    index: HashMap<ABox, StateId>,
    edges: Vec<Edge>,
}

impl PlanningGraph {
    fn new(root: ABox) -> Self {
        let mut g = PlanningGraph { states: Vec::new(), status: Vec::new(), index: HashMap::new(), edges: Vec::new() };
        g.intern(root);
        g
    }

    fn intern(&mut self, a: ABox) -> StateId {
        if let Some(&id) = self.index.get(&a) {
            return id;
        }
        let id = self.states.len();
        self.index.insert(a.clone(), id);
        self.states.push(a);
        self.status.push(StateStatus::Unvisited);
        id
    }

    pub fn root(&self) -> StateId {
        0
    }

    pub fn root_state(&self) -> &ABox {
        &self.states[0]
    }

    pub fn state(&self, id: StateId) -> &ABox {
        &self.states[id]
    }

    pub fn status(&self, id: StateId) -> StateStatus {
        self.status[id]
    }

    pub fn id_of(&self, a: &ABox) -> Option<StateId> {
        self.index.get(a).copied()
    }

    /// Every state generated during the run, in generation order.
    pub fn states(&self) -> &[ABox] {
        &self.states
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// The root plus every state an edge touches.
    pub fn graph_states(&self) -> Vec<StateId> {
        let mut ids: BTreeSet<StateId> = self.edges.iter().flat_map(|e| [e.source, e.target]).collect();
        ids.insert(self.root());
        ids.into_iter().collect()
    }

    /// Edge triples keyed by source ABox; equal sets mean equal graphs.
    pub fn triples(&self) -> BTreeSet<(ABox, Symbol, Substitution)> {
        self.edges.iter().map(|e| (self.states[e.source].clone(), e.action.clone(), e.subst.clone())).collect()
    }

    /// Target of `edge` recomputed from its triple.
    pub fn target_of(&self, edge: &Edge, gamma: &[Action]) -> Option<ABox> {
        let act = gamma.iter().find(|a| a.name == edge.action)?;
        crate::dkb::apply(act, &edge.subst, &self.states[edge.source]).ok()
    }

    fn outgoing(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.source].push(i);
        }
        out
    }

    /// Whether following `steps` from the root along graph edges ends in a goal state.
    pub fn is_plan(&self, steps: &[Step]) -> bool {
        let out = self.outgoing();
        let mut at = self.root();
        for s in steps {
            let Some(&e) =
                out[at].iter().find(|&&e| self.edges[e].action == s.action && self.edges[e].subst == s.subst)
            else {
                return false;
            };
            at = self.edges[e].target;
        }
        !steps.is_empty() && self.status[at] == StateStatus::Goal
    }

    /// Number of root-to-goal paths recorded during the run, saturating at `u128::MAX`.
    pub fn count_plans(&self) -> u128 {
        let out = self.outgoing();
        let mut memo: Vec<Option<u128>> = vec![None; self.states.len()];
        let mut on_path = vec![false; self.states.len()];
        fn walk(
            g: &PlanningGraph,
            out: &[Vec<usize>],
            id: StateId,
            memo: &mut [Option<u128>],
            on_path: &mut [bool],
        ) -> u128 {
            if let Some(n) = memo[id] {
                return n;
            }
            on_path[id] = true;
            let mut n: u128 = u128::from(g.status[id] == StateStatus::Goal && id != g.root());
            for &e in &out[id] {
                let t = g.edges[e].target;
                if !on_path[t] {
                    n = n.saturating_add(walk(g, out, t, memo, on_path));
                }
            }
            on_path[id] = false;
            memo[id] = Some(n);
            n
        }
        walk(self, &out, self.root(), &mut memo, &mut on_path)
    }
}

struct PlanWalk<'g> {
    graph: &'g PlanningGraph,
    out: &'g [Vec<usize>],
    is_goal: &'g [bool],
    max_len: Option<usize>,
    path: Vec<Step>,
    on_path: Vec<bool>,
    plans: BTreeSet<Plan>,
}

impl PlanWalk<'_> {
    fn visit(&mut self, id: StateId) {
        if self.is_goal[id] {
            self.plans.insert(Plan(self.path.clone()));
        }
        if self.max_len.is_some_and(|m| self.path.len() >= m) {
            return;
        }
        self.on_path[id] = true;
        for &e in &self.out[id] {
            let edge = &self.graph.edges[e];
            if self.on_path[edge.target] {
                continue;
            }
            self.path.push(Step { action: edge.action.clone(), subst: edge.subst.clone() });
            self.visit(edge.target);
            self.path.pop();
        }
        self.on_path[id] = false;
    }
}

/// Edges `⟨A′, act, ϑ⟩` of `p` whose target `A′ ∪ {effect·ϑ}` equals `a`.
pub fn edges_to<'g>(p: &'g PlanningGraph, gamma: &[Action], a: &ABox) -> Vec<&'g Edge> {
    p.edges.iter().filter(|e| p.target_of(e, gamma).as_ref() == Some(a)).collect()
}

/// All simple paths from the root to a goal state, optionally capped in length.
pub fn extract_plans(p: &PlanningGraph, problem: &PlanningProblem, max_len: Option<usize>) -> BTreeSet<Plan> {
    let reasoner = problem.reasoner();
    let is_goal: Vec<bool> = (0..p.states.len())
        .map(|id| {
            id != p.root()
                && p.status[id] != StateStatus::Inconsistent
                && reasoner.saturation(&p.states[id]).satisfies(&problem.goal)
        })
        .collect();
    let out = p.outgoing();
    let mut walk = PlanWalk {
        graph: p,
        out: &out,
        is_goal: &is_goal,
        max_len,
        path: Vec::new(),
        on_path: vec![false; p.states.len()],
        plans: BTreeSet::new(),
    };
    walk.visit(p.root());
    walk.plans
}

/// True iff a proper, non-empty, not necessarily contiguous subsequence of `plan` is in `plans`.
pub fn redundant(plan: &Plan, plans: &BTreeSet<Plan>) -> bool {
    let n = plan.len();
    if n < 2 {
        return false;
    }
    if n <= 20 {
        let full = (1u32 << n) - 1;
        return (1..full).any(|mask| {
            let sub: Vec<Step> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| plan.0[i].clone()).collect();
            plans.contains(&Plan(sub))
        });
    }
    plans.iter().any(|q| q.len() < n && !q.is_empty() && is_subsequence(&q.0, &plan.0))
}

fn is_subsequence(short: &[Step], long: &[Step]) -> bool {
    let mut it = long.iter();
    short.iter().all(|s| it.any(|l| l == s))
}

/// Visit loop shared by forward planning and plan instantiation; `successors` plays the
/// role of the successor function.
pub(crate) fn search<F>(
    problem: &PlanningProblem,
    reasoner: &Reasoner,
    cfg: &SearchConfig,
    mut successors: F,
) -> (PlanningGraph, RunMetrics)
where
    F: FnMut(&Reasoner, &ABox) -> Result<Vec<Transition>, ReasonerError>,
{
    let start = Instant::now();
    let mut g = PlanningGraph::new(problem.dkb.initial().clone());
    let mut frontier: VecDeque<StateId> = VecDeque::from([g.root()]);
    let mut queued: HashSet<StateId> = HashSet::from([g.root()]);
    let mut visited: HashSet<StateId> = HashSet::new();
    let mut edges: Vec<Option<Edge>> = Vec::new();
    let mut seen_edges: HashSet<(StateId, Symbol, Substitution)> = HashSet::new();
    let mut incoming: HashMap<StateId, Vec<usize>> = HashMap::new();
    let mut inconsistent = 0;
    let mut timed_out = false;

    loop {
        let popped = match cfg.strategy {
            Strategy::Fifo => frontier.pop_front(),
            Strategy::Lifo => frontier.pop_back(),
        };
        let Some(id) = popped else { break };
        if cfg.time_limit.is_some_and(|limit| start.elapsed() > limit)
            || cfg.edge_limit.is_some_and(|limit| edges.len() > limit)
        {
            timed_out = true;
            break;
        }
        queued.remove(&id);
        visited.insert(id);
        let state = g.states[id].clone();
        let sat = reasoner.saturation(&state);
        if !sat.is_consistent() {
            g.status[id] = StateStatus::Inconsistent;
            inconsistent += 1;
            for e in incoming.remove(&id).unwrap_or_default() {
                edges[e] = None;
            }
            continue;
        }
        if sat.satisfies(&problem.goal) {
            g.status[id] = StateStatus::Goal;
            if cfg.mode == Mode::FirstPlan {
                break;
            }
            continue;
        }
        g.status[id] = StateStatus::Expanded;
        let transitions = successors(reasoner, &state).expect("state checked consistent");
        for tr in transitions {
            if tr.target == state {
                continue;
            }
            let tid = g.intern(tr.target);
            if g.status[tid] == StateStatus::Inconsistent {
                continue;
            }
            if !seen_edges.insert((id, tr.action.clone(), tr.subst.clone())) {
                continue;
            }
            incoming.entry(tid).or_default().push(edges.len());
            edges.push(Some(Edge { source: id, action: tr.action, subst: tr.subst, target: tid }));
            if !visited.contains(&tid) && queued.insert(tid) {
                frontier.push_back(tid);
            }
        }
    }

    g.edges = edges.into_iter().flatten().collect();
    let elapsed = start.elapsed();
    let metrics = RunMetrics {
        edges: g.edges.len(),
        visited: visited.len(),
        inconsistent,
        elapsed,
        total_elapsed: elapsed,
        timed_out,
    };
    (g, metrics)
}
