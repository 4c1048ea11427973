//! Abstract backward planning: goal regression through simple join axioms and action
//! effects.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::dkb::{Action, PlanningProblem};
use crate::kb::{SimpleJoinAxiom, Symbol, Term};
use crate::query::{canonical_form, fresh_renaming, unify, Atom, CanonicalCq, ConjunctiveQuery, Substitution};
use crate::reasoner::Reasoner;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AbstractState {
    /// Query in canonical form.
    pub query: ConjunctiveQuery,
    pub key: CanonicalCq,
    pub initial_satisfied: bool,
}

/// `⟨σ, action, link⟩`: executing `action` with parameters bound through `link` from a
/// state satisfying `σ` moves toward the goal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AbstractPair {
    pub state: usize,
    pub action: Symbol,
    /// Action parameter ↦ term of the state's query.
    pub link: Substitution,
}

/// Edges kept for display only.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum PresentationEdge {
    /// `from` regresses via `action` into `to`.
    Action { from: usize, to: usize, action: Symbol, link: Substitution },
    /// `from` is a simple-join resolvent of `to`.
    SimpleJoin { from: usize, to: usize },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct AbpConfig {
    /// Regressed states with more atoms are dropped (the run is then marked truncated).
    pub max_query_atoms: usize,
    /// Stop after this many states have been visited.
    pub max_states: usize,
}

impl Default for AbpConfig {
    fn default() -> Self {
        AbpConfig { max_query_atoms: 12, max_states: 10_000 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct AbstractPlanningGraph {
    states: Vec<AbstractState>,
    index: HashMap<CanonicalCq, usize>,
    pairs: Vec<AbstractPair>,
    pair_set: HashSet<AbstractPair>,
    edges: Vec<PresentationEdge>,
    edge_set: HashSet<PresentationEdge>,
    goals: Vec<usize>,
    visited: usize,
    truncated: bool,
}

impl AbstractPlanningGraph {
    pub fn states(&self) -> &[AbstractState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &AbstractState {
        &self.states[i]
    }

    pub fn pairs(&self) -> &[AbstractPair] {
        &self.pairs
    }

    pub fn edges(&self) -> &[PresentationEdge] {
        &self.edges
    }

    /// Nodes of the goal disjuncts.
    pub fn goal_states(&self) -> &[usize] {
        &self.goals
    }

    /// States popped and tested against `A0`.
    pub fn visited(&self) -> usize {
        self.visited
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn find(&self, q: &ConjunctiveQuery) -> Option<usize> {
        self.index.get(&canonical_form(q).0).copied()
    }

    /// Interns `q`; returns the node and the renaming into its canonical variables.
    fn node(&mut self, q: &ConjunctiveQuery, initial: impl FnOnce(&ConjunctiveQuery) -> bool) -> (usize, Substitution) {
        let (key, ren) = canonical_form(q);
        if let Some(&i) = self.index.get(&key) {
            return (i, ren);
        }
        let query = key.to_query();
        let initial_satisfied = initial(&query);
        let i = self.states.len();
        self.states.push(AbstractState { query, key: key.clone(), initial_satisfied });
        self.index.insert(key, i);
        (i, ren)
    }

    fn add_pair(&mut self, p: AbstractPair) {
        if self.pair_set.insert(p.clone()) {
            self.pairs.push(p);
        }
    }

    fn add_edge(&mut self, e: PresentationEdge) {
        if self.edge_set.insert(e.clone()) {
            self.edges.push(e);
        }
    }
}

fn replace_at(sigma: &ConjunctiveQuery, i: usize, premise: &ConjunctiveQuery, mgu: &Substitution) -> ConjunctiveQuery {
    let atoms = &sigma.atoms();
    let mut out: Vec<Atom> = atoms[..i].to_vec();
    out.extend(premise.atoms().iter().cloned());
    out.extend(atoms[i + 1..].iter().cloned());
    mgu.apply(&ConjunctiveQuery::new(out)).dedup()
}

/// Resolvents with their unifiers, one per matching atom position.
fn resolve_with(
    sigma: &ConjunctiveQuery,
    premise: &ConjunctiveQuery,
    conclusion: &Atom,
) -> Vec<(ConjunctiveQuery, Substitution)> {
    sigma
        .atoms()
        .iter()
        .enumerate()
        .filter_map(|(i, atom)| unify(conclusion, atom).map(|mgu| (replace_at(sigma, i, premise, &mgu), mgu)))
        .collect()
}

/// Replace one atom of `sigma` unifying with `conclusion` by `premise`, for every such
/// atom. `premise`/`conclusion` must not share variables with `sigma`.
pub fn resolve(sigma: &ConjunctiveQuery, premise: &ConjunctiveQuery, conclusion: &Atom) -> Vec<ConjunctiveQuery> {
    let mut seen = BTreeSet::new();
    resolve_with(sigma, premise, conclusion).into_iter().map(|(q, _)| q).filter(|q| seen.insert(q.clone())).collect()
}

/// Resolves away every atom whose predicate is concluded by a simple join axiom, across
/// all axiom choices. A query without such atoms is returned unchanged.
pub fn fully_resolve(sigma: &ConjunctiveQuery, sj: &BTreeSet<SimpleJoinAxiom>) -> Vec<ConjunctiveQuery> {
    let conclusions: BTreeSet<&Symbol> = sj.iter().map(|s| &s.role).collect();
    let mut work = VecDeque::from([sigma.clone()]);
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    while let Some(q) = work.pop_front() {
        let Some(i) = q.atoms().iter().position(|a| conclusions.contains(&a.predicate)) else {
            if seen.insert(canonical_form(&q).0) {
                out.push(q);
            }
            continue;
        };
        let avoid = q.vars();
        for ax in sj.iter().filter(|s| s.role == q.atoms()[i].predicate) {
            let ren = fresh_renaming(&[Symbol::new("x"), Symbol::new("y")], &avoid);
            let var = |n: &str| ren.get(&Symbol::new(n)).and_then(Term::as_var).cloned().expect("renamed");
            let (x, y) = (var("x"), var("y"));
            if let Some(mgu) = unify(&ax.conclusion(&x, &y), &q.atoms()[i]) {
                work.push_back(replace_at(&q, i, &ax.premise(&x, &y), &mgu));
            }
        }
    }
    out
}

/// Previous abstract states of `sigma` through each action's effect, with parameter links.
pub fn prev_a(sigma: &ConjunctiveQuery, gamma: &[Action]) -> Vec<(ConjunctiveQuery, Symbol, Substitution)> {
    let avoid = sigma.vars();
    let mut out = Vec::new();
    for act in gamma {
        let ren = fresh_renaming(&act.params, &avoid);
        let guard = ren.apply(&act.guard);
        let effect = ren.apply_atom(&act.effect);
        for (q, mgu) in resolve_with(sigma, &guard, &effect) {
            let link = act
                .params
                .iter()
                .map(|p| (p.clone(), mgu.apply_term(&ren.apply_term(&Term::Var(p.clone())))))
                .collect();
            out.push((q, act.name.clone(), link));
        }
    }
    out
}

pub fn abstract_backward_plan(problem: &PlanningProblem) -> AbstractPlanningGraph {
    abstract_backward_plan_with(problem, &problem.reasoner(), &AbpConfig::default())
}

pub fn abstract_backward_plan_with(
    problem: &PlanningProblem,
    reasoner: &Reasoner,
    cfg: &AbpConfig,
) -> AbstractPlanningGraph {
    let a0 = problem.dkb.initial();
    let sj = problem.dkb.tbox().sj();
    let gamma = problem.dkb.actions();
    let initial = |q: &ConjunctiveQuery| reasoner.holds(q, a0);
    let mut g = AbstractPlanningGraph::default();
    let mut visited: HashSet<CanonicalCq> = HashSet::new();
    let mut queued: HashSet<CanonicalCq> = HashSet::new();

    for goal in problem.goal.disjuncts() {
        let (gi, _) = g.node(goal, initial);
        if !g.goals.contains(&gi) {
            g.goals.push(gi);
        }
        let mut frontier: VecDeque<usize> = VecDeque::from([gi]);
        while let Some(si) = frontier.pop_front() {
            let key = g.states[si].key.clone();
            queued.remove(&key);
            if !visited.insert(key) {
                continue;
            }
            if visited.len() > cfg.max_states {
                g.truncated = true;
                break;
            }
            if g.states[si].initial_satisfied {
                continue;
            }
            let sigma = g.states[si].query.clone();
            let resolved: Vec<(ConjunctiveQuery, usize)> = fully_resolve(&sigma, sj)
                .into_iter()
                .map(|q| {
                    let (ri, _) = g.node(&q, initial);
                    (q, ri)
                })
                .collect();
            for (resolved, ri) in resolved {
                if ri != si {
                    g.add_edge(PresentationEdge::SimpleJoin { from: ri, to: si });
                }
                for (prev, action, link) in prev_a(&resolved, gamma) {
                    if prev.len() > cfg.max_query_atoms {
                        g.truncated = true;
                        continue;
                    }
                    let (pi, ren) = g.node(&prev, initial);
                    let link: Substitution = link.iter().map(|(p, t)| (p.clone(), ren.apply_term(t))).collect();
                    g.add_pair(AbstractPair { state: pi, action: action.clone(), link: link.clone() });
                    g.add_edge(PresentationEdge::Action { from: pi, to: ri, action, link });
                    let pkey = &g.states[pi].key;
                    if !visited.contains(pkey) && queued.insert(pkey.clone()) {
                        frontier.push_back(pi);
                    }
                }
            }
        }
    }
    g.visited = visited.len();
    g
}
