//! Actions, dynamic knowledge bases and the transition relation.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::kb::{alph, ABox, Assertion, ProblemSpec, Symbol, TBox};
use crate::query::{Atom, ConjunctiveQuery, Substitution, UnionQuery};
use crate::reasoner::{default_depth_bound, Reasoner, ReasonerError, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("action {action}: effect variable ?{variable} does not occur in the guard")]
    FreeEffectVariable { action: Symbol, variable: Symbol },
    #[error("action {action}: parameters must be exactly the guard variables")]
    ParameterMismatch { action: Symbol },
    #[error("action {action}: effect {effect} is not grounded by {theta}")]
    NonGroundEffect { action: Symbol, effect: Atom, theta: Substitution },
}

/// `name(params) : guard ⇝ effect`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Action {
    pub name: Symbol,
    pub params: Vec<Symbol>,
    pub guard: ConjunctiveQuery,
    pub effect: Atom,
}

impl Action {
    pub fn new(
        name: impl Into<Symbol>,
        params: Vec<Symbol>,
        guard: ConjunctiveQuery,
        effect: Atom,
    ) -> Result<Self, ActionError> {
        let name = name.into();
        let guard_vars = guard.vars();
        if let Some(v) = effect.vars().find(|v| !guard_vars.contains(*v)) {
            return Err(ActionError::FreeEffectVariable { action: name, variable: v.clone() });
        }
        let param_set: BTreeSet<Symbol> = params.iter().cloned().collect();
        if param_set.len() != params.len() || param_set != guard_vars {
            return Err(ActionError::ParameterMismatch { action: name });
        }
        Ok(Action { name, params, guard, effect })
    }

    /// Ground effect under `theta`.
    pub fn instantiate(&self, theta: &Substitution) -> Result<Assertion, ActionError> {
        let e = theta.apply_atom(&self.effect);
        Assertion::from_atom(&e).ok_or_else(|| ActionError::NonGroundEffect {
            action: self.name.clone(),
            effect: self.effect.clone(),
            theta: theta.clone(),
        })
    }

    pub fn kb_syntax(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|p| format!("?{p}")).collect();
        format!("{}({}) : {} => {}", self.name, params.join(","), self.guard.kb_syntax(), self.effect)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<&str> = self.params.iter().map(Symbol::as_str).collect();
        write!(f, "{}({}) : {} ⇝ {}", self.name, params.join(","), self.guard, self.effect)
    }
}

/// True iff the effect predicate is not the conclusion of a simple join axiom.
pub fn well_formed(act: &Action, t: &TBox) -> bool {
    t.sj().iter().all(|sj| sj.role != act.effect.predicate)
}

/// `a ∪ {effect·theta}`.
pub fn apply(act: &Action, theta: &Substitution, a: &ABox) -> Result<ABox, ActionError> {
    Ok(a.with(act.instantiate(theta)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DkbError {
    #[error("initial ABox is inconsistent: {0}")]
    InconsistentInitial(Violation),
    #[error("action {0} is not well-formed: its effect predicate is concluded by a simple join axiom")]
    IllFormedAction(Symbol),
    #[error("duplicate action name {0}")]
    DuplicateAction(Symbol),
}

/// `⟨T, A0, Γ⟩`.
#[derive(Clone, Debug)]
pub struct Dkb {
    tbox: Arc<TBox>,
    initial: ABox,
    actions: Vec<Action>,
}

impl Dkb {
    pub fn new(tbox: TBox, initial: ABox, actions: Vec<Action>) -> Result<Self, DkbError> {
        let mut names = BTreeSet::new();
        for act in &actions {
            if !names.insert(act.name.clone()) {
                return Err(DkbError::DuplicateAction(act.name.clone()));
            }
            if !well_formed(act, &tbox) {
                return Err(DkbError::IllFormedAction(act.name.clone()));
            }
        }
        let max_guard = actions.iter().map(|a| a.guard.len()).max().unwrap_or(0);
        let r = Reasoner::new(tbox.clone(), default_depth_bound(&tbox, max_guard));
        if let Some(v) = r.violation(&initial) {
            return Err(DkbError::InconsistentInitial(v));
        }
        Ok(Dkb { tbox: Arc::new(tbox), initial, actions })
    }

    pub fn tbox(&self) -> &TBox {
        &self.tbox
    }

    pub fn shared_tbox(&self) -> Arc<TBox> {
        Arc::clone(&self.tbox)
    }

    pub fn initial(&self) -> &ABox {
        &self.initial
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, name: &Symbol) -> Option<&Action> {
        self.actions.iter().find(|a| &a.name == name)
    }
}

/// `⟨T, A0, Γ, g⟩`.
#[derive(Clone, Debug)]
pub struct PlanningProblem {
    pub dkb: Dkb,
    pub goal: UnionQuery,
}

impl PlanningProblem {
    pub fn new(dkb: Dkb, goal: UnionQuery) -> Self {
        PlanningProblem { dkb, goal }
    }

    pub fn from_spec(spec: ProblemSpec) -> Result<Self, DkbError> {
        Ok(PlanningProblem { dkb: Dkb::new(spec.tbox, spec.abox, spec.actions)?, goal: spec.goal })
    }

    pub fn to_spec(&self) -> ProblemSpec {
        ProblemSpec {
            tbox: self.dkb.tbox().clone(),
            abox: self.dkb.initial().clone(),
            actions: self.dkb.actions().to_vec(),
            goal: self.goal.clone(),
        }
    }

    /// Goal predicates missing from the problem's alphabet (a warning, not an error).
    pub fn unknown_goal_predicates(&self) -> BTreeSet<Symbol> {
        let mut known = alph(self.dkb.tbox(), self.dkb.initial());
        for a in self.dkb.actions() {
            known.insert(a.effect.predicate.clone());
            known.extend(a.guard.predicates());
        }
        self.goal.predicates().difference(&known).cloned().collect()
    }

    /// Longest guard or goal disjunct.
    pub fn max_query_len(&self) -> usize {
        let guards = self.dkb.actions().iter().map(|a| a.guard.len()).max().unwrap_or(0);
        guards.max(self.goal.max_len())
    }

    /// Fresh reasoner with the default depth bound for this problem.
    pub fn reasoner(&self) -> Reasoner {
        Reasoner::new(self.dkb.shared_tbox(), default_depth_bound(self.dkb.tbox(), self.max_query_len()))
    }
}

/// `⟨action, ϑ, A′⟩`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transition {
    pub action: Symbol,
    pub subst: Substitution,
    pub target: ABox,
}

/// One transition per action and certain answer of its guard. Successors are not
/// consistency-filtered.
pub fn next(reasoner: &Reasoner, a: &ABox, gamma: &[Action]) -> Result<Vec<Transition>, ReasonerError> {
    let sat = reasoner.saturation(a);
    let mut out = Vec::new();
    for act in gamma {
        for theta in sat.ans_cq(&act.guard)? {
            let target = apply(act, &theta, a).expect("guard answers bind every parameter");
            out.push(Transition { action: act.name.clone(), subst: theta, target });
        }
    }
    Ok(out)
}
