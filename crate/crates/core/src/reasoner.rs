//! Chase-based DL-Lite reasoning: saturation, consistency and certain answers.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use parking_lot::Mutex;
use thiserror::Error;

use crate::kb::{ABox, Assertion, Axiom, BasicConcept, RoleExpr, Symbol, TBox, Term};
use crate::query::{ConjunctiveQuery, Substitution, UnionQuery};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonerError {
    #[error("state is inconsistent: {0}")]
    InconsistentState(Violation),
}

/// A fact of the chase; may mention nulls.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Fact {
    Concept(Symbol, Term),
    Role(Symbol, Term, Term),
}

impl Fact {
    fn from_assertion(a: &Assertion) -> Fact {
        match a {
            Assertion::Concept { concept, individual } => {
                Fact::Concept(concept.clone(), Term::Const(individual.clone()))
            }
            Assertion::Role { role, subject, object } => {
                Fact::Role(role.clone(), Term::Const(subject.clone()), Term::Const(object.clone()))
            }
        }
    }

    pub fn to_assertion(&self) -> Option<Assertion> {
        match self {
            Fact::Concept(c, Term::Const(i)) => Some(Assertion::concept(c.clone(), i.clone())),
            Fact::Role(r, Term::Const(s), Term::Const(o)) => Some(Assertion::role(r.clone(), s.clone(), o.clone())),
            _ => None,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Concept(c, t) => write!(f, "{c}({t})"),
            Fact::Role(r, s, o) => write!(f, "{r}({s},{o})"),
        }
    }
}

/// Saturation of an ABox under the positive part of a TBox.
#[derive(Clone, Debug)]
pub struct ChasedABox {
    base: ABox,
    facts: HashSet<Fact>,
    derived: BTreeSet<Fact>,
    members: HashMap<Symbol, BTreeSet<Term>>,
    pairs: HashMap<Symbol, BTreeSet<(Term, Term)>>,
    succ: HashMap<(Symbol, Term), BTreeSet<Term>>,
    pred: HashMap<(Symbol, Term), BTreeSet<Term>>,
    nulls: u32,
}

impl ChasedABox {
    fn empty(base: ABox) -> Self {
        ChasedABox {
            base,
            facts: HashSet::new(),
            derived: BTreeSet::new(),
            members: HashMap::new(),
            pairs: HashMap::new(),
            succ: HashMap::new(),
            pred: HashMap::new(),
            nulls: 0,
        }
    }

    pub fn base(&self) -> &ABox {
        &self.base
    }

    /// Facts added by saturation, never repeating a base assertion.
    pub fn derived(&self) -> &BTreeSet<Fact> {
        &self.derived
    }

    pub fn null_count(&self) -> u32 {
        self.nulls
    }

    pub fn contains(&self, f: &Fact) -> bool {
        self.facts.contains(f)
    }

    pub fn contains_assertion(&self, a: &Assertion) -> bool {
        self.facts.contains(&Fact::from_assertion(a))
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    /// Facts over named constants only, as an ABox.
    pub fn named_fragment(&self) -> ABox {
        self.facts.iter().filter_map(Fact::to_assertion).collect()
    }

    pub fn members(&self, concept: &Symbol) -> impl Iterator<Item = &Term> {
        self.members.get(concept).into_iter().flatten()
    }

    pub fn pairs(&self, role: &Symbol) -> impl Iterator<Item = &(Term, Term)> {
        self.pairs.get(role).into_iter().flatten()
    }

    fn role_neighbours(&self, r: &RoleExpr, t: &Term) -> Option<&BTreeSet<Term>> {
        let index = if r.inverted { &self.pred } else { &self.succ };
        index.get(&(r.name.clone(), t.clone()))
    }

    fn has_member(&self, c: &Symbol, t: &Term) -> bool {
        self.members.get(c).is_some_and(|m| m.contains(t))
    }

    fn satisfies(&self, b: &BasicConcept, t: &Term) -> bool {
        match b {
            BasicConcept::Atomic(c) => self.has_member(c, t),
            BasicConcept::Exists { role, filler } => self.role_neighbours(role, t).is_some_and(|ns| match filler {
                None => !ns.is_empty(),
                Some(c) => ns.iter().any(|n| self.has_member(c, n)),
            }),
        }
    }

    /// Terms `t` with `b(t)`.
    fn instances(&self, b: &BasicConcept) -> BTreeSet<Term> {
        match b {
            BasicConcept::Atomic(c) => self.members(c).cloned().collect(),
            BasicConcept::Exists { role, .. } => self
                .pairs(&role.name)
                .map(|(s, o)| if role.inverted { o.clone() } else { s.clone() })
                .filter(|t| self.satisfies(b, t))
                .collect(),
        }
    }

    fn insert(&mut self, f: Fact) -> bool {
        if !self.facts.insert(f.clone()) {
            return false;
        }
        match &f {
            Fact::Concept(c, t) => {
                self.members.entry(c.clone()).or_default().insert(t.clone());
            }
            Fact::Role(r, s, o) => {
                self.pairs.entry(r.clone()).or_default().insert((s.clone(), o.clone()));
                self.succ.entry((r.clone(), s.clone())).or_default().insert(o.clone());
                self.pred.entry((r.clone(), o.clone())).or_default().insert(s.clone());
            }
        }
        let is_base = f.to_assertion().is_some_and(|a| self.base.contains(&a));
        if !is_base {
            self.derived.insert(f);
        }
        true
    }

    /// All substitutions over named constants embedding `q` into the saturation.
    pub fn answers(&self, q: &ConjunctiveQuery) -> BTreeSet<Substitution> {
        let mut out = BTreeSet::new();
        let mut remaining: Vec<_> = q.atoms().iter().collect();
        self.join(&mut remaining, &mut BTreeMap::new(), &mut |b| {
            out.insert(b.iter().map(|(v, t)| (v.clone(), t.clone())).collect());
            true
        });
        out
    }

    /// Whether `q` has at least one answer. Components that share no variable are
    /// checked independently.
    pub fn has_answer(&self, q: &ConjunctiveQuery) -> bool {
        components(q).into_iter().all(|mut part| {
            let mut found = false;
            self.join(&mut part, &mut BTreeMap::new(), &mut |_| {
                found = true;
                false
            });
            found
        })
    }

    /// Backtracking join; `emit` returns false to stop the search, in which case the
    /// join returns false as well.
    fn join<'q>(
        &self,
        remaining: &mut Vec<&'q crate::query::Atom>,
        binding: &mut BTreeMap<Symbol, Term>,
        emit: &mut dyn FnMut(&BTreeMap<Symbol, Term>) -> bool,
    ) -> bool {
        if remaining.is_empty() {
            return emit(binding);
        }
        let resolve = |t: &Term, b: &BTreeMap<Symbol, Term>| match t {
            Term::Var(v) => b.get(v).cloned(),
            other => Some(other.clone()),
        };
        // Most-bound atom first.
        let pick = (0..remaining.len())
            .max_by_key(|&i| remaining[i].args.iter().filter(|t| resolve(t, binding).is_some()).count())
            .expect("non-empty");
        let atom = remaining.swap_remove(pick);
        let args: Vec<Option<Term>> = atom.args.iter().map(|t| resolve(t, binding)).collect();
        let candidates: Vec<Vec<Term>> = match args.as_slice() {
            [Some(t)] => {
                if self.has_member(&atom.predicate, t) {
                    vec![vec![t.clone()]]
                } else {
                    vec![]
                }
            }
            [None] => self.members(&atom.predicate).filter(|t| t.is_const()).map(|t| vec![t.clone()]).collect(),
            [Some(s), Some(o)] => {
                if self.contains(&Fact::Role(atom.predicate.clone(), s.clone(), o.clone())) {
                    vec![vec![s.clone(), o.clone()]]
                } else {
                    vec![]
                }
            }
            [Some(s), None] => self
                .succ
                .get(&(atom.predicate.clone(), s.clone()))
                .into_iter()
                .flatten()
                .filter(|o| o.is_const())
                .map(|o| vec![s.clone(), o.clone()])
                .collect(),
            [None, Some(o)] => self
                .pred
                .get(&(atom.predicate.clone(), o.clone()))
                .into_iter()
                .flatten()
                .filter(|s| s.is_const())
                .map(|s| vec![s.clone(), o.clone()])
                .collect(),
            [None, None] => self
                .pairs(&atom.predicate)
                .filter(|(s, o)| s.is_const() && o.is_const())
                .map(|(s, o)| vec![s.clone(), o.clone()])
                .collect(),
            _ => vec![],
        };
        for values in candidates {
            let mut bound = Vec::new();
            let mut ok = true;
            for (t, val) in atom.args.iter().zip(&values) {
                if let Term::Var(v) = t {
                    match binding.get(v) {
                        Some(existing) if existing != val => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            binding.insert(v.clone(), val.clone());
                            bound.push(v.clone());
                        }
                    }
                }
            }
            let go_on = !ok || self.join(remaining, binding, emit);
            for v in bound {
                binding.remove(&v);
            }
            if !go_on {
                remaining.push(atom);
                let last = remaining.len() - 1;
                remaining.swap(pick, last);
                return false;
            }
        }
        remaining.push(atom);
        let last = remaining.len() - 1;
        remaining.swap(pick, last);
        true
    }
}

/// Atoms of `q` grouped into classes connected through shared variables.
fn components(q: &ConjunctiveQuery) -> Vec<Vec<&crate::query::Atom>> {
    let mut groups: Vec<(BTreeSet<&Symbol>, Vec<&crate::query::Atom>)> = Vec::new();
    for atom in q.atoms() {
        let vars: BTreeSet<&Symbol> = atom.vars().collect();
        let (mut joined, rest): (Vec<_>, Vec<_>) = groups.into_iter().partition(|(vs, _)| !vs.is_disjoint(&vars));
        let mut merged = (vars, vec![atom]);
        for (vs, atoms) in joined.drain(..) {
            merged.0.extend(vs);
            merged.1.extend(atoms);
        }
        groups = rest;
        groups.push(merged);
    }
    groups.into_iter().map(|(_, atoms)| atoms).collect()
}

/// TBox rules indexed by trigger.
struct Rules<'t> {
    on_concept: HashMap<&'t Symbol, Vec<&'t BasicConcept>>,
    on_role: HashMap<(&'t Symbol, bool), Vec<&'t BasicConcept>>,
    role_incl: HashMap<&'t Symbol, Vec<(&'t RoleExpr, &'t RoleExpr)>>,
    sj_left: HashMap<&'t Symbol, Vec<(&'t Symbol, &'t Symbol)>>,
    sj_right: HashMap<&'t Symbol, Vec<(&'t Symbol, &'t Symbol)>>,
}

impl<'t> Rules<'t> {
    fn new(t: &'t TBox) -> Self {
        let mut r = Rules {
            on_concept: HashMap::new(),
            on_role: HashMap::new(),
            role_incl: HashMap::new(),
            sj_left: HashMap::new(),
            sj_right: HashMap::new(),
        };
        for ax in t.dl() {
            match ax {
                Axiom::ConceptInclusion { lhs, rhs, negated: false } => match lhs {
                    BasicConcept::Atomic(c) => r.on_concept.entry(c).or_default().push(rhs),
                    BasicConcept::Exists { role, .. } => {
                        r.on_role.entry((&role.name, role.inverted)).or_default().push(rhs)
                    }
                },
                Axiom::RoleInclusion { lhs, rhs, negated: false } => {
                    r.role_incl.entry(&lhs.name).or_default().push((lhs, rhs))
                }
                _ => {}
            }
        }
        for sj in t.sj() {
            r.sj_left.entry(&sj.left).or_default().push((&sj.right, &sj.role));
            r.sj_right.entry(&sj.right).or_default().push((&sj.left, &sj.role));
        }
        r
    }
}

/// Restricted chase of `a` under `t`; nulls are created up to generation `depth_bound`.
pub fn saturate(a: &ABox, t: &TBox, depth_bound: u32) -> ChasedABox {
    assert!(depth_bound >= 1, "depth bound must be at least 1");
    let rules = Rules::new(t);
    let mut chase = ChasedABox::empty(a.clone());
    let mut queue: VecDeque<Fact> = VecDeque::new();
    let mut pending: VecDeque<(Term, &BasicConcept)> = VecDeque::new();
    for f in a.iter().map(Fact::from_assertion) {
        if chase.insert(f.clone()) {
            queue.push_back(f);
        }
    }
    loop {
        if let Some(f) = queue.pop_front() {
            let mut new = Vec::new();
            let rhs_at = |rhs: &'_ BasicConcept, at: &Term, new: &mut Vec<Fact>| {
                if let BasicConcept::Atomic(c) = rhs {
                    new.push(Fact::Concept(c.clone(), at.clone()));
                    false
                } else {
                    true
                }
            };
            match &f {
                Fact::Concept(c, x) => {
                    for rhs in rules.on_concept.get(c).into_iter().flatten() {
                        if rhs_at(rhs, x, &mut new) {
                            pending.push_back((x.clone(), *rhs));
                        }
                    }
                    if x.is_const() {
                        for (right, role) in rules.sj_left.get(c).into_iter().flatten() {
                            for y in chase.members(right).filter(|y| y.is_const()) {
                                new.push(Fact::Role((*role).clone(), x.clone(), y.clone()));
                            }
                        }
                        for (left, role) in rules.sj_right.get(c).into_iter().flatten() {
                            for w in chase.members(left).filter(|w| w.is_const()) {
                                new.push(Fact::Role((*role).clone(), w.clone(), x.clone()));
                            }
                        }
                    }
                }
                Fact::Role(p, s, o) => {
                    for (inverted, at) in [(false, s), (true, o)] {
                        for rhs in rules.on_role.get(&(p, inverted)).into_iter().flatten() {
                            if rhs_at(rhs, at, &mut new) {
                                pending.push_back((at.clone(), *rhs));
                            }
                        }
                    }
                    for (lhs, rhs) in rules.role_incl.get(p).into_iter().flatten() {
                        let (a1, a2) = lhs.orient(s, o);
                        let (b1, b2) = rhs.orient(a1, a2);
                        new.push(Fact::Role(rhs.name.clone(), b1.clone(), b2.clone()));
                    }
                }
            }
            for nf in new {
                if chase.insert(nf.clone()) {
                    queue.push_back(nf);
                }
            }
        } else if let Some((at, rhs)) = pending.pop_front() {
            let BasicConcept::Exists { role, filler } = rhs else { continue };
            if chase.satisfies(rhs, &at) || at.generation() >= depth_bound {
                continue;
            }
            let null = Term::Null { id: chase.nulls, generation: at.generation() + 1 };
            chase.nulls += 1;
            let (s, o) = role.orient(at, null.clone());
            let mut new = vec![Fact::Role(role.name.clone(), s, o)];
            if let Some(c) = filler {
                new.push(Fact::Concept(c.clone(), null));
            }
            for nf in new {
                if chase.insert(nf.clone()) {
                    queue.push_back(nf);
                }
            }
        } else {
            break;
        }
    }
    chase
}

/// A violated negative inclusion or functionality assertion.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: Vec<Term>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ws: Vec<String> = self.witness.iter().map(|t| t.to_string()).collect();
        write!(f, "{} at {}", self.axiom, ws.join(", "))
    }
}

/// First violation in axiom order, if any.
pub fn find_violation(chase: &ChasedABox, t: &TBox) -> Option<Violation> {
    for ax in t.dl() {
        match ax {
            Axiom::ConceptInclusion { lhs, rhs, negated: true } => {
                if let Some(x) = chase.instances(lhs).into_iter().find(|x| chase.satisfies(rhs, x)) {
                    return Some(Violation { axiom: ax.clone(), witness: vec![x] });
                }
            }
            Axiom::RoleInclusion { lhs, rhs, negated: true } => {
                for (s, o) in chase.pairs(&lhs.name) {
                    let (a1, a2) = lhs.orient(s, o);
                    let (b1, b2) = rhs.orient(a1, a2);
                    if chase.contains(&Fact::Role(rhs.name.clone(), b1.clone(), b2.clone())) {
                        return Some(Violation { axiom: ax.clone(), witness: vec![a1.clone(), a2.clone()] });
                    }
                }
            }
            Axiom::Functionality(r) => {
                let subjects: BTreeSet<&Term> = chase
                    .pairs(&r.name)
                    .map(|(s, o)| if r.inverted { o } else { s })
                    .filter(|x| x.is_const())
                    .collect();
                for x in subjects {
                    let named: Vec<&Term> =
                        chase.role_neighbours(r, x).into_iter().flatten().filter(|y| y.is_const()).collect();
                    if named.len() >= 2 {
                        let mut witness = vec![x.clone()];
                        witness.extend(named.into_iter().cloned());
                        return Some(Violation { axiom: ax.clone(), witness });
                    }
                }
            }
            _ => {}
        }
    }
    None
}

/// Depth bound that suffices for answering queries of up to `max_query_atoms` atoms and
/// for detecting clashes on nulls.
pub fn default_depth_bound(t: &TBox, max_query_atoms: usize) -> u32 {
    (max_query_atoms.max(t.existential_rhs_count()) + 1) as u32
}

pub fn consistent(a: &ABox, t: &TBox) -> bool {
    find_violation(&saturate(a, t, default_depth_bound(t, 0)), t).is_none()
}

/// Certain answers of `q` over `⟨t, a⟩`.
pub fn ans(q: &UnionQuery, t: &TBox, a: &ABox) -> Result<BTreeSet<Substitution>, ReasonerError> {
    Reasoner::new(t.clone(), default_depth_bound(t, q.max_len())).ans(q, a)
}

/// `a ∈ conc(sigma, t)`.
pub fn holds(sigma: &ConjunctiveQuery, t: &TBox, a: &ABox) -> bool {
    Reasoner::new(t.clone(), default_depth_bound(t, sigma.len())).holds(sigma, a)
}

/// Saturation plus its consistency verdict.
#[derive(Debug)]
pub struct Saturation {
    pub chase: ChasedABox,
    pub violation: Option<Violation>,
}

impl Saturation {
    pub fn is_consistent(&self) -> bool {
        self.violation.is_none()
    }

    pub fn ans_cq(&self, q: &ConjunctiveQuery) -> Result<BTreeSet<Substitution>, ReasonerError> {
        match &self.violation {
            Some(v) => Err(ReasonerError::InconsistentState(v.clone())),
            None => Ok(self.chase.answers(q)),
        }
    }

    pub fn ans(&self, q: &UnionQuery) -> Result<BTreeSet<Substitution>, ReasonerError> {
        let mut out = BTreeSet::new();
        for d in q.disjuncts() {
            out.extend(self.ans_cq(d)?);
        }
        Ok(out)
    }

    pub fn holds(&self, sigma: &ConjunctiveQuery) -> bool {
        self.is_consistent() && self.chase.has_answer(sigma)
    }

    /// Consistent and some disjunct of `q` has an answer.
    pub fn satisfies(&self, q: &UnionQuery) -> bool {
        self.is_consistent() && q.disjuncts().iter().any(|d| self.chase.has_answer(d))
    }
}

const DEFAULT_CACHE_CAPACITY: usize = 50_000;

/// Reasoner bound to one TBox with a shared saturation cache.
pub struct Reasoner {
    tbox: Arc<TBox>,
    depth_bound: u32,
    cache: Mutex<HashMap<ABox, Arc<Saturation>>>,
    capacity: usize,
}

impl Reasoner {
    pub fn new(tbox: impl Into<Arc<TBox>>, depth_bound: u32) -> Self {
        Reasoner { tbox: tbox.into(), depth_bound, cache: Mutex::new(HashMap::new()), capacity: DEFAULT_CACHE_CAPACITY }
    }

    /// Cache is flushed whenever it grows beyond `capacity` entries.
    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = capacity.max(1);
        self
    }

    pub fn tbox(&self) -> &TBox {
        &self.tbox
    }

    pub fn depth_bound(&self) -> u32 {
        self.depth_bound
    }

    pub fn clear_cache(&self) {
        self.cache.lock().clear();
    }

    pub fn cached_states(&self) -> usize {
        self.cache.lock().len()
    }

    pub fn saturation(&self, a: &ABox) -> Arc<Saturation> {
        if let Some(s) = self.cache.lock().get(a) {
            return Arc::clone(s);
        }
        let chase = saturate(a, &self.tbox, self.depth_bound);
        let violation = find_violation(&chase, &self.tbox);
        let sat = Arc::new(Saturation { chase, violation });
        let mut cache = self.cache.lock();
        if cache.len() >= self.capacity {
            cache.clear();
        }
        cache.entry(a.clone()).or_insert_with(|| Arc::clone(&sat));
        sat
    }

    pub fn consistent(&self, a: &ABox) -> bool {
        self.saturation(a).is_consistent()
    }

    pub fn violation(&self, a: &ABox) -> Option<Violation> {
        self.saturation(a).violation.clone()
    }

    pub fn ans(&self, q: &UnionQuery, a: &ABox) -> Result<BTreeSet<Substitution>, ReasonerError> {
        self.saturation(a).ans(q)
    }

    pub fn ans_cq(&self, q: &ConjunctiveQuery, a: &ABox) -> Result<BTreeSet<Substitution>, ReasonerError> {
        self.saturation(a).ans_cq(q)
    }

    pub fn holds(&self, sigma: &ConjunctiveQuery, a: &ABox) -> bool {
        self.saturation(a).holds(sigma)
    }
}
