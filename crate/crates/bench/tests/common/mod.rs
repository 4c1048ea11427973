//! Independent oracles and proptest strategies shared by the acceptance target and the
//! property tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use dlplan_core::graph::Step;
use dlplan_core::kb::{parse_document, Axiom, BasicConcept, RoleExpr};
use dlplan_core::{
    ABox, Assertion, Atom, ConjunctiveQuery, Plan, PlanningProblem, Substitution, Symbol, TBox, Term, UnionQuery,
};
use proptest::prelude::*;

/// Facts entailed over named constants, computed by a naive fixpoint. `Exists(R, x)`
/// records that `x` has some `R`-successor.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum GFact {
    Concept(Symbol, Symbol),
    Role(Symbol, Symbol, Symbol),
    Exists(RoleExpr, Symbol),
}

pub struct Closure {
    facts: BTreeSet<GFact>,
}

impl Closure {
    pub fn new(t: &TBox, a: &ABox) -> Self {
        let mut facts: BTreeSet<GFact> = a
            .iter()
            .map(|f| match f {
                Assertion::Concept { concept, individual } => GFact::Concept(concept.clone(), individual.clone()),
                Assertion::Role { role, subject, object } => GFact::Role(role.clone(), subject.clone(), object.clone()),
            })
            .collect();
        loop {
            let mut new = Vec::new();
            for f in &facts {
                match f {
                    GFact::Concept(c, x) => {
                        for ax in t.dl() {
                            if let Axiom::ConceptInclusion { lhs: BasicConcept::Atomic(l), rhs, negated: false } = ax {
                                if l == c {
                                    new.push(at(rhs, x));
                                }
                            }
                        }
                    }
                    GFact::Role(r, x, y) => {
                        new.push(GFact::Exists(RoleExpr::atomic(r.as_str()), x.clone()));
                        new.push(GFact::Exists(RoleExpr::inverse_of(r.as_str()), y.clone()));
                        for ax in t.dl() {
                            if let Axiom::RoleInclusion { lhs, rhs, negated: false } = ax {
                                if &lhs.name == r {
                                    let (s, o) = lhs.orient(x, y);
                                    let (s, o) = rhs.orient(s, o);
                                    new.push(GFact::Role(rhs.name.clone(), s.clone(), o.clone()));
                                }
                            }
                        }
                    }
                    GFact::Exists(role, x) => {
                        for ax in t.dl() {
                            match ax {
                                Axiom::ConceptInclusion {
                                    lhs: BasicConcept::Exists { role: l, filler: None },
                                    rhs,
                                    negated: false,
                                } if l == role => new.push(at(rhs, x)),
                                Axiom::RoleInclusion { lhs, rhs, negated: false } => {
                                    if lhs == role {
                                        new.push(GFact::Exists(rhs.clone(), x.clone()));
                                    } else if &lhs.inverse() == role {
                                        new.push(GFact::Exists(rhs.inverse(), x.clone()));
                                    }
                                }
                                _ => {}
                            }
                        }
                    }
                }
            }
            for sj in t.sj() {
                for x in members(&facts, &sj.left) {
                    for y in members(&facts, &sj.right) {
                        new.push(GFact::Role(sj.role.clone(), x.clone(), y.clone()));
                    }
                }
            }
            let before = facts.len();
            facts.extend(new);
            if facts.len() == before {
                return Closure { facts };
            }
        }
    }

    pub fn named(&self) -> ABox {
        self.facts
            .iter()
            .filter_map(|f| match f {
                GFact::Concept(c, x) => Some(Assertion::concept(c.clone(), x.clone())),
                GFact::Role(r, x, y) => Some(Assertion::role(r.clone(), x.clone(), y.clone())),
                GFact::Exists(..) => None,
            })
            .collect()
    }

    fn has(&self, b: &BasicConcept, x: &Symbol) -> bool {
        match b {
            BasicConcept::Atomic(c) => self.facts.contains(&GFact::Concept(c.clone(), x.clone())),
            BasicConcept::Exists { role, filler: None } => self.facts.contains(&GFact::Exists(role.clone(), x.clone())),
            BasicConcept::Exists { .. } => panic!("qualified existentials only occur on the right"),
        }
    }

    fn holds_ground(&self, atom: &Atom) -> bool {
        let c = |t: &Term| t.as_const().expect("ground").clone();
        match atom.args.as_slice() {
            [x] => self.facts.contains(&GFact::Concept(atom.predicate.clone(), c(x))),
            [x, y] => self.facts.contains(&GFact::Role(atom.predicate.clone(), c(x), c(y))),
            _ => false,
        }
    }

    /// Consistency over named constants. Exact only for TBoxes without existentials on
    /// the right-hand side, where no anonymous individuals arise.
    pub fn consistent(&self, t: &TBox) -> bool {
        assert_eq!(t.existential_rhs_count(), 0, "oracle covers null-free TBoxes only");
        let consts: BTreeSet<Symbol> = self
            .facts
            .iter()
            .flat_map(|f| match f {
                GFact::Concept(_, x) | GFact::Exists(_, x) => vec![x.clone()],
                GFact::Role(_, x, y) => vec![x.clone(), y.clone()],
            })
            .collect();
        for ax in t.dl() {
            match ax {
                Axiom::ConceptInclusion { lhs, rhs, negated: true } => {
                    if consts.iter().any(|x| self.has(lhs, x) && self.has(rhs, x)) {
                        return false;
                    }
                }
                Axiom::RoleInclusion { lhs, rhs, negated: true } => {
                    let pairs = |r: &RoleExpr| -> BTreeSet<(Symbol, Symbol)> {
                        self.facts
                            .iter()
                            .filter_map(|f| match f {
                                GFact::Role(n, x, y) if *n == r.name => {
                                    let (s, o) = r.orient(x, y);
                                    Some((s.clone(), o.clone()))
                                }
                                _ => None,
                            })
                            .collect()
                    };
                    if !pairs(lhs).is_disjoint(&pairs(rhs)) {
                        return false;
                    }
                }
                Axiom::Functionality(r) => {
                    let mut succ: BTreeMap<&Symbol, &Symbol> = BTreeMap::new();
                    for f in &self.facts {
                        if let GFact::Role(n, x, y) = f {
                            if *n == r.name {
                                let (s, o) = r.orient(x, y);
                                if succ.insert(s, o).is_some_and(|prev| prev != o) {
                                    return false;
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        true
    }
}

fn at(rhs: &BasicConcept, x: &Symbol) -> GFact {
    match rhs {
        BasicConcept::Atomic(d) => GFact::Concept(d.clone(), x.clone()),
        BasicConcept::Exists { role, .. } => GFact::Exists(role.clone(), x.clone()),
    }
}

fn members<'a>(facts: &'a BTreeSet<GFact>, c: &'a Symbol) -> impl Iterator<Item = &'a Symbol> {
    facts.iter().filter_map(move |f| match f {
        GFact::Concept(d, x) if d == c => Some(x),
        _ => None,
    })
}

/// Every assignment of `vars` to `consts`.
pub fn assignments(vars: &[Symbol], consts: &[Symbol]) -> Vec<Substitution> {
    let mut out = vec![Substitution::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|s| {
                consts.iter().map(move |c| {
                    let mut s = s.clone();
                    s.insert(v.clone(), Term::Const(c.clone()));
                    s
                })
            })
            .collect();
    }
    out
}

/// Certain answers by trying every substitution over `adom(a)`.
pub fn brute_ans_cq(q: &ConjunctiveQuery, t: &TBox, a: &ABox) -> BTreeSet<Substitution> {
    let closure = Closure::new(t, a);
    brute_ans_with(&closure, q, a)
}

fn brute_ans_with(closure: &Closure, q: &ConjunctiveQuery, a: &ABox) -> BTreeSet<Substitution> {
    let vars: Vec<Symbol> = q.vars().into_iter().collect();
    let consts: Vec<Symbol> = dlplan_core::kb::adom(a).into_iter().collect();
    assignments(&vars, &consts)
        .into_iter()
        .filter(|s| s.apply(q).atoms().iter().all(|atom| closure.holds_ground(atom)))
        .collect()
}

pub fn brute_ans(q: &UnionQuery, t: &TBox, a: &ABox) -> BTreeSet<Substitution> {
    q.disjuncts().iter().flat_map(|d| brute_ans_cq(d, t, a)).collect()
}

/// Reachable states and root-to-goal paths of a problem, explored without the planner:
/// inconsistent and goal states are not expanded, self-loops are dropped.
pub struct SearchOracle {
    pub visited: BTreeSet<ABox>,
    pub plans: BTreeSet<Plan>,
}

struct Node {
    consistent: bool,
    goal: bool,
    succ: Vec<(Step, ABox)>,
}

impl SearchOracle {
    pub fn new(problem: &PlanningProblem) -> Self {
        let t = problem.dkb.tbox();
        let a0 = problem.dkb.initial().clone();
        let mut nodes: BTreeMap<ABox, Node> = BTreeMap::new();
        let mut queue = VecDeque::from([a0.clone()]);
        while let Some(a) = queue.pop_front() {
            if nodes.contains_key(&a) {
                continue;
            }
            let closure = Closure::new(t, &a);
            let consistent = closure.consistent(t);
            let goal =
                consistent && problem.goal.disjuncts().iter().any(|d| !brute_ans_with(&closure, d, &a).is_empty());
            let mut succ = Vec::new();
            if consistent && !goal {
                for act in problem.dkb.actions() {
                    for theta in brute_ans_with(&closure, &act.guard, &a) {
                        let e = theta.apply_atom(&act.effect);
                        let f = Assertion::from_atom(&e).expect("effect grounded by the guard");
                        let next = a.with(f);
                        if next != a {
                            queue.push_back(next.clone());
                            succ.push((Step { action: act.name.clone(), subst: theta }, next));
                        }
                    }
                }
            }
            nodes.insert(a, Node { consistent, goal, succ });
        }
        let mut plans = BTreeSet::new();
        let mut path = Vec::new();
        let mut on_path = BTreeSet::new();
        paths(&nodes, &a0, &mut path, &mut on_path, &mut plans);
        SearchOracle { visited: nodes.into_keys().collect(), plans }
    }
}

fn paths(
    nodes: &BTreeMap<ABox, Node>,
    at: &ABox,
    path: &mut Vec<Step>,
    on_path: &mut BTreeSet<ABox>,
    plans: &mut BTreeSet<Plan>,
) {
    let node = &nodes[at];
    if node.goal {
        if !path.is_empty() {
            plans.insert(Plan(path.clone()));
        }
        return;
    }
    on_path.insert(at.clone());
    for (step, next) in &node.succ {
        if on_path.contains(next) || !nodes[next].consistent {
            continue;
        }
        path.push(step.clone());
        paths(nodes, next, path, on_path, plans);
        path.pop();
    }
    on_path.remove(at);
}

/// Whether some bijection between the variables maps `p`'s atom set onto `q`'s.
pub fn equivalent_by_renaming(p: &ConjunctiveQuery, q: &ConjunctiveQuery) -> bool {
    let pv: Vec<Symbol> = p.vars().into_iter().collect();
    let qv: Vec<Symbol> = q.vars().into_iter().collect();
    if pv.len() != qv.len() {
        return false;
    }
    let target: BTreeSet<Atom> = q.atoms().iter().cloned().collect();
    permutations(qv.len()).into_iter().any(|perm| {
        let mut s = Substitution::new();
        for (i, v) in pv.iter().enumerate() {
            s.insert(v.clone(), Term::Var(qv[perm[i]].clone()));
        }
        s.apply(p).atoms().iter().cloned().collect::<BTreeSet<_>>() == target
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

pub const CONCEPTS: [&str; 4] = ["A", "B", "C", "D"];
pub const ROLES: [&str; 2] = ["r", "s"];
pub const CONSTANTS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn role_expr() -> impl Strategy<Value = String> {
    (prop::sample::select(&ROLES[..]), any::<bool>())
        .prop_map(|(r, inv)| if inv { format!("{r}-") } else { r.to_string() })
}

fn basic_lhs() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => prop::sample::select(&CONCEPTS[..]).prop_map(str::to_string),
        1 => role_expr().prop_map(|r| format!("exists {r}")),
    ]
}

fn tbox_line(with_existentials: bool) -> BoxedStrategy<String> {
    let concept = || prop::sample::select(&CONCEPTS[..]);
    let mut options: Vec<(u32, BoxedStrategy<String>)> = vec![
        (4, (basic_lhs(), concept()).prop_map(|(l, r)| format!("{l} <= {r}")).boxed()),
        (1, (basic_lhs(), basic_lhs()).prop_map(|(l, r)| format!("{l} <= not {r}")).boxed()),
        (1, (role_expr(), role_expr()).prop_map(|(l, r)| format!("{l} <= {r}")).boxed()),
        (1, role_expr().prop_map(|r| format!("funct {r}")).boxed()),
    ];
    if with_existentials {
        options.push((
            2,
            (concept(), role_expr(), prop::option::of(concept()))
                .prop_map(|(c, r, f)| match f {
                    Some(f) => format!("{c} <= exists {r} . {f}"),
                    None => format!("{c} <= exists {r}"),
                })
                .boxed(),
        ));
    }
    prop::strategy::Union::new_weighted(options).boxed()
}

fn sj_line() -> impl Strategy<Value = String> {
    (prop::sample::select(&CONCEPTS[..]), prop::sample::select(&CONCEPTS[..]))
        .prop_map(|(l, r)| format!("{l}(?x), {r}(?y) -> j(?x,?y)"))
}

/// TBox text with up to `max_axioms` DL axioms and at most one simple join.
pub fn tbox_text(max_axioms: usize, with_existentials: bool) -> impl Strategy<Value = String> {
    (prop::collection::vec(tbox_line(with_existentials), 0..=max_axioms), prop::option::of(sj_line())).prop_map(
        |(lines, sj)| {
            let mut s = format!("[tbox]\n{}\n", lines.join("\n"));
            if let Some(sj) = sj {
                s.push_str(&format!("[sj]\n{sj}\n"));
            }
            s
        },
    )
}

pub fn assertion(n_consts: usize) -> impl Strategy<Value = Assertion> {
    let c = move || prop::sample::select(&CONSTANTS[..n_consts]);
    prop_oneof![
        3 => (prop::sample::select(&CONCEPTS[..]), c()).prop_map(|(p, x)| Assertion::concept(p, x)),
        2 => (prop::sample::select(&ROLES[..]), c(), c()).prop_map(|(r, x, y)| Assertion::role(r, x, y)),
    ]
}

pub fn abox(n_consts: usize, max_len: usize) -> impl Strategy<Value = ABox> {
    prop::collection::vec(assertion(n_consts), 0..=max_len).prop_map(|v| v.into_iter().collect())
}

/// Parses TBox text; the generated lines are always valid.
pub fn tbox_of(text: &str) -> TBox {
    parse_document(text).unwrap_or_else(|e| panic!("{e}\n{text}")).tbox
}

fn query_term(n_vars: usize) -> impl Strategy<Value = Term> {
    prop_oneof![
        4 => (0..n_vars).prop_map(|i| Term::var(&format!("x{i}"))),
        1 => prop::sample::select(&CONSTANTS[..2]).prop_map(Term::constant),
    ]
}

pub fn query_atom(n_vars: usize) -> impl Strategy<Value = Atom> {
    prop_oneof![
        (prop::sample::select(&CONCEPTS[..2]), query_term(n_vars)).prop_map(|(p, t)| Atom::concept(p, t)),
        (prop::sample::select(&ROLES[..1]), query_term(n_vars), query_term(n_vars))
            .prop_map(|(r, s, o)| Atom::role(r, s, o)),
    ]
}

/// CQ over at most `n_vars` variables (`x0…`), drawing from a small alphabet so that
/// equivalent pairs are common.
pub fn cq(n_vars: usize, max_atoms: usize) -> impl Strategy<Value = ConjunctiveQuery> {
    prop::collection::vec(query_atom(n_vars), 1..=max_atoms).prop_map(ConjunctiveQuery::new)
}

/// Query atoms over the richer alphabet used by ABoxes from [`abox`].
pub fn answer_query(n_vars: usize, n_consts: usize) -> impl Strategy<Value = ConjunctiveQuery> {
    let term = move || {
        prop_oneof![
            4 => (0..n_vars).prop_map(|i| Term::var(&format!("x{i}"))),
            1 => prop::sample::select(&CONSTANTS[..n_consts]).prop_map(Term::constant),
        ]
    };
    let atom = prop_oneof![
        (prop::sample::select(&CONCEPTS[..]), term()).prop_map(|(p, t)| Atom::concept(p, t)),
        (prop::sample::select(&["r", "s", "j"][..]), term(), term()).prop_map(|(r, s, o)| Atom::role(r, s, o)),
    ];
    prop::collection::vec(atom, 1..=3).prop_map(ConjunctiveQuery::new)
}

/// A random bijective renaming of `q`'s variables to `y0…`, with atoms reversed.
pub fn renamed(q: &ConjunctiveQuery, seed: u64) -> ConjunctiveQuery {
    let vars: Vec<Symbol> = q.vars().into_iter().collect();
    let perms = permutations(vars.len());
    let perm = &perms[(seed as usize) % perms.len()];
    let mut s = Substitution::new();
    for (i, v) in vars.iter().enumerate() {
        s.insert(v.clone(), Term::var(&format!("y{}", perm[i])));
    }
    let mut atoms = s.apply(q).atoms().to_vec();
    atoms.reverse();
    ConjunctiveQuery::new(atoms)
}
