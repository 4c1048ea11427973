//! Conjunctive queries, substitutions, unification and canonical forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::kb::{Symbol, Term};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn concept(predicate: impl Into<Symbol>, t: Term) -> Self {
        Atom { predicate: predicate.into(), args: vec![t] }
    }

    pub fn role(predicate: impl Into<Symbol>, s: Term, o: Term) -> Self {
        Atom { predicate: predicate.into(), args: vec![s, o] }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A conjunction of atoms. Every variable is an answer variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ConjunctiveQuery {
    atoms: Vec<Atom>,
}

impl ConjunctiveQuery {
    pub fn new(atoms: Vec<Atom>) -> Self {
        ConjunctiveQuery { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Symbol> {
        self.atoms.iter().flat_map(|a| a.vars().cloned()).collect()
    }

    pub fn predicates(&self) -> BTreeSet<Symbol> {
        self.atoms.iter().map(|a| a.predicate.clone()).collect()
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        self.atoms.iter().flat_map(|a| a.args.iter().filter_map(Term::as_const).cloned()).collect()
    }

    pub fn conjoin(&self, other: &ConjunctiveQuery) -> ConjunctiveQuery {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        ConjunctiveQuery::new(atoms).dedup()
    }

    /// Drops repeated atoms, keeping first occurrences in place.
    pub fn dedup(mut self) -> ConjunctiveQuery {
        let mut seen = BTreeSet::new();
        self.atoms.retain(|a| seen.insert(a.clone()));
        self
    }

    /// Text form used in KB files: comma-separated atoms.
    pub fn kb_syntax(&self) -> String {
        self.atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("⊤");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Non-empty disjunction of conjunctive queries.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct UnionQuery {
    disjuncts: Vec<ConjunctiveQuery>,
}

impl UnionQuery {
    /// Returns `None` for an empty disjunct list.
    pub fn new(disjuncts: Vec<ConjunctiveQuery>) -> Option<Self> {
        (!disjuncts.is_empty()).then_some(UnionQuery { disjuncts })
    }

    pub fn disjuncts(&self) -> &[ConjunctiveQuery] {
        &self.disjuncts
    }

    pub fn predicates(&self) -> BTreeSet<Symbol> {
        self.disjuncts.iter().flat_map(|q| q.predicates()).collect()
    }

    pub fn max_len(&self) -> usize {
        self.disjuncts.iter().map(|q| q.len()).max().unwrap_or(0)
    }
}

impl From<ConjunctiveQuery> for UnionQuery {
    fn from(q: ConjunctiveQuery) -> Self {
        UnionQuery { disjuncts: vec![q] }
    }
}

impl fmt::Display for UnionQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∨ ")?;
            }
            if self.disjuncts.len() > 1 {
                write!(f, "({q})")?;
            } else {
                write!(f, "{q}")?;
            }
        }
        Ok(())
    }
}

/// Finite map from variables to terms, kept idempotent.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Substitution {
    map: BTreeMap<Symbol, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn get(&self, var: &Symbol) -> Option<&Term> {
        self.map.get(var)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.map.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Symbol> {
        self.map.keys()
    }

    /// Binds `var ↦ t`, rewriting existing range occurrences of `var` so the map stays
    /// idempotent. `t` must not mention a variable of the domain.
    pub fn bind(&mut self, var: Symbol, t: Term) {
        if t.as_var() == Some(&var) {
            return;
        }
        let old = Term::Var(var.clone());
        for v in self.map.values_mut() {
            if *v == old {
                *v = t.clone();
            }
        }
        self.map.insert(var, t);
    }

    /// Inserts without normalization; for building ground answers.
    pub fn insert(&mut self, var: Symbol, t: Term) {
        self.map.insert(var, t);
    }

    pub fn is_idempotent(&self) -> bool {
        self.map.values().all(|t| t.as_var().is_none_or(|v| !self.map.contains_key(v)))
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom { predicate: a.predicate.clone(), args: a.args.iter().map(|t| self.apply_term(t)).collect() }
    }

    pub fn apply(&self, q: &ConjunctiveQuery) -> ConjunctiveQuery {
        ConjunctiveQuery::new(q.atoms.iter().map(|a| self.apply_atom(a)).collect())
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn compose(&self, inner: &Substitution) -> Substitution {
        let mut map: BTreeMap<Symbol, Term> = inner.map.iter().map(|(v, t)| (v.clone(), self.apply_term(t))).collect();
        for (v, t) in &self.map {
            map.entry(v.clone()).or_insert_with(|| t.clone());
        }
        map.retain(|v, t| t.as_var() != Some(v));
        Substitution { map }
    }

    /// Keeps only the given variables.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a Symbol>) -> Substitution {
        let mut out = Substitution::new();
        for v in vars {
            if let Some(t) = self.map.get(v) {
                out.map.insert(v.clone(), t.clone());
            }
        }
        out
    }
}

impl FromIterator<(Symbol, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Symbol, Term)>>(iter: I) -> Self {
        Substitution { map: iter.into_iter().collect() }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "?{v}↦{t}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Most general unifier of two atoms. When both sides are variables, the variable of `a`
/// is bound to the term of `b`.
pub fn unify(a: &Atom, b: &Atom) -> Option<Substitution> {
    if a.predicate != b.predicate || a.arity() != b.arity() {
        return None;
    }
    let mut s = Substitution::new();
    for (ta, tb) in a.args.iter().zip(&b.args) {
        let ta = s.apply_term(ta);
        let tb = s.apply_term(tb);
        if ta == tb {
            continue;
        }
        match (ta, tb) {
            (Term::Var(v), t) | (t, Term::Var(v)) => s.bind(v, t),
            _ => return None,
        }
    }
    Some(s)
}

pub fn apply(s: &Substitution, q: &ConjunctiveQuery) -> ConjunctiveQuery {
    s.apply(q)
}

/// Renaming of `vars` onto fresh names outside `avoid`; injective.
pub fn fresh_renaming<'a>(vars: impl IntoIterator<Item = &'a Symbol>, avoid: &BTreeSet<Symbol>) -> Substitution {
    let mut taken = avoid.clone();
    let mut out = Substitution::new();
    for v in vars {
        if out.map.contains_key(v) {
            continue;
        }
        let base = v.as_str().trim_end_matches(|c: char| c.is_ascii_digit());
        let base = if base.is_empty() { "v" } else { base };
        let fresh = (0..)
            .map(|i| Symbol::from(format!("{base}{i}")))
            .find(|cand| !taken.contains(cand))
            .expect("unbounded candidate stream");
        taken.insert(fresh.clone());
        out.map.insert(v.clone(), Term::Var(fresh));
    }
    out
}

pub fn rename_apart(q: &ConjunctiveQuery, avoid: &BTreeSet<Symbol>) -> ConjunctiveQuery {
    let vars = q.vars();
    fresh_renaming(&vars, avoid).apply(q)
}

/// Representative of a CQ's class under variable renaming and atom reordering.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CanonicalCq(Vec<Atom>);

impl CanonicalCq {
    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn to_query(&self) -> ConjunctiveQuery {
        ConjunctiveQuery::new(self.0.clone())
    }
}

impl fmt::Display for CanonicalCq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_query().fmt(f)
    }
}

pub fn canonicalize(q: &ConjunctiveQuery) -> CanonicalCq {
    canonical_form(q).0
}

/// Canonical form together with the renaming (original variable ↦ canonical variable)
/// that produces it.
pub fn canonical_form(q: &ConjunctiveQuery) -> (CanonicalCq, Substitution) {
    let atoms: Vec<Atom> = q.atoms.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let vars: Vec<Symbol> = q.vars().into_iter().collect();
    if vars.is_empty() {
        return (CanonicalCq(atoms), Substitution::new());
    }
    let index: BTreeMap<&Symbol, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let shape = Shape::new(&atoms, &index);
    let mut best: Option<(Vec<Atom>, Vec<usize>)> = None;
    shape.search(vec![0; vars.len()], &mut Vec::new(), &mut best, &mut Vec::new());
    let (form, colors) = best.expect("search visits at least one leaf");
    let renaming = vars.iter().zip(&colors).map(|(v, c)| (v.clone(), Term::Var(canonical_var(*c)))).collect();
    (CanonicalCq(form), renaming)
}

fn canonical_var(i: usize) -> Symbol {
    Symbol::from(format!("v{i}"))
}

type Signature<'a> = (usize, Vec<(&'a str, usize, Neighbor<'a>)>);

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Neighbor<'a> {
    Unary,
    Same,
    Const(&'a Symbol),
    Var(usize),
}

/// Atoms with variables replaced by indices, for colour refinement.
struct Shape<'a> {
    atoms: &'a [Atom],
    arg_index: Vec<Vec<Option<usize>>>,
    n: usize,
}

impl<'a> Shape<'a> {
    fn new(atoms: &'a [Atom], index: &BTreeMap<&Symbol, usize>) -> Self {
        let arg_index = atoms.iter().map(|a| a.args.iter().map(|t| t.as_var().map(|v| index[v])).collect()).collect();
        Shape { atoms, arg_index, n: index.len() }
    }

    fn signature(&self, colors: &[usize]) -> Vec<Signature<'a>> {
        let mut sigs: Vec<(usize, Vec<_>)> = colors.iter().map(|&c| (c, Vec::new())).collect();
        for (atom, idx) in self.atoms.iter().zip(&self.arg_index) {
            for (pos, slot) in idx.iter().enumerate() {
                let Some(v) = *slot else { continue };
                let neighbor = if atom.args.len() == 1 {
                    Neighbor::Unary
                } else {
                    let other = 1 - pos;
                    match (idx[other], &atom.args[other]) {
                        (Some(w), _) if w == v => Neighbor::Same,
                        (Some(w), _) => Neighbor::Var(colors[w]),
                        (None, t) => Neighbor::Const(t.as_const().expect("queries hold no nulls")),
                    }
                };
                sigs[v].1.push((atom.predicate.as_str(), pos, neighbor));
            }
        }
        for s in &mut sigs {
            s.1.sort();
        }
        sigs
    }

    /// Iterated colour refinement; returns dense colours `0..k`.
    fn refine(&self, mut colors: Vec<usize>) -> Vec<usize> {
        let mut classes = usize::MAX;
        loop {
            let sigs = self.signature(&colors);
            let mut sorted: Vec<_> = sigs.iter().collect();
            sorted.sort();
            sorted.dedup();
            colors = sigs.iter().map(|s| sorted.binary_search(&s).expect("present")).collect();
            if sorted.len() == classes {
                return colors;
            }
            classes = sorted.len();
        }
    }

    /// Individualization-refinement search for the least rendering. Leaves that render
    /// equal to the best one yield automorphisms, which prune candidates in the same
    /// orbit as one already tried.
    fn search(
        &self,
        colors: Vec<usize>,
        prefix: &mut Vec<usize>,
        best: &mut Option<(Vec<Atom>, Vec<usize>)>,
        autos: &mut Vec<Vec<usize>>,
    ) {
        let colors = self.refine(colors);
        let mut counts = vec![0usize; self.n];
        for &c in &colors {
            counts[c] += 1;
        }
        let Some(cell) = (0..self.n).find(|&c| counts[c] > 1) else {
            let form = self.render(&colors);
            match best {
                Some((b, bc)) if form == *b => {
                    let mut at = vec![0; self.n];
                    for (w, &c) in bc.iter().enumerate() {
                        at[c] = w;
                    }
                    let gamma: Vec<usize> = colors.iter().map(|&c| at[c]).collect();
                    if gamma.iter().enumerate().any(|(v, &w)| v != w) {
                        autos.push(gamma);
                    }
                }
                Some((b, _)) if form > *b => {}
                _ => *best = Some((form, colors)),
            }
            return;
        };
        // Individualizing either of two twins (variables whose swap fixes the atom set)
        // leads to the same leaves.
        let mut tried: Vec<usize> = Vec::new();
        for v in (0..self.n).filter(|&v| colors[v] == cell) {
            if tried.iter().any(|&u| self.twins(u, v)) || self.same_orbit(v, &tried, prefix, autos) {
                continue;
            }
            tried.push(v);
            let split = colors.iter().enumerate().map(|(w, &c)| if w == v { 2 * c } else { 2 * c + 1 }).collect();
            prefix.push(v);
            self.search(split, prefix, best, autos);
            prefix.pop();
        }
    }

    /// Whether `v` is in the orbit of some `tried` vertex under the automorphisms found
    /// so far that fix every vertex of `prefix`.
    fn same_orbit(&self, v: usize, tried: &[usize], prefix: &[usize], autos: &[Vec<usize>]) -> bool {
        if tried.is_empty() {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut any = false;
        for gamma in autos.iter().filter(|g| prefix.iter().all(|&p| g[p] == p)) {
            any = true;
            for (x, &y) in gamma.iter().enumerate() {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        if !any {
            return false;
        }
        let root = find(&mut parent, v);
        tried.iter().any(|&u| find(&mut parent, u) == root)
    }

    fn keyed(&self, swap: Option<(usize, usize)>) -> BTreeSet<(&'a str, Vec<Result<usize, &'a Term>>)> {
        let pick = |v: usize| match swap {
            Some((a, b)) if v == a => b,
            Some((a, b)) if v == b => a,
            _ => v,
        };
        self.atoms
            .iter()
            .zip(&self.arg_index)
            .map(|(atom, idx)| {
                let args = atom.args.iter().zip(idx).map(|(t, slot)| slot.map(pick).ok_or(t)).collect();
                (atom.predicate.as_str(), args)
            })
            .collect()
    }

    fn twins(&self, u: usize, v: usize) -> bool {
        self.keyed(Some((u, v))) == self.keyed(None)
    }

    fn render(&self, colors: &[usize]) -> Vec<Atom> {
        let mut out: Vec<Atom> = self
            .atoms
            .iter()
            .zip(&self.arg_index)
            .map(|(atom, idx)| Atom {
                predicate: atom.predicate.clone(),
                args: atom
                    .args
                    .iter()
                    .zip(idx)
                    .map(|(t, slot)| match slot {
                        Some(v) => Term::Var(canonical_var(colors[*v])),
                        None => t.clone(),
                    })
                    .collect(),
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> Term {
        Term::constant(n)
    }
    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn unify_examples() {
        let s =
            unify(&Atom::role("assignedTo", v("z"), v("y")), &Atom::role("assignedTo", c("d001"), c("e002"))).unwrap();
        assert_eq!(s.get(&"z".into()), Some(&c("d001")));
        assert_eq!(s.get(&"y".into()), Some(&c("e002")));
        assert!(unify(&Atom::concept("C", c("a")), &Atom::concept("C", c("a"))).unwrap().is_empty());
        assert!(unify(&Atom::concept("C", c("a")), &Atom::concept("D", c("a"))).is_none());
        assert!(unify(&Atom::role("R", c("a"), v("x")), &Atom::role("R", v("x"), c("b"))).is_none());
    }

    #[test]
    fn unify_chains_stay_idempotent() {
        let a = Atom::role("R", v("x"), v("y"));
        let b = Atom::role("R", v("y"), c("k"));
        let s = unify(&a, &b).unwrap();
        assert!(s.is_idempotent());
        assert_eq!(s.apply_atom(&a), s.apply_atom(&b));
    }

    #[test]
    fn apply_examples() {
        let s: Substitution = [("x".into(), c("e001"))].into_iter().collect();
        let q = ConjunctiveQuery::new(vec![Atom::concept("Manager", v("x"))]);
        assert_eq!(s.apply(&q).to_string(), "Manager(e001)");
        assert_eq!(Substitution::new().apply(&q), q);
        let s: Substitution = [("y".into(), c("e002")), ("z".into(), c("d001"))].into_iter().collect();
        let guard =
            ConjunctiveQuery::new(vec![Atom::concept("Manager", v("x")), Atom::role("canManage", v("y"), v("z"))]);
        assert_eq!(s.apply(&guard).to_string(), "Manager(?x) ∧ canManage(e002,d001)");
    }

    #[test]
    fn canonical_examples() {
        let q1 = ConjunctiveQuery::new(vec![Atom::concept("Manager", v("a")), Atom::concept("Technician", c("e002"))]);
        let q2 = ConjunctiveQuery::new(vec![Atom::concept("Technician", c("e002")), Atom::concept("Manager", v("q"))]);
        assert_eq!(canonicalize(&q1), canonicalize(&q2));
        let ground = ConjunctiveQuery::new(vec![Atom::concept("B", c("b")), Atom::concept("A", c("a"))]);
        assert_eq!(canonicalize(&ground).atoms(), &[Atom::concept("A", c("a")), Atom::concept("B", c("b"))]);
        let s3 = |x, y, z| {
            ConjunctiveQuery::new(vec![
                Atom::concept("Manager", v(x)),
                Atom::role("canManage", v(y), v(z)),
                Atom::concept("UrgentDoc", v(z)),
            ])
        };
        assert_eq!(canonicalize(&s3("x", "y", "z")), canonicalize(&s3("u", "v", "w")));
    }

    #[test]
    fn canonical_distinguishes_structure() {
        let path = ConjunctiveQuery::new(vec![Atom::role("R", v("x"), v("y")), Atom::role("R", v("y"), v("z"))]);
        let fork = ConjunctiveQuery::new(vec![Atom::role("R", v("x"), v("y")), Atom::role("R", v("x"), v("z"))]);
        assert_ne!(canonicalize(&path), canonicalize(&fork));
    }

    #[test]
    fn canonical_renaming_maps_query_onto_form() {
        let q = ConjunctiveQuery::new(vec![
            Atom::role("R", v("a"), v("b")),
            Atom::role("R", v("b"), v("a")),
            Atom::concept("C", v("a")),
        ]);
        let (form, ren) = canonical_form(&q);
        let mut mapped = ren.apply(&q).atoms().to_vec();
        mapped.sort();
        assert_eq!(mapped, form.atoms());
    }

    #[test]
    fn rename_apart_avoids() {
        let q = ConjunctiveQuery::new(vec![Atom::concept("Manager", v("x"))]);
        let avoid: BTreeSet<Symbol> = ["x".into()].into_iter().collect();
        let r = rename_apart(&q, &avoid);
        assert!(r.vars().is_disjoint(&avoid));
        assert_eq!(canonicalize(&r), canonicalize(&q));
    }
}
