use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::term::{Symbol, Term};
use crate::query::{Atom, ConjunctiveQuery};

/// `P` or `P⁻`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RoleExpr {
    pub name: Symbol,
    pub inverted: bool,
}

impl RoleExpr {
    pub fn atomic(name: impl Into<Symbol>) -> Self {
        RoleExpr { name: name.into(), inverted: false }
    }

    pub fn inverse_of(name: impl Into<Symbol>) -> Self {
        RoleExpr { name: name.into(), inverted: true }
    }

    pub fn inverse(&self) -> Self {
        RoleExpr { name: self.name.clone(), inverted: !self.inverted }
    }

    /// Orders a pair `(subject, object)` of this role expression into the stored direction.
    pub fn orient<T>(&self, s: T, o: T) -> (T, T) {
        if self.inverted {
            (o, s)
        } else {
            (s, o)
        }
    }

    fn kb_syntax(&self) -> String {
        if self.inverted {
            format!("{}-", self.name)
        } else {
            self.name.to_string()
        }
    }
}

impl fmt::Display for RoleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "{}⁻", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum BasicConcept {
    Atomic(Symbol),
    /// `∃R` or, with a filler, the qualified `∃R.C`.
    Exists {
        role: RoleExpr,
        filler: Option<Symbol>,
    },
}

impl BasicConcept {
    pub fn atomic(name: impl Into<Symbol>) -> Self {
        BasicConcept::Atomic(name.into())
    }

    pub fn exists(role: RoleExpr) -> Self {
        BasicConcept::Exists { role, filler: None }
    }

    pub fn exists_qualified(role: RoleExpr, filler: impl Into<Symbol>) -> Self {
        BasicConcept::Exists { role, filler: Some(filler.into()) }
    }

    fn kb_syntax(&self) -> String {
        match self {
            BasicConcept::Atomic(n) => n.to_string(),
            BasicConcept::Exists { role, filler: None } => format!("exists {}", role.kb_syntax()),
            BasicConcept::Exists { role, filler: Some(c) } => {
                format!("exists {} . {}", role.kb_syntax(), c)
            }
        }
    }

    fn collect_names(&self, concepts: &mut BTreeSet<Symbol>, roles: &mut BTreeSet<Symbol>) {
        match self {
            BasicConcept::Atomic(n) => {
                concepts.insert(n.clone());
            }
            BasicConcept::Exists { role, filler } => {
                roles.insert(role.name.clone());
                if let Some(c) = filler {
                    concepts.insert(c.clone());
                }
            }
        }
    }
}

impl fmt::Display for BasicConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicConcept::Atomic(n) => write!(f, "{n}"),
            BasicConcept::Exists { role, filler: None } => write!(f, "∃{role}"),
            BasicConcept::Exists { role, filler: Some(c) } => write!(f, "∃{role}.{c}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Axiom {
    ConceptInclusion { lhs: BasicConcept, rhs: BasicConcept, negated: bool },
    RoleInclusion { lhs: RoleExpr, rhs: RoleExpr, negated: bool },
    Functionality(RoleExpr),
}

impl Axiom {
    pub fn concept_inclusion(lhs: BasicConcept, rhs: BasicConcept) -> Self {
        Axiom::ConceptInclusion { lhs, rhs, negated: false }
    }

    pub fn disjointness(lhs: BasicConcept, rhs: BasicConcept) -> Self {
        Axiom::ConceptInclusion { lhs, rhs, negated: true }
    }

    /// The line used for this axiom in the `[tbox]` section of a KB file.
    pub fn kb_syntax(&self) -> String {
        match self {
            Axiom::ConceptInclusion { lhs, rhs, negated } => {
                format!("{} <= {}{}", lhs.kb_syntax(), if *negated { "not " } else { "" }, rhs.kb_syntax())
            }
            Axiom::RoleInclusion { lhs, rhs, negated } => {
                format!("{} <= {}{}", lhs.kb_syntax(), if *negated { "not " } else { "" }, rhs.kb_syntax())
            }
            Axiom::Functionality(r) => format!("funct {}", r.kb_syntax()),
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::ConceptInclusion { lhs, rhs, negated } => {
                write!(f, "{lhs} ⊑ {}{rhs}", if *negated { "¬" } else { "" })
            }
            Axiom::RoleInclusion { lhs, rhs, negated } => {
                write!(f, "{lhs} ⊑ {}{rhs}", if *negated { "¬" } else { "" })
            }
            Axiom::Functionality(r) => write!(f, "(funct {r})"),
        }
    }
}

/// `left(x) ∧ right(y) → role(x, y)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SimpleJoinAxiom {
    pub left: Symbol,
    pub right: Symbol,
    pub role: Symbol,
}

impl SimpleJoinAxiom {
    pub fn new(left: impl Into<Symbol>, right: impl Into<Symbol>, role: impl Into<Symbol>) -> Self {
        SimpleJoinAxiom { left: left.into(), right: right.into(), role: role.into() }
    }

    /// Premise over the given variable names.
    pub fn premise(&self, x: &Symbol, y: &Symbol) -> ConjunctiveQuery {
        ConjunctiveQuery::new(vec![
            Atom::concept(self.left.clone(), Term::Var(x.clone())),
            Atom::concept(self.right.clone(), Term::Var(y.clone())),
        ])
    }

    pub fn conclusion(&self, x: &Symbol, y: &Symbol) -> Atom {
        Atom::role(self.role.clone(), Term::Var(x.clone()), Term::Var(y.clone()))
    }

    pub fn kb_syntax(&self) -> String {
        format!("{}(?x), {}(?y) -> {}(?x,?y)", self.left, self.right, self.role)
    }
}

impl fmt::Display for SimpleJoinAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(x) ∧ {}(y) → {}(x,y)", self.left, self.right, self.role)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct TBox {
    dl: BTreeSet<Axiom>,
    sj: BTreeSet<SimpleJoinAxiom>,
}

impl TBox {
    pub fn new(dl: impl IntoIterator<Item = Axiom>, sj: impl IntoIterator<Item = SimpleJoinAxiom>) -> Self {
        TBox { dl: dl.into_iter().collect(), sj: sj.into_iter().collect() }
    }

    pub fn dl(&self) -> &BTreeSet<Axiom> {
        &self.dl
    }

    pub fn sj(&self) -> &BTreeSet<SimpleJoinAxiom> {
        &self.sj
    }

    pub fn is_empty(&self) -> bool {
        self.dl.is_empty() && self.sj.is_empty()
    }

    /// Predicates appearing as conclusions of simple join axioms.
    pub fn sj_conclusion_predicates(&self) -> BTreeSet<Symbol> {
        self.sj.iter().map(|s| s.role.clone()).collect()
    }

    /// Concept and role names mentioned anywhere in the TBox.
    pub fn signature(&self) -> (BTreeSet<Symbol>, BTreeSet<Symbol>) {
        let mut concepts = BTreeSet::new();
        let mut roles = BTreeSet::new();
        for ax in &self.dl {
            match ax {
                Axiom::ConceptInclusion { lhs, rhs, .. } => {
                    lhs.collect_names(&mut concepts, &mut roles);
                    rhs.collect_names(&mut concepts, &mut roles);
                }
                Axiom::RoleInclusion { lhs, rhs, .. } => {
                    roles.insert(lhs.name.clone());
                    roles.insert(rhs.name.clone());
                }
                Axiom::Functionality(r) => {
                    roles.insert(r.name.clone());
                }
            }
        }
        for sj in &self.sj {
            concepts.insert(sj.left.clone());
            concepts.insert(sj.right.clone());
            roles.insert(sj.role.clone());
        }
        (concepts, roles)
    }

    /// Number of axioms whose right-hand side is existential; bounds null chains that matter
    /// for consistency.
    pub fn existential_rhs_count(&self) -> usize {
        self.dl
            .iter()
            .filter(|a| matches!(a, Axiom::ConceptInclusion { rhs: BasicConcept::Exists { .. }, negated: false, .. }))
            .count()
    }
}

/// Axiom as read from input, before shape validation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RawAxiom {
    ConceptInclusion { lhs: BasicConcept, lhs_negated: bool, rhs: BasicConcept, rhs_negated: bool },
    RoleInclusion { lhs: RoleExpr, lhs_negated: bool, rhs: RoleExpr, rhs_negated: bool },
    Functionality(RoleExpr),
    Rule { premise: Vec<Atom>, conclusion: Atom },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed axiom: {0}")]
pub struct MalformedAxiom(pub String);

pub fn validate_tbox(axioms: impl IntoIterator<Item = RawAxiom>) -> Result<TBox, MalformedAxiom> {
    let mut dl = BTreeSet::new();
    let mut sj = BTreeSet::new();
    for raw in axioms {
        match raw {
            RawAxiom::ConceptInclusion { lhs, lhs_negated, rhs, rhs_negated } => {
                if lhs_negated {
                    return Err(MalformedAxiom(format!("negated left-hand side ¬{lhs}")));
                }
                if let BasicConcept::Exists { filler: Some(_), .. } = &lhs {
                    return Err(MalformedAxiom(format!("qualified existential {lhs} on the left-hand side")));
                }
                if rhs_negated {
                    if let BasicConcept::Exists { filler: Some(_), .. } = &rhs {
                        return Err(MalformedAxiom(format!("negated qualified existential ¬{rhs}")));
                    }
                }
                dl.insert(Axiom::ConceptInclusion { lhs, rhs, negated: rhs_negated });
            }
            RawAxiom::RoleInclusion { lhs, lhs_negated, rhs, rhs_negated } => {
                if lhs_negated {
                    return Err(MalformedAxiom(format!("negated left-hand side ¬{lhs}")));
                }
                dl.insert(Axiom::RoleInclusion { lhs, rhs, negated: rhs_negated });
            }
            RawAxiom::Functionality(r) => {
                dl.insert(Axiom::Functionality(r));
            }
            RawAxiom::Rule { premise, conclusion } => {
                sj.insert(simple_join_shape(&premise, &conclusion)?);
            }
        }
    }
    Ok(TBox { dl, sj })
}

fn simple_join_shape(premise: &[Atom], conclusion: &Atom) -> Result<SimpleJoinAxiom, MalformedAxiom> {
    let bad = || {
        let body: Vec<String> = premise.iter().map(|a| a.to_string()).collect();
        MalformedAxiom(format!(
            "simple join must have the form N1(x) ∧ N2(y) → R(x,y) with x ≠ y: {} → {conclusion}",
            body.join(" ∧ ")
        ))
    };
    let [p1, p2] = premise else { return Err(bad()) };
    if p1.arity() != 1 || p2.arity() != 1 || conclusion.arity() != 2 {
        return Err(bad());
    }
    let (Some(x), Some(y)) = (p1.args[0].as_var(), p2.args[0].as_var()) else { return Err(bad()) };
    if x == y || conclusion.args[0].as_var() != Some(x) || conclusion.args[1].as_var() != Some(y) {
        return Err(bad());
    }
    Ok(SimpleJoinAxiom::new(p1.predicate.clone(), p2.predicate.clone(), conclusion.predicate.clone()))
}
