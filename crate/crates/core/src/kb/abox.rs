use std::collections::BTreeSet;
use std::fmt;

use super::schema::TBox;
use super::term::{Symbol, Term};
use crate::query::Atom;

/// Ground membership assertion over named constants. Roles are always stored in the
/// atomic direction.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Assertion {
    Concept { concept: Symbol, individual: Symbol },
    Role { role: Symbol, subject: Symbol, object: Symbol },
}

impl Assertion {
    pub fn concept(concept: impl Into<Symbol>, individual: impl Into<Symbol>) -> Self {
        Assertion::Concept { concept: concept.into(), individual: individual.into() }
    }

    pub fn role(role: impl Into<Symbol>, subject: impl Into<Symbol>, object: impl Into<Symbol>) -> Self {
        Assertion::Role { role: role.into(), subject: subject.into(), object: object.into() }
    }

    pub fn predicate(&self) -> &Symbol {
        match self {
            Assertion::Concept { concept, .. } => concept,
            Assertion::Role { role, .. } => role,
        }
    }

    pub fn constants(&self) -> impl Iterator<Item = &Symbol> {
        let (a, b) = match self {
            Assertion::Concept { individual, .. } => (individual, None),
            Assertion::Role { subject, object, .. } => (subject, Some(object)),
        };
        std::iter::once(a).chain(b)
    }

    pub fn to_atom(&self) -> Atom {
        match self {
            Assertion::Concept { concept, individual } => {
                Atom::concept(concept.clone(), Term::Const(individual.clone()))
            }
            Assertion::Role { role, subject, object } => {
                Atom::role(role.clone(), Term::Const(subject.clone()), Term::Const(object.clone()))
            }
        }
    }

    /// Converts an atom whose arguments are all constants.
    pub fn from_atom(atom: &Atom) -> Option<Self> {
        let consts: Option<Vec<&Symbol>> = atom.args.iter().map(Term::as_const).collect();
        match consts?.as_slice() {
            [c] => Some(Assertion::concept(atom.predicate.clone(), (*c).clone())),
            [s, o] => Some(Assertion::role(atom.predicate.clone(), (*s).clone(), (*o).clone())),
            _ => None,
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Concept { concept, individual } => write!(f, "{concept}({individual})"),
            Assertion::Role { role, subject, object } => write!(f, "{role}({subject},{object})"),
        }
    }
}

/// A set of ground assertions; also the planner's state.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct ABox {
    assertions: BTreeSet<Assertion>,
}

impl ABox {
    pub fn new() -> Self {
        ABox::default()
    }

    pub fn insert(&mut self, a: Assertion) -> bool {
        self.assertions.insert(a)
    }

    pub fn contains(&self, a: &Assertion) -> bool {
        self.assertions.contains(a)
    }

    /// Value-semantics insertion.
    pub fn with(&self, a: Assertion) -> ABox {
        let mut next = self.clone();
        next.insert(a);
        next
    }

    pub fn len(&self) -> usize {
        self.assertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter()
    }

    pub fn is_subset(&self, other: &ABox) -> bool {
        self.assertions.is_subset(&other.assertions)
    }

    /// Assertions in `self` but not in `base`.
    pub fn delta<'a>(&'a self, base: &'a ABox) -> impl Iterator<Item = &'a Assertion> {
        self.assertions.difference(&base.assertions)
    }
}

impl FromIterator<Assertion> for ABox {
    fn from_iter<I: IntoIterator<Item = Assertion>>(iter: I) -> Self {
        ABox { assertions: iter.into_iter().collect() }
    }
}

impl<'a> IntoIterator for &'a ABox {
    type Item = &'a Assertion;
    type IntoIter = std::collections::btree_set::Iter<'a, Assertion>;

    fn into_iter(self) -> Self::IntoIter {
        self.assertions.iter()
    }
}

impl fmt::Display for ABox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.assertions.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

/// Active domain: the constants occurring in `a`.
pub fn adom(a: &ABox) -> BTreeSet<Symbol> {
    a.iter().flat_map(|x| x.constants().cloned()).collect()
}

/// Concept and role names occurring in `t` and `a`.
pub fn alph(t: &TBox, a: &ABox) -> BTreeSet<Symbol> {
    let (mut names, roles) = t.signature();
    names.extend(roles);
    names.extend(a.iter().map(|x| x.predicate().clone()));
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::schema::{Axiom, BasicConcept};

    fn syms(names: &[&str]) -> BTreeSet<Symbol> {
        names.iter().map(|n| Symbol::new(n)).collect()
    }

    #[test]
    fn adom_collects_every_position() {
        let a: ABox = [Assertion::concept("Technician", "e002")].into_iter().collect();
        assert_eq!(adom(&a), syms(&["e002"]));
        assert!(adom(&ABox::new()).is_empty());
        let a: ABox = [Assertion::role("assignedTo", "d001", "e002")].into_iter().collect();
        assert_eq!(adom(&a), syms(&["d001", "e002"]));
    }

    #[test]
    fn alph_unions_tbox_and_abox() {
        let t = TBox::new(
            [
                Axiom::concept_inclusion(BasicConcept::atomic("Technician"), BasicConcept::atomic("Employee")),
                Axiom::disjointness(BasicConcept::atomic("Technician"), BasicConcept::atomic("Manager")),
            ],
            [],
        );
        let a: ABox = [Assertion::concept("Technician", "e002")].into_iter().collect();
        assert_eq!(alph(&t, &a), syms(&["Employee", "Manager", "Technician"]));
        assert!(alph(&TBox::default(), &ABox::new()).is_empty());
        let a: ABox = [Assertion::role("canManage", "e002", "d001")].into_iter().collect();
        assert_eq!(alph(&TBox::default(), &a), syms(&["canManage"]));
    }

    #[test]
    fn set_semantics() {
        let mut a = ABox::new();
        a.insert(Assertion::concept("C", "c"));
        let once = a.clone();
        a.insert(Assertion::concept("C", "c"));
        assert_eq!(a, once);
    }
}
