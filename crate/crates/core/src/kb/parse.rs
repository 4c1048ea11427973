//! Line-oriented KB file format.
//!
//! ```text
//! # comment
//! [tbox]
//! Technician <= Employee
//! Technician <= not Manager
//! exists assignedTo- <= Employee
//! Technician <= exists canManage . TechnicalDoc
//! funct assignedTo
//! [sj]
//! Technician(?x), TechnicalDoc(?y) -> canManage(?x,?y)
//! [abox]
//! Manager(e001)
//! [actions]
//! appoint(?x,?y,?z) : Manager(?x), canManage(?y,?z) => assignedTo(?z,?y)
//! [goal]
//! hasStatus(?x,reviewed), UrgentDoc(?x)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::abox::{ABox, Assertion};
use super::schema::{validate_tbox, BasicConcept, MalformedAxiom, RawAxiom, RoleExpr, TBox};
use super::term::{Symbol, Term};
use crate::dkb::{Action, ActionError};
use crate::query::{Atom, ConjunctiveQuery, UnionQuery};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("no [goal] section")]
    MissingGoal,
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: {source}")]
    MalformedAxiom { line: usize, source: MalformedAxiom },
    #[error("line {line}: {source}")]
    Action { line: usize, source: ActionError },
    #[error("predicate {predicate} is used with arities 1 and 2")]
    ArityConflict { predicate: Symbol },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Parsed KB file whose goal section may be absent.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct KbDocument {
    pub tbox: TBox,
    pub abox: ABox,
    pub actions: Vec<Action>,
    pub goal: Option<UnionQuery>,
}

/// Fully validated planning input: TBox, initial ABox, actions and goal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProblemSpec {
    pub tbox: TBox,
    pub abox: ABox,
    pub actions: Vec<Action>,
    pub goal: UnionQuery,
}

impl KbDocument {
    pub fn into_spec(self) -> Result<ProblemSpec, ValidationError> {
        let goal = self.goal.ok_or(ValidationError::MissingGoal)?;
        Ok(ProblemSpec { tbox: self.tbox, abox: self.abox, actions: self.actions, goal })
    }

    pub fn to_kb_string(&self) -> String {
        render(&self.tbox, &self.abox, &self.actions, self.goal.as_ref())
    }
}

impl ProblemSpec {
    pub fn to_kb_string(&self) -> String {
        render(&self.tbox, &self.abox, &self.actions, Some(&self.goal))
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kb_string())
    }
}

pub fn parse_kb(text: &str) -> Result<ProblemSpec, KbError> {
    Ok(parse_document(text)?.into_spec()?)
}

/// Parses query text in goal syntax; each line is one disjunct.
pub fn parse_query(text: &str) -> Result<UnionQuery, KbError> {
    let shifted = |mut e: ParseError| {
        e.line = e.line.saturating_sub(1);
        e
    };
    let doc = parse_document(&format!("[goal]\n{text}")).map_err(|e| match e {
        KbError::Parse(p) => KbError::Parse(shifted(p)),
        other => other,
    })?;
    Ok(doc.goal.ok_or(ValidationError::MissingGoal)?)
}

/// Like [`parse_kb`] but accepts a file without a `[goal]` section.
pub fn parse_document(text: &str) -> Result<KbDocument, KbError> {
    let sections = split_sections(text)?;
    let mut lines: BTreeMap<Section, Vec<Line>> = BTreeMap::new();
    for (section, line) in sections {
        lines.entry(section).or_default().push(line);
    }
    let get = |s| lines.get(&s).map(Vec::as_slice).unwrap_or(&[]);

    let tbox_surface: Vec<(usize, TboxLine)> =
        get(Section::TBox).iter().map(|l| Ok((l.no, parse_tbox_line(l)?))).collect::<Result<_, ParseError>>()?;
    let sj_rules: Vec<(usize, Vec<Atom>, Atom)> =
        get(Section::Sj).iter().map(parse_sj_line).collect::<Result<_, _>>()?;
    let abox_atoms: Vec<(usize, Atom)> =
        get(Section::ABox).iter().map(|l| Ok((l.no, parse_abox_line(l)?))).collect::<Result<_, ParseError>>()?;
    let action_lines: Vec<(usize, RawAction)> =
        get(Section::Actions).iter().map(|l| Ok((l.no, parse_action_line(l)?))).collect::<Result<_, ParseError>>()?;
    let goal_lines: Vec<ConjunctiveQuery> = get(Section::Goal)
        .iter()
        .map(|l| {
            let mut c = Cursor::new(l);
            let atoms = c.atom_list(&BTreeSet::new())?;
            c.end()?;
            Ok(ConjunctiveQuery::new(atoms))
        })
        .collect::<Result<_, ParseError>>()?;

    let mut arities = Arities::default();
    for (_, line) in &tbox_surface {
        line.record_roles(&mut arities);
    }
    let all_atoms = sj_rules
        .iter()
        .flat_map(|(_, p, c)| p.iter().chain(std::iter::once(c)))
        .chain(abox_atoms.iter().map(|(_, a)| a))
        .chain(action_lines.iter().flat_map(|(_, a)| a.guard.iter().chain(std::iter::once(&a.effect))))
        .chain(goal_lines.iter().flat_map(|q| q.atoms()));
    for atom in all_atoms {
        arities.record(&atom.predicate, atom.arity())?;
    }

    let mut raw = Vec::new();
    for (no, line) in tbox_surface {
        let ax = line.resolve(&arities.roles, &arities.concepts).map_err(|e| ParseError { line: no, ..e })?;
        raw.push((no, ax));
    }
    for (no, premise, conclusion) in sj_rules {
        raw.push((no, RawAxiom::Rule { premise, conclusion }));
    }
    // Validate one at a time so errors carry their line.
    for (no, ax) in &raw {
        validate_tbox([ax.clone()]).map_err(|source| ValidationError::MalformedAxiom { line: *no, source })?;
    }
    let tbox = validate_tbox(raw.into_iter().map(|(_, a)| a)).expect("each axiom validated");

    let abox = abox_atoms.iter().map(|(_, a)| Assertion::from_atom(a).expect("abox atoms are ground")).collect();

    let actions = action_lines
        .into_iter()
        .map(|(line, a)| {
            Action::new(a.name, a.params, ConjunctiveQuery::new(a.guard), a.effect)
                .map_err(|source| ValidationError::Action { line, source })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let goal = UnionQuery::new(goal_lines);
    Ok(KbDocument { tbox, abox, actions, goal })
}

fn render(tbox: &TBox, abox: &ABox, actions: &[Action], goal: Option<&UnionQuery>) -> String {
    let mut out = String::new();
    out.push_str("[tbox]\n");
    for ax in tbox.dl() {
        out.push_str(&ax.kb_syntax());
        out.push('\n');
    }
    out.push_str("\n[sj]\n");
    for sj in tbox.sj() {
        out.push_str(&sj.kb_syntax());
        out.push('\n');
    }
    out.push_str("\n[abox]\n");
    for a in abox {
        out.push_str(&a.to_string());
        out.push('\n');
    }
    out.push_str("\n[actions]\n");
    for a in actions {
        out.push_str(&a.kb_syntax());
        out.push('\n');
    }
    if let Some(goal) = goal {
        out.push_str("\n[goal]\n");
        for q in goal.disjuncts() {
            out.push_str(&q.kb_syntax());
            out.push('\n');
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Section {
    TBox,
    Sj,
    ABox,
    Actions,
    Goal,
}

struct Line {
    no: usize,
    tokens: Vec<Token>,
    /// Column just past the last character, for end-of-line errors.
    end_col: usize,
}

fn split_sections(text: &str) -> Result<Vec<(Section, Line)>, KbError> {
    let mut current = None;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                let column = raw.find('[').map_or(1, |c| c + 1);
                return Err(ParseError { line: no, column, message: "unterminated section header".into() }.into());
            };
            current = Some(match name.trim() {
                "tbox" => Section::TBox,
                "sj" => Section::Sj,
                "abox" => Section::ABox,
                "actions" => Section::Actions,
                "goal" => Section::Goal,
                other => return Err(ValidationError::UnknownSection { line: no, name: other.to_string() }.into()),
            });
            continue;
        }
        let Some(section) = current else {
            let column = content.len() - content.trim_start().len() + 1;
            return Err(
                ParseError { line: no, column, message: "content before the first section header".into() }.into()
            );
        };
        let tokens = tokenize(content, no)?;
        out.push((section, Line { no, tokens, end_col: content.chars().count() + 1 }));
    }
    Ok(out)
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Var(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Minus,
    Arrow,
    Implies,
    Subsumed,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Var(s) => write!(f, "`?{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Implies => f.write_str("`=>`"),
            Tok::Subsumed => f.write_str("`<=`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let two = |next: char| chars.get(i + 1) == Some(&next);
        let (tok, len) = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ',' => (Tok::Comma, 1),
            ':' => (Tok::Colon, 1),
            '.' => (Tok::Dot, 1),
            '-' if two('>') => (Tok::Arrow, 2),
            '-' => (Tok::Minus, 1),
            '=' if two('>') => (Tok::Implies, 2),
            '<' if two('=') => (Tok::Subsumed, 2),
            '?' => {
                let len = chars[i + 1..].iter().take_while(|c| is_ident_char(**c)).count();
                if len == 0 {
                    return Err(ParseError { line, column: col, message: "expected a variable name after `?`".into() });
                }
                (Tok::Var(chars[i + 1..i + 1 + len].iter().collect()), len + 1)
            }
            c if is_ident_char(c) => {
                let len = chars[i..].iter().take_while(|c| is_ident_char(**c)).count();
                (Tok::Ident(chars[i..i + len].iter().collect()), len)
            }
            other => return Err(ParseError { line, column: col, message: format!("unexpected character `{other}`") }),
        };
        out.push(Token { tok, col });
        i += len;
    }
    Ok(out)
}

struct Cursor<'a> {
    line: &'a Line,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a Line) -> Self {
        Cursor { line, pos: 0 }
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.line.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Tok> {
        self.line.tokens.get(self.pos + k).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.line.tokens.get(self.pos).map_or(self.line.end_col, |t| t.col)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line.no, column: self.col(), message: message.into() }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of line")),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, wanted: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, wanted: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.unexpected("end of line")),
        }
    }

    fn role(&mut self) -> Result<RoleExpr, ParseError> {
        let name = self.ident("a role name")?;
        let inverted = self.eat(&Tok::Minus);
        Ok(RoleExpr { name: name.into(), inverted })
    }

    fn term(&mut self, params: &BTreeSet<String>) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(Term::Var(v.as_str().into()))
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(if params.contains(s) { Term::Var(s.as_str().into()) } else { Term::Const(s.as_str().into()) })
            }
            _ => Err(self.unexpected("a constant or `?variable`")),
        }
    }

    /// `P(t)`, `P(t,u)` or `P-(t,u)`; inverse atoms are flipped into the atomic direction.
    fn atom(&mut self, params: &BTreeSet<String>) -> Result<(Atom, bool), ParseError> {
        let name = self.ident("a predicate name")?;
        let inverted = self.eat(&Tok::Minus);
        self.expect(&Tok::LParen, "`(`")?;
        let mut args = vec![self.term(params)?];
        if self.eat(&Tok::Comma) {
            args.push(self.term(params)?);
        }
        self.expect(&Tok::RParen, "`)`")?;
        if inverted {
            if args.len() != 2 {
                return Err(self.error(format!("inverse `{name}-` needs two arguments")));
            }
            args.swap(0, 1);
        }
        Ok((Atom { predicate: name.into(), args }, inverted))
    }

    fn plain_atom(&mut self, params: &BTreeSet<String>) -> Result<Atom, ParseError> {
        Ok(self.atom(params)?.0)
    }

    fn atom_list(&mut self, params: &BTreeSet<String>) -> Result<Vec<Atom>, ParseError> {
        let mut atoms = vec![self.plain_atom(params)?];
        while self.eat(&Tok::Comma) {
            atoms.push(self.plain_atom(params)?);
        }
        Ok(atoms)
    }
}

/// A side of a `<=` line before we know whether the names are concepts or roles.
#[derive(Debug)]
enum Side {
    Name { name: String, inverted: bool },
    Exists { role: RoleExpr, filler: Option<String> },
}

#[derive(Debug)]
enum TboxLine {
    Funct(RoleExpr),
    Incl { lhs: Side, lhs_not: bool, rhs: Side, rhs_not: bool, col: usize },
}

impl TboxLine {
    fn record_roles(&self, arities: &mut Arities) {
        let mut side = |s: &Side| match s {
            Side::Name { name, inverted: true } => {
                arities.roles.insert(name.as_str().into());
            }
            Side::Exists { role, .. } => {
                arities.roles.insert(role.name.clone());
            }
            Side::Name { .. } => {}
        };
        match self {
            TboxLine::Funct(r) => {
                arities.roles.insert(r.name.clone());
            }
            TboxLine::Incl { lhs, rhs, .. } => {
                side(lhs);
                side(rhs);
            }
        }
    }

    fn resolve(self, roles: &BTreeSet<Symbol>, concepts: &BTreeSet<Symbol>) -> Result<RawAxiom, ParseError> {
        let (lhs, lhs_not, rhs, rhs_not, col) = match self {
            TboxLine::Funct(r) => return Ok(RawAxiom::Functionality(r)),
            TboxLine::Incl { lhs, lhs_not, rhs, rhs_not, col } => (lhs, lhs_not, rhs, rhs_not, col),
        };
        let is_role =
            |s: &Side| matches!(s, Side::Name { name, inverted } if *inverted || roles.contains(&Symbol::new(name)));
        let err = |message: &str| ParseError { line: 0, column: col, message: message.into() };
        let is_concept = |s: &Side| match s {
            Side::Name { name, inverted } => !*inverted && concepts.contains(&Symbol::new(name)),
            Side::Exists { .. } => true,
        };
        let role_line = is_role(&lhs) || is_role(&rhs);
        match (role_line, is_concept(&lhs) || is_concept(&rhs)) {
            (true, false) => {
                let as_role = |s: Side| match s {
                    Side::Name { name, inverted } => RoleExpr { name: name.into(), inverted },
                    Side::Exists { .. } => unreachable!("checked by is_concept"),
                };
                Ok(RawAxiom::RoleInclusion {
                    lhs: as_role(lhs),
                    lhs_negated: lhs_not,
                    rhs: as_role(rhs),
                    rhs_negated: rhs_not,
                })
            }
            (false, _) => {
                let as_concept = |s: Side| match s {
                    Side::Name { name, .. } => BasicConcept::Atomic(name.into()),
                    Side::Exists { role, filler } => BasicConcept::Exists { role, filler: filler.map(Symbol::from) },
                };
                Ok(RawAxiom::ConceptInclusion {
                    lhs: as_concept(lhs),
                    lhs_negated: lhs_not,
                    rhs: as_concept(rhs),
                    rhs_negated: rhs_not,
                })
            }
            _ => Err(err("inclusion mixes a role with a concept")),
        }
    }
}

fn parse_side(c: &mut Cursor) -> Result<(Side, bool), ParseError> {
    let negated = c.keyword("not");
    if c.keyword("exists") {
        let role = c.role()?;
        let filler = if c.eat(&Tok::Dot) { Some(c.ident("a filler concept")?) } else { None };
        return Ok((Side::Exists { role, filler }, negated));
    }
    let name = c.ident("a concept or role name")?;
    let inverted = c.eat(&Tok::Minus);
    Ok((Side::Name { name, inverted }, negated))
}

fn parse_tbox_line(line: &Line) -> Result<TboxLine, ParseError> {
    let mut c = Cursor::new(line);
    if c.peek() == Some(&Tok::Ident("funct".into())) && c.peek_at(1).is_some() {
        c.pos += 1;
        let r = c.role()?;
        c.end()?;
        return Ok(TboxLine::Funct(r));
    }
    let (lhs, lhs_not) = parse_side(&mut c)?;
    let col = c.col();
    c.expect(&Tok::Subsumed, "`<=`")?;
    let (rhs, rhs_not) = parse_side(&mut c)?;
    c.end()?;
    Ok(TboxLine::Incl { lhs, lhs_not, rhs, rhs_not, col })
}

fn parse_sj_line(line: &Line) -> Result<(usize, Vec<Atom>, Atom), ParseError> {
    let mut c = Cursor::new(line);
    let premise = c.atom_list(&BTreeSet::new())?;
    c.expect(&Tok::Arrow, "`->`")?;
    let col = c.col();
    let (conclusion, inverted) = c.atom(&BTreeSet::new())?;
    if inverted {
        return Err(ParseError {
            line: line.no,
            column: col,
            message: "simple join conclusions must use an atomic role".into(),
        });
    }
    c.end()?;
    Ok((line.no, premise, conclusion))
}

fn parse_abox_line(line: &Line) -> Result<Atom, ParseError> {
    let mut c = Cursor::new(line);
    let col = c.col();
    let atom = c.plain_atom(&BTreeSet::new())?;
    c.end()?;
    if !atom.args.iter().all(Term::is_const) {
        return Err(ParseError { line: line.no, column: col, message: "ABox assertions must be ground".into() });
    }
    Ok(atom)
}

struct RawAction {
    name: Symbol,
    params: Vec<Symbol>,
    guard: Vec<Atom>,
    effect: Atom,
}

fn parse_action_line(line: &Line) -> Result<RawAction, ParseError> {
    let mut c = Cursor::new(line);
    let name = c.ident("an action name")?;
    c.expect(&Tok::LParen, "`(`")?;
    let mut params = Vec::new();
    if !c.eat(&Tok::RParen) {
        loop {
            match c.peek() {
                Some(Tok::Var(v)) | Some(Tok::Ident(v)) => {
                    params.push(v.clone());
                    c.pos += 1;
                }
                _ => return Err(c.unexpected("a parameter")),
            }
            if c.eat(&Tok::RParen) {
                break;
            }
            c.expect(&Tok::Comma, "`,` or `)`")?;
        }
    }
    c.expect(&Tok::Colon, "`:`")?;
    let param_set: BTreeSet<String> = params.iter().cloned().collect();
    let guard = c.atom_list(&param_set)?;
    c.expect(&Tok::Implies, "`=>`")?;
    let effect = c.plain_atom(&param_set)?;
    c.end()?;
    Ok(RawAction { name: name.into(), params: params.into_iter().map(Symbol::from).collect(), guard, effect })
}

#[derive(Default)]
struct Arities {
    roles: BTreeSet<Symbol>,
    concepts: BTreeSet<Symbol>,
}

impl Arities {
    fn record(&mut self, p: &Symbol, arity: usize) -> Result<(), ValidationError> {
        let (mine, other) =
            if arity == 2 { (&mut self.roles, &self.concepts) } else { (&mut self.concepts, &self.roles) };
        if other.contains(p) {
            return Err(ValidationError::ArityConflict { predicate: p.clone() });
        }
        mine.insert(p.clone());
        Ok(())
    }
}
