//! The document-management case study and its scaled variants.

use thiserror::Error;

use crate::dkb::PlanningProblem;
use crate::kb::{parse_kb, ABox, Assertion, ProblemSpec};

/// KB text of the case study.
pub const CASE_STUDY_KB: &str = include_str!("../fixtures/case_study.kb");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CasegenError {
    #[error("invalid scenario parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ScenarioParams {
    pub n_managers: usize,
    pub n_employees: usize,
    pub n_techdocs: usize,
    pub include_administrative: bool,
    /// Zero-based index of the single urgent document.
    pub urgent_doc_index: usize,
    /// Mark every technical document urgent instead of just one.
    pub all_docs_urgent: bool,
}

impl ScenarioParams {
    pub fn new(n_managers: usize, n_employees: usize, n_techdocs: usize) -> Self {
        ScenarioParams {
            n_managers,
            n_employees,
            n_techdocs,
            include_administrative: false,
            urgent_doc_index: 0,
            all_docs_urgent: false,
        }
    }

    pub fn with_administrative(mut self, on: bool) -> Self {
        self.include_administrative = on;
        self
    }

    pub fn with_all_docs_urgent(mut self, on: bool) -> Self {
        self.all_docs_urgent = on;
        self
    }
}

pub fn case_study_spec() -> ProblemSpec {
    parse_kb(CASE_STUDY_KB).expect("bundled fixture parses")
}

pub fn case_study_fixture() -> PlanningProblem {
    PlanningProblem::from_spec(case_study_spec()).expect("bundled fixture is a valid DKB")
}

/// Case-study schema, actions and goal over a generated ABox: managers `e001…`, then
/// plain employees, then (optionally) one administrative employee; documents `d001…`.
pub fn generate_spec(params: &ScenarioParams) -> Result<ProblemSpec, CasegenError> {
    if params.n_techdocs == 0 {
        return Err(CasegenError::InvalidParams("the goal ranges over documents; at least one is required".into()));
    }
    if params.urgent_doc_index >= params.n_techdocs {
        return Err(CasegenError::InvalidParams(format!(
            "urgent document index {} out of range for {} documents",
            params.urgent_doc_index, params.n_techdocs
        )));
    }
    let people = params.n_managers + params.n_employees + usize::from(params.include_administrative);
    if people > 999 || params.n_techdocs > 999 {
        return Err(CasegenError::InvalidParams("at most 999 individuals per kind".into()));
    }
    let mut abox = ABox::new();
    let mut next_person = (1..).map(|i| format!("e{i:03}"));
    for _ in 0..params.n_managers {
        abox.insert(Assertion::concept("Manager", next_person.next().unwrap().as_str()));
    }
    for _ in 0..params.n_employees {
        abox.insert(Assertion::concept("Employee", next_person.next().unwrap().as_str()));
    }
    if params.include_administrative {
        abox.insert(Assertion::concept("Administrative", next_person.next().unwrap().as_str()));
    }
    for i in 0..params.n_techdocs {
        let d = format!("d{:03}", i + 1);
        abox.insert(Assertion::concept("TechnicalDoc", d.as_str()));
        if params.all_docs_urgent || i == params.urgent_doc_index {
            abox.insert(Assertion::concept("UrgentDoc", d.as_str()));
        }
    }
    abox.insert(Assertion::concept("DocumentState", "reviewed"));
    Ok(ProblemSpec { abox, ..case_study_spec() })
}

pub fn generate(params: &ScenarioParams) -> Result<PlanningProblem, CasegenError> {
    let spec = generate_spec(params)?;
    Ok(PlanningProblem::from_spec(spec).expect("generated scenarios are consistent"))
}

/// The seven grid cells of the reference comparison, smallest first.
pub const REFERENCE_GRID: [(usize, usize, usize); 7] =
    [(1, 1, 1), (1, 1, 2), (1, 1, 3), (1, 2, 2), (2, 2, 2), (2, 2, 3), (2, 3, 3)];
