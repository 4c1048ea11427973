//! Planning over DL-Lite dynamic knowledge bases.
//!
//! The crate provides a chase-based reasoner, a forward planner that explores the full
//! state space, and a two-phase planner that first regresses the goal into abstract states
//! and then instantiates only the transitions those states allow.

pub mod abp;
pub mod casegen;
pub mod dkb;
pub mod export;
pub mod fp;
pub mod fpi;
pub mod graph;
pub mod kb;
pub mod query;
pub mod reasoner;

pub use abp::{abstract_backward_plan, AbstractPlanningGraph};
pub use casegen::{case_study_fixture, generate, ScenarioParams};
pub use dkb::{Action, Dkb, PlanningProblem, Transition};
pub use fp::forward_plan;
pub use fpi::{abp_fpi, fpi};
pub use graph::{extract_plans, Mode, Plan, PlanningGraph, RunMetrics, SearchConfig, Strategy};
pub use kb::{parse_kb, ABox, Assertion, ProblemSpec, Symbol, TBox, Term};
pub use query::{Atom, ConjunctiveQuery, Substitution, UnionQuery};
pub use reasoner::Reasoner;
