//! Forward planning: exhaustive exploration of the transition system from `A0`.

use crate::dkb::{next, PlanningProblem};
use crate::graph::{search, PlanningGraph, RunMetrics, SearchConfig};
use crate::reasoner::Reasoner;

pub fn forward_plan(problem: &PlanningProblem, cfg: &SearchConfig) -> (PlanningGraph, RunMetrics) {
    forward_plan_with(problem, &problem.reasoner(), cfg)
}

/// As [`forward_plan`], reusing a caller-owned reasoner and its cache.
pub fn forward_plan_with(
    problem: &PlanningProblem,
    reasoner: &Reasoner,
    cfg: &SearchConfig,
) -> (PlanningGraph, RunMetrics) {
    let gamma = problem.dkb.actions();
    search(problem, reasoner, cfg, |r, a| next(r, a, gamma))
}
