//! Forward plan instantiation: forward search restricted to transitions licensed by the
//! abstract planning graph.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Instant;

use crate::abp::{abstract_backward_plan_with, AbpConfig, AbstractPlanningGraph};
use crate::dkb::{apply, Action, PlanningProblem, Transition};
use crate::graph::{search, PlanningGraph, RunMetrics, SearchConfig};
use crate::kb::{ABox, Symbol};
use crate::query::Substitution;
use crate::reasoner::{Reasoner, ReasonerError};

/// Instantiations of the abstract pairs whose state holds in `a`.
pub fn next_a(
    reasoner: &Reasoner,
    a: &ABox,
    abstract_graph: &AbstractPlanningGraph,
    gamma: &[Action],
) -> Result<Vec<Transition>, ReasonerError> {
    let sat = reasoner.saturation(a);
    let mut answers: HashMap<usize, BTreeSet<Substitution>> = HashMap::new();
    let mut seen: HashSet<(Symbol, Substitution)> = HashSet::new();
    let mut out = Vec::new();
    for pair in abstract_graph.pairs() {
        if let Entry::Vacant(slot) = answers.entry(pair.state) {
            slot.insert(sat.ans_cq(&abstract_graph.state(pair.state).query)?);
        }
        let Some(act) = gamma.iter().find(|g| g.name == pair.action) else { continue };
        for theta in &answers[&pair.state] {
            let params: Substitution = act
                .params
                .iter()
                .map(|p| (p.clone(), theta.apply_term(&pair.link.apply_term(&crate::kb::Term::Var(p.clone())))))
                .collect();
            if !seen.insert((act.name.clone(), params.clone())) {
                continue;
            }
            let target = apply(act, &params, a).expect("links bind every parameter to a state term");
            out.push(Transition { action: act.name.clone(), subst: params, target });
        }
    }
    Ok(out)
}

pub fn fpi(
    problem: &PlanningProblem,
    abstract_graph: &AbstractPlanningGraph,
    cfg: &SearchConfig,
) -> (PlanningGraph, RunMetrics) {
    fpi_with(problem, &problem.reasoner(), abstract_graph, cfg)
}

pub fn fpi_with(
    problem: &PlanningProblem,
    reasoner: &Reasoner,
    abstract_graph: &AbstractPlanningGraph,
    cfg: &SearchConfig,
) -> (PlanningGraph, RunMetrics) {
    let gamma = problem.dkb.actions();
    search(problem, reasoner, cfg, |r, a| next_a(r, a, abstract_graph, gamma))
}

/// Abstract backward planning followed by instantiation. Metrics count only the
/// instantiation phase; `total_elapsed` covers both.
pub fn abp_fpi(problem: &PlanningProblem, cfg: &SearchConfig) -> (AbstractPlanningGraph, PlanningGraph, RunMetrics) {
    abp_fpi_with(problem, &problem.reasoner(), &AbpConfig::default(), cfg)
}

pub fn abp_fpi_with(
    problem: &PlanningProblem,
    reasoner: &Reasoner,
    abp: &AbpConfig,
    cfg: &SearchConfig,
) -> (AbstractPlanningGraph, PlanningGraph, RunMetrics) {
    let start = Instant::now();
    let abstract_graph = abstract_backward_plan_with(problem, reasoner, abp);
    let remaining = cfg.time_limit.map(|t| t.saturating_sub(start.elapsed()));
    let (graph, mut metrics) =
        fpi_with(problem, reasoner, &abstract_graph, &SearchConfig { time_limit: remaining, ..*cfg });
    metrics.total_elapsed = start.elapsed();
    (abstract_graph, graph, metrics)
}
