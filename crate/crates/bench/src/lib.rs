//! Benchmark harness comparing forward planning (FP) with abstract backward planning
//! followed by plan instantiation (ABP+FPI).
//!
//! [`run_grid`] produces the comparison table over case-study scenarios, [`random_dkb`]
//! draws small seeded problems, and [`check_inclusion`] compares the plan sets of the two
//! planners on one problem.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::io;
use std::time::{Duration, Instant};

use dlplan_core::casegen::{CasegenError, REFERENCE_GRID};
use dlplan_core::graph::redundant;
use dlplan_core::{
    abp_fpi, extract_plans, forward_plan, generate, parse_kb, Plan, PlanningGraph, PlanningProblem, RunMetrics,
    ScenarioParams, SearchConfig,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Plan sets are only enumerated when the graph holds at most this many plans.
pub const PLAN_ENUMERATION_LIMIT: u128 = 20_000;

/// Transition cap per run, so a forward run on a large cell hits its timeout marker
/// before it exhausts memory.
pub const EDGE_BUDGET: usize = 500_000;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("repetitions must be at least 1")]
    InvalidRepetitions,
    #[error("no valid problem for seed {seed} after {attempts} attempts")]
    GenerationExhausted { seed: u64, attempts: usize },
    #[error("generator bounds out of range: {0}")]
    InvalidBounds(String),
    #[error("bad grid spec {spec:?}: {reason}")]
    GridSpec { spec: String, reason: String },
    #[error(transparent)]
    Scenario(#[from] CasegenError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Algorithm {
    Fp,
    AbpFpi,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Fp => "FP",
            Algorithm::AbpFpi => "ABP+FPI",
        })
    }
}

/// Counts of one completed run. They do not depend on the repetition.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Counts {
    pub edges: usize,
    pub visited: usize,
    pub inconsistent: usize,
    /// Root-to-goal paths in the planning graph.
    pub plans: u128,
    /// Plans with a proper subsequence that is also a plan; `None` past [`PLAN_ENUMERATION_LIMIT`].
    pub redundant: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub params: ScenarioParams,
    pub algorithm: Algorithm,
    /// `None` when the run hit the timeout.
    pub counts: Option<Counts>,
    /// Mean wall time over the repetitions, `None` on timeout.
    pub mean_time: Option<Duration>,
    pub repetitions: usize,
    /// Index of the FP row of the same cell (set on ABP+FPI rows).
    pub paired_with: Option<usize>,
    /// Whether every ABP+FPI plan is an FP plan. Set on ABP+FPI rows when both runs
    /// completed and both plan counts are within [`PLAN_ENUMERATION_LIMIT`].
    pub inclusion: Option<bool>,
}

impl BenchRow {
    pub fn timed_out(&self) -> bool {
        self.counts.is_none()
    }
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// FP row and ABP+FPI row per cell, in grid order.
    pub fn pairs(&self) -> impl Iterator<Item = (&BenchRow, &BenchRow)> {
        self.rows.iter().filter_map(|r| Some((&self.rows[r.paired_with?], r)))
    }

    pub fn write_csv<W: io::Write>(&self, out: W, with_reference: bool) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header =
            vec!["mng", "emp", "techdoc", "algo", "P", "V", "Inc", "time_s", "plans", "redundant", "timeout"];
        if with_reference {
            header.extend(["ref_P", "ref_V", "ref_Inc", "ref_time_s"]);
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let p = &row.params;
            let c = row.counts;
            let opt = |v: Option<String>| v.unwrap_or_default();
            let mut rec = vec![
                p.n_managers.to_string(),
                p.n_employees.to_string(),
                p.n_techdocs.to_string(),
                row.algorithm.to_string(),
                opt(c.map(|c| c.edges.to_string())),
                opt(c.map(|c| c.visited.to_string())),
                opt(c.map(|c| c.inconsistent.to_string())),
                row.mean_time.map_or_else(|| "inf".to_string(), |t| format!("{:.4}", t.as_secs_f64())),
                opt(c.map(|c| c.plans.to_string())),
                opt(c.and_then(|c| c.redundant).map(|r| r.to_string())),
                row.timed_out().to_string(),
            ];
            if with_reference {
                let reference = reference_row((p.n_managers, p.n_employees, p.n_techdocs), row.algorithm);
                match reference {
                    Some(Some(r)) => rec.extend([
                        r.edges.to_string(),
                        r.visited.to_string(),
                        r.inconsistent.to_string(),
                        format!("{:.2}", r.time_s),
                    ]),
                    Some(None) => rec.extend(["".into(), "".into(), "".into(), "inf".into()]),
                    None => rec.extend(std::iter::repeat_n(String::new(), 4)),
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, with_reference: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_reference).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// One algorithm's reference figures for one cell.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ReferenceCounts {
    pub edges: usize,
    pub visited: usize,
    pub inconsistent: usize,
    pub time_s: f64,
}

const fn pc(edges: usize, visited: usize, inconsistent: usize, time_s: f64) -> ReferenceCounts {
    ReferenceCounts { edges, visited, inconsistent, time_s }
}

/// Cell, FP figures (`None` = did not finish within 200 s), ABP+FPI figures.
pub type ReferenceRow = ((usize, usize, usize), Option<ReferenceCounts>, ReferenceCounts);

/// The reference comparison table.
pub const REFERENCE_TABLE: [ReferenceRow; 8] = [
    ((1, 1, 1), Some(pc(3, 17, 13, 0.06)), pc(3, 7, 3, 0.07)),
    ((1, 1, 2), Some(pc(9, 38, 29, 0.48)), pc(5, 10, 4, 0.30)),
    ((1, 1, 3), Some(pc(25, 87, 66, 0.28)), pc(7, 13, 5, 0.10)),
    ((1, 2, 2), Some(pc(50, 154, 116, 0.71)), pc(10, 15, 4, 0.15)),
    ((2, 2, 2), Some(pc(80, 172, 134, 1.35)), pc(16, 16, 5, 0.22)),
    ((2, 2, 3), Some(pc(270, 413, 291, 3.42)), pc(22, 21, 6, 0.18)),
    ((2, 3, 3), Some(pc(816, 1802, 1290, 33.16)), pc(33, 28, 6, 0.24)),
    ((20, 20, 20), None, pc(8800, 862, 41, 197.40)),
];

/// `None` if the cell is not in the reference table; `Some(None)` for a reference timeout.
pub fn reference_row(cell: (usize, usize, usize), algorithm: Algorithm) -> Option<Option<ReferenceCounts>> {
    let (_, fp, fpi) = REFERENCE_TABLE.iter().find(|(c, _, _)| *c == cell)?;
    Some(match algorithm {
        Algorithm::Fp => *fp,
        Algorithm::AbpFpi => Some(*fpi),
    })
}

/// The seven fully reported cells of the reference table, default generator.
pub fn reference_grid() -> Vec<ScenarioParams> {
    REFERENCE_GRID.iter().map(|&(m, e, d)| ScenarioParams::new(m, e, d)).collect()
}

/// Parses `reference`, a cell list such as `1/1/1,2/3/3`, or ranges such as
/// `mng=1..2,emp=1..3,doc=1..3`. The empty string is the empty grid.
pub fn parse_grid_spec(spec: &str) -> Result<Vec<ScenarioParams>, BenchError> {
    let err = |reason: &str| BenchError::GridSpec { spec: spec.to_string(), reason: reason.to_string() };
    let s = spec.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if s.eq_ignore_ascii_case("reference") {
        return Ok(reference_grid());
    }
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| err(&format!("not a number: {t:?}")));
    if s.contains('=') {
        let mut ranges: [Option<(usize, usize)>; 3] = [None; 3];
        for part in s.split(',') {
            let (key, val) = part.split_once('=').ok_or_else(|| err("expected key=range"))?;
            let slot = match key.trim() {
                "mng" => 0,
                "emp" => 1,
                "doc" | "techdoc" => 2,
                k => return Err(err(&format!("unknown key {k:?}"))),
            };
            let (lo, hi) = match val.split_once("..") {
                Some((lo, hi)) => (num(lo)?, num(hi)?),
                None => (num(val)?, num(val)?),
            };
            if lo > hi {
                return Err(err("empty range"));
            }
            if ranges[slot].replace((lo, hi)).is_some() {
                return Err(err(&format!("{} given twice", key.trim())));
            }
        }
        let [Some(m), Some(e), Some(d)] = ranges else {
            return Err(err("mng, emp and doc are all required"));
        };
        let mut grid = Vec::new();
        for mi in m.0..=m.1 {
            for ei in e.0..=e.1 {
                for di in d.0..=d.1 {
                    grid.push(ScenarioParams::new(mi, ei, di));
                }
            }
        }
        return Ok(grid);
    }
    s.split(',')
        .map(|cell| {
            let parts: Vec<&str> = cell.split('/').collect();
            let [m, e, d] = parts[..] else {
                return Err(err("cells are written mng/emp/doc"));
            };
            Ok(ScenarioParams::new(num(m)?, num(e)?, num(d)?))
        })
        .collect()
}

struct Run {
    graph: PlanningGraph,
    metrics: RunMetrics,
}

fn run_once(problem: &PlanningProblem, algorithm: Algorithm, timeout: Duration) -> Run {
    let cfg = SearchConfig { time_limit: Some(timeout), edge_limit: Some(EDGE_BUDGET), ..SearchConfig::default() };
    let (graph, metrics) = match algorithm {
        Algorithm::Fp => forward_plan(problem, &cfg),
        Algorithm::AbpFpi => {
            let (_, g, m) = abp_fpi(problem, &cfg);
            (g, m)
        }
    };
    Run { graph, metrics }
}

fn plan_set(problem: &PlanningProblem, graph: &PlanningGraph) -> Option<BTreeSet<Plan>> {
    (graph.count_plans() <= PLAN_ENUMERATION_LIMIT).then(|| extract_plans(graph, problem, None))
}

struct Measured {
    counts: Option<Counts>,
    mean_time: Option<Duration>,
    plans: Option<BTreeSet<Plan>>,
}

fn measure(problem: &PlanningProblem, algorithm: Algorithm, reps: usize, timeout: Duration) -> Measured {
    let mut total = Duration::ZERO;
    let mut last = None;
    for _ in 0..reps {
        // Each call builds its own reasoner, so caches start cold.
        let start = Instant::now();
        let run = run_once(problem, algorithm, timeout);
        let spent = start.elapsed();
        if run.metrics.timed_out {
            return Measured { counts: None, mean_time: None, plans: None };
        }
        total += spent;
        last = Some(run);
    }
    let run = last.expect("at least one repetition");
    let plans = plan_set(problem, &run.graph);
    let counts = Counts {
        edges: run.metrics.edges,
        visited: run.metrics.visited,
        inconsistent: run.metrics.inconsistent,
        plans: run.graph.count_plans(),
        redundant: plans.as_ref().map(|ps| ps.iter().filter(|p| redundant(p, ps)).count()),
    };
    Measured { counts: Some(counts), mean_time: Some(total / reps as u32), plans }
}

/// Runs both planners on every cell. Cells run in parallel, repetitions within a cell
/// run sequentially. A run that exceeds `timeout` is recorded as timed out and its
/// remaining repetitions are skipped.
pub fn run_grid(grid: &[ScenarioParams], repetitions: usize, timeout: Duration) -> Result<BenchReport, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::InvalidRepetitions);
    }
    let problems = grid.iter().map(generate).collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(Measured, Measured)> = problems
        .par_iter()
        .map(|p| (measure(p, Algorithm::Fp, repetitions, timeout), measure(p, Algorithm::AbpFpi, repetitions, timeout)))
        .collect();
    let mut rows = Vec::with_capacity(2 * grid.len());
    for (params, (fp, fpi)) in grid.iter().zip(cells) {
        let inclusion = match (&fp.plans, &fpi.plans) {
            (Some(a), Some(b)) => Some(b.is_subset(a)),
            _ => None,
        };
        let fp_index = rows.len();
        rows.push(BenchRow {
            params: *params,
            algorithm: Algorithm::Fp,
            counts: fp.counts,
            mean_time: fp.mean_time,
            repetitions,
            paired_with: None,
            inclusion: None,
        });
        rows.push(BenchRow {
            params: *params,
            algorithm: Algorithm::AbpFpi,
            counts: fpi.counts,
            mean_time: fpi.mean_time,
            repetitions,
            paired_with: Some(fp_index),
            inclusion,
        });
    }
    Ok(BenchReport { rows })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InclusionVerdict {
    /// Every ABP+FPI plan is an FP plan.
    pub included: bool,
    pub fp_plans: BTreeSet<Plan>,
    pub fpi_plans: BTreeSet<Plan>,
    /// ABP+FPI plans missing from FP (empty whenever `included`).
    pub unsound: Vec<Plan>,
    /// Non-redundant FP plans that ABP+FPI did not find.
    pub missing_nonredundant: Vec<Plan>,
}

/// Runs both planners in all-plans mode and compares their plan sets. The problem must
/// be small enough to enumerate every FP plan.
pub fn check_inclusion(problem: &PlanningProblem) -> InclusionVerdict {
    let cfg = SearchConfig::default();
    let (fp_graph, _) = forward_plan(problem, &cfg);
    let (_, fpi_graph, _) = abp_fpi(problem, &cfg);
    let fp_plans = extract_plans(&fp_graph, problem, None);
    let fpi_plans = extract_plans(&fpi_graph, problem, None);
    let unsound: Vec<Plan> =
        fpi_plans.iter().filter(|p| !fp_plans.contains(*p) && !fp_graph.is_plan(&p.0)).cloned().collect();
    let missing_nonredundant =
        fp_plans.iter().filter(|p| !fpi_plans.contains(*p) && !redundant(p, &fp_plans)).cloned().collect();
    InclusionVerdict { included: unsound.is_empty(), fp_plans, fpi_plans, unsound, missing_nonredundant }
}

/// Size limits for [`random_dkb`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RandomBounds {
    pub max_actions: usize,
    pub max_constants: usize,
    pub max_tbox_axioms: usize,
    pub max_sj_axioms: usize,
    /// Cap on the number of distinct ground effects the actions can produce, which
    /// bounds the reachable state space by `2^max_effect_universe`.
    pub max_effect_universe: usize,
    pub max_attempts: usize,
}

impl Default for RandomBounds {
    fn default() -> Self {
        RandomBounds {
            max_actions: 4,
            max_constants: 6,
            max_tbox_axioms: 8,
            max_sj_axioms: 2,
            max_effect_universe: 10,
            max_attempts: 1_000,
        }
    }
}

impl RandomBounds {
    fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidBounds(m.to_string()));
        if !(1..=4).contains(&self.max_actions) {
            return bad("actions must be in 1..=4");
        }
        if !(2..=6).contains(&self.max_constants) {
            return bad("constants must be in 2..=6");
        }
        if self.max_tbox_axioms > 8 || self.max_sj_axioms > 2 {
            return bad("at most 8 TBox axioms and 2 simple join axioms");
        }
        if self.max_effect_universe == 0 || self.max_attempts == 0 {
            return bad("effect universe and attempt budget must be positive");
        }
        Ok(())
    }
}

const CONCEPTS: [&str; 4] = ["A", "B", "C", "D"];
const ROLES: [&str; 2] = ["r", "s"];
const SJ_ROLES: [&str; 2] = ["j", "k"];

/// Seeded small DKB with a consistent initial ABox, well-formed actions, and a goal that
/// does not hold initially. Candidates are drawn and rejected until one is valid.
pub fn random_dkb(seed: u64, bounds: &RandomBounds) -> Result<PlanningProblem, BenchError> {
    bounds.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..bounds.max_attempts {
        let Some(text) = draw_kb(&mut rng, bounds) else { continue };
        let Ok(spec) = parse_kb(&text) else { continue };
        let Ok(problem) = PlanningProblem::from_spec(spec) else { continue };
        let reasoner = problem.reasoner();
        if reasoner.ans(&problem.goal, problem.dkb.initial()).map_or(true, |a| !a.is_empty()) {
            continue;
        }
        return Ok(problem);
    }
    Err(BenchError::GenerationExhausted { seed, attempts: bounds.max_attempts })
}

/// KB text of one candidate, or `None` if it exceeds the effect universe.
fn draw_kb(rng: &mut ChaCha8Rng, b: &RandomBounds) -> Option<String> {
    let n_consts = rng.gen_range(2..=b.max_constants);
    let consts: Vec<String> = (0..n_consts).map(|i| format!("c{i}")).collect();
    let n_sj = rng.gen_range(0..=b.max_sj_axioms);
    let mut kb = String::from("[tbox]\n");
    let mut n_ax = 0;
    let n_incl = rng.gen_range(1..=b.max_tbox_axioms.clamp(1, 5));
    for _ in 0..n_incl {
        let (x, y) = two_distinct(rng, &CONCEPTS);
        if rng.gen_bool(0.25) {
            let r = ROLES.choose(rng).unwrap();
            let inv = if rng.gen_bool(0.5) { "-" } else { "" };
            writeln!(kb, "exists {r}{inv} <= {y}").unwrap();
        } else {
            writeln!(kb, "{x} <= {y}").unwrap();
        }
        n_ax += 1;
    }
    if n_ax < b.max_tbox_axioms && rng.gen_bool(0.6) {
        let (x, y) = two_distinct(rng, &CONCEPTS);
        writeln!(kb, "{x} <= not {y}").unwrap();
        n_ax += 1;
    }
    if n_ax < b.max_tbox_axioms && rng.gen_bool(0.3) {
        writeln!(kb, "funct {}", ROLES.choose(rng).unwrap()).unwrap();
    }
    kb.push_str("\n[sj]\n");
    for role in SJ_ROLES.iter().take(n_sj) {
        let x = CONCEPTS.choose(rng).unwrap();
        let y = CONCEPTS.choose(rng).unwrap();
        writeln!(kb, "{x}(?x), {y}(?y) -> {role}(?x,?y)").unwrap();
    }

    kb.push_str("\n[abox]\n");
    for c in &consts {
        for concept in CONCEPTS {
            if rng.gen_bool(0.35) {
                writeln!(kb, "{concept}({c})").unwrap();
            }
        }
    }
    for _ in 0..rng.gen_range(1..=3) {
        let r = ROLES.choose(rng).unwrap();
        writeln!(kb, "{r}({},{})", consts.choose(rng).unwrap(), consts.choose(rng).unwrap()).unwrap();
    }

    kb.push_str("\n[actions]\n");
    let guard_roles: Vec<&str> = ROLES.iter().chain(SJ_ROLES.iter().take(n_sj)).copied().collect();
    let mut universe = 0;
    let mut effects = Vec::new();
    for i in 0..rng.gen_range(1..=b.max_actions) {
        let mut guard = Vec::new();
        let mut vars = vec!["x"];
        if rng.gen_bool(0.5) {
            vars.push("y");
            guard.push(format!("{}(x,y)", guard_roles.choose(rng).unwrap()));
            if rng.gen_bool(0.4) {
                guard.push(format!("{}(y)", CONCEPTS.choose(rng).unwrap()));
            }
        } else {
            guard.push(format!("{}(x)", CONCEPTS.choose(rng).unwrap()));
        }
        if rng.gen_bool(0.3) {
            guard.push(format!("{}(x)", CONCEPTS.choose(rng).unwrap()));
        }
        let effect = match rng.gen_range(0..3) {
            0 | 1 => {
                universe += n_consts;
                format!("{}({})", CONCEPTS.choose(rng).unwrap(), vars.choose(rng).unwrap())
            }
            _ if vars.len() == 2 && rng.gen_bool(0.3) => {
                universe += n_consts * n_consts;
                format!("{}({},{})", ROLES.choose(rng).unwrap(), vars[1], vars[0])
            }
            _ => {
                universe += n_consts;
                format!("{}(x,{})", ROLES.choose(rng).unwrap(), consts.choose(rng).unwrap())
            }
        };
        effects.push(effect.clone());
        writeln!(kb, "a{i}({}) : {} => {effect}", vars.join(","), guard.join(", ")).unwrap();
    }
    if universe > b.max_effect_universe {
        return None;
    }

    // The goal mentions an effect predicate so that plans can exist.
    kb.push_str("\n[goal]\n");
    let target = effects.choose(rng).unwrap();
    let pred = &target[..target.find('(').unwrap()];
    let mut goal = if target.contains(',') {
        format!("{pred}(?g,?h)")
    } else if rng.gen_bool(0.5) {
        format!("{pred}({})", consts.choose(rng).unwrap())
    } else {
        format!("{pred}(?g)")
    };
    if goal.contains("?g") && rng.gen_bool(0.3) {
        write!(goal, ", {}(?g)", CONCEPTS.choose(rng).unwrap()).unwrap();
    }
    writeln!(kb, "{goal}").unwrap();
    Some(kb)
}

fn two_distinct<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> (&'a str, &'a str) {
    let picked: Vec<&&str> = pool.choose_multiple(rng, 2).collect();
    (picked[0], picked[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_forms() {
        assert_eq!(parse_grid_spec("reference").unwrap().len(), 7);
        assert!(parse_grid_spec("").unwrap().is_empty());
        let g = parse_grid_spec("mng=1..2,emp=1..3,doc=1..3").unwrap();
        assert_eq!(g.len(), 18);
        assert_eq!(g[0], ScenarioParams::new(1, 1, 1));
        assert_eq!(g[17], ScenarioParams::new(2, 3, 3));
        assert_eq!(
            parse_grid_spec("1/1/1, 2/3/3").unwrap(),
            vec![ScenarioParams::new(1, 1, 1), ScenarioParams::new(2, 3, 3)]
        );
        assert!(parse_grid_spec("mng=1..2,emp=1").is_err());
        assert!(parse_grid_spec("1/1").is_err());
        assert!(parse_grid_spec("mng=2..1,emp=1,doc=1").is_err());
    }

    #[test]
    fn zero_repetitions_rejected() {
        assert!(matches!(run_grid(&reference_grid(), 0, Duration::from_secs(1)), Err(BenchError::InvalidRepetitions)));
    }

    #[test]
    fn random_dkb_is_deterministic() {
        let b = RandomBounds::default();
        let p = random_dkb(7, &b).unwrap().to_spec().to_kb_string();
        let q = random_dkb(7, &b).unwrap().to_spec().to_kb_string();
        assert_eq!(p, q);
    }

    #[test]
    fn random_dkb_respects_bounds() {
        let b = RandomBounds { max_constants: 5, ..RandomBounds::default() };
        for seed in 0..50 {
            let p = random_dkb(seed, &b).unwrap();
            assert!(p.dkb.actions().len() <= 4);
            assert!(p.dkb.tbox().dl().len() <= 8);
            assert!(p.dkb.tbox().sj().len() <= 2);
            let mut consts = dlplan_core::kb::adom(p.dkb.initial());
            for a in p.dkb.actions() {
                consts.extend(a.guard.constants());
                consts.extend(a.effect.args.iter().filter_map(|t| t.as_const().cloned()));
            }
            assert!(consts.len() <= 5, "seed {seed}: {consts:?}");
        }
    }

    #[test]
    fn invalid_bounds_rejected() {
        let b = RandomBounds { max_actions: 5, ..RandomBounds::default() };
        assert!(matches!(random_dkb(0, &b), Err(BenchError::InvalidBounds(_))));
    }

    #[test]
    fn csv_header_and_timeout_marker() {
        let report = run_grid(&[ScenarioParams::new(2, 3, 3)], 1, Duration::from_millis(1)).unwrap();
        let csv = report.to_csv_string(false);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "mng,emp,techdoc,algo,P,V,Inc,time_s,plans,redundant,timeout");
        let fp = lines.next().unwrap();
        assert!(fp.starts_with("2,3,3,FP,,,,inf,"), "{fp}");
        assert!(fp.ends_with(",true"));
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let report = run_grid(&[], 3, Duration::from_secs(1)).unwrap();
        assert_eq!(report.to_csv_string(true).lines().count(), 1);
    }
}
