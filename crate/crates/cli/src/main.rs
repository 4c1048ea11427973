use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dlplan_bench::{check_inclusion, parse_grid_spec, random_dkb, run_grid, RandomBounds, PLAN_ENUMERATION_LIMIT};
use dlplan_core::export::{abstract_graph_dot, abstract_graph_json, planning_graph_dot, planning_graph_json};
use dlplan_core::kb::{parse_document, parse_query, KbDocument};
use dlplan_core::reasoner::default_depth_bound;
use dlplan_core::{
    abp_fpi, extract_plans, forward_plan, generate, AbstractPlanningGraph, Mode, PlanningGraph, PlanningProblem,
    Reasoner, RunMetrics, ScenarioParams, SearchConfig, Strategy,
};

const EXIT_INCONSISTENT: u8 = 2;
const EXIT_NO_PLAN: u8 = 3;

#[derive(Parser)]
#[command(name = "dlplan", version, about = "Planning over DL-Lite dynamic knowledge bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the initial ABox against the TBox. Exit 0 if consistent, 2 if not.
    Check { kb: PathBuf },
    /// Print the certain answers of a query, one substitution per line.
    Query {
        kb: PathBuf,
        /// Query in goal syntax, e.g. "Manager(?x), canManage(?y,d001)".
        query: String,
    },
    /// Run a planner. Exit 0 if a plan was found, 3 if not.
    Plan {
        kb: PathBuf,
        #[arg(long, value_enum, default_value_t = Algo::Fp)]
        algo: Algo,
        #[arg(long, value_enum, default_value_t = StrategyArg::Fifo)]
        strategy: StrategyArg,
        #[arg(long, value_enum, default_value_t = ModeArg::All)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Graph output file. For abp-fpi the abstract graph goes next to it as
        /// `<stem>.abstract.<ext>`. Without this flag the graph is written to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timeout_s: Option<f64>,
    },
    /// Run both planners over a scenario grid and write CSV.
    Bench {
        /// `reference`, a cell list such as `1/1/1,2/3/3`, or ranges such as
        /// `mng=1..2,emp=1..3,doc=1..3`.
        #[arg(long, default_value = "reference")]
        grid: String,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 200.0)]
        timeout_s: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Append the reference figures as reference columns.
        #[arg(long)]
        reference: bool,
        /// Also check plan inclusion on this many random problems.
        #[arg(long, default_value_t = 0)]
        random: u64,
        /// First seed for the random problems.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print KB text for the bundled case study or a generated scenario.
    Export {
        /// Cell such as `2/3/3`; the bundled case study if omitted.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        administrative: bool,
        #[arg(long)]
        all_urgent: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Fp,
    AbpFpi,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Fifo,
    Lifo,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    All,
    First,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Dot,
    Json,
    Text,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Dot => "dot",
            Format::Json => "json",
            Format::Text => "txt",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Check { kb } => check(&kb),
        Command::Query { kb, query } => run_query(&kb, &query),
        Command::Plan { kb, algo, strategy, mode, format, out, timeout_s } => {
            let cfg = SearchConfig {
                strategy: match strategy {
                    StrategyArg::Fifo => Strategy::Fifo,
                    StrategyArg::Lifo => Strategy::Lifo,
                },
                mode: match mode {
                    ModeArg::All => Mode::AllPlans,
                    ModeArg::First => Mode::FirstPlan,
                },
                time_limit: timeout_s.map(seconds).transpose()?,
                ..SearchConfig::default()
            };
            plan(&kb, algo, &cfg, format, out.as_deref())
        }
        Command::Bench { grid, reps, timeout_s, out, reference, random, seed } => {
            bench(&grid, reps, seconds(timeout_s)?, out.as_deref(), reference, seed, random)
        }
        Command::Export { scenario, administrative, all_urgent, out } => {
            let spec = match scenario {
                None => dlplan_core::casegen::case_study_spec(),
                Some(cell) => {
                    let [params] = parse_grid_spec(&cell)?[..] else {
                        bail!("--scenario takes a single cell such as 1/1/1");
                    };
                    dlplan_core::casegen::generate_spec(
                        &params.with_administrative(administrative).with_all_docs_urgent(all_urgent),
                    )?
                }
            };
            emit(out.as_deref(), &spec.to_kb_string())?;
            Ok(0)
        }
    }
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| anyhow::anyhow!("invalid timeout {s}"))
}

fn load_document(path: &Path) -> Result<KbDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_document(&text).with_context(|| format!("parsing {}", path.display()))
}

fn document_reasoner(doc: &KbDocument, extra_query_len: usize) -> Reasoner {
    let guards = doc.actions.iter().map(|a| a.guard.len()).max().unwrap_or(0);
    let goal = doc.goal.as_ref().map_or(0, |g| g.max_len());
    let len = guards.max(goal).max(extra_query_len);
    Reasoner::new(doc.tbox.clone(), default_depth_bound(&doc.tbox, len))
}

fn check(path: &Path) -> Result<u8> {
    let doc = load_document(path)?;
    match document_reasoner(&doc, 0).violation(&doc.abox) {
        None => {
            println!("consistent");
            Ok(0)
        }
        Some(v) => {
            println!("inconsistent: {v}");
            Ok(EXIT_INCONSISTENT)
        }
    }
}

fn run_query(path: &Path, text: &str) -> Result<u8> {
    let doc = load_document(path)?;
    let q = parse_query(text).context("parsing query")?;
    let r = document_reasoner(&doc, q.max_len());
    if let Some(v) = r.violation(&doc.abox) {
        eprintln!("inconsistent: {v}");
        return Ok(EXIT_INCONSISTENT);
    }
    let answers = r.ans(&q, &doc.abox)?;
    let mut out = io::stdout().lock();
    for theta in &answers {
        writeln!(out, "{theta}")?;
    }
    eprintln!("{} answer(s)", answers.len());
    Ok(0)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn render_graph(g: &PlanningGraph, problem: &PlanningProblem, format: Format) -> Result<String> {
    Ok(match format {
        Format::Dot => planning_graph_dot(g),
        Format::Json => serde_json_pretty(&planning_graph_json(g))?,
        Format::Text => {
            let mut s = String::new();
            for e in g.edges() {
                let step = dlplan_core::graph::Step { action: e.action.clone(), subst: e.subst.clone() };
                s.push_str(&format!("A{} -> A{}: {step}\n", e.source, e.target));
            }
            if g.count_plans() <= PLAN_ENUMERATION_LIMIT {
                for plan in extract_plans(g, problem, None) {
                    s.push_str(&format!("plan: {plan}\n"));
                }
            }
            s
        }
    })
}

fn render_abstract(g: &AbstractPlanningGraph, format: Format) -> Result<String> {
    Ok(match format {
        Format::Dot => abstract_graph_dot(g),
        Format::Json => serde_json_pretty(&abstract_graph_json(g))?,
        Format::Text => {
            let mut s = String::new();
            for (i, st) in g.states().iter().enumerate() {
                let mark = if st.initial_satisfied { " (initial)" } else { "" };
                s.push_str(&format!("S{}{mark}: {}\n", i + 1, st.query.kb_syntax()));
            }
            for p in g.pairs() {
                s.push_str(&format!("pair: S{} {} {}\n", p.state + 1, p.action, p.link));
            }
            s
        }
    })
}

fn serde_json_pretty(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn abstract_path(out: &Path, format: Format) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into());
    out.with_file_name(format!("{stem}.abstract.{}", format.extension()))
}

fn summary(metrics: &RunMetrics, plans: u128) -> String {
    let mut s = format!(
        "|P|={} |V|={} Inc={} time={:.3}s plans={plans}",
        metrics.edges,
        metrics.visited,
        metrics.inconsistent,
        metrics.total_elapsed.as_secs_f64()
    );
    if metrics.timed_out {
        s.push_str(" (timed out)");
    }
    s
}

fn plan(path: &Path, algo: Algo, cfg: &SearchConfig, format: Format, out: Option<&Path>) -> Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = dlplan_core::parse_kb(&text).with_context(|| format!("parsing {}", path.display()))?;
    let problem = PlanningProblem::from_spec(spec)?;
    for p in problem.unknown_goal_predicates() {
        eprintln!("warning: goal predicate {p} does not occur in the knowledge base or actions");
    }
    let (graph, metrics, abstract_graph) = match algo {
        Algo::Fp => {
            let (g, m) = forward_plan(&problem, cfg);
            (g, m, None)
        }
        Algo::AbpFpi => {
            let (a, g, m) = abp_fpi(&problem, cfg);
            (g, m, Some(a))
        }
    };
    let plans = graph.count_plans();
    emit(out, &render_graph(&graph, &problem, format)?)?;
    if let Some(a) = &abstract_graph {
        if a.truncated() {
            eprintln!("warning: abstract planning was truncated; some plans may be missing");
        }
        if let Some(out) = out {
            fs::write(abstract_path(out, format), render_abstract(a, format)?)?;
        }
    }
    let line = summary(&metrics, plans);
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(if plans > 0 { 0 } else { EXIT_NO_PLAN })
}

fn bench(
    grid: &str,
    reps: usize,
    timeout: Duration,
    out: Option<&Path>,
    reference: bool,
    seed: u64,
    random: u64,
) -> Result<u8> {
    let cells: Vec<ScenarioParams> = parse_grid_spec(grid)?;
    for c in &cells {
        generate(c)?;
    }
    let report = run_grid(&cells, reps, timeout)?;
    emit(out, &report.to_csv_string(reference))?;
    if random > 0 {
        let bounds = RandomBounds::default();
        let mut unsound = 0;
        for s in seed..seed.saturating_add(random) {
            let v = check_inclusion(&random_dkb(s, &bounds)?);
            if !v.included {
                unsound += 1;
                eprintln!("seed {s}: {} ABP+FPI plan(s) not found by FP", v.unsound.len());
            }
        }
        eprintln!("inclusion held on {} of {random} random problems", random - unsound);
        if unsound > 0 {
            return Ok(1);
        }
    }
    Ok(0)
}
