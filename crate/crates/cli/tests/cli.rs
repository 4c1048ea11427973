use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dlplan_core::export::{abstract_graph_dot, planning_graph_dot};
use dlplan_core::{abp_fpi, forward_plan, parse_kb, PlanningProblem, SearchConfig};

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn dlplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlplan")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn problem(rel: &str) -> PlanningProblem {
    PlanningProblem::from_spec(parse_kb(&fs::read_to_string(repo(rel)).unwrap()).unwrap()).unwrap()
}

/// Fixture with `Manager(e002)` added next to `Technician(e002)`.
fn clashing_kb(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(repo("kb/case_study.kb"))
        .unwrap()
        .replace("Manager(e001)\n", "Manager(e001)\nManager(e002)\n");
    let path = dir.join("clash.kb");
    fs::write(&path, text).unwrap();
    path
}

/// Recognizes the DOT subset: `digraph ID { stmt* }` with node, edge and attribute
/// statements, quoted strings and attribute lists.
mod dot {
    #[derive(Debug, PartialEq)]
    enum Tok {
        Id(String),
        Str,
        Arrow,
        Sym(char),
    }

    fn lex(s: &str) -> Result<Vec<Tok>, String> {
        let cs: Vec<char> = s.chars().collect();
        let mut i = 0;
        let mut out = Vec::new();
        while i < cs.len() {
            let c = cs[i];
            if c.is_whitespace() {
                i += 1;
            } else if c == '"' {
                i += 1;
                loop {
                    match cs.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('\\') => i += 2,
                        Some('"') => break,
                        Some(_) => i += 1,
                    }
                }
                i += 1;
                out.push(Tok::Str);
            } else if c == '-' && cs.get(i + 1) == Some(&'>') {
                i += 2;
                out.push(Tok::Arrow);
            } else if c.is_alphanumeric() || c == '_' || c == '.' {
                let start = i;
                while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_' || cs[i] == '.') {
                    i += 1;
                }
                out.push(Tok::Id(cs[start..i].iter().collect()));
            } else if "{}[];,=".contains(c) {
                out.push(Tok::Sym(c));
                i += 1;
            } else {
                return Err(format!("unexpected {c:?}"));
            }
        }
        Ok(out)
    }

    struct P {
        toks: Vec<Tok>,
        i: usize,
    }

    impl P {
        fn peek(&self) -> Option<&Tok> {
            self.toks.get(self.i)
        }

        fn sym(&mut self, c: char) -> bool {
            let hit = self.peek() == Some(&Tok::Sym(c));
            self.i += usize::from(hit);
            hit
        }

        fn id(&mut self) -> Result<(), String> {
            match self.peek() {
                Some(Tok::Id(_)) | Some(Tok::Str) => {
                    self.i += 1;
                    Ok(())
                }
                t => Err(format!("expected identifier, got {t:?}")),
            }
        }

        fn attrs(&mut self) -> Result<(), String> {
            while self.sym('[') {
                while !self.sym(']') {
                    self.id()?;
                    if !self.sym('=') {
                        return Err("expected =".into());
                    }
                    self.id()?;
                    let _ = self.sym(',') || self.sym(';');
                }
            }
            Ok(())
        }

        fn stmt(&mut self) -> Result<(), String> {
            if let Some(Tok::Id(k)) = self.peek() {
                if ["graph", "node", "edge"].contains(&k.as_str()) {
                    self.i += 1;
                    return self.attrs();
                }
            }
            self.id()?;
            if self.sym('=') {
                return self.id();
            }
            while self.peek() == Some(&Tok::Arrow) {
                self.i += 1;
                self.id()?;
            }
            self.attrs()
        }
    }

    pub fn check(s: &str) -> Result<(), String> {
        let mut p = P { toks: lex(s)?, i: 0 };
        if p.peek() != Some(&Tok::Id("digraph".into())) {
            return Err("expected digraph".into());
        }
        p.i += 1;
        if matches!(p.peek(), Some(Tok::Id(_)) | Some(Tok::Str)) {
            p.i += 1;
        }
        if !p.sym('{') {
            return Err("expected {".into());
        }
        while !p.sym('}') {
            if p.peek().is_none() {
                return Err("unexpected end".into());
            }
            p.stmt()?;
            p.sym(';');
        }
        match p.peek() {
            None => Ok(()),
            Some(t) => Err(format!("trailing {t:?}")),
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(check("digraph g { a -> b [label=\"x\"]; }").is_ok());
        assert!(check("digraph g { a -> ; }").is_err());
        assert!(check("digraph g { a [label=\"x] }").is_err());
        assert!(check("graph g { }").is_err());
        assert!(check("digraph g { a }").is_ok());
        assert!(check("digraph g { a } b").is_err());
    }
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dlplan(&["check", repo("kb/case_study.kb").to_str().unwrap()]);
    assert_eq!(code(&ok), 0);
    assert_eq!(stdout(&ok), "consistent\n");
    let bad = dlplan(&["check", clashing_kb(dir.path()).to_str().unwrap()]);
    assert_eq!(code(&bad), 2);
    assert_eq!(stdout(&bad), golden("check_inconsistent.txt"));
    let missing = dlplan(&["check", dir.path().join("absent.kb").to_str().unwrap()]);
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("absent.kb"));
}

#[test]
fn check_reports_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.kb");
    fs::write(&path, "[abox]\nManager(e001\n").unwrap();
    let o = dlplan(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn query_rows() {
    let kb = repo("kb/two_technicians.kb");
    let kb = kb.to_str().unwrap();
    let o = dlplan(&["query", kb, "Manager(?x), canManage(?y,?z)"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), golden("query_two_technicians.txt"));
    let ground = dlplan(&["query", kb, "Manager(e001)"]);
    assert_eq!(stdout(&ground), "{}\n");
    let none = dlplan(&["query", kb, "Manager(e002)"]);
    assert_eq!((code(&none), stdout(&none)), (0, String::new()));
    assert_eq!(code(&dlplan(&["query", kb, "Manager(?x"])), 1);
}

#[test]
fn query_on_inconsistent_kb() {
    let dir = tempfile::tempdir().unwrap();
    let o = dlplan(&["query", clashing_kb(dir.path()).to_str().unwrap(), "Employee(?x)"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).is_empty());
}

#[test]
fn plan_text_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan.txt");
    let o = dlplan(&["plan", repo("kb/case_1_1_1.kb").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("|P|=3 |V|=10 Inc=6 "));
    assert!(stdout(&o).trim_end().ends_with("plans=1"));
    assert_eq!(fs::read_to_string(&out).unwrap(), golden("plan_case_1_1_1.txt"));
}

#[test]
fn plan_dot_is_library_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.dot");
    let o = dlplan(&[
        "plan",
        repo("kb/two_actions.kb").to_str().unwrap(),
        "--format",
        "dot",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    dot::check(&text).unwrap();
    let (g, _) = forward_plan(&problem("kb/two_actions.kb"), &SearchConfig::default());
    assert_eq!(text, planning_graph_dot(&g));
    assert_eq!(text, golden("plan_two_actions.dot"));
}

#[test]
fn abp_fpi_writes_both_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("case.dot");
    let kb = "kb/case_1_1_1_adm.kb";
    let o = dlplan(&[
        "plan",
        repo(kb).to_str().unwrap(),
        "--algo",
        "abp-fpi",
        "--format",
        "dot",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let (a, g, _) = abp_fpi(&problem(kb), &SearchConfig::default());
    let concrete = fs::read_to_string(&out).unwrap();
    let abstract_text = fs::read_to_string(dir.path().join("case.abstract.dot")).unwrap();
    dot::check(&concrete).unwrap();
    dot::check(&abstract_text).unwrap();
    assert_eq!(concrete, planning_graph_dot(&g));
    assert_eq!(abstract_text, abstract_graph_dot(&a));
    assert_eq!(abstract_text.matches("fillcolor=lightgray").count(), 2);
    assert_eq!(abstract_text.matches("style=dashed").count(), 2);
    assert_eq!(abstract_text.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count(), 7);
}

#[test]
fn plan_json_is_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let o = dlplan(&[
        "plan",
        repo("kb/two_actions.kb").to_str().unwrap(),
        "--algo",
        "abp-fpi",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["edges"].as_array().unwrap().len(), 1);
    let a: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("g.abstract.json")).unwrap()).unwrap();
    assert_eq!(a["pairs"].as_array().unwrap().len(), 1);
}

#[test]
fn plan_without_plans_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.dot");
    let o = dlplan(&[
        "plan",
        repo("kb/goal_at_start.kb").to_str().unwrap(),
        "--format",
        "dot",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    let text = fs::read_to_string(&out).unwrap();
    dot::check(&text).unwrap();
    assert!(!text.contains("->"));
}

#[test]
fn plan_strategy_and_mode_flags() {
    let kb = repo("kb/two_actions.kb");
    let lifo = dlplan(&["plan", kb.to_str().unwrap(), "--strategy", "lifo", "--mode", "first"]);
    assert_eq!(code(&lifo), 0);
    assert!(stdout(&lifo).contains("plan: "));
    assert_eq!(code(&dlplan(&["plan", kb.to_str().unwrap(), "--strategy", "sideways"])), 2);
}

#[test]
fn plan_requires_goal() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nogoal.kb");
    fs::write(&path, "[abox]\nManager(e001)\n").unwrap();
    let o = dlplan(&["plan", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("goal"));
}

#[test]
fn bench_csv() {
    let empty = dlplan(&["bench", "--grid", ""]);
    assert_eq!(code(&empty), 0);
    assert_eq!(stdout(&empty), "mng,emp,techdoc,algo,P,V,Inc,time_s,plans,redundant,timeout\n");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = dlplan(&["bench", "--grid", "1/1/1", "--reps", "2", "--reference", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].ends_with("ref_P,ref_V,ref_Inc,ref_time_s"));
    assert!(rows[1].starts_with("1,1,1,FP,3,10,6,"));
    assert!(rows[2].starts_with("1,1,1,ABP+FPI,3,7,3,"));
    assert!(rows[2].ends_with(",3,7,3,0.07"));
}

#[test]
fn bench_forced_timeout() {
    let o = dlplan(&["bench", "--grid", "2/3/3", "--reps", "1", "--timeout-s", "0.001"]);
    assert_eq!(code(&o), 0);
    let fp = stdout(&o).lines().nth(1).unwrap().to_string();
    assert_eq!(fp, "2,3,3,FP,,,,inf,,,true");
}

#[test]
fn bench_errors() {
    assert_eq!(code(&dlplan(&["bench", "--grid", "mng=2..1"])), 1);
    assert_eq!(code(&dlplan(&["bench", "--grid", "1/1/1", "--reps", "0"])), 1);
}

#[test]
fn bench_random_inclusion() {
    let o = dlplan(&["bench", "--grid", "", "--random", "5", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("inclusion held on 5 of 5"));
}

#[test]
fn export_round_trips() {
    let o = dlplan(&["export"]);
    assert_eq!(code(&o), 0);
    let spec = parse_kb(&stdout(&o)).unwrap();
    assert_eq!(spec, dlplan_core::casegen::case_study_spec());
    let cell = dlplan(&["export", "--scenario", "1/1/1"]);
    let committed = fs::read_to_string(repo("kb/case_1_1_1.kb")).unwrap();
    assert_eq!(parse_kb(&stdout(&cell)).unwrap(), parse_kb(&committed).unwrap());
    let adm = dlplan(&["export", "--scenario", "1/1/1", "--administrative"]);
    assert!(stdout(&adm).contains("Administrative(e003)"));
    assert_eq!(code(&dlplan(&["export", "--scenario", "1/1/1,2/2/2"])), 1);
}
