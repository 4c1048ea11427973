//! DOT and JSON renderings of planning graphs.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::abp::{AbstractPlanningGraph, PresentationEdge};
use crate::graph::{PlanningGraph, StateStatus};
use crate::query::Substitution;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

fn subst_label(s: &Substitution) -> String {
    s.iter().map(|(v, t)| format!("{v}={t}")).collect::<Vec<_>>().join(", ")
}

fn link_label(s: &Substitution) -> String {
    s.iter().map(|(v, t)| format!("{v}→{t}")).collect::<Vec<_>>().join(", ")
}

/// States are labelled by the assertions they add to `A0`.
pub fn planning_graph_dot(g: &PlanningGraph) -> String {
    let mut out = String::from("digraph planning {\n  rankdir=LR;\n  node [shape=box, fontname=\"Helvetica\"];\n");
    let root = g.root_state();
    for id in g.graph_states() {
        let delta: Vec<String> = g.state(id).delta(root).map(|a| format!("+{a}")).collect();
        let mut label = if id == g.root() { "A0".to_string() } else { format!("A{id}") };
        for d in &delta {
            label.push('\n');
            label.push_str(d);
        }
        let mut attrs = format!("label=\"{}\"", escape(&label));
        if id == g.root() {
            attrs.push_str(", style=bold");
        }
        if g.status(id) == StateStatus::Goal {
            attrs.push_str(", peripheries=2");
        }
        let _ = writeln!(out, "  s{id} [{attrs}];");
    }
    for e in g.edges() {
        let label = format!("{}({})", e.action, subst_label(&e.subst));
        let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"];", e.source, e.target, escape(&label));
    }
    out.push_str("}\n");
    out
}

fn subst_json(s: &Substitution) -> Value {
    let mut m = Map::new();
    for (v, t) in s.iter() {
        m.insert(v.to_string(), Value::String(t.to_string()));
    }
    Value::Object(m)
}

pub fn planning_graph_json(g: &PlanningGraph) -> Value {
    let states: Vec<Value> = g
        .graph_states()
        .into_iter()
        .map(|id| {
            let assertions: Vec<String> = g.state(id).iter().map(|a| a.to_string()).collect();
            json!({ "id": id, "assertions": assertions, "goal": g.status(id) == StateStatus::Goal })
        })
        .collect();
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .map(
            |e| json!({ "src": e.source, "action": e.action.as_str(), "subst": subst_json(&e.subst), "dst": e.target }),
        )
        .collect();
    json!({ "version": 1, "root": g.root(), "states": states, "edges": edges })
}

/// States are numbered `S1…` in discovery order; initial-satisfied states are shaded.
pub fn abstract_graph_dot(g: &AbstractPlanningGraph) -> String {
    let mut out = String::from("digraph abstract {\n  node [shape=box, fontname=\"Helvetica\"];\n");
    for (i, s) in g.states().iter().enumerate() {
        let label = format!("S{}\n{}", i + 1, s.query);
        let mut attrs = format!("label=\"{}\"", escape(&label));
        if s.initial_satisfied {
            attrs.push_str(", style=filled, fillcolor=lightgray");
        }
        let _ = writeln!(out, "  a{i} [{attrs}];");
    }
    for e in g.edges() {
        match e {
            PresentationEdge::Action { from, to, action, link } => {
                let label = format!("{action}[{}]", link_label(link));
                let _ = writeln!(out, "  a{from} -> a{to} [label=\"{}\"];", escape(&label));
            }
            PresentationEdge::SimpleJoin { from, to } => {
                let _ = writeln!(out, "  a{from} -> a{to} [label=\"SJ axiom\", style=dashed];");
            }
        }
    }
    out.push_str("}\n");
    out
}

pub fn abstract_graph_json(g: &AbstractPlanningGraph) -> Value {
    let states: Vec<Value> = g
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| json!({ "id": i, "query": s.query.kb_syntax(), "initial": s.initial_satisfied }))
        .collect();
    let pairs: Vec<Value> = g
        .pairs()
        .iter()
        .map(|p| json!({ "state": p.state, "action": p.action.as_str(), "link": subst_json(&p.link) }))
        .collect();
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .map(|e| match e {
            PresentationEdge::Action { from, to, action, link } => {
                json!({ "src": from, "dst": to, "action": action.as_str(), "link": subst_json(link) })
            }
            PresentationEdge::SimpleJoin { from, to } => json!({ "src": from, "dst": to, "sj": true }),
        })
        .collect();
    json!({ "version": 1, "goals": g.goal_states(), "states": states, "pairs": pairs, "edges": edges, "truncated": g.truncated() })
}
