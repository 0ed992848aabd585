//! Graph and distribution files, and JSON reports.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::causal::IdResult;
use crate::error::{Error, Result};
use crate::graph::{valid_name, MixedGraph};
use crate::kernel::{CiViolation, Kernel, Rational, StateSpace};
use crate::nested::{CiConstraint, ConstraintReport, Verdict};
use crate::set::NodeSet;

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses the text graph format:
///
/// ```text
/// random: x1 x2
/// fixed: w
/// latent: x2
/// w -> x1
/// x1 <-> x2
/// ```
pub fn parse_graph(text: &str) -> Result<MixedGraph> {
    let mut random = Vec::new();
    let mut fixed = Vec::new();
    let mut latent = Vec::new();
    let mut declared: HashMap<String, (usize, usize)> = HashMap::new();
    let mut edges: Vec<(usize, &str, usize, &str, usize, bool)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        let body_t = body.trim();
        if let Some((key, rest)) = body_t.split_once(':') {
            let key = key.trim();
            let target = match key {
                "random" => &mut random,
                "fixed" => &mut fixed,
                "latent" => &mut latent,
                _ => return Err(parse_err(line, indent + 1, format!("unknown section {key:?}"))),
            };
            let offset = indent + body_t.len() - rest.len();
            for (col, tok) in tokens(rest) {
                let column = offset + col + 1;
                if !valid_name(tok) {
                    return Err(parse_err(line, column, format!("invalid vertex name {tok:?}")));
                }
                if key != "latent" {
                    if declared.insert(tok.to_string(), (line, column)).is_some() {
                        return Err(parse_err(line, column, format!("duplicate vertex {tok}")));
                    }
                } else if target.contains(&tok.to_string()) {
                    return Err(parse_err(line, column, format!("duplicate latent mark {tok}")));
                }
                target.push(tok.to_string());
            }
            continue;
        }
        let toks: Vec<(usize, &str)> = tokens(body).collect();
        match toks.as_slice() {
            [(ca, a), (_, op), (cb, b)] if *op == "->" || *op == "<->" => {
                edges.push((line, a, ca + 1, b, cb + 1, *op == "->"));
            }
            _ => return Err(parse_err(line, indent + 1, "expected \"a -> b\", \"a <-> b\" or a section line")),
        }
    }
    if declared.is_empty() {
        return Err(parse_err(1, 1, "no vertices declared"));
    }
    let fixed_set: HashSet<&String> = fixed.iter().collect();
    for l in &latent {
        if !declared.contains_key(l) {
            return Err(Error::invalid(format!("latent mark on unknown vertex {l}")));
        }
        if fixed_set.contains(l) {
            return Err(Error::invalid(format!("fixed vertex {l} cannot be latent")));
        }
    }
    let mut b = MixedGraph::builder().random(random).fixed(fixed).latent(latent);
    for (line, a, ca, h, ch, directed) in edges {
        for (name, col) in [(a, ca), (h, ch)] {
            if !declared.contains_key(name) {
                return Err(parse_err(line, col, format!("unknown vertex {name}")));
            }
        }
        b = if directed { b.directed(a, h) } else { b.bidirected(a, h) };
    }
    b.build()
}

/// Whitespace-separated tokens with their byte offsets.
fn tokens(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.split_whitespace()
        .map(move |t| (t.as_ptr() as usize - s.as_ptr() as usize, t))
}

pub fn render_graph(g: &MixedGraph) -> String {
    let mut out = String::new();
    let list = |s: NodeSet| s.iter().map(|v| g.name(v)).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "random: {}", list(g.random()));
    if !g.fixed().is_empty() {
        let _ = writeln!(out, "fixed: {}", list(g.fixed()));
    }
    if !g.latent().is_empty() {
        let _ = writeln!(out, "latent: {}", list(g.latent()));
    }
    for (a, b) in g.directed_edges() {
        let _ = writeln!(out, "{} -> {}", g.name(a), g.name(b));
    }
    for (a, b) in g.bidirected_edges() {
        let _ = writeln!(out, "{} <-> {}", g.name(a), g.name(b));
    }
    out
}

// ----- distributions -----

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub cardinality: BTreeMap<String, usize>,
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub assignment: BTreeMap<String, usize>,
    pub p: String,
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::invalid(format!("malformed rational {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    let r = Rational::new(n, d);
    if r.is_negative() {
        return Err(Error::invalid(format!("negative probability {s}")));
    }
    Ok(r)
}

/// Reads a kernel over `g`'s random vertices given its fixed ones. Omitted cells are 0.
pub fn parse_distribution(text: &str, g: &MixedGraph) -> Result<Kernel> {
    let file: DistributionFile =
        serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
    distribution_from_file(&file, g)
}

pub fn distribution_from_file(file: &DistributionFile, g: &MixedGraph) -> Result<Kernel> {
    let mut card = vec![2; g.universe_size()];
    for (name, &k) in &file.cardinality {
        let v = g.index(name)?;
        card[v] = k;
    }
    let scope = g.vertices();
    if let Some(v) = scope.iter().find(|&v| !file.cardinality.contains_key(g.name(v))) {
        return Err(Error::invalid(format!("no cardinality for {}", g.name(v))));
    }
    let space = StateSpace::new(card)?;
    crate::kernel::check_cells(&space, scope, &crate::Limits::default())?;
    let mut cells: HashMap<Vec<usize>, Rational> = HashMap::new();
    for e in &file.entries {
        let mut x = vec![0; g.universe_size()];
        let mut seen = NodeSet::EMPTY;
        for (name, &l) in &e.assignment {
            let v = g.index(name)?;
            if l >= space.card(v) {
                return Err(Error::invalid(format!("level {l} out of range for {name}")));
            }
            x[v] = l;
            seen.insert(v);
        }
        if seen != scope {
            return Err(Error::invalid("an entry does not assign every vertex exactly"));
        }
        if cells.insert(x, parse_rational(&e.p)?).is_some() {
            return Err(Error::invalid("duplicate entry"));
        }
    }
    let k = Kernel::from_fn_unchecked(&space, g.random(), g.fixed(), |x| {
        let key: Vec<usize> = (0..g.universe_size()).map(|v| if scope.contains(v) { x[v] } else { 0 }).collect();
        cells.get(&key).cloned().unwrap_or_else(Rational::zero)
    })?;
    if !k.is_normalized() {
        return Err(Error::invalid("probabilities do not sum to 1 in every fixed context"));
    }
    Ok(k)
}

pub fn distribution_to_file(k: &Kernel, g: &MixedGraph) -> DistributionFile {
    let cardinality = k.scope().iter().map(|v| (g.name(v).to_string(), k.card(v))).collect();
    let entries = (0..k.len())
        .map(|i| {
            let x = k.assignment(i);
            Entry {
                assignment: k.scope().iter().map(|v| (g.name(v).to_string(), x[v])).collect(),
                p: format_rational(&k.table()[i]),
            }
        })
        .collect();
    DistributionFile { cardinality, entries }
}

/// Pretty JSON with every cell listed.
pub fn render_distribution(k: &Kernel, g: &MixedGraph) -> String {
    let mut s = serde_json::to_string_pretty(&distribution_to_file(k, g)).expect("serializable");
    s.push('\n');
    s
}

// ----- JSON reports -----

fn names(g: &MixedGraph, s: NodeSet) -> Value {
    json!(g.names_of(s))
}

pub fn graph_json(g: &MixedGraph) -> Value {
    let pair = |(a, b): (usize, usize)| json!([g.name(a), g.name(b)]);
    json!({
        "random": names(g, g.random()),
        "fixed": names(g, g.fixed()),
        "latent": names(g, g.latent()),
        "directed": g.directed_edges().into_iter().map(pair).collect::<Vec<_>>(),
        "bidirected": g.bidirected_edges().into_iter().map(pair).collect::<Vec<_>>(),
        "text": render_graph(g),
    })
}

pub fn constraint_json(g: &MixedGraph, c: &CiConstraint) -> Value {
    json!({
        "fixed": names(g, c.fixed_set),
        "witness": c.witness.names(g),
        "a": names(g, c.a),
        "b": names(g, c.b),
        "c": names(g, c.c),
        "statement": c.display(g).to_string(),
    })
}

fn assignment_json(g: &MixedGraph, pairs: &[(usize, usize)]) -> Value {
    let m: Map<String, Value> = pairs.iter().map(|&(v, l)| (g.name(v).to_string(), json!(l))).collect();
    Value::Object(m)
}

fn violation_json(g: &MixedGraph, v: &CiViolation) -> Value {
    json!({
        "context": assignment_json(g, &v.context),
        "first": {"assignment": assignment_json(g, &v.first.0), "value": format_rational(&v.first.1)},
        "second": {"assignment": assignment_json(g, &v.second.0), "value": format_rational(&v.second.1)},
    })
}

/// Membership report. Timing is only included when given, so reports are
/// byte-identical by default.
pub fn report_json(g: &MixedGraph, r: &ConstraintReport, timing_ms: Option<u128>) -> Value {
    let mut list = Vec::new();
    let mut violations = Vec::new();
    let (mut pass, mut fail, mut degen) = (0, 0, 0);
    for (i, (c, v)) in r.constraints.iter().zip(&r.verdicts).enumerate() {
        let mut cj = constraint_json(g, c);
        let verdict = match v {
            Verdict::Pass => {
                pass += 1;
                "pass"
            }
            Verdict::Fail { violation, sequence } => {
                fail += 1;
                let mut vj = violation_json(g, violation);
                vj["sequence"] = json!(sequence.names(g));
                vj["index"] = json!(i);
                vj["statement"] = cj["statement"].clone();
                violations.push(vj);
                "fail"
            }
            Verdict::Degenerate(m) => {
                degen += 1;
                cj["note"] = json!(m);
                "degenerate"
            }
        };
        cj["verdict"] = json!(verdict);
        list.push(cj);
    }
    let mut out = json!({
        "mode": r.mode.name(),
        "constraints": list,
        "violations": violations,
        "summary": {"total": r.constraints.len(), "pass": pass, "fail": fail, "degenerate": degen},
        "member": r.passed(),
    });
    if let Some(t) = timing_ms {
        out["timing_ms"] = json!(t as u64);
    }
    out
}

pub fn id_json(g: &MixedGraph, id: &IdResult, functional: Option<&str>) -> Value {
    match id {
        IdResult::Identifiable { y_star, factors, sum_over } => json!({
            "identifiable": true,
            "y_star": names(g, *y_star),
            "factors": factors.iter().map(|(d, w)| json!({
                "district": names(g, *d),
                "witness": w.names(g),
            })).collect::<Vec<_>>(),
            "sum_over": names(g, *sum_over),
            "functional": functional,
        }),
        IdResult::NotIdentifiable {
            offending_district,
            minimal_intrinsic_superset,
        } => json!({
            "identifiable": false,
            "offending_district": names(g, *offending_district),
            "minimal_intrinsic_superset": names(g, *minimal_intrinsic_superset),
        }),
    }
}

/// A kernel as {"random", "fixed", "entries"} with rational strings.
pub fn kernel_json(g: &MixedGraph, k: &Kernel) -> Value {
    let f = distribution_to_file(k, g);
    json!({
        "random": names(g, k.random()),
        "fixed": names(g, k.fixed()),
        "cardinality": f.cardinality,
        "entries": f.entries,
    })
}

/// Stable pretty printing with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
