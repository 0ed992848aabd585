//! Fixable vertices, φ on graphs, valid fixing sequences, reachable and intrinsic sets.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::set::NodeSet;
use crate::Limits;

/// An order of fixings. Validity is relative to the graph it is applied to;
/// [`FixingSequence::validate`] checks it against a specific origin.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct FixingSequence {
    steps: Vec<usize>,
}

impl FixingSequence {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn validate(origin: &MixedGraph, steps: Vec<usize>) -> Result<Self> {
        apply_sequence(origin, &steps)?;
        Ok(FixingSequence { steps })
    }

    pub(crate) fn from_steps(steps: Vec<usize>) -> Self {
        FixingSequence { steps }
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn set(&self) -> NodeSet {
        self.steps.iter().copied().collect()
    }

    pub fn names(&self, g: &MixedGraph) -> Vec<String> {
        self.steps.iter().map(|&v| g.name(v).to_string()).collect()
    }

    pub(crate) fn then(&self, more: &[usize]) -> FixingSequence {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(more);
        FixingSequence { steps }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachableSet {
    pub remaining: NodeSet,
    pub witness: FixingSequence,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntrinsicSet {
    pub members: NodeSet,
    pub witness: FixingSequence,
}

/// {v ∈ V : dis(v) ∩ de(v) = {v}}.
pub fn fixable(g: &MixedGraph) -> NodeSet {
    g.random().iter().filter(|&v| g.is_fixable(v)).collect()
}

pub fn fix_graph(g: &MixedGraph, r: usize) -> Result<MixedGraph> {
    if !g.is_random(r) {
        return Err(Error::invalid(format!("{} is not a random vertex", name(g, r))));
    }
    if !g.is_fixable(r) {
        return Err(Error::NotFixable {
            vertex: g.name(r).to_string(),
            evidence: g.names_of(g.fix_obstruction(r)),
        });
    }
    Ok(g.fix_unchecked(r))
}

/// φ*: fixes `r` whether or not it is fixable. Reserved for identification
/// arguments and tests; kernels are never fixed this way.
pub fn fix_star(g: &MixedGraph, r: usize) -> Result<MixedGraph> {
    if !g.is_random(r) {
        return Err(Error::invalid(format!("{} is not a random vertex", name(g, r))));
    }
    Ok(g.fix_unchecked(r))
}

fn name(g: &MixedGraph, v: usize) -> String {
    g.universe().get(v).cloned().unwrap_or_else(|| format!("#{v}"))
}

pub fn apply_sequence(g: &MixedGraph, steps: &[usize]) -> Result<MixedGraph> {
    let mut cur = g.clone();
    for (position, &r) in steps.iter().enumerate() {
        cur = match fix_graph(&cur, r) {
            Ok(next) => next,
            Err(Error::NotFixable { vertex, evidence }) => {
                return Err(Error::InvalidSequence {
                    position,
                    vertex,
                    evidence,
                })
            }
            Err(e) => return Err(e),
        };
    }
    Ok(cur)
}

/// Greedy search for a valid sequence fixing V \ R. Among the fixable
/// candidates the one latest in the topological order goes first, so childless
/// vertices are marginalized before anything is divided out.
pub fn reach(g: &MixedGraph, r: NodeSet) -> Option<FixingSequence> {
    if !r.is_subset(g.random()) {
        return None;
    }
    let order = g.topological_order();
    let mut pos = vec![0; g.universe_size()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut cur = g.clone();
    let mut steps = Vec::new();
    let mut todo = g.random().minus(r);
    while !todo.is_empty() {
        let v = todo
            .iter()
            .filter(|&v| cur.is_fixable(v))
            .max_by_key(|&v| pos[v])?;
        cur = cur.fix_unchecked(v);
        todo.remove(v);
        steps.push(v);
    }
    Some(FixingSequence { steps })
}

fn check_cap(g: &MixedGraph, limits: &Limits) -> Result<()> {
    let n = g.random().len();
    if n > limits.max_vertices {
        return Err(Error::ResourceLimit(format!(
            "{n} random vertices exceed the enumeration cap of {}",
            limits.max_vertices
        )));
    }
    Ok(())
}

fn sort_sets<T>(g: &MixedGraph, v: &mut [T], key: impl Fn(&T) -> NodeSet) {
    v.sort_by(|a, b| {
        let (x, y) = (key(a), key(b));
        x.len().cmp(&y.len()).then_with(|| g.set_key(x).cmp(&g.set_key(y)))
    });
}

/// Random-vertex sets of all reachable CADMGs, each with its greedy witness.
pub fn reachable_sets(g: &MixedGraph, limits: &Limits) -> Result<Vec<ReachableSet>> {
    check_cap(g, limits)?;
    let mut seen: HashSet<NodeSet> = HashSet::new();
    let mut stack = vec![(g.clone(), g.random())];
    seen.insert(g.random());
    let mut found = Vec::new();
    while let Some((cur, rem)) = stack.pop() {
        if !rem.is_empty() {
            found.push(rem);
        }
        for v in fixable(&cur).iter() {
            let next = rem.without(v);
            if seen.insert(next) {
                stack.push((cur.fix_unchecked(v), next));
            }
        }
    }
    let mut out: Vec<ReachableSet> = found
        .into_iter()
        .map(|r| ReachableSet {
            remaining: r,
            witness: reach(g, r).expect("enumerated sets are reachable"),
        })
        .collect();
    sort_sets(g, &mut out, |r| r.remaining);
    Ok(out)
}

/// Districts of reachable CADMGs, deduplicated.
pub fn intrinsic_sets(g: &MixedGraph, limits: &Limits) -> Result<Vec<IntrinsicSet>> {
    let mut seen: HashSet<NodeSet> = HashSet::new();
    let mut out = Vec::new();
    for r in reachable_sets(g, limits)? {
        let h = apply_sequence(g, r.witness.steps())?;
        for d in h.districts() {
            if seen.insert(d) {
                let witness = match reach(g, d) {
                    Some(w) => w,
                    None => r.witness.then(
                        reach(&h, d).expect("other districts are fixable").steps(),
                    ),
                };
                out.push(IntrinsicSet {
                    members: d,
                    witness,
                });
            }
        }
    }
    sort_sets(g, &mut out, |i| i.members);
    Ok(out)
}

/// D is reachable and bidirected-connected once V \ D is fixed.
pub fn is_intrinsic(g: &MixedGraph, d: NodeSet) -> bool {
    let Some(first) = d.first() else { return false };
    match reach(g, d) {
        None => false,
        Some(w) => {
            let h = apply_sequence(g, w.steps()).expect("greedy sequences are valid");
            h.district_within(first, d) == d
        }
    }
}
