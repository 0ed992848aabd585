//! Constraint lists of the nested model and membership checks.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::fixing::{apply_sequence, intrinsic_sets, reach, reachable_sets, FixingSequence};
use crate::graph::MixedGraph;
use crate::kernel::{apply_sequence_kernel, fix_kernel, CiOutcome, CiTester, CiViolation, Kernel, StateSpace};
use crate::separation::m_reachable;
use crate::set::NodeSet;
use crate::Limits;

/// `order` must list every vertex of `g` once and be topological.
pub fn check_order(g: &MixedGraph, order: &[usize]) -> Result<()> {
    let mut seen = NodeSet::EMPTY;
    for &v in order {
        if !g.vertices().contains(v) || seen.contains(v) {
            return Err(Error::invalid("order must list each vertex exactly once"));
        }
        if !g.pa(v).is_subset(seen) {
            return Err(Error::invalid(format!(
                "order is not topological: {} comes before its parent",
                g.name(v)
            )));
        }
        seen.insert(v);
    }
    if seen != g.vertices() {
        return Err(Error::invalid("order must list each vertex exactly once"));
    }
    Ok(())
}

/// Parses a list of names into an order.
pub fn order_from_names<S: AsRef<str>>(g: &MixedGraph, names: &[S]) -> Result<Vec<usize>> {
    let order = names
        .iter()
        .map(|n| g.index(n.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    check_order(g, &order)?;
    Ok(order)
}

/// X_a ⫫ X_b | X_c in the kernel reached from p by `witness`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiConstraint {
    pub fixed_set: NodeSet,
    pub witness: FixingSequence,
    pub a: NodeSet,
    pub b: NodeSet,
    pub c: NodeSet,
}

impl CiConstraint {
    fn new(witness: FixingSequence, a: NodeSet, b: NodeSet, c: NodeSet) -> Self {
        CiConstraint {
            fixed_set: witness.set(),
            witness,
            a,
            b,
            c,
        }
    }

    pub fn display<'a>(&'a self, g: &'a MixedGraph) -> impl fmt::Display + 'a {
        Shown(self, g)
    }
}

struct Shown<'a>(&'a CiConstraint, &'a MixedGraph);

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (k, g) = (self.0, self.1);
        let list = |s: NodeSet| g.names_of(s).join(",");
        write!(f, "{} ⫫ {}", list(k.a), list(k.b))?;
        if !k.c.is_empty() {
            write!(f, " | {}", list(k.c))?;
        }
        write!(f, " [fixed: {}]", list(k.fixed_set))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Global,
    Local,
    Tian,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Global => "global",
            Mode::Local => "local",
            Mode::Tian => "tian",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "global" => Ok(Mode::Global),
            "local" => Ok(Mode::Local),
            "tian" => Ok(Mode::Tian),
            _ => Err(Error::invalid(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// `sequence` is the fixing order whose kernel violated the statement.
    Fail {
        violation: CiViolation,
        sequence: FixingSequence,
    },
    /// Fixing divided a positive entry by a vanishing conditional.
    Degenerate(String),
}

#[derive(Clone, Debug)]
pub struct ConstraintReport {
    pub mode: Mode,
    pub constraints: Vec<CiConstraint>,
    pub verdicts: Vec<Verdict>,
}

impl ConstraintReport {
    pub fn violations(&self) -> impl Iterator<Item = (&CiConstraint, &CiViolation)> {
        self.constraints
            .iter()
            .zip(&self.verdicts)
            .filter_map(|(c, v)| match v {
                Verdict::Fail { violation, .. } => Some((c, violation)),
                _ => None,
            })
    }

    pub fn violation_count(&self) -> usize {
        self.violations().count()
    }

    pub fn degenerate_count(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| matches!(v, Verdict::Degenerate(_)))
            .count()
    }

    /// Every constraint passed.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| *v == Verdict::Pass)
    }
}

// ----- canonical lists -----

fn sort_key<'g>(g: &'g MixedGraph, c: &CiConstraint) -> (usize, [Vec<&'g str>; 4]) {
    (
        c.fixed_set.len(),
        [g.set_key(c.fixed_set), g.set_key(c.a), g.set_key(c.b), g.set_key(c.c)],
    )
}

/// Orders each {a, b} pair by names, removes logical duplicates and sorts.
fn canonicalize(g: &MixedGraph, list: Vec<CiConstraint>) -> Vec<CiConstraint> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for mut c in list {
        if g.set_key(c.b) < g.set_key(c.a) {
            std::mem::swap(&mut c.a, &mut c.b);
        }
        if seen.insert((c.fixed_set, c.a, c.b, c.c)) {
            out.push(c);
        }
    }
    out.sort_by(|x, y| sort_key(g, x).cmp(&sort_key(g, y)));
    out
}

/// Every m-separation of each reachable CADMG, one maximal B per (R, A, C).
fn global_candidates(g: &MixedGraph, limits: &Limits) -> Result<Vec<CiConstraint>> {
    let mut out = Vec::new();
    for r in reachable_sets(g, limits)? {
        let h = apply_sequence(g, r.witness.steps())?;
        let all = h.vertices();
        for c in all.subsets() {
            for a in all.minus(c).subsets().skip(1) {
                let b = all.minus(a).minus(c).minus(m_reachable(&h, a, c));
                if !b.is_empty() {
                    out.push(CiConstraint::new(r.witness.clone(), a, b, c));
                }
            }
        }
    }
    Ok(canonicalize(g, out))
}

fn positions(g: &MixedGraph, order: &[usize]) -> Vec<usize> {
    let mut pos = vec![usize::MAX; g.universe_size()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    pos
}

/// For each intrinsic C, the local statement at max_≺(C) in φ_{V\C}(p).
fn local_candidates(g: &MixedGraph, order: &[usize], limits: &Limits) -> Result<Vec<CiConstraint>> {
    check_order(g, order)?;
    let pos = positions(g, order);
    let mut out = Vec::new();
    for i in intrinsic_sets(g, limits)? {
        let h = apply_sequence(g, i.witness.steps())?;
        let c = i.members;
        let v = c.iter().max_by_key(|&v| pos[v]).expect("non-empty");
        let mb = h.pa_of(c).union(c).without(v);
        let rest = h.vertices().minus(mb).without(v);
        if !rest.is_empty() {
            out.push(CiConstraint::new(i.witness, NodeSet::single(v), rest, mb));
        }
    }
    Ok(canonicalize(g, out))
}

/// Vertices of `s` in reverse ≺ order: fixing them in this order only ever
/// fixes childless vertices when `s` is closed under descendants.
fn latest_first(s: NodeSet, pos: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = s.iter().collect();
    v.sort_by_key(|&x| std::cmp::Reverse(pos[x]));
    v
}

/// FIND-CONSTRAINTS. The graph must have no fixed vertices.
pub fn tian_constraints(g: &MixedGraph, order: &[usize], limits: &Limits) -> Result<Vec<CiConstraint>> {
    if !g.fixed().is_empty() {
        return Err(Error::invalid("the constraint-finding algorithm takes an ADMG"));
    }
    if g.random().len() > limits.max_vertices {
        return Err(Error::ResourceLimit(format!(
            "{} random vertices exceed the enumeration cap of {}",
            g.random().len(),
            limits.max_vertices
        )));
    }
    check_order(g, order)?;
    let pos = positions(g, order);
    let mut out = Vec::new();
    for (i, &v) in order.iter().enumerate() {
        let t: NodeSet = order[..=i].iter().copied().collect();
        let later = FixingSequence::from_steps(latest_first(g.vertices().minus(t), &pos));
        let gt = apply_sequence(g, later.steps())?;
        let mb = gt.mb_within(v, t);
        let rest = t.minus(mb).without(v);
        if !rest.is_empty() {
            out.push(CiConstraint::new(later.clone(), NodeSet::single(v), rest, mb));
        }
        let s = gt.district_within(v, t);
        let to_s = reach(&gt, s).expect("complements of districts are fixable");
        let gs = apply_sequence(&gt, to_s.steps())?;
        node_constraints(v, &gs, &later.then(to_s.steps()), &pos, &mut out)?;
    }
    Ok(canonicalize(g, out))
}

/// NODE-CONSTRAINTS on the CADMG `h` reached from the input by `witness`.
/// Descendant closure is taken among the random vertices of `h`.
pub fn node_constraints(
    v: usize,
    h: &MixedGraph,
    witness: &FixingSequence,
    pos: &[usize],
    out: &mut Vec<CiConstraint>,
) -> Result<()> {
    let s = h.random();
    if !s.contains(v) || !h.ch(v).is_empty() {
        return Err(Error::invalid(format!("{} must be a childless random vertex", h.name(v))));
    }
    let pa_s = h.pa_of(s).minus(s);
    for d in s.without(v).subsets().skip(1) {
        if !h.de_of(d).is_subset(d) {
            continue;
        }
        let d2 = s.minus(d);
        let pa_d2 = h.pa_of(d2);
        let to_d2 = witness.then(&latest_first(d, pos));
        let b = pa_s.minus(pa_d2);
        if !b.is_empty() {
            out.push(CiConstraint::new(to_d2.clone(), d2, b, pa_d2.minus(d2)));
        }
        let h2 = apply_sequence(h, &to_d2.steps()[witness.len()..])?;
        let e = h2.district_within(v, d2);
        if h2.districts().len() > 1 {
            let mb = h.pa_of(e).union(e).without(v);
            let b2 = d2.union(pa_d2).minus(mb).without(v);
            if !b2.is_empty() {
                out.push(CiConstraint::new(to_d2.clone(), NodeSet::single(v), b2, mb));
            }
        }
        let to_e = reach(&h2, e).expect("complements of districts are fixable");
        let h3 = apply_sequence(&h2, to_e.steps())?;
        node_constraints(v, &h3, &to_d2.then(to_e.steps()), pos, out)?;
    }
    Ok(())
}

// ----- triviality filter -----

const GENERIC_SEEDS: [u64; 2] = [0x5eed_0001, 0x5eed_0002];
const GENERIC_WEIGHTS: (u64, u64) = (1, 1 << 20);

/// Drops statements that already hold in generic kernels, i.e. those that
/// every distribution satisfies once the fixings are done.
fn drop_trivial(g: &MixedGraph, list: Vec<CiConstraint>) -> Result<Vec<CiConstraint>> {
    if list.is_empty() {
        return Ok(list);
    }
    let space = StateSpace::binary(g);
    let mut keep = vec![false; list.len()];
    for seed in GENERIC_SEEDS {
        let p = crate::oracle::arbitrary_kernel_with(&space, g.random(), g.fixed(), seed, GENERIC_WEIGHTS)?;
        let verdicts = evaluate(g, &p, &list, true)?;
        for (k, v) in keep.iter_mut().zip(verdicts) {
            *k |= v != Verdict::Pass;
        }
    }
    Ok(list.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect())
}

/// Non-trivial m-separation statements over all reachable CADMGs.
pub fn global_nested_constraints(g: &MixedGraph, limits: &Limits) -> Result<Vec<CiConstraint>> {
    drop_trivial(g, global_candidates(g, limits)?)
}

/// Non-trivial ordered local statements, one per intrinsic set at most.
pub fn ordered_local_nested_constraints(
    g: &MixedGraph,
    order: &[usize],
    limits: &Limits,
) -> Result<Vec<CiConstraint>> {
    drop_trivial(g, local_candidates(g, order, limits)?)
}

/// The list for `mode` as printed by the CLI.
pub fn constraints(g: &MixedGraph, mode: Mode, order: &[usize], limits: &Limits) -> Result<Vec<CiConstraint>> {
    match mode {
        Mode::Global => global_nested_constraints(g, limits),
        Mode::Local => ordered_local_nested_constraints(g, order, limits),
        Mode::Tian => tian_constraints(g, order, limits),
    }
}

/// The statements `check_membership` evaluates: every non-vacuous statement of
/// the mode, trivial ones included.
pub fn membership_constraints(g: &MixedGraph, mode: Mode, order: &[usize], limits: &Limits) -> Result<Vec<CiConstraint>> {
    match mode {
        Mode::Global => global_candidates(g, limits),
        Mode::Local => local_candidates(g, order, limits),
        Mode::Tian => tian_constraints(g, order, limits),
    }
}

// ----- evaluation -----

/// Cap on the fixing-order prefixes explored in one evaluation.
const MAX_SEQUENCES: usize = 1 << 18;

/// Walks every valid fixing order of every set in `groups`, sharing prefixes, and
/// records each group's statements against each distinct kernel that fixes exactly its set.
/// Orders that divide by a vanishing conditional mark their statements degenerate.
#[allow(clippy::too_many_arguments)]
fn walk_orders(
    q: &Kernel,
    h: &MixedGraph,
    done: NodeSet,
    steps: &mut Vec<usize>,
    groups: &HashMap<NodeSet, Vec<usize>>,
    list: &[CiConstraint],
    out: &mut [Verdict],
    count: &mut usize,
    seen: &mut HashMap<NodeSet, Vec<Kernel>>,
) -> Result<()> {
    *count += 1;
    if *count > MAX_SEQUENCES {
        return Err(Error::ResourceLimit(format!("more than {MAX_SEQUENCES} fixing orders")));
    }
    if let Some(idx) = groups.get(&done) {
        let tested = seen.entry(done).or_default();
        if !tested.contains(q) {
            record(Ok(q), steps, idx, list, out)?;
            tested.push(q.clone());
        }
    }
    for v in h.random().iter().filter(|&v| h.is_fixable(v)) {
        let next_set = done.with(v);
        let above: Vec<&Vec<usize>> = groups.iter().filter(|(s, _)| next_set.is_subset(**s)).map(|(_, i)| i).collect();
        if above.is_empty() {
            continue;
        }
        steps.push(v);
        match fix_kernel(q, v, h) {
            Ok(next) => walk_orders(&next, &h.fix_unchecked(v), next_set, steps, groups, list, out, count, seen)?,
            Err(Error::Degenerate(m)) => {
                for idx in above {
                    record(Err(&m), steps, idx, list, out)?;
                }
            }
            Err(e) => return Err(e),
        }
        steps.pop();
    }
    Ok(())
}

/// Tests every statement of a group against one kernel, keeping the first failure.
fn record(k: std::result::Result<&Kernel, &str>, steps: &[usize], idx: &[usize], list: &[CiConstraint], out: &mut [Verdict]) -> Result<()> {
    let k = match k {
        Ok(k) => k,
        Err(m) => {
            for &i in idx {
                if out[i] == Verdict::Pass {
                    out[i] = Verdict::Degenerate(m.to_string());
                }
            }
            return Ok(());
        }
    };
    let mut t = CiTester::new(k);
    for &i in idx {
        if matches!(out[i], Verdict::Fail { .. }) {
            continue;
        }
        let c = &list[i];
        match t.test(c.a, c.b, c.c)? {
            CiOutcome::Holds => {}
            CiOutcome::Fails(violation) => {
                out[i] = Verdict::Fail {
                    violation,
                    sequence: FixingSequence::from_steps(steps.to_vec()),
                }
            }
            CiOutcome::Unsupported => {
                if out[i] == Verdict::Pass {
                    out[i] = Verdict::Degenerate("both sides meet the fixed set".into());
                }
            }
        }
    }
    Ok(())
}

/// With `every_order`, each statement is tested in the kernel of every valid
/// order of fixing its fixed set; otherwise only in its witness's kernel.
fn evaluate(g: &MixedGraph, p: &Kernel, list: &[CiConstraint], every_order: bool) -> Result<Vec<Verdict>> {
    let mut out = vec![Verdict::Pass; list.len()];
    if every_order {
        let mut groups: HashMap<NodeSet, Vec<usize>> = HashMap::new();
        for (i, c) in list.iter().enumerate() {
            groups.entry(c.fixed_set).or_default().push(i);
        }
        let mut count = 0;
        walk_orders(p, g, NodeSet::EMPTY, &mut Vec::new(), &groups, list, &mut out, &mut count, &mut HashMap::new())?;
        return Ok(out);
    }
    let mut groups: HashMap<&[usize], Vec<usize>> = HashMap::new();
    for (i, c) in list.iter().enumerate() {
        groups.entry(c.witness.steps()).or_default().push(i);
    }
    for (steps, idx) in groups {
        match apply_sequence_kernel(p, steps, g) {
            Ok((k, _)) => record(Ok(&k), steps, &idx, list, &mut out)?,
            Err(Error::Degenerate(m)) => record(Err(&m), steps, &idx, list, &mut out)?,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Evaluates a given list of statements against `p`.
pub fn check_constraints(g: &MixedGraph, p: &Kernel, mode: Mode, constraints: Vec<CiConstraint>) -> Result<ConstraintReport> {
    if p.random() != g.random() || p.fixed() != g.fixed() {
        return Err(Error::invalid("distribution and graph disagree on vertices"));
    }
    let verdicts = evaluate(g, p, &constraints, mode != Mode::Tian)?;
    Ok(ConstraintReport {
        mode,
        constraints,
        verdicts,
    })
}

/// Membership under the canonical topological order.
pub fn check_membership(g: &MixedGraph, p: &Kernel, mode: Mode) -> Result<ConstraintReport> {
    check_membership_with(g, p, mode, &g.topological_order(), &Limits::default())
}

pub fn check_membership_with(
    g: &MixedGraph,
    p: &Kernel,
    mode: Mode,
    order: &[usize],
    limits: &Limits,
) -> Result<ConstraintReport> {
    let list = membership_constraints(g, mode, order, limits)?;
    check_constraints(g, p, mode, list)
}

/// For every reachable R: φ_{V\R}(p) = Π over districts D of φ_{V\R}(G) of φ_{V\D}(p),
/// with each φ_{V\D}(p) a function of D and its parents only.
pub fn nested_factorization_holds(g: &MixedGraph, p: &Kernel, limits: &Limits) -> Result<bool> {
    let intrinsic: HashMap<NodeSet, FixingSequence> = intrinsic_sets(g, limits)?
        .into_iter()
        .map(|i| (i.members, i.witness))
        .collect();
    let mut factor: HashMap<NodeSet, Kernel> = HashMap::new();
    for r in reachable_sets(g, limits)? {
        let (q, h) = match apply_sequence_kernel(p, r.witness.steps(), g) {
            Ok(x) => x,
            Err(Error::Degenerate(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        let ds = h.districts();
        for &d in &ds {
            if let std::collections::hash_map::Entry::Vacant(slot) = factor.entry(d) {
                let w = &intrinsic[&d];
                match apply_sequence_kernel(p, w.steps(), g) {
                    Ok((k, hd)) => {
                        let pa = d.iter().fold(d, |s, v| s.union(hd.pa(v)));
                        if !k.depends_only_on(pa) {
                            return Ok(false);
                        }
                        slot.insert(k);
                    }
                    Err(Error::Degenerate(_)) => return Ok(false),
                    Err(e) => return Err(e),
                }
            }
        }
        let terms: Vec<&Kernel> = ds.iter().map(|d| &factor[d]).collect();
        if !Kernel::product(&terms)?.same_function(&q) {
            return Ok(false);
        }
    }
    Ok(true)
}
