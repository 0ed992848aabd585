//! Dense kernels q(x_V | x_W) with exact rational entries.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::set::NodeSet;
use crate::Limits;

pub type Rational = BigRational;

/// Number of levels per universe vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    card: Vec<usize>,
}

impl StateSpace {
    pub fn new(card: Vec<usize>) -> Result<Self> {
        if let Some(k) = card.iter().find(|&&k| k < 2) {
            return Err(Error::invalid(format!("cardinality {k} is below 2")));
        }
        Ok(StateSpace { card })
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        StateSpace { card: vec![k.max(2); n] }
    }

    /// Every vertex of `g`'s universe binary.
    pub fn binary(g: &MixedGraph) -> Self {
        Self::uniform(g.universe_size(), 2)
    }

    /// Named cardinalities over `g`'s universe; unnamed vertices get `default`.
    pub fn for_graph(g: &MixedGraph, named: &[(&str, usize)], default: usize) -> Result<Self> {
        let mut card = vec![default; g.universe_size()];
        for (n, k) in named {
            card[g.index(n)?] = *k;
        }
        Self::new(card)
    }

    pub fn card(&self, v: usize) -> usize {
        self.card[v]
    }

    pub fn set(&mut self, v: usize, k: usize) {
        self.card[v] = k;
    }

    pub fn len(&self) -> usize {
        self.card.len()
    }

    pub fn is_empty(&self) -> bool {
        self.card.is_empty()
    }

    /// Π levels over `s`, or `None` on overflow.
    pub fn cells(&self, s: NodeSet) -> Option<usize> {
        s.iter().try_fold(1usize, |a, v| a.checked_mul(self.card[v]))
    }
}

/// Mixed-radix layout of a table over `scope` (ascending universe indices);
/// the first scope variable varies fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Layout {
    scope: Vec<usize>,
    card: Vec<usize>,
    stride: Vec<usize>,
    len: usize,
}

impl Layout {
    fn new(scope: Vec<usize>, card: Vec<usize>) -> Layout {
        let mut stride = Vec::with_capacity(scope.len());
        let mut len = 1;
        for &k in &card {
            stride.push(len);
            len *= k;
        }
        Layout {
            scope,
            card,
            stride,
            len,
        }
    }

    fn sub(&self, s: NodeSet) -> Layout {
        let (scope, card): (Vec<usize>, Vec<usize>) = self
            .scope
            .iter()
            .zip(&self.card)
            .filter(|(v, _)| s.contains(**v))
            .map(|(v, k)| (*v, *k))
            .unzip();
        Layout::new(scope, card)
    }

    fn digit(&self, idx: usize, pos: usize) -> usize {
        idx / self.stride[pos] % self.card[pos]
    }

    fn card_of(&self, v: usize) -> usize {
        let p = self.scope.iter().position(|&x| x == v).expect("in scope");
        self.card[p]
    }

    /// For each cell of `self`, the index of the matching cell of `sub`.
    fn map_to(&self, sub: &Layout) -> Vec<usize> {
        let contrib: Vec<Option<usize>> = self
            .scope
            .iter()
            .map(|v| sub.scope.iter().position(|x| x == v).map(|p| sub.stride[p]))
            .collect();
        let mut out = vec![0; self.len];
        let mut digits = vec![0usize; self.scope.len()];
        let mut cur = 0usize;
        for slot in out.iter_mut() {
            *slot = cur;
            // odometer increment
            for p in 0..digits.len() {
                digits[p] += 1;
                if let Some(s) = contrib[p] {
                    cur += s;
                }
                if digits[p] < self.card[p] {
                    break;
                }
                if let Some(s) = contrib[p] {
                    cur -= s * digits[p];
                }
                digits[p] = 0;
            }
        }
        out
    }

    /// Universe-indexed assignment (length `n`) for a cell.
    fn decode(&self, idx: usize, n: usize) -> Vec<usize> {
        let mut x = vec![0; n];
        for (p, &v) in self.scope.iter().enumerate() {
            x[v] = self.digit(idx, p);
        }
        x
    }

    fn encode(&self, x: &[usize]) -> usize {
        self.scope
            .iter()
            .zip(&self.stride)
            .map(|(&v, &s)| x[v] * s)
            .sum()
    }
}

/// A table over random ∪ fixed vertices. Cells in an undefined context (from
/// conditioning on a zero-probability event) carry a flag and are skipped by
/// comparisons.
#[derive(Clone, PartialEq, Eq)]
pub struct Kernel {
    layout: Layout,
    random: NodeSet,
    fixed: NodeSet,
    table: Vec<Rational>,
    undefined: Vec<bool>,
}

fn universe_len(scope: &[usize]) -> usize {
    scope.iter().max().map_or(0, |m| m + 1)
}

impl Kernel {
    /// Builds and checks normalization for every fixed context.
    pub fn from_fn(
        space: &StateSpace,
        random: NodeSet,
        fixed: NodeSet,
        f: impl FnMut(&[usize]) -> Rational,
    ) -> Result<Kernel> {
        let k = Self::from_fn_unchecked(space, random, fixed, f)?;
        k.check_normalized()?;
        Ok(k)
    }

    /// As [`Kernel::from_fn`] without the normalization check. The closure sees
    /// an assignment indexed by universe position.
    pub fn from_fn_unchecked(
        space: &StateSpace,
        random: NodeSet,
        fixed: NodeSet,
        mut f: impl FnMut(&[usize]) -> Rational,
    ) -> Result<Kernel> {
        if !random.is_disjoint(fixed) {
            return Err(Error::invalid("random and fixed sets overlap"));
        }
        let all = random.union(fixed);
        if all.iter().any(|v| v >= space.len()) {
            return Err(Error::invalid("state space does not cover the kernel's vertices"));
        }
        check_cells(space, all, &Limits::default())?;
        let scope: Vec<usize> = all.iter().collect();
        let card = scope.iter().map(|&v| space.card(v)).collect();
        let layout = Layout::new(scope, card);
        let n = space.len();
        let mut table = Vec::with_capacity(layout.len);
        for i in 0..layout.len {
            let x = layout.decode(i, n);
            let v = f(&x);
            if v < Rational::zero() {
                return Err(Error::invalid("negative kernel entry"));
            }
            table.push(v);
        }
        Ok(Kernel {
            layout,
            random,
            fixed,
            table,
            undefined: Vec::new(),
        })
    }

    pub fn uniform(space: &StateSpace, random: NodeSet, fixed: NodeSet) -> Result<Kernel> {
        let n = space.cells(random).unwrap_or(usize::MAX);
        let v = Rational::new(1.into(), n.into());
        Self::from_fn(space, random, fixed, |_| v.clone())
    }

    /// The constant-1 kernel with no random vertices.
    pub fn unit(space: &StateSpace, fixed: NodeSet) -> Result<Kernel> {
        Self::from_fn(space, NodeSet::EMPTY, fixed, |_| Rational::one())
    }

    fn check_normalized(&self) -> Result<()> {
        let ctx = self.layout.sub(self.fixed);
        let map = self.layout.map_to(&ctx);
        let mut sums = vec![Rational::zero(); ctx.len];
        let mut skip = vec![false; ctx.len];
        for (i, v) in self.table.iter().enumerate() {
            if self.is_undefined(i) {
                skip[map[i]] = true;
            } else {
                sums[map[i]] += v;
            }
        }
        for (j, s) in sums.iter().enumerate() {
            if !skip[j] && !s.is_one() {
                return Err(Error::invalid(format!(
                    "kernel is not normalized: a context sums to {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_normalized(&self) -> bool {
        self.check_normalized().is_ok()
    }

    pub fn random(&self) -> NodeSet {
        self.random
    }

    pub fn fixed(&self) -> NodeSet {
        self.fixed
    }

    pub fn scope(&self) -> NodeSet {
        self.random.union(self.fixed)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn card(&self, v: usize) -> usize {
        self.layout.card_of(v)
    }

    pub fn table(&self) -> &[Rational] {
        &self.table
    }

    fn is_undefined(&self, i: usize) -> bool {
        !self.undefined.is_empty() && self.undefined[i]
    }

    pub fn has_undefined(&self) -> bool {
        self.undefined.iter().any(|&u| u)
    }

    /// Universe-indexed assignment of cell `i`.
    pub fn assignment(&self, i: usize) -> Vec<usize> {
        self.layout.decode(i, universe_len(&self.layout.scope))
    }

    /// Value at a universe-indexed assignment; `None` when undefined.
    pub fn value(&self, x: &[usize]) -> Option<&Rational> {
        let i = self.layout.encode(x);
        if self.is_undefined(i) {
            None
        } else {
            Some(&self.table[i])
        }
    }

    /// Value at an assignment given as (vertex, level) pairs covering the scope.
    pub fn get(&self, assignment: &[(usize, usize)]) -> Result<Option<&Rational>> {
        let n = universe_len(&self.layout.scope);
        let mut x = vec![0; n];
        let mut covered = NodeSet::EMPTY;
        for &(v, l) in assignment {
            if !self.scope().contains(v) {
                continue;
            }
            if l >= self.card(v) {
                return Err(Error::invalid(format!("level {l} out of range")));
            }
            x[v] = l;
            covered.insert(v);
        }
        if covered != self.scope() {
            return Err(Error::invalid("assignment does not cover the kernel scope"));
        }
        Ok(self.value(&x))
    }

    pub(crate) fn state_space(&self, n: usize) -> StateSpace {
        let mut card = vec![2; n.max(universe_len(&self.layout.scope))];
        for (v, k) in self.layout.scope.iter().zip(&self.layout.card) {
            card[*v] = *k;
        }
        StateSpace { card }
    }

    fn with_table(&self, layout: Layout, random: NodeSet, fixed: NodeSet, table: Vec<Rational>, undefined: Vec<bool>) -> Kernel {
        let undefined = if undefined.iter().any(|&u| u) {
            undefined
        } else {
            Vec::new()
        };
        Kernel {
            layout,
            random,
            fixed,
            table,
            undefined,
        }
    }

    /// Σ over V \ keep; the summed vertices leave the scope.
    pub fn marginalize(&self, keep: NodeSet) -> Result<Kernel> {
        if !keep.is_subset(self.random) {
            return Err(Error::invalid("marginal set must be a subset of the random vertices"));
        }
        if keep == self.random {
            return Ok(self.clone());
        }
        let target = self.layout.sub(keep.union(self.fixed));
        let map = self.layout.map_to(&target);
        let mut table = vec![Rational::zero(); target.len];
        let mut undefined = vec![false; target.len];
        for (i, v) in self.table.iter().enumerate() {
            if self.is_undefined(i) {
                undefined[map[i]] = true;
            } else {
                table[map[i]] += v;
            }
        }
        for (t, u) in table.iter_mut().zip(&undefined) {
            if *u {
                *t = Rational::zero();
            }
        }
        Ok(self.with_table(target, keep, self.fixed, table, undefined))
    }

    /// q(x_{V\A} | x_{W∪A}); contexts with q(x_A | x_W) = 0 become undefined.
    pub fn condition(&self, a: NodeSet) -> Result<Kernel> {
        if !a.is_subset(self.random) {
            return Err(Error::invalid("conditioning set must be a subset of the random vertices"));
        }
        if a.is_empty() {
            return Ok(self.clone());
        }
        let den = self.marginalize(a)?;
        let map = self.layout.map_to(&den.layout);
        let mut table = Vec::with_capacity(self.table.len());
        let mut undefined = vec![false; self.table.len()];
        for (i, v) in self.table.iter().enumerate() {
            let d = &den.table[map[i]];
            if self.is_undefined(i) || den.is_undefined(map[i]) || d.is_zero() {
                undefined[i] = true;
                table.push(Rational::zero());
            } else {
                table.push(v / d);
            }
        }
        Ok(self.with_table(
            self.layout.clone(),
            self.random.minus(a),
            self.fixed.union(a),
            table,
            undefined,
        ))
    }

    /// q / q(x_H | x_T, x_W), with H moved to the fixed set. Cells where the
    /// conditional vanishes become 0 when q does; a positive q there is an error.
    pub fn divide_by_conditional(&self, h: NodeSet, t: NodeSet) -> Result<Kernel> {
        if !h.union(t).is_subset(self.random) || !h.is_disjoint(t) {
            return Err(Error::invalid("H and T must be disjoint subsets of the random vertices"));
        }
        let num = self.marginalize(h.union(t))?;
        let den = self.marginalize(t)?;
        let nmap = self.layout.map_to(&num.layout);
        let dmap = self.layout.map_to(&den.layout);
        let mut table = Vec::with_capacity(self.table.len());
        for (i, v) in self.table.iter().enumerate() {
            let (n, d) = (&num.table[nmap[i]], &den.table[dmap[i]]);
            if self.is_undefined(i) || v.is_zero() {
                table.push(Rational::zero());
            } else if n.is_zero() {
                return Err(Error::Degenerate(
                    "positive kernel entry where the divided conditional is zero".into(),
                ));
            } else {
                table.push(v * d / n);
            }
        }
        Ok(self.with_table(
            self.layout.clone(),
            self.random.minus(h),
            self.fixed.union(h),
            table,
            self.undefined.clone(),
        ))
    }

    /// q(x_h | x_t, x_W) as a table over h ∪ t ∪ W; 0/0 cells are 0.
    pub(crate) fn conditional(&self, h: NodeSet, t: NodeSet) -> Result<Kernel> {
        let num = self.marginalize(h.union(t))?;
        let den = self.marginalize(t)?;
        let map = num.layout.map_to(&den.layout);
        let table = num
            .table
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = &den.table[map[i]];
                if d.is_zero() {
                    Rational::zero()
                } else {
                    v / d
                }
            })
            .collect();
        Ok(num.with_table(num.layout.clone(), h, t.union(self.fixed), table, num.undefined.clone()))
    }

    /// Pointwise product over the union of scopes. Random sets must be disjoint;
    /// normalization is not checked.
    pub fn product(factors: &[&Kernel]) -> Result<Kernel> {
        let mut random = NodeSet::EMPTY;
        let mut all = NodeSet::EMPTY;
        let mut n = 0;
        for f in factors {
            if !f.random.is_disjoint(random) {
                return Err(Error::invalid("product factors share random vertices"));
            }
            random = random.union(f.random);
            all = all.union(f.scope());
            n = n.max(universe_len(&f.layout.scope));
        }
        let mut card = vec![2; n];
        for f in factors {
            for (v, k) in f.layout.scope.iter().zip(&f.layout.card) {
                card[*v] = *k;
            }
        }
        let scope: Vec<usize> = all.iter().collect();
        let layout = Layout::new(scope.clone(), scope.iter().map(|&v| card[v]).collect());
        let maps: Vec<Vec<usize>> = factors.iter().map(|f| layout.map_to(&f.layout)).collect();
        let mut table = Vec::with_capacity(layout.len);
        let mut undefined = vec![false; layout.len];
        for i in 0..layout.len {
            let mut v = Rational::one();
            for (f, m) in factors.iter().zip(&maps) {
                if f.is_undefined(m[i]) {
                    undefined[i] = true;
                }
                v *= &f.table[m[i]];
            }
            table.push(v);
        }
        Ok(Kernel {
            layout,
            random,
            fixed: all.minus(random),
            table,
            undefined: if undefined.iter().any(|&u| u) { undefined } else { Vec::new() },
        })
    }

    /// Pins fixed vertices to the given levels and drops them from the scope.
    pub fn slice(&self, at: &[(usize, usize)]) -> Result<Kernel> {
        let mut pinned = NodeSet::EMPTY;
        let n = universe_len(&self.layout.scope);
        let mut want = vec![usize::MAX; n];
        for &(v, l) in at {
            if !self.fixed.contains(v) {
                return Err(Error::invalid("only fixed vertices can be pinned"));
            }
            if l >= self.card(v) {
                return Err(Error::invalid(format!("level {l} out of range")));
            }
            pinned.insert(v);
            want[v] = l;
        }
        let target = self.layout.sub(self.scope().minus(pinned));
        let map = self.layout.map_to(&target);
        let mut table = vec![Rational::zero(); target.len];
        let mut undefined = vec![false; target.len];
        for i in 0..self.table.len() {
            let hit = self
                .layout
                .scope
                .iter()
                .enumerate()
                .all(|(p, &v)| !pinned.contains(v) || self.layout.digit(i, p) == want[v]);
            if hit {
                table[map[i]] = self.table[i].clone();
                undefined[map[i]] = self.is_undefined(i);
            }
        }
        Ok(self.with_table(target, self.random, self.fixed.minus(pinned), table, undefined))
    }

    /// Relabels which scope vertices are random; the table is untouched.
    pub fn with_random(&self, random: NodeSet) -> Result<Kernel> {
        if !random.is_subset(self.scope()) {
            return Err(Error::invalid("random set outside the kernel scope"));
        }
        let mut k = self.clone();
        k.random = random;
        k.fixed = self.scope().minus(random);
        Ok(k)
    }

    /// Equal as functions on the union of scopes (broadcasting each side),
    /// with undefined cells skipped.
    pub fn same_function(&self, other: &Kernel) -> bool {
        let all = self.scope().union(other.scope());
        let n = universe_len(&self.layout.scope).max(universe_len(&other.layout.scope));
        let mut card = vec![2; n];
        for k in [self, other] {
            for (v, c) in k.layout.scope.iter().zip(&k.layout.card) {
                if card[*v] != 2 && card[*v] != *c {
                    return false;
                }
                card[*v] = *c;
            }
        }
        let scope: Vec<usize> = all.iter().collect();
        let layout = Layout::new(scope.clone(), scope.iter().map(|&v| card[v]).collect());
        let (ma, mb) = (layout.map_to(&self.layout), layout.map_to(&other.layout));
        (0..layout.len).all(|i| {
            self.is_undefined(ma[i])
                || other.is_undefined(mb[i])
                || self.table[ma[i]] == other.table[mb[i]]
        })
    }

    /// True iff the table is constant along every scope vertex outside `s`.
    pub fn depends_only_on(&self, s: NodeSet) -> bool {
        let sub = self.layout.sub(s);
        let map = self.layout.map_to(&sub);
        let mut first: Vec<Option<usize>> = vec![None; sub.len];
        for i in 0..self.table.len() {
            if self.is_undefined(i) {
                continue;
            }
            match first[map[i]] {
                None => first[map[i]] = Some(i),
                Some(j) => {
                    if self.table[i] != self.table[j] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Kernel {{ random: {:?}, fixed: {:?}, cells: {} }}",
            self.random,
            self.fixed,
            self.table.len()
        )
    }
}

pub(crate) fn check_cells(space: &StateSpace, s: NodeSet, limits: &Limits) -> Result<()> {
    match space.cells(s) {
        Some(c) if c <= limits.max_cells => Ok(()),
        _ => Err(Error::ResourceLimit(format!(
            "table over {} vertices exceeds {} cells",
            s.len(),
            limits.max_cells
        ))),
    }
}

fn check_shape(q: &Kernel, g: &MixedGraph) -> Result<()> {
    if q.random != g.random() || q.fixed != g.fixed() {
        return Err(Error::invalid("kernel and graph disagree on random/fixed vertices"));
    }
    Ok(())
}

/// q / q(x_r | x_{mb(r) ∩ V}, x_W); the graph must be the CADMG matching `q`.
pub fn fix_kernel(q: &Kernel, r: usize, g: &MixedGraph) -> Result<Kernel> {
    check_shape(q, g)?;
    crate::fixing::fix_graph(g, r)?;
    let mb = g.markov_blanket(r)?.inter(g.random());
    q.divide_by_conditional(NodeSet::single(r), mb)
}

/// Sequential `fix_kernel`, tracking the graph. Returns the final kernel and CADMG.
pub fn apply_sequence_kernel(p: &Kernel, steps: &[usize], g: &MixedGraph) -> Result<(Kernel, MixedGraph)> {
    check_shape(p, g)?;
    let mut q = p.clone();
    let mut h = g.clone();
    for (position, &r) in steps.iter().enumerate() {
        let next = crate::fixing::fix_graph(&h, r).map_err(|e| match e {
            Error::NotFixable { vertex, evidence } => Error::InvalidSequence {
                position,
                vertex,
                evidence,
            },
            e => e,
        })?;
        let mb = h.markov_blanket(r)?.inter(h.random());
        q = q.divide_by_conditional(NodeSet::single(r), mb)?;
        h = next;
    }
    Ok((q, h))
}

// ----- conditional independence -----

/// Evidence that a conditional slice varies with vertices it should not depend on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiViolation {
    /// The fixed (x_A, x_C) values as (vertex, level).
    pub context: Vec<(usize, usize)>,
    pub first: (Vec<(usize, usize)>, Rational),
    pub second: (Vec<(usize, usize)>, Rational),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CiOutcome {
    Holds,
    Fails(CiViolation),
    /// A and B both meet the fixed set, where neither clause of the definition applies.
    Unsupported,
}

impl CiOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, CiOutcome::Holds)
    }
}

/// Conditional-independence tests against one kernel, caching marginals.
pub struct CiTester<'a> {
    q: &'a Kernel,
    margins: HashMap<NodeSet, Kernel>,
}

impl<'a> CiTester<'a> {
    pub fn new(q: &'a Kernel) -> Self {
        CiTester {
            q,
            margins: HashMap::new(),
        }
    }

    fn margin(&mut self, s: NodeSet) -> Result<&Kernel> {
        if !self.margins.contains_key(&s) {
            let m = self.q.marginalize(s)?;
            self.margins.insert(s, m);
        }
        Ok(&self.margins[&s])
    }

    pub fn test(&mut self, a: NodeSet, b: NodeSet, c: NodeSet) -> Result<CiOutcome> {
        let scope = self.q.scope();
        if !a.union(b).union(c).is_subset(scope) {
            return Err(Error::invalid("CI sets must lie in the kernel scope"));
        }
        if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
            return Err(Error::invalid("CI sets must be pairwise disjoint"));
        }
        let w = self.q.fixed;
        let clause_a = a.is_disjoint(w);
        let clause_b = b.is_disjoint(w);
        if !clause_a && !clause_b {
            return Ok(CiOutcome::Unsupported);
        }
        let mut first_failure = None;
        if clause_a {
            match self.clause(a, b, c)? {
                None => return Ok(CiOutcome::Holds),
                Some(v) => first_failure = Some(v),
            }
        }
        if clause_b {
            match self.clause(b, a, c)? {
                None => return Ok(CiOutcome::Holds),
                Some(v) => {
                    first_failure.get_or_insert(v);
                }
            }
        }
        Ok(CiOutcome::Fails(first_failure.expect("a clause was evaluated")))
    }

    /// Is q(x_A | x_{(B∪C)∩V}, x_W) a function of x_A, x_C only?
    fn clause(&mut self, a: NodeSet, b: NodeSet, c: NodeSet) -> Result<Option<CiViolation>> {
        let v = self.q.random;
        let bc = b.union(c).inter(v);
        let den = self.margin(bc)?.clone();
        let num = self.margin(a.union(bc))?;
        let dmap = num.layout.map_to(&den.layout);
        let key_layout = num.layout.sub(a.union(c));
        let kmap = num.layout.map_to(&key_layout);
        let mut first: Vec<Option<usize>> = vec![None; key_layout.len];
        for i in 0..num.table.len() {
            let d = &den.table[dmap[i]];
            if num.is_undefined(i) || den.is_undefined(dmap[i]) || d.is_zero() {
                continue;
            }
            let k = kmap[i];
            match first[k] {
                None => first[k] = Some(i),
                Some(j) => {
                    let dj = &den.table[dmap[j]];
                    if &num.table[i] * dj != &num.table[j] * d {
                        let n = universe_len(&num.layout.scope);
                        let pairs = |idx: usize, set: NodeSet| -> Vec<(usize, usize)> {
                            let x = num.layout.decode(idx, n);
                            set.iter().map(|v| (v, x[v])).collect()
                        };
                        let all = num.scope();
                        return Ok(Some(CiViolation {
                            context: pairs(i, a.union(c)),
                            first: (pairs(j, all), &num.table[j] / dj),
                            second: (pairs(i, all), &num.table[i] / d),
                        }));
                    }
                }
            }
        }
        Ok(None)
    }
}

/// X_A ⫫ X_B | X_C in `q` per the kernel definition: clause (a) needs A ∩ W = ∅
/// and q(x_A | x_B, x_C, x_W) to depend on x_A, x_C only; clause (b) swaps A and B.
/// When both A and B meet W this returns false.
pub fn kernel_ci(q: &Kernel, a: NodeSet, b: NodeSet, c: NodeSet) -> Result<bool> {
    Ok(CiTester::new(q).test(a, b, c)?.holds())
}

// ----- district factors and the CADMG Markov properties -----

/// Π_{d∈D} q(x_d | x_{T(d)}), T(d) = mb(d, an(D) ∩ pre(d)), over q's full scope with D random.
pub fn district_kernel(q: &Kernel, g: &MixedGraph, d: NodeSet) -> Result<Kernel> {
    check_shape(q, g)?;
    if !g.districts().contains(&d) {
        return Err(Error::invalid("not a district of the graph"));
    }
    district_factor(q, g, d, &g.topological_order())
}

fn district_factor(q: &Kernel, g: &MixedGraph, d: NodeSet, order: &[usize]) -> Result<Kernel> {
    let an_d = g.an_of(d);
    let mut factors = Vec::new();
    let mut pre = NodeSet::EMPTY;
    for &v in order {
        pre.insert(v);
        if !d.contains(v) {
            continue;
        }
        let within = an_d.inter(pre);
        let t = g.mb_within(v, within).inter(q.random);
        factors.push(q.conditional(NodeSet::single(v), t)?);
    }
    let refs: Vec<&Kernel> = factors.iter().collect();
    let prod = Kernel::product(&refs)?;
    let k = Kernel::product(&[&prod, &Kernel::unit(&q.state_space(0), q.scope().minus(d))?])?;
    k.with_random(d)
}

fn shape_ok(q: &Kernel, g: &MixedGraph) -> bool {
    q.random == g.random() && q.fixed == g.fixed()
}

/// Random subsets S with S ∪ W ancestral.
fn ancestral_random_sets(g: &MixedGraph) -> Vec<NodeSet> {
    let w = g.fixed();
    g.random()
        .subsets()
        .filter(|s| g.pa_of(s.union(w)).is_subset(s.union(w)))
        .collect()
}

/// Tian factorization: for every ancestral A, q(x_{V∩A} | x_W) is the product of the
/// district terms of G_A, and each term depends only on x_D, x_{pa(D)}.
pub fn tian_factorization_holds(q: &Kernel, g: &MixedGraph) -> Result<bool> {
    if !shape_ok(q, g) {
        return Err(Error::invalid("kernel and graph disagree on random/fixed vertices"));
    }
    for s in ancestral_random_sets(g) {
        let a = s.union(g.fixed());
        let qa = q.marginalize(s)?;
        let ga = g.restrict(a);
        let order = ga.topological_order();
        let mut terms = Vec::new();
        for d in ga.districts() {
            let t = district_factor(&qa, &ga, d, &order)?;
            if !t.depends_only_on(d.union(ga.pa_of(d))) {
                return Ok(false);
            }
            terms.push(t);
        }
        let refs: Vec<&Kernel> = terms.iter().collect();
        let prod = if refs.is_empty() {
            Kernel::unit(&q.state_space(0), g.fixed())?
        } else {
            Kernel::product(&refs)?
        };
        if !prod.same_function(&qa) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All (A, B, C) with A, B non-empty, pairwise disjoint, over `vertices`, each
/// unordered {A, B} once.
pub(crate) fn for_each_triple(vertices: NodeSet, mut f: impl FnMut(NodeSet, NodeSet, NodeSet) -> Result<bool>) -> Result<bool> {
    for c in vertices.subsets() {
        let rest = vertices.minus(c);
        for a in rest.subsets().skip(1) {
            let others = rest.minus(a);
            for b in others.subsets().skip(1) {
                if a.0 < b.0 && !f(a, b, c)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn markov_by(
    q: &Kernel,
    g: &MixedGraph,
    sep: impl Fn(&MixedGraph, NodeSet, NodeSet, NodeSet) -> Result<bool>,
) -> Result<bool> {
    if !shape_ok(q, g) {
        return Err(Error::invalid("kernel and graph disagree on random/fixed vertices"));
    }
    let mut t = CiTester::new(q);
    for_each_triple(g.vertices(), |a, b, c| {
        if sep(g, a, b, c)? {
            t.test(a, b, c).map(|o| o.holds())
        } else {
            Ok(true)
        }
    })
}

/// Global Markov property: every m-separation in G^{|W} holds as a kernel CI.
pub fn cadmg_markov(q: &Kernel, g: &MixedGraph) -> Result<bool> {
    markov_by(q, g, crate::separation::m_separated)
}

/// As [`cadmg_markov`] with augmented-graph separation.
pub fn cadmg_augmented_markov(q: &Kernel, g: &MixedGraph) -> Result<bool> {
    markov_by(q, g, crate::separation::augmented_separated)
}

/// Ordered local property: for every ancestral A whose ≺-maximum t is random,
/// X_t ⫫ X_{(A∪W)\(mb(t,A)∪{t})} | X_{mb(t,A)} in q(x_{V∩A} | x_W).
pub fn cadmg_ordered_local(q: &Kernel, g: &MixedGraph, order: &[usize]) -> Result<bool> {
    if !shape_ok(q, g) {
        return Err(Error::invalid("kernel and graph disagree on random/fixed vertices"));
    }
    crate::nested::check_order(g, order)?;
    let mut pos = vec![0; g.universe_size()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let w = g.fixed();
    for s in ancestral_random_sets(g) {
        let a = s.union(w);
        let Some(t) = a.iter().max_by_key(|&v| pos[v]) else { continue };
        if !g.is_random(t) {
            continue;
        }
        let mb = g.mb_within(t, a);
        let rest = a.minus(mb).without(t);
        if rest.is_empty() {
            continue;
        }
        let qa = q.marginalize(s)?;
        if !CiTester::new(&qa).test(NodeSet::single(t), rest, mb)?.holds() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn pair_space() -> (MixedGraph, StateSpace) {
        let g = MixedGraph::builder().random(["x1", "x2"]).build().unwrap();
        let s = StateSpace::binary(&g);
        (g, s)
    }

    #[test]
    fn marginal_of_uniform_pair() {
        let (g, s) = pair_space();
        let p = Kernel::uniform(&s, g.random(), NodeSet::EMPTY).unwrap();
        let m = p.marginalize(NodeSet::single(0)).unwrap();
        assert_eq!(m.table(), &[r(1, 2), r(1, 2)]);
        assert_eq!(p.marginalize(g.random()).unwrap(), p);
        let e = p.marginalize(NodeSet::EMPTY).unwrap();
        assert_eq!(e.table(), &[r(1, 1)]);
    }

    #[test]
    fn condition_fair_coins() {
        let (g, s) = pair_space();
        let p = Kernel::uniform(&s, g.random(), NodeSet::EMPTY).unwrap();
        let c = p.condition(NodeSet::single(0)).unwrap();
        assert!(c.table().iter().all(|v| *v == r(1, 2)));
        assert_eq!(c.fixed(), NodeSet::single(0));
        assert_eq!(p.condition(NodeSet::EMPTY).unwrap(), p);
    }

    #[test]
    fn condition_on_null_event_is_undefined() {
        let (g, s) = pair_space();
        let p = Kernel::from_fn(&s, g.random(), NodeSet::EMPTY, |x| {
            if x[0] == 0 {
                r(0, 1)
            } else {
                r(1, 2)
            }
        })
        .unwrap();
        let c = p.condition(NodeSet::single(0)).unwrap();
        assert!(c.value(&[0, 0]).is_none());
        assert_eq!(c.value(&[1, 0]), Some(&r(1, 2)));
    }

    #[test]
    fn normalization_is_enforced() {
        let (g, s) = pair_space();
        assert!(Kernel::from_fn(&s, g.random(), NodeSet::EMPTY, |_| r(1, 3)).is_err());
    }

    #[test]
    fn xor_is_dependent() {
        let g = MixedGraph::builder().random(["x1", "x2", "x3"]).build().unwrap();
        let s = StateSpace::binary(&g);
        let p = Kernel::from_fn(&s, g.random(), NodeSet::EMPTY, |x| {
            if x[2] == x[0] ^ x[1] {
                r(1, 4)
            } else {
                r(0, 1)
            }
        })
        .unwrap();
        let one = NodeSet::single;
        assert!(!kernel_ci(&p, one(0), one(1), one(2)).unwrap());
        assert!(kernel_ci(&p, one(0), one(1), NodeSet::EMPTY).unwrap());
    }

    #[test]
    fn product_kernel_ignores_fixed() {
        let g = MixedGraph::builder().random(["v"]).fixed(["w"]).build().unwrap();
        let s = StateSpace::binary(&g);
        let q = Kernel::from_fn(&s, g.random(), g.fixed(), |x| if x[0] == 0 { r(1, 3) } else { r(2, 3) }).unwrap();
        assert!(kernel_ci(&q, g.random(), g.fixed(), NodeSet::EMPTY).unwrap());
        let dep = Kernel::from_fn(&s, g.random(), g.fixed(), |x| if x[0] == x[1] { r(1, 3) } else { r(2, 3) }).unwrap();
        assert!(!kernel_ci(&dep, g.random(), g.fixed(), NodeSet::EMPTY).unwrap());
    }

    #[test]
    fn both_sides_fixed_is_unsupported() {
        let g = MixedGraph::builder().random(["v"]).fixed(["w1", "w2"]).build().unwrap();
        let s = StateSpace::binary(&g);
        let q = Kernel::uniform(&s, g.random(), g.fixed()).unwrap();
        let out = CiTester::new(&q).test(NodeSet::single(1), NodeSet::single(2), NodeSet::EMPTY).unwrap();
        assert_eq!(out, CiOutcome::Unsupported);
    }

    #[test]
    fn perfectly_correlated_pair() {
        let (g, s) = pair_space();
        let p = Kernel::from_fn(&s, g.random(), NodeSet::EMPTY, |x| if x[0] == x[1] { r(1, 2) } else { r(0, 1) }).unwrap();
        assert!(!tian_factorization_holds(&p, &g).unwrap());
        assert!(!cadmg_markov(&p, &g).unwrap());
        let u = Kernel::uniform(&s, g.random(), NodeSet::EMPTY).unwrap();
        assert!(tian_factorization_holds(&u, &g).unwrap());
        assert!(cadmg_markov(&u, &g).unwrap());
    }

    #[test]
    fn verma_fix_x3_matches_displayed_kernel() {
        let g = verma();
        let s = StateSpace::binary(&g);
        let p = crate::oracle::arbitrary_distribution(&s, g.random(), 7).unwrap();
        let x3 = g.index("x3").unwrap();
        let q = fix_kernel(&p, x3, &g).unwrap();
        // q = p / p(x3 | x2, x1)
        let c = p.conditional(NodeSet::single(x3), g.set(&["x1", "x2"]).unwrap()).unwrap();
        for i in 0..p.len() {
            let x = p.assignment(i);
            let want = p.value(&x).unwrap() / c.value(&x).unwrap();
            assert_eq!(q.value(&x).unwrap(), &want);
        }
        assert!(q.is_normalized());
    }

    #[test]
    fn childless_fix_marginalizes() {
        let g = verma();
        let s = StateSpace::binary(&g);
        let p = crate::oracle::arbitrary_distribution(&s, g.random(), 3).unwrap();
        let x4 = g.index("x4").unwrap();
        let q = fix_kernel(&p, x4, &g).unwrap();
        let m = p.marginalize(g.random().without(x4)).unwrap();
        assert!(q.same_function(&m));
        assert!(q.depends_only_on(q.scope().without(x4)));
    }

    #[test]
    fn district_kernels_of_verma() {
        let g = verma();
        let s = StateSpace::binary(&g);
        let p = crate::oracle::arbitrary_distribution(&s, g.random(), 11).unwrap();
        let set = |n: &[&str]| g.set(n).unwrap();
        let q = district_kernel(&p, &g, set(&["x2", "x4"])).unwrap();
        let a = p.conditional(set(&["x2"]), set(&["x1"])).unwrap();
        let b = p.conditional(set(&["x4"]), set(&["x1", "x2", "x3"])).unwrap();
        let want = Kernel::product(&[&a, &b]).unwrap();
        assert!(q.same_function(&want));
        let one = MixedGraph::builder().random(["a", "b"]).edge("a <-> b").build().unwrap();
        let s1 = StateSpace::binary(&one);
        let p1 = crate::oracle::arbitrary_distribution(&s1, one.random(), 2).unwrap();
        assert!(district_kernel(&p1, &one, one.random()).unwrap().same_function(&p1));
    }
}
