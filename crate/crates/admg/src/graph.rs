//! Conditional acyclic directed mixed graphs (CADMGs) and their genealogical queries.
//!
//! A graph lives on a fixed *universe* of named vertices. Induced subgraphs,
//! fixing and projection keep the universe and shrink or relabel the
//! `present`/`fixed` masks, so vertex sets from related graphs stay comparable.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::set::{NodeSet, MAX_VERTICES};

#[derive(Clone)]
pub struct MixedGraph {
    names: Arc<[String]>,
    /// Position of each universe vertex when sorted by name.
    rank: Arc<[usize]>,
    present: NodeSet,
    fixed: NodeSet,
    latent: NodeSet,
    pa: Vec<NodeSet>,
    ch: Vec<NodeSet>,
    bi: Vec<NodeSet>,
}

pub(crate) fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Collects vertices and edges by name, validated in [`GraphBuilder::build`].
#[derive(Default, Clone, Debug)]
pub struct GraphBuilder {
    random: Vec<String>,
    fixed: Vec<String>,
    latent: Vec<String>,
    directed: Vec<(String, String)>,
    bidirected: Vec<(String, String)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn random<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.random.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn fixed<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.fixed.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn latent<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.latent.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn directed(mut self, tail: impl Into<String>, head: impl Into<String>) -> Self {
        self.directed.push((tail.into(), head.into()));
        self
    }

    pub fn bidirected(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.bidirected.push((a.into(), b.into()));
        self
    }

    /// Accepts `"a -> b"` and `"a <-> b"`; panics on anything else, so only
    /// use it with literal edge lists.
    pub fn edge(self, spec: &str) -> Self {
        let parts: Vec<&str> = spec.split_whitespace().collect();
        match parts.as_slice() {
            [a, "->", b] => self.directed(*a, *b),
            [a, "<->", b] => self.bidirected(*a, *b),
            _ => panic!("bad edge literal {spec:?}"),
        }
    }

    pub fn edges(self, specs: &[&str]) -> Self {
        specs.iter().fold(self, |b, s| b.edge(s))
    }

    pub fn build(self) -> Result<MixedGraph> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for n in self.random.iter().chain(self.fixed.iter()) {
            if !valid_name(n) {
                return Err(Error::invalid(format!("invalid vertex name {n:?}")));
            }
            if index.insert(n.clone(), names.len()).is_some() {
                return Err(Error::invalid(format!("duplicate vertex {n}")));
            }
            names.push(n.clone());
        }
        if names.is_empty() {
            return Err(Error::invalid("no vertices declared"));
        }
        if names.len() > MAX_VERTICES {
            return Err(Error::ResourceLimit(format!(
                "{} vertices, at most {MAX_VERTICES} supported",
                names.len()
            )));
        }
        let look = |n: &str| {
            index
                .get(n)
                .copied()
                .ok_or_else(|| Error::invalid(format!("unknown vertex {n}")))
        };
        let n = names.len();
        let fixed = NodeSet::from_indices(self.random.len()..n);
        let mut latent = NodeSet::EMPTY;
        for l in &self.latent {
            let i = look(l)?;
            if fixed.contains(i) {
                return Err(Error::invalid(format!("fixed vertex {l} cannot be latent")));
            }
            latent.insert(i);
        }
        let mut pa = vec![NodeSet::EMPTY; n];
        let mut bi = vec![NodeSet::EMPTY; n];
        for (a, b) in &self.directed {
            let (i, j) = (look(a)?, look(b)?);
            if i == j {
                return Err(Error::invalid(format!("self-loop at {a}")));
            }
            if fixed.contains(j) {
                return Err(Error::CadmgViolation(format!(
                    "directed edge {a} -> {b} points into fixed vertex {b}"
                )));
            }
            pa[j].insert(i);
        }
        for (a, b) in &self.bidirected {
            let (i, j) = (look(a)?, look(b)?);
            if i == j {
                return Err(Error::invalid(format!("self-loop at {a}")));
            }
            if fixed.contains(i) || fixed.contains(j) {
                return Err(Error::CadmgViolation(format!(
                    "bidirected edge {a} <-> {b} touches a fixed vertex"
                )));
            }
            bi[i].insert(j);
            bi[j].insert(i);
        }
        MixedGraph::from_parts(names.into(), NodeSet::full(n), fixed, latent, pa, bi)
    }
}

impl MixedGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    /// Assembles a graph from masks over an existing universe, checking acyclicity.
    pub(crate) fn from_parts(
        names: Arc<[String]>,
        present: NodeSet,
        fixed: NodeSet,
        latent: NodeSet,
        pa: Vec<NodeSet>,
        bi: Vec<NodeSet>,
    ) -> Result<MixedGraph> {
        let n = names.len();
        let mut ch = vec![NodeSet::EMPTY; n];
        for (j, p) in pa.iter().enumerate() {
            for i in p.iter() {
                ch[i].insert(j);
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| names[a].cmp(&names[b]));
        let mut rank = vec![0; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let g = MixedGraph {
            names,
            rank: rank.into(),
            present,
            fixed,
            latent,
            pa,
            ch,
            bi,
        };
        g.check_acyclic()?;
        Ok(g)
    }

    /// Same universe and rank table, new edge structure. Callers guarantee acyclicity.
    pub(crate) fn with_structure(
        &self,
        present: NodeSet,
        fixed: NodeSet,
        latent: NodeSet,
        pa: Vec<NodeSet>,
        bi: Vec<NodeSet>,
    ) -> MixedGraph {
        let n = self.names.len();
        let mut ch = vec![NodeSet::EMPTY; n];
        for (j, p) in pa.iter().enumerate() {
            for i in p.iter() {
                ch[i].insert(j);
            }
        }
        MixedGraph {
            names: self.names.clone(),
            rank: self.rank.clone(),
            present,
            fixed,
            latent,
            pa,
            ch,
            bi,
        }
    }

    fn check_acyclic(&self) -> Result<()> {
        let mut left = self.present;
        loop {
            let sources: NodeSet = left
                .iter()
                .filter(|&v| self.pa[v].inter(left).is_empty())
                .collect();
            if sources.is_empty() {
                break;
            }
            left = left.minus(sources);
        }
        match left.iter().min_by_key(|&v| self.rank[v]) {
            None => Ok(()),
            Some(v) => Err(Error::Cycle(self.names[v].clone())),
        }
    }

    // ----- names -----

    pub fn universe_size(&self) -> usize {
        self.names.len()
    }

    pub fn universe(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    /// Index of a present vertex.
    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .filter(|&i| self.present.contains(i))
            .ok_or_else(|| Error::invalid(format!("unknown vertex {name}")))
    }

    pub fn set<S: AsRef<str>>(&self, names: &[S]) -> Result<NodeSet> {
        names
            .iter()
            .try_fold(NodeSet::EMPTY, |s, n| Ok(s.with(self.index(n.as_ref())?)))
    }

    /// Members of `s` sorted by name.
    pub fn sorted(&self, s: NodeSet) -> Vec<usize> {
        let mut v: Vec<usize> = s.iter().collect();
        v.sort_by_key(|&i| self.rank[i]);
        v
    }

    pub fn names_of(&self, s: NodeSet) -> Vec<String> {
        self.sorted(s)
            .into_iter()
            .map(|i| self.names[i].clone())
            .collect()
    }

    /// Name-lexicographic comparison key for a set (sorted name list).
    pub fn set_key(&self, s: NodeSet) -> Vec<&str> {
        self.sorted(s).into_iter().map(|i| self.name(i)).collect()
    }

    pub(crate) fn names_arc(&self) -> &Arc<[String]> {
        &self.names
    }

    // ----- vertex classes -----

    pub fn vertices(&self) -> NodeSet {
        self.present
    }

    pub fn random(&self) -> NodeSet {
        self.present.minus(self.fixed)
    }

    pub fn fixed(&self) -> NodeSet {
        self.fixed
    }

    pub fn latent(&self) -> NodeSet {
        self.latent
    }

    pub fn is_random(&self, v: usize) -> bool {
        self.random().contains(v)
    }

    pub fn pa(&self, v: usize) -> NodeSet {
        self.pa[v]
    }

    pub fn ch(&self, v: usize) -> NodeSet {
        self.ch[v]
    }

    /// Bidirected neighbours ("siblings").
    pub fn sib(&self, v: usize) -> NodeSet {
        self.bi[v]
    }

    pub fn has_bidirected(&self) -> bool {
        self.present.iter().any(|v| !self.bi[v].is_empty())
    }

    /// Directed edges as (tail, head), sorted by names.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .present
            .iter()
            .flat_map(|h| self.pa[h].iter().map(move |t| (t, h)))
            .collect();
        e.sort_by_key(|&(a, b)| (self.rank[a], self.rank[b]));
        e
    }

    /// Bidirected edges with the name-smaller endpoint first, sorted.
    pub fn bidirected_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .present
            .iter()
            .flat_map(|a| {
                self.bi[a]
                    .iter()
                    .filter(move |&b| self.rank[a] < self.rank[b])
                    .map(move |b| (a, b))
            })
            .collect();
        e.sort_by_key(|&(a, b)| (self.rank[a], self.rank[b]));
        e
    }

    pub(crate) fn pa_vec(&self) -> &[NodeSet] {
        &self.pa
    }

    pub(crate) fn bi_vec(&self) -> &[NodeSet] {
        &self.bi
    }

    fn check(&self, a: NodeSet) -> Result<()> {
        if a.is_subset(self.present) {
            Ok(())
        } else {
            let bad = a.minus(self.present).first().unwrap();
            let name = self.names.get(bad).map(String::as_str).unwrap_or("?");
            Err(Error::invalid(format!("unknown vertex {name}")))
        }
    }

    // ----- genealogy -----

    pub fn parents(&self, a: NodeSet) -> Result<NodeSet> {
        self.check(a)?;
        Ok(self.pa_of(a))
    }

    pub fn children(&self, a: NodeSet) -> Result<NodeSet> {
        self.check(a)?;
        Ok(self.ch_of(a))
    }

    pub(crate) fn pa_of(&self, a: NodeSet) -> NodeSet {
        a.iter().fold(NodeSet::EMPTY, |s, v| s.union(self.pa[v]))
    }

    pub(crate) fn ch_of(&self, a: NodeSet) -> NodeSet {
        a.iter().fold(NodeSet::EMPTY, |s, v| s.union(self.ch[v]))
    }

    pub fn ancestors(&self, a: NodeSet) -> Result<NodeSet> {
        self.check(a)?;
        Ok(self.an_of(a))
    }

    pub fn descendants(&self, a: NodeSet) -> Result<NodeSet> {
        self.check(a)?;
        Ok(self.de_of(a))
    }

    pub fn non_descendants(&self, a: NodeSet) -> Result<NodeSet> {
        Ok(self.present.minus(self.descendants(a)?))
    }

    /// Reflexive ancestors, no validation.
    pub(crate) fn an_of(&self, a: NodeSet) -> NodeSet {
        let mut out = a;
        let mut frontier = a;
        while !frontier.is_empty() {
            let next = self.pa_of(frontier).minus(out);
            out = out.union(next);
            frontier = next;
        }
        out
    }

    /// Ancestors of `a` using only vertices (and edges) inside `within`.
    pub(crate) fn an_within(&self, a: NodeSet, within: NodeSet) -> NodeSet {
        let mut out = a;
        let mut frontier = a;
        while !frontier.is_empty() {
            let next = self.pa_of(frontier).inter(within).minus(out);
            out = out.union(next);
            frontier = next;
        }
        out
    }

    pub(crate) fn de_of(&self, a: NodeSet) -> NodeSet {
        let mut out = a;
        let mut frontier = a;
        while !frontier.is_empty() {
            let next = self.ch_of(frontier).minus(out);
            out = out.union(next);
            frontier = next;
        }
        out
    }

    pub fn is_ancestral(&self, a: NodeSet) -> Result<bool> {
        self.check(a)?;
        Ok(self.pa_of(a).is_subset(a))
    }

    /// Topological order of all present vertices; ties go to the name-least vertex.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.present.len());
        let mut left = self.present;
        while !left.is_empty() {
            let v = left
                .iter()
                .filter(|&v| self.pa[v].inter(left).is_empty())
                .min_by_key(|&v| self.rank[v])
                .expect("acyclic");
            out.push(v);
            left.remove(v);
        }
        out
    }

    // ----- districts -----

    /// Bidirected-connected component of `v` among random vertices of `within`.
    pub(crate) fn district_within(&self, v: usize, within: NodeSet) -> NodeSet {
        let dom = within.inter(self.random());
        let mut out = NodeSet::single(v);
        let mut frontier = out;
        while !frontier.is_empty() {
            let next = frontier
                .iter()
                .fold(NodeSet::EMPTY, |s, u| s.union(self.bi[u]))
                .inter(dom)
                .minus(out);
            out = out.union(next);
            frontier = next;
        }
        out
    }

    pub(crate) fn districts_within(&self, within: NodeSet) -> Vec<NodeSet> {
        let mut left = within.inter(self.random());
        let mut out = Vec::new();
        while let Some(v) = left.first() {
            let d = self.district_within(v, within);
            left = left.minus(d);
            out.push(d);
        }
        out.sort_by(|a, b| self.set_key(*a).cmp(&self.set_key(*b)));
        out
    }

    /// Districts of the random vertices, sorted by their name lists.
    pub fn districts(&self) -> Vec<NodeSet> {
        self.districts_within(self.present)
    }

    pub fn district_of(&self, v: usize) -> Result<NodeSet> {
        if !self.is_random(v) {
            return Err(Error::invalid(format!(
                "{} is not a random vertex",
                self.name_or(v)
            )));
        }
        Ok(self.district_within(v, self.present))
    }

    fn name_or(&self, v: usize) -> &str {
        self.names.get(v).map(String::as_str).unwrap_or("?")
    }

    pub fn induced_subgraph(&self, a: NodeSet) -> Result<MixedGraph> {
        self.check(a)?;
        Ok(self.restrict(a))
    }

    pub(crate) fn restrict(&self, a: NodeSet) -> MixedGraph {
        let n = self.names.len();
        let mut pa = vec![NodeSet::EMPTY; n];
        let mut bi = vec![NodeSet::EMPTY; n];
        for v in a.iter() {
            pa[v] = self.pa[v].inter(a);
            bi[v] = self.bi[v].inter(a);
        }
        self.with_structure(a, self.fixed.inter(a), self.latent.inter(a), pa, bi)
    }

    /// pa(dis(t)) ∪ dis(t) \ {t}.
    pub fn markov_blanket(&self, t: usize) -> Result<NodeSet> {
        if !self.is_random(t) {
            return Err(Error::invalid(format!(
                "markov blanket of {}: not a random vertex",
                self.name_or(t)
            )));
        }
        Ok(self.mb_within(t, self.present))
    }

    /// Markov blanket of `t` in the subgraph induced on `within`.
    pub(crate) fn mb_within(&self, t: usize, within: NodeSet) -> NodeSet {
        let d = self.district_within(t, within);
        self.pa_of(d).inter(within).union(d).without(t)
    }

    // ----- fixing -----

    /// dis(v) ∩ de(v).
    pub(crate) fn fix_obstruction(&self, v: usize) -> NodeSet {
        self.district_within(v, self.present).inter(self.de_of(NodeSet::single(v)))
    }

    pub(crate) fn is_fixable(&self, v: usize) -> bool {
        self.is_random(v) && self.fix_obstruction(v) == NodeSet::single(v)
    }

    /// φ* on graphs: move `v` to the fixed set, dropping edges with an arrowhead at `v`.
    /// Performs no fixability check.
    pub(crate) fn fix_unchecked(&self, v: usize) -> MixedGraph {
        let mut pa = self.pa.clone();
        let mut bi = self.bi.clone();
        pa[v] = NodeSet::EMPTY;
        for u in self.bi[v].iter() {
            bi[u].remove(v);
        }
        bi[v] = NodeSet::EMPTY;
        self.with_structure(
            self.present,
            self.fixed.with(v),
            self.latent.without(v),
            pa,
            bi,
        )
    }

    fn canonical(&self) -> CanonicalGraph<'_> {
        let names = |s: NodeSet| self.set_key(s);
        CanonicalGraph {
            random: names(self.random()),
            fixed: names(self.fixed),
            latent: names(self.latent),
            directed: self
                .directed_edges()
                .into_iter()
                .map(|(a, b)| (self.name(a), self.name(b)))
                .collect(),
            bidirected: self
                .bidirected_edges()
                .into_iter()
                .map(|(a, b)| (self.name(a), self.name(b)))
                .collect(),
        }
    }

    /// Same vertices, statuses and edges, ignoring latent marks.
    pub fn same_structure(&self, other: &MixedGraph) -> bool {
        let (a, b) = (self.canonical(), other.canonical());
        a.random == b.random
            && a.fixed == b.fixed
            && a.directed == b.directed
            && a.bidirected == b.bidirected
    }
}

#[derive(PartialEq, Eq)]
struct CanonicalGraph<'a> {
    random: Vec<&'a str>,
    fixed: Vec<&'a str>,
    latent: Vec<&'a str>,
    directed: Vec<(&'a str, &'a str)>,
    bidirected: Vec<(&'a str, &'a str)>,
}

/// Structural equality by vertex names; universes may differ.
impl PartialEq for MixedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for MixedGraph {}

impl fmt::Debug for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MixedGraph {{ random: {:?}", self.names_of(self.random()))?;
        if !self.fixed.is_empty() {
            write!(f, ", fixed: {:?}", self.names_of(self.fixed))?;
        }
        if !self.latent.is_empty() {
            write!(f, ", latent: {:?}", self.names_of(self.latent))?;
        }
        let d: Vec<String> = self
            .directed_edges()
            .into_iter()
            .map(|(a, b)| format!("{}->{}", self.name(a), self.name(b)))
            .chain(
                self.bidirected_edges()
                    .into_iter()
                    .map(|(a, b)| format!("{}<->{}", self.name(a), self.name(b))),
            )
            .collect();
        write!(f, ", edges: [{}] }}", d.join(", "))
    }
}
