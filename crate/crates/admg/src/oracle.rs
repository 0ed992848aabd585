//! Brute-force references and seeded generators used to cross-check the engine.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::causal::canonical_dag;
use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::kernel::{Kernel, Rational, StateSpace};
use crate::separation::with_fixed_clique;
use crate::set::NodeSet;

pub type Seed = u64;

/// Default positive weight range for random conditionals.
pub const WEIGHTS: (u64, u64) = (1, 16);

fn rng(seed: Seed) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random positive table over `random ∪ fixed`, normalized per fixed context,
/// with integer weights drawn from `weights`.
pub fn arbitrary_kernel_with(
    space: &StateSpace,
    random: NodeSet,
    fixed: NodeSet,
    seed: Seed,
    weights: (u64, u64),
) -> Result<Kernel> {
    let mut r = rng(seed);
    let raw = Kernel::from_fn_unchecked(space, random, fixed, |_| {
        Rational::from_integer(BigInt::from(r.random_range(weights.0..=weights.1)))
    })?;
    let ctx = raw.marginalize(NodeSet::EMPTY)?;
    let n = space.len();
    Kernel::from_fn(space, random, fixed, |x| {
        let mut full = x.to_vec();
        full.resize(n, 0);
        raw.value(&full).unwrap() / ctx.value(&full).unwrap()
    })
}

pub fn arbitrary_kernel(space: &StateSpace, random: NodeSet, fixed: NodeSet, seed: Seed) -> Result<Kernel> {
    arbitrary_kernel_with(space, random, fixed, seed, WEIGHTS)
}

/// A seeded positive joint over `random` with no structure imposed.
pub fn arbitrary_distribution(space: &StateSpace, random: NodeSet, seed: Seed) -> Result<Kernel> {
    arbitrary_kernel(space, random, NodeSet::EMPTY, seed)
}

/// A DAG over random vertices (fixed vertices act as given roots) with one
/// conditional table per random vertex.
#[derive(Clone, Debug)]
pub struct DagModel {
    graph: MixedGraph,
    space: StateSpace,
    cpts: Vec<Option<Kernel>>,
}

impl DagModel {
    pub fn random(g: &MixedGraph, space: &StateSpace, seed: Seed) -> Result<DagModel> {
        Self::random_with(g, space, seed, WEIGHTS)
    }

    pub fn random_with(g: &MixedGraph, space: &StateSpace, seed: Seed, weights: (u64, u64)) -> Result<DagModel> {
        if g.has_bidirected() {
            return Err(Error::invalid("DAG models need a graph without bidirected edges"));
        }
        crate::kernel::check_cells(space, g.vertices(), &crate::Limits::default())?;
        let mut r = rng(seed);
        let mut cpts = vec![None; g.universe_size()];
        for v in g.topological_order() {
            if !g.is_random(v) {
                continue;
            }
            let sub = arbitrary_kernel_with(space, NodeSet::single(v), g.pa(v), r.random(), weights)?;
            cpts[v] = Some(sub);
        }
        Ok(DagModel {
            graph: g.clone(),
            space: space.clone(),
            cpts,
        })
    }

    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    /// p(x_v | x_{pa(v)}).
    pub fn cpt(&self, v: usize) -> Option<&Kernel> {
        self.cpts[v].as_ref()
    }

    fn product_over(&self, vs: NodeSet, fixed: NodeSet) -> Result<Kernel> {
        let factors: Vec<&Kernel> = vs.iter().filter_map(|v| self.cpts[v].as_ref()).collect();
        let unit = Kernel::unit(&self.space, fixed)?;
        let mut all = factors;
        all.push(&unit);
        let k = Kernel::product(&all)?;
        k.with_random(vs)
    }

    /// The joint Π_v p(x_v | x_{pa(v)}) over random vertices given the fixed ones.
    pub fn joint(&self) -> Result<Kernel> {
        self.product_over(self.graph.random(), self.graph.fixed())
    }

    /// Truncated factorization Π_{v ∉ A} p(x_v | x_{pa(v)}), a kernel with A fixed.
    pub fn g_formula(&self, a: NodeSet) -> Result<Kernel> {
        if !a.is_subset(self.graph.random()) {
            return Err(Error::invalid("treatment must be random vertices"));
        }
        self.product_over(self.graph.random().minus(a), self.graph.fixed().union(a))
    }
}

/// Seeded DAG model joint; conditionals use weights in [1, 16].
pub fn random_dag_model(g: &MixedGraph, space: &StateSpace, seed: Seed) -> Result<Kernel> {
    DagModel::random(g, space, seed)?.joint()
}

/// Alias of marginalization for latent-variable workflows.
pub fn margin(p: &Kernel, keep: NodeSet) -> Result<Kernel> {
    p.marginalize(keep)
}

/// `space` extended with `k` levels for every universe vertex it does not cover.
pub fn extend_space(space: &StateSpace, n: usize, k: usize) -> StateSpace {
    let mut card: Vec<usize> = (0..space.len()).map(|v| space.card(v)).collect();
    card.resize(n, k);
    StateSpace::new(card).expect("cardinalities ≥ 2")
}

/// A model on the canonical DAG of `g` (one binary latent per bidirected edge).
/// Returns the latent model and the observed kernel over g's vertices.
pub fn canonical_model(g: &MixedGraph, space: &StateSpace, seed: Seed) -> Result<(DagModel, Kernel)> {
    let dag = canonical_dag(g)?;
    let full = extend_space(space, dag.universe_size(), 2);
    let model = DagModel::random(&dag, &full, seed)?;
    let observed = model.joint()?.marginalize(g.random())?;
    Ok((model, observed))
}

/// A kernel in the nested model of `g`: the margin of a canonical-DAG model.
pub fn member_distribution(g: &MixedGraph, space: &StateSpace, seed: Seed) -> Result<Kernel> {
    Ok(canonical_model(g, space, seed)?.1)
}

/// A kernel that factorizes with respect to the CADMG `g` (fixed vertices are roots).
pub fn random_cadmg_kernel(g: &MixedGraph, space: &StateSpace, seed: Seed) -> Result<Kernel> {
    member_distribution(g, space, seed)
}

// ----- brute-force separation and projection -----

const BRUTE_CAP: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Head,
    Tail,
}

/// Edges at v in G^{|W}: (other end, mark at v, mark at other end).
fn incident(g: &MixedGraph, v: usize) -> Vec<(usize, Mark, Mark)> {
    let mut out = Vec::new();
    for w in g.ch(v).iter() {
        out.push((w, Mark::Tail, Mark::Head));
    }
    for w in g.pa(v).iter() {
        out.push((w, Mark::Head, Mark::Tail));
    }
    for w in g.sib(v).iter() {
        out.push((w, Mark::Head, Mark::Head));
    }
    out
}

/// Endpoints of m-connecting simple paths from `a` given `c`, found by
/// enumerating simple edge paths one by one.
pub fn brute_force_connected(g: &MixedGraph, a: NodeSet, c: NodeSet) -> Result<NodeSet> {
    if g.vertices().len() > BRUTE_CAP {
        return Err(Error::ResourceLimit(format!("brute force limited to {BRUTE_CAP} vertices")));
    }
    let gw = with_fixed_clique(g);
    let an_c = gw.an_of(c);
    let adj: Vec<Vec<(usize, Mark, Mark)>> = (0..gw.universe_size())
        .map(|v| if gw.vertices().contains(v) { incident(&gw, v) } else { Vec::new() })
        .collect();
    let targets = gw.vertices().minus(a).minus(c);
    let mut found = NodeSet::EMPTY;
    for s in a.iter() {
        walk(&adj, s, NodeSet::single(s), None, c, an_c, targets, &mut found);
        if found == targets {
            break;
        }
    }
    Ok(found)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    adj: &[Vec<(usize, Mark, Mark)>],
    v: usize,
    visited: NodeSet,
    arrived: Option<Mark>,
    c: NodeSet,
    an_c: NodeSet,
    targets: NodeSet,
    found: &mut NodeSet,
) {
    for &(w, at_v, at_w) in &adj[v] {
        if visited.contains(w) {
            continue;
        }
        if let Some(m) = arrived {
            let collider = m == Mark::Head && at_v == Mark::Head;
            let ok = if collider { an_c.contains(v) } else { !c.contains(v) };
            if !ok {
                continue;
            }
        }
        if targets.contains(w) {
            found.insert(w);
            if *found == targets {
                return;
            }
        }
        walk(adj, w, visited.with(w), Some(at_w), c, an_c, targets, found);
        if *found == targets {
            return;
        }
    }
}

pub fn brute_force_msep(g: &MixedGraph, a: NodeSet, b: NodeSet, c: NodeSet) -> Result<bool> {
    crate::separation::check_triple(g, a, b, c, true)?;
    Ok(brute_force_connected(g, a, c)?.is_disjoint(b))
}

/// Projection straight from the path definition: v → w iff a directed path with
/// latent interior exists; v ↔ w iff a path with latent non-collider interior
/// and arrowheads at both ends exists.
pub fn brute_force_projection(g: &MixedGraph, keep: NodeSet) -> Result<MixedGraph> {
    if g.vertices().len() > BRUTE_CAP {
        return Err(Error::ResourceLimit(format!("brute force limited to {BRUTE_CAP} vertices")));
    }
    if !g.fixed().is_subset(keep) || !keep.is_subset(g.vertices()) {
        return Err(Error::invalid("keep must contain all fixed vertices"));
    }
    let latent = g.vertices().minus(keep);
    let n = g.universe_size();
    let adj: Vec<Vec<(usize, Mark, Mark)>> = (0..n)
        .map(|v| if g.vertices().contains(v) { incident(g, v) } else { Vec::new() })
        .collect();
    let mut pa = vec![NodeSet::EMPTY; n];
    let mut bi = vec![NodeSet::EMPTY; n];
    for v in keep.iter() {
        let mut ends: Vec<(usize, Mark, Mark, bool)> = Vec::new();
        latent_paths(&adj, v, NodeSet::single(v), None, None, true, latent, &mut ends);
        for (w, first, last, directed) in ends {
            if directed {
                pa[w].insert(v);
            }
            if first == Mark::Head && last == Mark::Head {
                bi[v].insert(w);
                bi[w].insert(v);
            }
        }
    }
    Ok(g.with_structure(keep, g.fixed(), g.latent().inter(keep), pa, bi))
}

/// Records (end, mark at start, mark at end, all edges point forward) for
/// every simple path from the start whose interior is latent and non-collider.
#[allow(clippy::too_many_arguments)]
fn latent_paths(
    adj: &[Vec<(usize, Mark, Mark)>],
    v: usize,
    visited: NodeSet,
    first: Option<Mark>,
    arrived: Option<Mark>,
    forward: bool,
    latent: NodeSet,
    out: &mut Vec<(usize, Mark, Mark, bool)>,
) {
    for &(w, at_v, at_w) in &adj[v] {
        if visited.contains(w) {
            continue;
        }
        if let Some(m) = arrived {
            if m == Mark::Head && at_v == Mark::Head {
                continue;
            }
        }
        let first = first.unwrap_or(at_v);
        let forward = forward && at_v == Mark::Tail && at_w == Mark::Head;
        if latent.contains(w) {
            latent_paths(adj, w, visited.with(w), Some(first), Some(at_w), forward, latent, out);
        } else {
            out.push((w, first, at_w, forward));
        }
    }
}

// ----- graph enumeration -----

fn names(n: usize) -> Arc<[String]> {
    (1..=n).map(|i| format!("x{i}")).collect::<Vec<_>>().into()
}

fn build(names: &Arc<[String]>, n: usize, directed: &[(usize, usize)], bidirected: &[(usize, usize)]) -> Result<MixedGraph> {
    let mut pa = vec![NodeSet::EMPTY; n];
    let mut bi = vec![NodeSet::EMPTY; n];
    for &(a, b) in directed {
        pa[b].insert(a);
    }
    for &(a, b) in bidirected {
        bi[a].insert(b);
        bi[b].insert(a);
    }
    MixedGraph::from_parts(names.clone(), NodeSet::full(n), NodeSet::EMPTY, NodeSet::EMPTY, pa, bi)
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

/// Every labeled ADMG on vertices x1..xn (acyclic directed part × any
/// bidirected part), in a fixed order.
pub fn enumerate_admgs(n: usize) -> Result<Vec<MixedGraph>> {
    if n == 0 || n > 4 {
        return Err(Error::ResourceLimit(format!("enumerate_admgs supports 1 ≤ n ≤ 4, got {n}")));
    }
    let nm = names(n);
    let ordered: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let unordered = pairs(n);
    let mut out = Vec::new();
    for dmask in 0u32..1 << ordered.len() {
        let directed: Vec<(usize, usize)> = ordered
            .iter()
            .enumerate()
            .filter(|(i, _)| dmask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if directed.iter().any(|&(a, b)| directed.contains(&(b, a))) {
            continue;
        }
        if build(&nm, n, &directed, &[]).is_err() {
            continue;
        }
        for bmask in 0u32..1 << unordered.len() {
            let bidirected: Vec<(usize, usize)> = unordered
                .iter()
                .enumerate()
                .filter(|(i, _)| bmask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            out.push(build(&nm, n, &directed, &bidirected)?);
        }
    }
    Ok(out)
}

/// ADMGs on x1..xn whose directed edges all point from lower to higher index.
/// Every ADMG is isomorphic to at least one of these. Lazily generated; n ≤ 6.
pub fn enumerate_ordered_admgs(n: usize) -> Result<impl Iterator<Item = MixedGraph>> {
    if n == 0 || n > 6 {
        return Err(Error::ResourceLimit(format!("enumerate_ordered_admgs supports 1 ≤ n ≤ 6, got {n}")));
    }
    let nm = names(n);
    let pr = pairs(n);
    let m = pr.len();
    Ok((0u64..1 << (2 * m)).map(move |mask| {
        let directed: Vec<(usize, usize)> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| pr[i]).collect();
        let bidirected: Vec<(usize, usize)> = (0..m).filter(|i| mask >> (m + i) & 1 == 1).map(|i| pr[i]).collect();
        build(&nm, n, &directed, &bidirected).expect("forward edges are acyclic")
    }))
}

/// The complete ADMG on x1..xn with x_i → x_j for i < j plus the given bidirected edges.
pub fn complete_admg(n: usize, bidirected: &[(usize, usize)]) -> Result<MixedGraph> {
    let nm = names(n);
    build(&nm, n, &pairs(n), bidirected)
}

/// A seeded random DAG on `n` vertices x1..xn, the last `latent` of them marked latent
/// after a random relabeling. Each forward pair gets an edge with probability 1/2.
pub fn random_latent_dag(n: usize, latent: usize, seed: Seed) -> Result<MixedGraph> {
    if latent > n {
        return Err(Error::invalid("more latents than vertices"));
    }
    let mut r = rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = r.random_range(0..=i);
        order.swap(i, j);
    }
    let nm = names(n);
    let mut directed = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(0.5) {
                directed.push((order[i], order[j]));
            }
        }
    }
    let g = build(&nm, n, &directed, &[])?;
    let mut ids: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = r.random_range(0..=i);
        ids.swap(i, j);
    }
    let lat: NodeSet = ids[..latent].iter().copied().collect();
    Ok(g.with_structure(g.vertices(), NodeSet::EMPTY, lat, g.pa_vec().to_vec(), g.bi_vec().to_vec()))
}

/// A seeded random CADMG with random vertices x1..xr and fixed w1..wf. Directed
/// edges follow a shuffled order of the random vertices; fixed vertices point at
/// random ones; each candidate edge appears with probability 1/2.
pub fn random_cadmg(random: usize, fixed: usize, seed: Seed) -> Result<MixedGraph> {
    let mut r = rng(seed);
    let xs: Vec<String> = (1..=random).map(|i| format!("x{i}")).collect();
    let ws: Vec<String> = (1..=fixed).map(|i| format!("w{i}")).collect();
    let mut order: Vec<usize> = (0..random).collect();
    for i in (1..random).rev() {
        let j = r.random_range(0..=i);
        order.swap(i, j);
    }
    let mut b = MixedGraph::builder().random(xs.clone()).fixed(ws.clone());
    for i in 0..random {
        for j in i + 1..random {
            if r.random_bool(0.5) {
                b = b.directed(xs[order[i]].clone(), xs[order[j]].clone());
            }
            if r.random_bool(0.5) {
                b = b.bidirected(xs[i].clone(), xs[j].clone());
            }
        }
    }
    for w in &ws {
        for x in &xs {
            if r.random_bool(0.5) {
                b = b.directed(w.clone(), x.clone());
            }
        }
    }
    b.build()
}

/// True iff every entry of the table is zero.
pub fn is_zero_kernel(k: &Kernel) -> bool {
    k.table().iter().all(Zero::is_zero)
}
