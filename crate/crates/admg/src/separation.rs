//! m-separation, the G^{|W} construction and the augmented graph.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::set::NodeSet;

#[derive(Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    names: Arc<[String]>,
    vertices: NodeSet,
    adj: Vec<NodeSet>,
}

impl UndirectedGraph {
    pub fn vertices(&self) -> NodeSet {
        self.vertices
    }

    pub fn neighbours(&self, v: usize) -> NodeSet {
        self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(b)
    }

    /// Edges as (smaller index, larger index).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.vertices
            .iter()
            .flat_map(|a| self.adj[a].iter().filter(move |&b| a < b).map(move |b| (a, b)))
            .collect()
    }

    /// Edges as sorted name pairs.
    pub fn edge_names(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .edges()
            .into_iter()
            .map(|(a, b)| {
                let (x, y) = (self.names[a].clone(), self.names[b].clone());
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        out.sort();
        out
    }
}

impl std::fmt::Debug for UndirectedGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let e: Vec<String> = self
            .edge_names()
            .into_iter()
            .map(|(a, b)| format!("{a}-{b}"))
            .collect();
        write!(f, "UndirectedGraph [{}]", e.join(", "))
    }
}

/// Adds w↔w′ for all fixed pairs and returns the graph with every vertex random.
pub fn with_fixed_clique(g: &MixedGraph) -> MixedGraph {
    let w = g.fixed();
    if w.is_empty() {
        return g.clone();
    }
    let mut bi = g.bi_vec().to_vec();
    for v in w.iter() {
        bi[v] = bi[v].union(w.without(v));
    }
    g.with_structure(g.vertices(), NodeSet::EMPTY, g.latent(), g.pa_vec().to_vec(), bi)
}

pub(crate) fn check_triple(
    g: &MixedGraph,
    a: NodeSet,
    b: NodeSet,
    c: NodeSet,
    nonempty: bool,
) -> Result<()> {
    let all = a.union(b).union(c);
    if !all.is_subset(g.vertices()) {
        return Err(Error::invalid("vertex set contains unknown vertices"));
    }
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::invalid("vertex sets must be pairwise disjoint"));
    }
    if nonempty && (a.is_empty() || b.is_empty()) {
        return Err(Error::invalid("A and B must be non-empty"));
    }
    Ok(())
}

/// Vertices reachable from `a` along m-connecting walks given `c`, evaluated in
/// G^{|W}. Walk states remember whether the last edge had an arrowhead at the
/// current vertex; colliders pass iff they lie in an(c), non-colliders iff not in `c`.
pub(crate) fn m_reachable(g: &MixedGraph, a: NodeSet, c: NodeSet) -> NodeSet {
    let w = g.fixed();
    let sib = |v: usize| {
        if w.contains(v) {
            g.sib(v).union(w.without(v))
        } else {
            g.sib(v)
        }
    };
    let an_c = g.an_of(c);
    let mut seen_head = NodeSet::EMPTY;
    let mut seen_tail = NodeSet::EMPTY;
    let mut stack: Vec<(usize, bool)> = Vec::new();
    let mut push = |v: usize, head: bool, stack: &mut Vec<(usize, bool)>| {
        let seen = if head { &mut seen_head } else { &mut seen_tail };
        if !seen.contains(v) {
            seen.insert(v);
            stack.push((v, head));
        }
    };
    for s in a.iter() {
        for x in g.ch(s).iter() {
            push(x, true, &mut stack);
        }
        for x in sib(s).iter() {
            push(x, true, &mut stack);
        }
        for x in g.pa(s).iter() {
            push(x, false, &mut stack);
        }
    }
    while let Some((v, head)) = stack.pop() {
        let non_collider_ok = !c.contains(v);
        if non_collider_ok {
            for x in g.ch(v).iter() {
                push(x, true, &mut stack);
            }
        }
        let into_v_ok = if head { an_c.contains(v) } else { non_collider_ok };
        if into_v_ok {
            for x in sib(v).iter() {
                push(x, true, &mut stack);
            }
            for x in g.pa(v).iter() {
                push(x, false, &mut stack);
            }
        }
    }
    seen_head.union(seen_tail)
}

/// Every vertex outside A ∪ C that is m-connected to A given C.
pub fn m_connected(g: &MixedGraph, a: NodeSet, c: NodeSet) -> Result<NodeSet> {
    check_triple(g, a, NodeSet::EMPTY, c, false)?;
    Ok(m_reachable(g, a, c).minus(a.union(c)))
}

/// True iff every path between A and B is blocked by C (in G^{|W} when W ≠ ∅).
pub fn m_separated(g: &MixedGraph, a: NodeSet, b: NodeSet, c: NodeSet) -> Result<bool> {
    check_triple(g, a, b, c, true)?;
    Ok(m_reachable(g, a, c).is_disjoint(b))
}

pub fn d_separated(g: &MixedGraph, a: NodeSet, b: NodeSet, c: NodeSet) -> Result<bool> {
    if g.has_bidirected() {
        return Err(Error::invalid("d-separation needs a graph without bidirected edges"));
    }
    m_separated(g, a, b, c)
}

/// c — d iff they are joined by a collider path in G^{|W}.
pub fn augment(g: &MixedGraph) -> UndirectedGraph {
    let gw = with_fixed_clique(g);
    let n = gw.universe_size();
    let verts = gw.vertices();
    let mut adj = vec![NodeSet::EMPTY; n];
    for c in verts.iter() {
        let mut z = gw.ch(c).union(gw.sib(c));
        let mut frontier = z;
        while !frontier.is_empty() {
            let next = frontier
                .iter()
                .fold(NodeSet::EMPTY, |s, u| s.union(gw.sib(u)))
                .minus(z);
            z = z.union(next);
            frontier = next;
        }
        let mut nb = gw.pa(c).union(z);
        for u in z.iter() {
            nb = nb.union(gw.pa(u)).union(gw.sib(u));
        }
        adj[c] = nb.without(c);
    }
    // Collider-connection is symmetric; symmetrize defensively.
    for a in verts.iter() {
        for b in adj[a].iter() {
            adj[b].insert(a);
        }
    }
    UndirectedGraph {
        names: g.names_arc().clone(),
        vertices: verts,
        adj,
    }
}

/// Undirected graph over `g`'s universe from explicit edges.
pub fn undirected(g: &MixedGraph, vertices: NodeSet, edges: &[(usize, usize)]) -> UndirectedGraph {
    let mut adj = vec![NodeSet::EMPTY; g.universe_size()];
    for &(a, b) in edges {
        adj[a].insert(b);
        adj[b].insert(a);
    }
    UndirectedGraph {
        names: g.names_arc().clone(),
        vertices,
        adj,
    }
}

pub fn u_separated(u: &UndirectedGraph, a: NodeSet, b: NodeSet, c: NodeSet) -> Result<bool> {
    if !a.union(b).union(c).is_subset(u.vertices) {
        return Err(Error::invalid("vertex set contains unknown vertices"));
    }
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::invalid("vertex sets must be pairwise disjoint"));
    }
    Ok(u_reach(u, a, c).is_disjoint(b))
}

fn u_reach(u: &UndirectedGraph, a: NodeSet, c: NodeSet) -> NodeSet {
    let mut seen = a;
    let mut frontier = a;
    while !frontier.is_empty() {
        let next = frontier
            .iter()
            .fold(NodeSet::EMPTY, |s, v| s.union(u.adj[v]))
            .minus(seen)
            .minus(c);
        seen = seen.union(next);
        frontier = next;
    }
    seen
}

/// Separation in the augmented graph of the induced subgraph on an(A ∪ B ∪ C).
pub fn augmented_separated(g: &MixedGraph, a: NodeSet, b: NodeSet, c: NodeSet) -> Result<bool> {
    check_triple(g, a, b, c, true)?;
    let anc = g.an_of(a.union(b).union(c));
    let u = augment(&g.restrict(anc));
    Ok(u_reach(&u, a, c).is_disjoint(b))
}
