//! Latent projection by iterated single-vertex elimination.

use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::set::NodeSet;

#[derive(Clone, Debug)]
pub struct ProjectionRequest {
    graph: MixedGraph,
    keep: NodeSet,
}

impl ProjectionRequest {
    /// `keep` must contain every fixed vertex; the latent set is the rest of the random vertices.
    pub fn new(graph: MixedGraph, keep: NodeSet) -> Result<Self> {
        if !keep.is_subset(graph.vertices()) {
            return Err(Error::invalid("keep set contains unknown vertices"));
        }
        if let Some(w) = graph.fixed().minus(keep).first() {
            return Err(Error::invalid(format!(
                "cannot project out fixed vertex {}",
                graph.name(w)
            )));
        }
        Ok(ProjectionRequest { graph, keep })
    }

    /// Keeps everything except the graph's latent marks.
    pub fn from_marks(graph: MixedGraph) -> Self {
        let keep = graph.vertices().minus(graph.latent());
        ProjectionRequest { graph, keep }
    }

    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn keep(&self) -> NodeSet {
        self.keep
    }

    pub fn latent(&self) -> NodeSet {
        self.graph.vertices().minus(self.keep)
    }
}

pub fn latent_project(req: &ProjectionRequest) -> MixedGraph {
    project_in_order(&req.graph, &req.graph.sorted(req.latent()))
}

/// Shorthand for `latent_project(ProjectionRequest::new(g, keep)?)`.
pub fn project(g: &MixedGraph, keep: NodeSet) -> Result<MixedGraph> {
    Ok(latent_project(&ProjectionRequest::new(g.clone(), keep)?))
}

/// Eliminates the given latents in exactly this order.
pub fn project_in_order(g: &MixedGraph, order: &[usize]) -> MixedGraph {
    let mut pa = g.pa_vec().to_vec();
    let mut bi = g.bi_vec().to_vec();
    let mut present = g.vertices();
    for &l in order {
        eliminate(&mut pa, &mut bi, present, l);
        present.remove(l);
    }
    g.with_structure(present, g.fixed(), g.latent().inter(present), pa, bi)
}

/// In = pa(l), Bi = sib(l), Out = ch(l): adds In→Out, Bi↔Out and Out↔Out, then drops l.
fn eliminate(pa: &mut [NodeSet], bi: &mut [NodeSet], present: NodeSet, l: usize) {
    let ins = pa[l];
    let sibs = bi[l];
    let outs: NodeSet = present.iter().filter(|&v| pa[v].contains(l)).collect();
    for b in outs.iter() {
        pa[b] = pa[b].union(ins).without(l);
        for a in sibs.union(outs).iter() {
            if a != b {
                bi[a].insert(b);
                bi[b].insert(a);
            }
        }
    }
    for a in sibs.iter() {
        bi[a].remove(l);
    }
    pa[l] = NodeSet::EMPTY;
    bi[l] = NodeSet::EMPTY;
}

/// σ_H(φ*_v(G)) = φ*_v(σ_H(G)), where H is the graph's latent marks.
pub fn projection_commutes_with_fixing_check(g: &MixedGraph, v: usize) -> Result<bool> {
    if g.has_bidirected() {
        return Err(Error::invalid("expected a graph without bidirected edges"));
    }
    if !g.is_random(v) || g.latent().contains(v) {
        return Err(Error::invalid(format!("{} must be an observed random vertex", g.name(v))));
    }
    let fixed_then_projected = latent_project(&ProjectionRequest::from_marks(g.fix_unchecked(v)));
    let projected_then_fixed = latent_project(&ProjectionRequest::from_marks(g.clone())).fix_unchecked(v);
    Ok(fixed_then_projected.same_structure(&projected_then_fixed))
}
