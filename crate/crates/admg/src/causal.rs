//! g-formula, identification by fixing, and numeric effect evaluation.

use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fixing::{is_intrinsic, reach, FixingSequence};
use crate::graph::MixedGraph;
use crate::kernel::{apply_sequence_kernel, Kernel};
use crate::set::NodeSet;

/// p(x_Y | do(x_A)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalQuery {
    treatment: NodeSet,
    outcome: NodeSet,
}

impl CausalQuery {
    pub fn new(g: &MixedGraph, treatment: NodeSet, outcome: NodeSet) -> Result<Self> {
        if outcome.is_empty() {
            return Err(Error::invalid("outcome set is empty"));
        }
        if !treatment.union(outcome).is_subset(g.random()) {
            return Err(Error::invalid("query sets must be random vertices"));
        }
        if !treatment.is_disjoint(outcome) {
            return Err(Error::invalid("treatment and outcome overlap"));
        }
        Ok(CausalQuery { treatment, outcome })
    }

    pub fn from_names<S: AsRef<str>>(g: &MixedGraph, treatment: &[S], outcome: &[S]) -> Result<Self> {
        Self::new(g, g.set(treatment)?, g.set(outcome)?)
    }

    pub fn treatment(&self) -> NodeSet {
        self.treatment
    }

    pub fn outcome(&self) -> NodeSet {
        self.outcome
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdResult {
    Identifiable {
        y_star: NodeSet,
        /// Districts of G_{Y*} with the sequence reaching each, by topological position.
        factors: Vec<(NodeSet, FixingSequence)>,
        sum_over: NodeSet,
    },
    NotIdentifiable {
        offending_district: NodeSet,
        minimal_intrinsic_superset: NodeSet,
    },
}

impl IdResult {
    pub fn is_identifiable(&self) -> bool {
        matches!(self, IdResult::Identifiable { .. })
    }
}

/// One fresh latent per bidirected edge a ↔ b, named u_a_b, pointing at both ends.
/// Existing vertices keep their indices.
pub fn canonical_dag(g: &MixedGraph) -> Result<MixedGraph> {
    let bi = g.bidirected_edges();
    let n = g.universe_size();
    if n + bi.len() > crate::set::MAX_VERTICES {
        return Err(Error::ResourceLimit("canonical DAG exceeds 64 vertices".into()));
    }
    let mut names: Vec<String> = g.universe().to_vec();
    let mut pa: Vec<NodeSet> = (0..n).map(|v| g.pa(v)).collect();
    let mut fresh = NodeSet::EMPTY;
    for &(a, b) in &bi {
        let base = format!("u_{}_{}", g.name(a), g.name(b));
        let mut name = base.clone();
        let mut k = 1;
        while names.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        let u = names.len();
        names.push(name);
        pa.push(NodeSet::EMPTY);
        pa[a].insert(u);
        pa[b].insert(u);
        fresh.insert(u);
    }
    let names: Arc<[String]> = names.into();
    let m = names.len();
    MixedGraph::from_parts(
        names,
        g.vertices().union(fresh),
        g.fixed(),
        g.latent().union(fresh),
        pa,
        vec![NodeSet::EMPTY; m],
    )
}

/// Π_{v ∈ V\A} p(x_v | x_{pa(v)}), with A fixed.
pub fn g_formula(g: &MixedGraph, p: &Kernel, a: NodeSet) -> Result<Kernel> {
    if g.has_bidirected() {
        return Err(Error::invalid("the g-formula needs a graph without bidirected edges"));
    }
    if p.random() != g.random() || p.fixed() != g.fixed() {
        return Err(Error::invalid("distribution and graph disagree on vertices"));
    }
    if !a.is_subset(g.random()) {
        return Err(Error::invalid("treatment must be random vertices"));
    }
    let rest = g.random().minus(a);
    let mut factors = Vec::new();
    for v in rest.iter() {
        let given = g.pa(v).inter(g.random());
        if p.marginalize(given)?.table().iter().any(Zero::is_zero) {
            return Err(Error::Degenerate(format!(
                "p(x_{}) has a zero-probability parent context",
                g.name(v)
            )));
        }
        factors.push(p.conditional(NodeSet::single(v), given)?);
    }
    let unit = Kernel::unit(&p.state_space(g.universe_size()), a.union(g.fixed()))?;
    let mut refs: Vec<&Kernel> = factors.iter().collect();
    refs.push(&unit);
    Kernel::product(&refs)?.with_random(rest)
}

/// A_Y = an_{G_Ā}(Y) ∩ A, where G_Ā drops directed edges into A.
pub fn truncate_to_relevant(g: &MixedGraph, a: NodeSet, y: NodeSet) -> Result<NodeSet> {
    if !a.is_disjoint(y) {
        return Err(Error::invalid("treatment and outcome overlap"));
    }
    g.ancestors(a.union(y))?;
    let mut an = y;
    let mut frontier = y;
    while !frontier.is_empty() {
        let next = frontier
            .iter()
            .filter(|&v| !a.contains(v))
            .fold(NodeSet::EMPTY, |s, v| s.union(g.pa(v)))
            .minus(an);
        an = an.union(next);
        frontier = next;
    }
    Ok(an.inter(a))
}

/// Smallest intrinsic set containing `d`, name-least among ties.
pub fn minimal_intrinsic_superset(g: &MixedGraph, d: NodeSet) -> Option<NodeSet> {
    let home = g.district_within(d.first()?, g.vertices());
    if !d.is_subset(home) {
        return None;
    }
    let mut cands: Vec<NodeSet> = home.minus(d).subsets().map(|s| s.union(d)).collect();
    cands.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| g.set_key(*a).cmp(&g.set_key(*b))));
    cands.into_iter().find(|&s| is_intrinsic(g, s))
}

pub fn identify(g: &MixedGraph, q: &CausalQuery) -> Result<IdResult> {
    if !g.fixed().is_empty() {
        return Err(Error::invalid("identification takes an ADMG"));
    }
    if !q.treatment.union(q.outcome).is_subset(g.random()) {
        return Err(Error::invalid("query does not match the graph"));
    }
    let y_star = g.an_within(q.outcome, g.vertices().minus(q.treatment));
    let order = g.topological_order();
    let mut pos = vec![0; g.universe_size()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut ds = g.restrict(y_star).districts();
    ds.sort_by_key(|d| d.iter().map(|v| pos[v]).min());
    let mut factors = Vec::new();
    for d in ds {
        if !is_intrinsic(g, d) {
            return Ok(IdResult::NotIdentifiable {
                offending_district: d,
                minimal_intrinsic_superset: minimal_intrinsic_superset(g, d)
                    .expect("the enclosing district is intrinsic"),
            });
        }
        factors.push((d, reach(g, d).expect("intrinsic sets are reachable")));
    }
    Ok(IdResult::Identifiable {
        y_star,
        factors,
        sum_over: y_star.minus(q.outcome),
    })
}

/// Σ_{x_{Y*\Y}} Π_D φ_{V\D}(p), as a kernel over Y given A. Coordinates outside
/// Y* ∪ A are pinned to level 0; members of the model do not depend on them.
pub fn evaluate_effect(g: &MixedGraph, p: &Kernel, q: &CausalQuery) -> Result<Kernel> {
    let IdResult::Identifiable { y_star, factors, .. } = identify(g, q)? else {
        return Err(Error::invalid("the effect is not identifiable"));
    };
    let keep = y_star.union(q.treatment);
    let pinned: Vec<(usize, usize)> = g.random().minus(keep).iter().map(|v| (v, 0)).collect();
    let mut terms = Vec::new();
    for (_, w) in &factors {
        let (k, _) = apply_sequence_kernel(p, w.steps(), g)?;
        let here: Vec<(usize, usize)> = pinned.iter().copied().filter(|&(v, _)| k.fixed().contains(v)).collect();
        terms.push(k.slice(&here)?);
    }
    let refs: Vec<&Kernel> = terms.iter().collect();
    let prod = Kernel::product(&refs)?;
    prod.marginalize(q.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::kernel::StateSpace;
    use crate::oracle::{canonical_model, random_dag_model};
    use crate::projection::project;

    #[test]
    fn verma_query_is_identified() {
        let g = verma();
        let q = CausalQuery::from_names(&g, &["x2"], &["x4"]).unwrap();
        match identify(&g, &q).unwrap() {
            IdResult::Identifiable { y_star, factors, sum_over } => {
                assert_eq!(g.names_of(y_star), ["x1", "x3", "x4"]);
                let ds: Vec<Vec<String>> = factors.iter().map(|(d, _)| g.names_of(*d)).collect();
                assert_eq!(ds, vec![vec!["x1"], vec!["x3"], vec!["x4"]]);
                assert_eq!(g.names_of(sum_over), ["x1", "x3"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bow_is_not_identified() {
        let g = bow();
        let q = CausalQuery::from_names(&g, &["a"], &["y"]).unwrap();
        assert_eq!(
            identify(&g, &q).unwrap(),
            IdResult::NotIdentifiable {
                offending_district: g.set(&["y"]).unwrap(),
                minimal_intrinsic_superset: g.set(&["a", "y"]).unwrap(),
            }
        );
    }

    #[test]
    fn canonical_dag_of_verma_projects_back() {
        let g = verma();
        let d = canonical_dag(&g).unwrap();
        assert!(!d.has_bidirected());
        assert!(d.index("u_x2_x4").is_ok());
        let keep = d.vertices().minus(d.latent());
        assert!(project(&d, keep).unwrap().same_structure(&g));
        let plain = MixedGraph::builder().random(["a", "b"]).edge("a -> b").build().unwrap();
        assert_eq!(canonical_dag(&plain).unwrap(), plain);
    }

    #[test]
    fn g_formula_edges() {
        let g = hidden_verma();
        let s = StateSpace::binary(&g);
        let p = random_dag_model(&g, &s, 2).unwrap();
        assert!(g_formula(&g, &p, NodeSet::EMPTY).unwrap().same_function(&p));
        let all = g_formula(&g, &p, g.random()).unwrap();
        assert!(all.random().is_empty());
        assert!(all.table().iter().all(|v| v == &crate::kernel::Rational::from_integer(1.into())));
    }

    #[test]
    fn truncation_examples() {
        let g = MixedGraph::builder().random(["a", "m", "y"]).edges(&["a -> m", "m -> y"]).build().unwrap();
        let s = |n: &[&str]| g.set(n).unwrap();
        assert_eq!(truncate_to_relevant(&g, s(&["a", "m"]), s(&["y"])).unwrap(), s(&["m"]));
        let v = verma();
        let sv = |n: &[&str]| v.set(n).unwrap();
        assert_eq!(truncate_to_relevant(&v, sv(&["x2"]), sv(&["x4"])).unwrap(), sv(&["x2"]));
        assert_eq!(truncate_to_relevant(&v, sv(&["x4"]), sv(&["x1"])).unwrap(), NodeSet::EMPTY);
    }

    #[test]
    fn verma_effect_matches_latent_g_formula() {
        let g = verma();
        let s = StateSpace::binary(&g);
        let (model, p) = canonical_model(&g, &s, 21).unwrap();
        let q = CausalQuery::from_names(&g, &["x2"], &["x4"]).unwrap();
        let got = evaluate_effect(&g, &p, &q).unwrap();
        let want = model.g_formula(q.treatment()).unwrap().marginalize(q.outcome()).unwrap();
        assert!(got.same_function(&want));
        assert!(got.is_normalized());
    }
}
