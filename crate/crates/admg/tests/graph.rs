use admg::oracle::{random_cadmg, random_latent_dag};
use admg::{Error, MixedGraph, NodeSet};
use proptest::prelude::*;

fn verma() -> MixedGraph {
    MixedGraph::builder()
        .random(["x1", "x2", "x3", "x4"])
        .edges(&["x1 -> x2", "x2 -> x3", "x1 -> x3", "x3 -> x4", "x2 <-> x4"])
        .build()
        .unwrap()
}

#[test]
fn builder_rejects_cycles_and_unknown_names() {
    let cyc = MixedGraph::builder().random(["a", "b", "c"]).edges(&["a -> b", "b -> c", "c -> a"]).build();
    assert!(matches!(cyc, Err(Error::Cycle(_))));
    let unknown = MixedGraph::builder().random(["a"]).edge("a -> z").build();
    assert!(unknown.is_err());
    let into_fixed = MixedGraph::builder().random(["a"]).fixed(["w"]).edge("a -> w").build();
    assert!(into_fixed.is_err());
}

#[test]
fn verma_relations() {
    let g = verma();
    let s = |n: &[&str]| g.set(n).unwrap();
    assert_eq!(g.parents(s(&["x3"])).unwrap(), s(&["x1", "x2"]));
    assert_eq!(g.ancestors(s(&["x3"])).unwrap(), s(&["x1", "x2", "x3"]));
    assert_eq!(g.descendants(s(&["x2"])).unwrap(), s(&["x2", "x3", "x4"]));
    assert_eq!(g.district_of(g.index("x4").unwrap()).unwrap(), s(&["x2", "x4"]));
    let mut ds: Vec<Vec<String>> = g.districts().into_iter().map(|d| g.names_of(d)).collect();
    ds.sort();
    assert_eq!(ds, vec![vec!["x1"], vec!["x2", "x4"], vec!["x3"]]);
    assert!(g.is_ancestral(s(&["x1", "x2"])).unwrap());
    assert!(!g.is_ancestral(s(&["x1", "x3"])).unwrap());
    assert_eq!(g.markov_blanket(g.index("x4").unwrap()).unwrap(), s(&["x1", "x2", "x3"]));
}

#[test]
fn induced_subgraph_keeps_only_inner_edges() {
    let g = verma();
    let h = g.induced_subgraph(g.set(&["x2", "x3", "x4"]).unwrap()).unwrap();
    assert_eq!(h.directed_edges().len(), 2);
    assert_eq!(h.bidirected_edges().len(), 1);
    assert!(h.pa(g.index("x2").unwrap()).is_empty());
}

proptest! {
    #[test]
    fn topological_order_respects_edges(random in 1usize..6, fixed in 0usize..3, seed in any::<u64>()) {
        let g = random_cadmg(random, fixed, seed).unwrap();
        let order = g.topological_order();
        let pos = |v: usize| order.iter().position(|&u| u == v);
        for (a, b) in g.directed_edges() {
            if let (Some(pa), Some(pb)) = (pos(a), pos(b)) {
                prop_assert!(pa < pb);
            }
        }
        for v in g.fixed().iter() {
            prop_assert!(g.pa(v).is_empty() && g.sib(v).is_empty());
        }
    }

    #[test]
    fn ancestors_are_closed(n in 2usize..8, seed in any::<u64>(), mask in any::<u64>()) {
        let g = random_latent_dag(n, 0, seed).unwrap();
        let a = NodeSet(mask).inter(g.vertices());
        let an = g.ancestors(a).unwrap();
        prop_assert!(a.is_subset(an));
        prop_assert_eq!(g.ancestors(an).unwrap(), an);
        prop_assert!(g.is_ancestral(an).unwrap());
        let nd = g.non_descendants(a).unwrap();
        prop_assert!(nd.is_disjoint(g.descendants(a).unwrap()));
    }

    #[test]
    fn districts_partition_random_vertices(random in 1usize..7, fixed in 0usize..3, seed in any::<u64>()) {
        let g = random_cadmg(random, fixed, seed).unwrap();
        let ds = g.districts();
        let mut seen = NodeSet::EMPTY;
        for d in &ds {
            prop_assert!(seen.is_disjoint(*d));
            seen = seen.union(*d);
        }
        prop_assert_eq!(seen, g.random());
    }
}
