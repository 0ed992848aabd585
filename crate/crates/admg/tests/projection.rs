use admg::graph::MixedGraph;
use admg::io::parse_graph;
use admg::oracle::{brute_force_projection, random_latent_dag};
use admg::projection::{project, project_in_order, projection_commutes_with_fixing_check};

fn fixture(name: &str) -> MixedGraph {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/");
    parse_graph(&std::fs::read_to_string(format!("{path}{name}")).unwrap()).unwrap()
}

#[test]
fn hidden_dag_projects_to_verma() {
    let d = fixture("hidden_verma.admg");
    let keep = d.vertices().minus(d.latent());
    let g = project(&d, keep).unwrap();
    assert!(g.same_structure(&fixture("verma.admg")));
    assert!(brute_force_projection(&d, keep).unwrap().same_structure(&g));
}

#[test]
fn chain_through_latent_becomes_directed() {
    let d = MixedGraph::builder()
        .random(["a", "u", "b"])
        .latent(["u"])
        .edges(&["a -> u", "u -> b"])
        .build()
        .unwrap();
    let g = project(&d, d.vertices().minus(d.latent())).unwrap();
    assert_eq!(g.directed_edges().len(), 1);
    assert!(!g.has_bidirected());
}

#[test]
fn random_dags_match_brute_force_and_any_order() {
    for seed in 0..40 {
        let d = random_latent_dag(4 + seed as usize % 4, 1 + seed as usize % 3, seed).unwrap();
        let keep = d.vertices().minus(d.latent());
        let g = project(&d, keep).unwrap();
        assert!(g.same_structure(&brute_force_projection(&d, keep).unwrap()), "seed {seed}");
        let mut order: Vec<usize> = d.latent().iter().collect();
        order.reverse();
        assert!(project_in_order(&d, &order).same_structure(&g), "seed {seed}");
    }
}

#[test]
fn projection_commutes_with_fixing() {
    let d = fixture("hidden_verma.admg");
    for v in d.random().minus(d.latent()).iter() {
        assert!(projection_commutes_with_fixing_check(&d, v).unwrap());
    }
}
