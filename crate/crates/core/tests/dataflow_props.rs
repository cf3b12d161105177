use flowplace::bench::{generate_with_truth, AcceleratorSpec};
use flowplace::dataflow::register_hop_bfs;
use flowplace::hierarchy::extract_hierarchy;
use proptest::prelude::*;

fn pu_clusters(spec: &AcceleratorSpec) -> (Vec<Option<usize>>, Vec<flowplace::dataflow::DataflowEdge<f64>>) {
    let (nl, truth) = generate_with_truth::<f64>(spec).unwrap();
    let pu_size = truth.pe_of.iter().filter(|p| p.is_some()).count() / spec.pu_rows;
    let clusters = extract_hierarchy(&nl, 1, pu_size).unwrap();
    // PU row of each cluster, None for buffers and control
    let row: Vec<Option<usize>> = clusters
        .iter()
        .map(|c| {
            let rows: Vec<Option<usize>> = c.members.iter().map(|&m| truth.pe_of[m].map(|p| p.0)).collect();
            assert!(rows.windows(2).all(|w| w[0] == w[1]), "cluster {} mixes rows", c.label);
            rows[0]
        })
        .collect();
    let edges = register_hop_bfs(&nl, &clusters, 4);
    (row, edges)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weight_never_exceeds_info(m in 1usize..5, n in 1usize..5, bw in 1usize..6) {
        let spec = AcceleratorSpec { bitwidth: bw, cells_per_bit: 3, ..AcceleratorSpec::new(m, n) };
        let (nl, _) = generate_with_truth::<f64>(&spec).unwrap();
        let clusters = extract_hierarchy(&nl, 1, 3 * bw + bw).unwrap();
        for e in register_hop_bfs(&nl, &clusters, 4) {
            prop_assert!(e.num_hops >= 1 && e.num_hops <= 4);
            prop_assert!(e.virtual_weight <= e.info_flow);
            prop_assert!(e.info_flow >= 1.0);
            prop_assert!(e.src_cluster != e.dst_cluster);
        }
    }

    #[test]
    fn edges_are_deterministic(m in 1usize..4, n in 1usize..4) {
        let spec = AcceleratorSpec { bitwidth: 4, cells_per_bit: 3, ..AcceleratorSpec::new(m, n) };
        let (nl, _) = generate_with_truth::<f64>(&spec).unwrap();
        let clusters = extract_hierarchy(&nl, 1, 16).unwrap();
        prop_assert_eq!(register_hop_bfs(&nl, &clusters, 4), register_hop_bfs(&nl, &clusters, 4));
    }
}

#[test]
fn pu_rows_form_a_forward_chain() {
    for m in 2..=6 {
        let spec = AcceleratorSpec { bitwidth: 4, cells_per_bit: 3, ..AcceleratorSpec::new(m, 3) };
        let (row, edges) = pu_clusters(&spec);
        let pu_edges: Vec<(usize, usize, u32)> = edges
            .iter()
            .filter_map(|e| Some((row[e.src_cluster]?, row[e.dst_cluster]?, e.num_hops)))
            .collect();
        for &(a, b, _) in &pu_edges {
            assert!(b > a, "backward edge pu{a} -> pu{b}");
        }
        for i in 0..m - 1 {
            assert!(pu_edges.iter().any(|&(a, b, _)| a == i && b == i + 1), "missing pu{i} -> pu{}", i + 1);
        }
        for &(a, b, h) in &pu_edges {
            for &(c, d, k) in &pu_edges {
                if a == c && d > b {
                    assert!(k > h, "pu{a}: farther row pu{d} not more hops");
                }
            }
        }
    }
}
