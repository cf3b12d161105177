use flowplace::bench::{generate_with_truth, AcceleratorSpec};
use flowplace::datapath::{build_datapath_pseudonets, extract_alignment_groups};
use flowplace::hierarchy::{cluster_of, extract_hierarchy};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pseudo_nets_stay_inside_one_cluster(m in 1usize..4, n in 1usize..4, bw in 2usize..8, max in 5usize..200) {
        let spec = AcceleratorSpec { bitwidth: bw, cells_per_bit: 3, ..AcceleratorSpec::new(m, n) };
        let (mut nl, _) = generate_with_truth::<f64>(&spec).unwrap();
        let clusters = extract_hierarchy(&nl, 1, max).unwrap();
        let of = cluster_of(nl.instances.len(), &clusters);
        let groups = extract_alignment_groups(&nl, &clusters);
        let frags = build_datapath_pseudonets(&mut nl, &groups, 1.0).unwrap();
        for (g, f) in groups.iter().zip(&frags) {
            prop_assert!(g.members.iter().all(|&i| of[i] == Some(g.cluster)));
            for &net in &f.nets {
                // every arm joins a member of this group to the star center
                let owners: Vec<usize> = nl.nets[net].pin_ids.iter().map(|&p| nl.pins[p].owner).collect();
                prop_assert!(owners.contains(&f.center));
                prop_assert!(owners.iter().filter(|&&o| o != f.center).all(|&o| of[o] == Some(g.cluster)));
            }
        }
    }

    #[test]
    fn extraction_is_idempotent(m in 1usize..4, n in 1usize..4, bw in 1usize..8) {
        let spec = AcceleratorSpec { bitwidth: bw, cells_per_bit: 3, ..AcceleratorSpec::new(m, n) };
        let (mut nl, _) = generate_with_truth::<f64>(&spec).unwrap();
        let clusters = extract_hierarchy(&nl, 1, 64).unwrap();
        let first = extract_alignment_groups(&nl, &clusters);
        prop_assert_eq!(&first, &extract_alignment_groups(&nl, &clusters));
        // the star centers added here join no cluster and form no group
        build_datapath_pseudonets(&mut nl, &first, 1.0).unwrap();
        prop_assert_eq!(&first, &extract_alignment_groups(&nl, &clusters));
    }
}
