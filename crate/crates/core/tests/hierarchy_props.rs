use flowplace::hierarchy::{build_clustered_netlist, cluster_of, extract_hierarchy};
use flowplace::netlist::{InstanceKind, Netlist, PinSpec, Rect};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random hierarchical names up to three levels deep, a few terminals, and
/// random nets over everything.
fn random_tree(seed: u64, cells: usize) -> Netlist<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nl = Netlist::new(Rect::new(0.0, 0.0, 100.0, 100.0), 1.0);
    for i in 0..cells {
        let depth = rng.gen_range(0..4);
        let mut name = String::new();
        for d in 0..depth {
            name.push_str(&format!("m{}_{}/", d, rng.gen_range(0..3)));
        }
        name.push_str(&format!("c{i}"));
        nl.add_instance(name, 1.0, 1.0, InstanceKind::StdCell, false);
    }
    for t in 0..3 {
        nl.add_terminal(format!("io{t}"), 0.0, 10.0 * t as f64);
    }
    let n = nl.instances.len();
    for k in 0..cells {
        let degree = rng.gen_range(2..5);
        let pins: Vec<PinSpec<f64>> = (0..degree).map(|_| PinSpec::center(rng.gen_range(0..n))).collect();
        nl.add_net(format!("n{k}"), &pins).unwrap();
    }
    nl
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn clusters_partition_movables(seed in any::<u64>(), cells in 2usize..400, min in 1usize..20, extra in 0usize..60) {
        let nl = random_tree(seed, cells);
        let max = min + extra;
        let clusters = extract_hierarchy(&nl, min, max).unwrap();
        let total: usize = clusters.iter().map(|c| c.size()).sum();
        prop_assert_eq!(total, nl.movable_count());
        let of = cluster_of(nl.instances.len(), &clusters);
        let mut seen = vec![0usize; nl.instances.len()];
        for c in &clusters {
            prop_assert!(c.size() <= max);
            prop_assert!(c.members.windows(2).all(|w| w[0] < w[1]));
            for &m in &c.members {
                seen[m] += 1;
                prop_assert!(nl.instances[m].is_movable());
            }
        }
        prop_assert!(seen.iter().all(|&s| s <= 1));
        for inst in &nl.instances {
            prop_assert_eq!(of[inst.id].is_some(), inst.is_movable());
        }
    }

    #[test]
    fn clustering_is_deterministic(seed in any::<u64>(), cells in 2usize..300) {
        let nl = random_tree(seed, cells);
        let a = extract_hierarchy(&nl, 3, 25).unwrap();
        let b = extract_hierarchy(&nl, 3, 25).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bundled_weight_counts_spanning_nets(seed in any::<u64>(), cells in 4usize..300) {
        let nl = random_tree(seed, cells);
        let clusters = extract_hierarchy(&nl, 2, 20).unwrap();
        let of = cluster_of(nl.instances.len(), &clusters);
        let spanning = nl
            .nets
            .iter()
            .filter(|net| {
                let mut ends: Vec<(bool, usize)> = net
                    .pin_ids
                    .iter()
                    .map(|&p| {
                        let o = nl.pins[p].owner;
                        of[o].map_or((true, o), |c| (false, c))
                    })
                    .collect();
                ends.sort_unstable();
                ends.dedup();
                ends.len() >= 2
            })
            .count();
        let cnl = build_clustered_netlist(&nl, clusters).unwrap();
        let weight: f64 = cnl.bundled_nets.iter().map(|b| b.weight).sum();
        prop_assert_eq!(weight, spanning as f64);
        prop_assert!(cnl.bundled_nets.iter().all(|b| b.endpoints.len() >= 2 && !b.is_virtual));
    }
}
