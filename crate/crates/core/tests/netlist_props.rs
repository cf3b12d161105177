use flowplace::netlist::{hpwl, validate, InstanceKind, Netlist, PinSpec, Placement, Rect};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_design(seed: u64, cells: usize, nets: usize) -> (Netlist<f64>, Placement<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nl = Netlist::new(Rect::new(0.0, 0.0, 50.0, 50.0), 1.0);
    for i in 0..cells {
        nl.add_instance(format!("c{i}"), rng.gen_range(0.5..3.0), 1.0, InstanceKind::StdCell, false);
    }
    let t = nl.add_terminal("io", 0.0, 25.0);
    for k in 0..nets {
        let degree = rng.gen_range(2..6);
        let mut pins: Vec<PinSpec<f64>> = (0..degree)
            .map(|_| {
                let i = rng.gen_range(0..cells);
                let w = nl.instances[i].width;
                PinSpec::at(i, rng.gen_range(-w / 2.0..w / 2.0), rng.gen_range(-0.5..0.5))
            })
            .collect();
        if k == 0 {
            pins.push(PinSpec::center(t));
        }
        nl.add_net(format!("n{k}"), &pins).unwrap();
    }
    let mut pl = Placement::zeros(nl.instances.len());
    for i in 0..cells {
        pl.x[i] = rng.gen_range(0.0..50.0);
        pl.y[i] = rng.gen_range(0.0..50.0);
    }
    pl.x[t] = 0.0;
    pl.y[t] = 25.0;
    (nl, pl)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hpwl_is_translation_invariant(seed in any::<u64>(), c in -1e3f64..1e3) {
        let (nl, pl) = random_design(seed, 30, 20);
        let moved = Placement {
            x: pl.x.iter().map(|v| v + c).collect(),
            y: pl.y.iter().map(|v| v + c).collect(),
        };
        let a = hpwl(&nl, &pl).unwrap();
        let b = hpwl(&nl, &moved).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0) * (1.0 + c.abs()));
    }

    #[test]
    fn hpwl_zero_iff_coincident(seed in any::<u64>()) {
        let (nl, pl) = random_design(seed, 10, 6);
        prop_assert!(hpwl(&nl, &pl).unwrap() > 0.0);
        // zero offsets and a common location collapse every net
        let mut flat = Netlist::new(nl.core, 1.0);
        for inst in &nl.instances {
            flat.add_instance(inst.name.clone(), inst.width, inst.height, inst.kind, false);
        }
        for net in &nl.nets {
            let pins: Vec<PinSpec<f64>> = net.pin_ids.iter().map(|&p| PinSpec::center(nl.pins[p].owner)).collect();
            flat.add_net(net.name.clone(), &pins).unwrap();
        }
        let n = flat.instances.len();
        let same = Placement { x: vec![7.0; n], y: vec![7.0; n] };
        prop_assert_eq!(hpwl(&flat, &same).unwrap(), 0.0);
    }

    #[test]
    fn star_decompose_shape(seed in any::<u64>(), k in 2usize..20) {
        let (mut nl, _) = random_design(seed, 30, 10);
        prop_assert!(validate(&nl).is_empty());
        let (insts, nets) = (nl.instances.len(), nl.nets.len());
        let members: Vec<usize> = (0..k).collect();
        let frag = nl.star_decompose(&members, 2.0).unwrap();
        prop_assert_eq!(nl.instances.len(), insts + 1);
        prop_assert_eq!(frag.center, insts);
        prop_assert_eq!(frag.nets.len(), k);
        prop_assert_eq!(nl.nets.len(), nets + k);
        for &n in &frag.nets {
            prop_assert_eq!(nl.nets[n].degree(), 2);
            prop_assert!(nl.nets[n].is_pseudo);
        }
        prop_assert!(validate(&nl).is_empty());
    }
}
