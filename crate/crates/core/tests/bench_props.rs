use flowplace::bench::{generate_with_truth, AcceleratorSpec};
use flowplace::netlist::{validate, InstanceKind};

#[test]
fn sweep_generates_valid_designs() {
    for m in 1..=8 {
        for n in 1..=8 {
            for bw in 1..=8 {
                let spec = AcceleratorSpec {
                    bitwidth: bw,
                    cells_per_bit: 2,
                    ..AcceleratorSpec::new(m, n)
                };
                let (nl, truth) = generate_with_truth::<f64>(&spec).unwrap();
                let report = validate(&nl);
                assert!(report.is_empty(), "{m}x{n} bw{bw}: {report:?}");
                let regs = nl
                    .instances
                    .iter()
                    .filter(|i| i.is_sequential && i.kind == InstanceKind::StdCell)
                    .count();
                assert_eq!(regs, m * n * bw, "{m}x{n} bw{bw}");
                assert_eq!(truth.registers.iter().map(Vec::len).sum::<usize>(), m * n * bw);
                assert!(nl.nets.iter().all(|net| net.degree() >= 2));
            }
        }
    }
}

#[test]
fn same_spec_same_netlist() {
    let spec = AcceleratorSpec::new(2, 3);
    let (a, _) = generate_with_truth::<f64>(&spec).unwrap();
    let (b, _) = generate_with_truth::<f64>(&spec).unwrap();
    assert_eq!(a.instances.len(), b.instances.len());
    assert!(a.instances.iter().zip(&b.instances).all(|(p, q)| p.name == q.name && p.width == q.width));
    assert!(a.nets.iter().zip(&b.nets).all(|(p, q)| p.name == q.name && p.pin_ids == q.pin_ids));
}
