//! Synthetic systolic-array netlist generator.
//!
//! Builds an `M x N` grid of processing elements (row `i` is processing unit
//! `pu<i>`), each holding one register bank of `bitwidth` flops and
//! `cells_per_bit` combinational cells per bit slice:
//!
//! ```text
//!   ibuf --> m0 -> m1 -> ... -> m{k-1} -> r --h--> m0 of PE(i, j+1)
//!            |                              \
//!            +--> m0[b+1] (carry)            +--v--> m0 of PE(i+1, j)  (or obuf)
//! ```
//!
//! The PE topology is fixed by construction; the seed only perturbs the
//! control glue (`ctrl/g<k>`) hanging off the array.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PlaceError, Result};
use crate::netlist::{InstanceKind, Netlist, PinSpec, Rect};
use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct AcceleratorSpec {
    pub pu_rows: usize,
    pub pes_per_pu: usize,
    pub bitwidth: usize,
    pub cells_per_bit: usize,
    /// Macros per input buffer and per output buffer.
    pub buffer_macros: usize,
    /// Control glue cells per PE.
    pub glue_per_pe: usize,
    /// Movable area over core area.
    pub target_density: f64,
    /// Macro area over core area.
    pub macro_util: f64,
    pub seed: u64,
}

impl Default for AcceleratorSpec {
    fn default() -> Self {
        AcceleratorSpec {
            pu_rows: 4,
            pes_per_pu: 8,
            bitwidth: 16,
            cells_per_bit: 20,
            buffer_macros: 4,
            glue_per_pe: 4,
            target_density: 0.7,
            macro_util: 0.5,
            seed: 1,
        }
    }
}

impl AcceleratorSpec {
    pub fn new(pu_rows: usize, pes_per_pu: usize) -> Self {
        AcceleratorSpec {
            pu_rows,
            pes_per_pu,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pu_rows", self.pu_rows),
            ("pes_per_pu", self.pes_per_pu),
            ("bitwidth", self.bitwidth),
            ("cells_per_bit", self.cells_per_bit),
        ];
        for (name, v) in positive {
            if v < 1 {
                return Err(PlaceError::Parameter(format!("{name} must be >= 1")));
            }
        }
        if !(self.target_density > 0.0 && self.target_density <= 1.0) {
            return Err(PlaceError::Parameter(
                "target_density must lie in (0, 1]".into(),
            ));
        }
        let mu = if self.buffer_macros == 0 { 0.0 } else { self.macro_util };
        if !(mu >= 0.0 && mu < self.target_density) {
            return Err(PlaceError::Parameter(
                "macro_util must lie in [0, target_density)".into(),
            ));
        }
        Ok(())
    }

    pub fn register_count(&self) -> usize {
        self.pu_rows * self.pes_per_pu * self.bitwidth
    }
}

/// What the generator built, recorded during construction rather than
/// parsed back from names. Used as the oracle for clustering and datapath
/// extraction.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    /// `(pu, pe)` per instance, `None` outside the PE array.
    pub pe_of: Vec<Option<(usize, usize)>>,
    /// Top-level block per instance (`pu<i>`, `ibuf`, `obuf`, `ctrl`), `None`
    /// for terminals.
    pub block_of: Vec<Option<String>>,
    /// Every bit slice group (same PE, same cell role), members in bit order.
    pub bit_slices: Vec<Vec<usize>>,
    /// Register bank of each PE, row-major.
    pub registers: Vec<Vec<usize>>,
}

const ROW_HEIGHT: f64 = 1.0;
const REG_WIDTH: f64 = 3.0;
const GLUE_WIDTH: f64 = 1.5;

fn comb_width(c: usize) -> f64 {
    1.0 + 0.5 * (c % 3) as f64
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

pub fn generate<T: Scalar>(spec: &AcceleratorSpec) -> Result<Netlist<T>> {
    generate_with_truth(spec).map(|(n, _)| n)
}

pub fn generate_with_truth<T: Scalar>(spec: &AcceleratorSpec) -> Result<(Netlist<T>, GroundTruth)> {
    spec.validate()?;
    let (m, n, bw, k, bm) = (
        spec.pu_rows,
        spec.pes_per_pu,
        spec.bitwidth,
        spec.cells_per_bit,
        spec.buffer_macros,
    );
    let glue = m * n * spec.glue_per_pe;

    let comb_row: f64 = (0..k).map(comb_width).sum();
    let cell_area = ROW_HEIGHT
        * ((m * n * bw) as f64 * (REG_WIDTH + comb_row) + glue as f64 * GLUE_WIDTH);
    let mu = if bm == 0 { 0.0 } else { spec.macro_util };
    let side = (cell_area / (spec.target_density - mu)).sqrt().ceil();
    let core_area = side * side;
    let macro_side = if bm == 0 {
        0.0
    } else {
        round4((mu * core_area / (2 * bm) as f64).sqrt())
    };

    let t = T::of;
    let mut nl = Netlist::new(Rect::new(T::zero(), T::zero(), t(side), t(side)), t(ROW_HEIGHT));
    let mut truth = GroundTruth::default();
    let tag = |truth: &mut GroundTruth, pe: Option<(usize, usize)>, block: Option<String>| {
        truth.pe_of.push(pe);
        truth.block_of.push(block);
    };

    let mut ibuf = Vec::with_capacity(bm);
    let mut obuf = Vec::with_capacity(bm);
    for (list, prefix) in [(&mut ibuf, "ibuf"), (&mut obuf, "obuf")] {
        for q in 0..bm {
            let id = nl.add_instance(
                format!("{prefix}/mem{q}"),
                t(macro_side),
                t(macro_side),
                InstanceKind::Macro,
                true,
            );
            tag(&mut truth, None, Some(prefix.to_string()));
            list.push(id);
        }
    }

    // regs[i][j][b], comb[i][j][c][b]
    let mut regs = vec![vec![Vec::with_capacity(bw); n]; m];
    let mut comb = vec![vec![vec![Vec::with_capacity(bw); k]; n]; m];
    for i in 0..m {
        for j in 0..n {
            for b in 0..bw {
                let id = nl.add_instance(
                    format!("pu{i}/pe{j}/r[{b}]"),
                    t(REG_WIDTH),
                    t(ROW_HEIGHT),
                    InstanceKind::StdCell,
                    true,
                );
                tag(&mut truth, Some((i, j)), Some(format!("pu{i}")));
                regs[i][j].push(id);
            }
            for c in 0..k {
                for b in 0..bw {
                    let id = nl.add_instance(
                        format!("pu{i}/pe{j}/m{c}[{b}]"),
                        t(comb_width(c)),
                        t(ROW_HEIGHT),
                        InstanceKind::StdCell,
                        false,
                    );
                    tag(&mut truth, Some((i, j)), Some(format!("pu{i}")));
                    comb[i][j][c].push(id);
                }
            }
            truth.registers.push(regs[i][j].clone());
            if bw >= 2 {
                truth.bit_slices.push(regs[i][j].clone());
                for c in 0..k {
                    truth.bit_slices.push(comb[i][j][c].clone());
                }
            }
        }
    }

    let glue_ids: Vec<usize> = (0..glue)
        .map(|g| {
            let id = nl.add_instance(
                format!("ctrl/g{g}"),
                t(GLUE_WIDTH),
                t(ROW_HEIGHT),
                InstanceKind::StdCell,
                false,
            );
            tag(&mut truth, None, Some("ctrl".to_string()));
            id
        })
        .collect();

    // IO terminals on the core boundary: inputs left, outputs right, control bottom.
    let n_in = if bm == 0 { m } else { bm };
    let n_out = if bm == 0 { n } else { bm };
    let edge = |q: usize, count: usize| round4(side * (q as f64 + 0.5) / count as f64);
    let io_in: Vec<usize> = (0..n_in)
        .map(|q| {
            let id = nl.add_terminal(format!("io_in{q}"), T::zero(), t(edge(q, n_in)));
            tag(&mut truth, None, None);
            id
        })
        .collect();
    let io_out: Vec<usize> = (0..n_out)
        .map(|q| {
            let id = nl.add_terminal(format!("io_out{q}"), t(side), t(edge(q, n_out)));
            tag(&mut truth, None, None);
            id
        })
        .collect();
    let io_ctrl = if glue > 0 {
        let id = nl.add_terminal("io_ctrl", t(round4(side / 2.0)), T::zero());
        tag(&mut truth, None, None);
        Some(id)
    } else {
        None
    };

    let out_pin = |w: f64| (0.4 * w, 0.0);
    let in_pin = |w: f64| (-0.4 * w, 0.0);
    let pin = |inst: usize, (ox, oy): (f64, f64)| PinSpec::at(inst, t(ox), t(oy));
    let reg_out = t(out_pin(REG_WIDTH).0);
    let reg_in = t(in_pin(REG_WIDTH).0);
    let rp = |inst: usize, x: T| PinSpec::at(inst, x, T::zero());

    // Macro pin offsets spread along the facing edge.
    let macro_pin = |inst: usize, idx: usize, count: usize, right: bool| {
        let h = macro_side;
        let oy = h * (-0.45 + 0.9 * (idx as f64 + 0.5) / count.max(1) as f64);
        let ox = if right { 0.45 * h } else { -0.45 * h };
        PinSpec::at(inst, t(ox), t(oy))
    };

    // Input feeds: buffer (or terminal) -> m0[b] of PE(i, 0).
    for q in 0..n_in {
        if bm > 0 {
            nl.add_net(
                format!("io_in{q}"),
                &[PinSpec::center(io_in[q]), macro_pin(ibuf[q], 0, 1, false)],
            )?;
        }
        let rows: Vec<usize> = (0..m).filter(|i| i % n_in == q).collect();
        let count = rows.len() * bw;
        for (ri, &i) in rows.iter().enumerate() {
            for b in 0..bw {
                let driver = if bm > 0 {
                    macro_pin(ibuf[q], ri * bw + b, count, true)
                } else {
                    PinSpec::center(io_in[q])
                };
                let sink = pin(comb[i][0][0][b], in_pin(comb_width(0)));
                nl.add_net(format!("feed{q}_r{i}[{b}]"), &[driver, sink])?;
            }
        }
    }

    let out_count = |q: usize| (0..n).filter(|j| j % n_out == q).count() * bw;
    let mut out_idx = vec![0usize; n_out];
    for i in 0..m {
        for j in 0..n {
            for b in 0..bw {
                // bit-slice chain with a carry into the next bit at stage 0
                for c in 0..k {
                    let src = comb[i][j][c][b];
                    let mut pins = vec![pin(src, out_pin(comb_width(c)))];
                    if c + 1 < k {
                        pins.push(pin(comb[i][j][c + 1][b], in_pin(comb_width(c + 1))));
                    } else {
                        pins.push(rp(regs[i][j][b], reg_in));
                    }
                    if c == 0 && b + 1 < bw {
                        pins.push(pin(comb[i][j][0][b + 1], in_pin(comb_width(0))));
                    }
                    nl.add_net(format!("pu{i}/pe{j}/m{c}_o[{b}]"), &pins)?;
                }
                let r = regs[i][j][b];
                if j + 1 < n {
                    nl.add_net(
                        format!("pu{i}/pe{j}/h[{b}]"),
                        &[rp(r, reg_out), pin(comb[i][j + 1][0][b], in_pin(comb_width(0)))],
                    )?;
                }
                let sink = if i + 1 < m {
                    pin(comb[i + 1][j][0][b], in_pin(comb_width(0)))
                } else {
                    let q = j % n_out;
                    if bm > 0 {
                        let s = macro_pin(obuf[q], out_idx[q], out_count(q), false);
                        out_idx[q] += 1;
                        s
                    } else {
                        PinSpec::center(io_out[q])
                    }
                };
                nl.add_net(format!("pu{i}/pe{j}/v[{b}]"), &[rp(r, reg_out), sink])?;
            }
        }
    }
    if bm > 0 {
        for q in 0..n_out {
            nl.add_net(
                format!("io_out{q}"),
                &[macro_pin(obuf[q], 0, 1, true), PinSpec::center(io_out[q])],
            )?;
        }
    }

    // Control glue: forward-only random fanout keeps it acyclic.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gp_out = out_pin(GLUE_WIDTH);
    let gp_in = in_pin(GLUE_WIDTH);
    if let Some(io) = io_ctrl {
        nl.add_net("io_ctrl", &[PinSpec::center(io), pin(glue_ids[0], gp_in)])?;
    }
    for g in 0..glue {
        let mut pins = vec![pin(glue_ids[g], gp_out)];
        let mut sinks: Vec<usize> = Vec::new();
        if g + 1 < glue {
            let fan = rng.gen_range(1..=2usize);
            for _ in 0..fan {
                let s = rng.gen_range(g + 1..glue);
                if !sinks.contains(&s) {
                    sinks.push(s);
                }
            }
        }
        for &s in &sinks {
            pins.push(pin(glue_ids[s], gp_in));
        }
        if sinks.is_empty() || rng.gen_bool(0.5) {
            let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..n));
            let (c, b) = (rng.gen_range(0..k), rng.gen_range(0..bw));
            pins.push(pin(comb[i][j][c][b], in_pin(comb_width(c))));
        }
        nl.add_net(format!("ctrl/g{g}_o"), &pins)?;
    }

    Ok((nl, truth))
}

/// `pu<i>/pe<j>` prefix of an array instance name.
pub fn pe_prefix(name: &str) -> Option<&str> {
    let mut parts = name.splitn(3, '/');
    let pu = parts.next()?;
    let pe = parts.next()?;
    parts.next()?;
    if pu.starts_with("pu") && pe.starts_with("pe") {
        Some(&name[..pu.len() + 1 + pe.len()])
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::validate;

    fn tiny() -> AcceleratorSpec {
        AcceleratorSpec {
            pu_rows: 1,
            pes_per_pu: 1,
            bitwidth: 1,
            cells_per_bit: 1,
            ..Default::default()
        }
    }

    #[test]
    fn minimal_array() {
        let nl: Netlist<f64> = generate(&tiny()).unwrap();
        let regs = nl
            .instances
            .iter()
            .filter(|i| i.is_sequential && i.kind == InstanceKind::StdCell)
            .count();
        let comb = nl
            .instances
            .iter()
            .filter(|i| i.name.starts_with("pu") && !i.is_sequential)
            .count();
        assert_eq!((regs, comb), (1, 1));
        assert_eq!(
            nl.instances
                .iter()
                .filter(|i| i.kind == InstanceKind::Macro)
                .count(),
            8
        );
        assert!(validate(&nl).is_empty(), "{:?}", validate(&nl));
    }

    #[test]
    fn four_by_eight_prefixes() {
        let nl: Netlist<f64> = generate(&AcceleratorSpec::new(4, 8)).unwrap();
        let mut pes: Vec<&str> = nl.instances.iter().filter_map(|i| pe_prefix(&i.name)).collect();
        pes.sort();
        pes.dedup();
        assert_eq!(pes.len(), 32);
        for i in 0..4 {
            assert!(pes.iter().any(|p| p.starts_with(&format!("pu{i}/"))));
        }
        assert!(!pes.iter().any(|p| p.starts_with("pu4/")));
    }

    #[test]
    fn bad_spec_rejected() {
        let spec = AcceleratorSpec::new(0, 8);
        assert!(matches!(
            generate::<f64>(&spec),
            Err(PlaceError::Parameter(msg)) if msg.contains("pu_rows")
        ));
        let spec = AcceleratorSpec {
            macro_util: 0.9,
            ..Default::default()
        };
        assert!(generate::<f64>(&spec).is_err());
    }

    #[test]
    fn nets_have_two_or_more_pins() {
        let spec = AcceleratorSpec {
            bitwidth: 4,
            cells_per_bit: 3,
            ..AcceleratorSpec::new(3, 3)
        };
        let nl: Netlist<f64> = generate(&spec).unwrap();
        assert!(nl.nets.iter().all(|n| n.degree() >= 2));
    }

    #[test]
    fn macro_utilization_near_half() {
        let nl: Netlist<f64> = generate(&AcceleratorSpec::default()).unwrap();
        let macro_area: f64 = nl
            .instances
            .iter()
            .filter(|i| i.kind == InstanceKind::Macro)
            .map(|i| i.area())
            .sum();
        let util = macro_area / nl.core.area();
        assert!((util - 0.5).abs() < 0.02, "{util}");
        let density = nl.movable_area() / nl.core.area();
        assert!((density - 0.7).abs() < 0.02, "{density}");
    }

    #[test]
    fn prefix_parse() {
        assert_eq!(pe_prefix("pu3/pe12/m0[4]"), Some("pu3/pe12"));
        assert_eq!(pe_prefix("ctrl/g1"), None);
        assert_eq!(pe_prefix("pu3/pe12"), None);
    }
}
