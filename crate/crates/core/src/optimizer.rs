//! Nesterov placement engine and the clustered placement flow.
//!
//! The objective is `sum_e w_e WA_e + lambda * D`. Each iteration evaluates
//! the preconditioned gradient at the reference point, takes a step sized by
//! a local Lipschitz estimate (with backtracking), and advances the momentum
//! sequence. `lambda` follows the overflow, `gamma` shrinks with it.
//!
//! [`dg_place`] runs the whole flow: hierarchy extraction, cluster placement
//! with dataflow virtual connections, then flat placement seeded at cluster
//! centers under decaying cluster pseudo nets and datapath pseudo nets.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataflow::{inject_virtual_connections, register_hop_bfs, DEFAULT_HOP_LIMIT};
use crate::datapath::{build_datapath_pseudonets, extract_alignment_groups};
use crate::density::BinGrid;
use crate::error::{PlaceError, Result};
use crate::hierarchy::{build_clustered_netlist, extract_hierarchy, Cluster, ClusterNode, ClusteredNetlist};
use crate::netlist::{hpwl, InstanceKind, Netlist, PinSpec, Placement, Rect};
use crate::num::Scalar;
use crate::wirelength::{wa_gradient_parallel_with, WaParams, WaWorkspace};

#[derive(Debug, Clone, PartialEq)]
pub struct PlacerConfig {
    pub stop_overflow: f64,
    pub cluster_target_overflow: f64,
    pub iter0: f64,
    pub max_iterations: usize,
    pub ignore_net_degree: usize,
    pub target_density: f64,
    pub seed: u64,
    /// Iterations per unit of penalty decay: the cluster penalty is
    /// `exp(iter0 - k / penalty_divisor)`.
    pub penalty_divisor: f64,
    /// Decay datapath penalties like cluster ones (from a base of 1)
    /// instead of holding them at 1.
    pub datapath_decay: bool,
    pub hop_limit: u32,
    /// Cluster size bounds; `None` scales with the design size.
    pub cluster_min: Option<usize>,
    pub cluster_max: Option<usize>,
}

impl Default for PlacerConfig {
    fn default() -> Self {
        PlacerConfig {
            stop_overflow: 0.1,
            cluster_target_overflow: 0.2,
            iter0: 4.0,
            max_iterations: 5000,
            ignore_net_degree: 1_000_000_000,
            target_density: 0.7,
            seed: 1,
            penalty_divisor: 1.0,
            datapath_decay: false,
            hop_limit: DEFAULT_HOP_LIMIT,
            cluster_min: None,
            cluster_max: None,
        }
    }
}

impl PlacerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(PlaceError::Parameter(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        unit("stop_overflow", self.stop_overflow)?;
        unit("cluster_target_overflow", self.cluster_target_overflow)?;
        unit("target_density", self.target_density)?;
        if !(self.iter0.is_finite() && self.iter0 >= 0.0) {
            return Err(PlaceError::Parameter("iter0 must be a nonnegative number".into()));
        }
        if !(self.penalty_divisor > 0.0) {
            return Err(PlaceError::Parameter("penalty_divisor must be positive".into()));
        }
        if self.ignore_net_degree < 2 {
            return Err(PlaceError::Parameter("ignore_net_degree must be at least 2".into()));
        }
        if let (Some(lo), Some(hi)) = (self.cluster_min, self.cluster_max) {
            if lo < 1 || lo > hi {
                return Err(PlaceError::Parameter("cluster bounds need 1 <= min <= max".into()));
            }
        }
        Ok(())
    }

    /// Cluster size bounds for a design with `movables` instances: 200 and
    /// 4000 at 100K instances, scaled linearly, never below 10.
    pub fn cluster_bounds(&self, movables: usize) -> (usize, usize) {
        let scale = |full: f64| ((full * movables as f64 / 100_000.0).round() as usize).max(10);
        let max = self.cluster_max.unwrap_or_else(|| scale(4000.0));
        let min = self.cluster_min.unwrap_or_else(|| scale(200.0)).min(max);
        (min, max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PseudoKind {
    Cluster,
    Datapath,
}

/// Penalty factor of a pseudo net at flat iteration `k`.
pub fn penalty_at(kind: PseudoKind, k: usize, cfg: &PlacerConfig) -> f64 {
    let t = k as f64 / cfg.penalty_divisor;
    match kind {
        PseudoKind::Cluster => (cfg.iter0 - t).exp(),
        PseudoKind::Datapath if cfg.datapath_decay => (-t).exp(),
        PseudoKind::Datapath => 1.0,
    }
}

/// Pseudo nets (by net id) with their schedule kind.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PseudoNetSet {
    pub nets: Vec<(usize, PseudoKind)>,
}

impl PseudoNetSet {
    pub fn push_all(&mut self, nets: &[usize], kind: PseudoKind) {
        self.nets.extend(nets.iter().map(|&n| (n, kind)));
    }

    pub fn len(&self) -> usize {
        self.nets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nets.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub overflow: f64,
    pub hpwl: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub penalty_cluster: f64,
    /// Momentum scalar `a_k`.
    pub momentum: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct PlaceOutcome<T> {
    pub placement: Placement<T>,
    pub trace: Vec<TraceRow>,
    pub status: Status,
}

impl<T> PlaceOutcome<T> {
    pub fn final_overflow(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.overflow)
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = String::from("iter,overflow,hpwl,lambda,gamma,penalty_cluster\n");
    for r in trace {
        let _ = writeln!(
            s,
            "{},{:.6},{:.4},{:.6e},{:.6e},{:.6e}",
            r.iter, r.overflow, r.hpwl, r.lambda, r.gamma, r.penalty_cluster
        );
    }
    s
}

pub fn write_trace(trace: &[TraceRow], path: &Path) -> Result<()> {
    std::fs::write(path, trace_csv(trace)).map_err(|e| PlaceError::io(path, e))
}

/// `gamma = 8 * bin_w * 10^((overflow - 0.1) * 20/9 - 1)`, clamped to
/// `[0.8, 80] * bin_w`.
pub fn gamma_for(overflow: f64, bin_w: f64) -> f64 {
    let g = 8.0 * bin_w * 10f64.powf((overflow - 0.1) * (2.0 / 0.9) - 1.0);
    g.clamp(0.8 * bin_w, 80.0 * bin_w)
}

/// Multiplier applied to `lambda` after an iteration at `overflow`.
pub fn lambda_factor(overflow: f64, stop_overflow: f64) -> f64 {
    1.1f64.powf(1.0 - 2.0 * (overflow - stop_overflow)).clamp(0.95, 1.1)
}

/// `(1 + sqrt(4a^2 + 1)) / 2`.
pub fn next_momentum(a: f64) -> f64 {
    (1.0 + (4.0 * a * a + 1.0).sqrt()) / 2.0
}

/// Consecutive iterations above this overflow without improvement before
/// the run is declared divergent.
const DIVERGE_OVERFLOW: f64 = 0.95;
const DIVERGE_WINDOW: usize = 100;
const MAX_BACKTRACKS: usize = 10;

/// Objective evaluation state shared across iterations.
struct Objective<'a, T: Scalar> {
    netlist: &'a Netlist<T>,
    grid: BinGrid<T>,
    ws: WaWorkspace<T>,
    weights: Vec<T>,
    kinds: Vec<Option<PseudoKind>>,
    moves: Vec<bool>,
    charge: Vec<T>,
    pin_weight: Vec<T>,
    ignore: usize,
}

struct Eval<T> {
    gx: Vec<T>,
    gy: Vec<T>,
    wl_l1: T,
    density_l1: T,
    overflow: T,
}

impl<'a, T: Scalar> Objective<'a, T> {
    fn new(
        netlist: &'a Netlist<T>,
        pseudo: &PseudoNetSet,
        target_density: T,
        ignore: usize,
    ) -> Result<Self> {
        let grid = BinGrid::for_netlist(netlist, target_density)?;
        let mut kinds = vec![None; netlist.nets.len()];
        for &(n, kind) in &pseudo.nets {
            if n >= netlist.nets.len() {
                return Err(PlaceError::Constraint(format!("pseudo net {n} does not exist")));
            }
            kinds[n] = Some(kind);
        }
        let moves = netlist.instances.iter().map(|i| i.is_movable()).collect();
        let charge = netlist.instances.iter().map(|i| grid.charge(i)).collect();
        Ok(Objective {
            netlist,
            ws: WaWorkspace::new(netlist),
            weights: netlist.nets.iter().map(|n| n.weight).collect(),
            kinds,
            moves,
            charge,
            pin_weight: vec![T::zero(); netlist.instances.len()],
            grid,
            ignore,
        })
    }

    fn set_iteration(&mut self, k: usize, cfg: &PlacerConfig) {
        let pc = T::of(penalty_at(PseudoKind::Cluster, k, cfg));
        let pd = T::of(penalty_at(PseudoKind::Datapath, k, cfg));
        for (w, (net, kind)) in self
            .weights
            .iter_mut()
            .zip(self.netlist.nets.iter().zip(&self.kinds))
        {
            *w = match kind {
                Some(PseudoKind::Cluster) => net.weight * pc,
                Some(PseudoKind::Datapath) => net.weight * pd,
                None => net.weight,
            };
        }
        let nl = self.netlist;
        let ignore = self.ignore;
        let weights = &self.weights;
        self.pin_weight
            .par_iter_mut()
            .zip(nl.instances.par_iter())
            .for_each(|(h, inst)| {
                *h = inst
                    .pin_ids
                    .iter()
                    .map(|&p| nl.pins[p].net)
                    .filter(|&n| {
                        let d = nl.nets[n].degree();
                        d >= 2 && d <= ignore
                    })
                    .fold(T::zero(), |a, n| a + weights[n]);
            });
    }

    fn evaluate(&mut self, pl: &Placement<T>, lambda: T, gamma: T) -> Result<Eval<T>> {
        self.grid.deposit(self.netlist, pl)?;
        self.grid.solve_potential();
        let overflow = self.grid.overflow();
        let fd = self.grid.density_force(self.netlist, pl)?;
        let params = WaParams::new(gamma)
            .ignore_above(self.ignore)
            .with_weights(&self.weights);
        let fw = wa_gradient_parallel_with(self.netlist, pl, &params, &mut self.ws)?;
        let n = self.netlist.instances.len();
        let mut gx = vec![T::zero(); n];
        let mut gy = vec![T::zero(); n];
        let (moves, charge, pw) = (&self.moves, &self.charge, &self.pin_weight);
        gx.par_iter_mut()
            .zip(gy.par_iter_mut())
            .enumerate()
            .for_each(|(i, (x, y))| {
                if !moves[i] {
                    return;
                }
                let mut h = pw[i] + lambda * charge[i];
                if h == T::zero() {
                    h = T::one();
                }
                *x = -(fw.x[i] + lambda * fd.x[i]) / h;
                *y = -(fw.y[i] + lambda * fd.y[i]) / h;
            });
        let l1 = |a: &[T], b: &[T]| {
            a.iter()
                .zip(b)
                .zip(moves)
                .filter(|(_, &m)| m)
                .fold(T::zero(), |s, ((x, y), _)| s + x.abs() + y.abs())
        };
        Ok(Eval {
            wl_l1: l1(&fw.x, &fw.y),
            density_l1: l1(&fd.x, &fd.y),
            gx,
            gy,
            overflow,
        })
    }
}

/// Keeps every movable footprint inside `core`; terminals keep their spot.
fn clamp_into<T: Scalar>(netlist: &Netlist<T>, core: &Rect<T>, pl: &mut Placement<T>) {
    let half = T::of(0.5);
    let fit = |c: T, size: T, lo: T, hi: T| {
        if size >= hi - lo {
            (lo + hi) * half
        } else {
            c.max(lo + size * half).min(hi - size * half)
        }
    };
    for inst in &netlist.instances {
        let i = inst.id;
        if let Some((x, y)) = inst.fixed_location {
            pl.x[i] = x;
            pl.y[i] = y;
        } else {
            pl.x[i] = fit(pl.x[i], inst.width, core.lx, core.ux);
            pl.y[i] = fit(pl.y[i], inst.height, core.ly, core.uy);
        }
    }
}

fn dist2<T: Scalar>(ax: &[T], ay: &[T], bx: &[T], by: &[T]) -> T {
    ax.iter()
        .zip(ay)
        .zip(bx.iter().zip(by))
        .fold(T::zero(), |s, ((&a, &b), (&c, &d))| {
            s + (a - c) * (a - c) + (b - d) * (b - d)
        })
}

/// Runs Nesterov placement to `cfg.stop_overflow` at `cfg.target_density`.
pub fn nesterov_place<T: Scalar>(
    netlist: &Netlist<T>,
    pseudo: &PseudoNetSet,
    init: &Placement<T>,
    cfg: &PlacerConfig,
) -> Result<PlaceOutcome<T>> {
    nesterov_place_observed(netlist, pseudo, init, cfg, &mut |_, _| {})
}

/// [`nesterov_place`] calling `observer` with every trace row and the
/// placement it describes.
pub fn nesterov_place_observed<T: Scalar>(
    netlist: &Netlist<T>,
    pseudo: &PseudoNetSet,
    init: &Placement<T>,
    cfg: &PlacerConfig,
    observer: &mut dyn FnMut(&TraceRow, &Placement<T>),
) -> Result<PlaceOutcome<T>> {
    run_nesterov(
        netlist,
        pseudo,
        init,
        cfg,
        cfg.stop_overflow,
        cfg.target_density,
        observer,
    )
}

fn run_nesterov<T: Scalar>(
    netlist: &Netlist<T>,
    pseudo: &PseudoNetSet,
    init: &Placement<T>,
    cfg: &PlacerConfig,
    stop: f64,
    target_density: f64,
    observer: &mut dyn FnMut(&TraceRow, &Placement<T>),
) -> Result<PlaceOutcome<T>> {
    cfg.validate()?;
    netlist.check_placement(init)?;
    if netlist.movable_count() == 0 {
        return Ok(PlaceOutcome {
            placement: init.clone(),
            trace: Vec::new(),
            status: Status::Converged,
        });
    }
    let core = netlist.core;
    let mut obj = Objective::new(netlist, pseudo, T::of(target_density), cfg.ignore_net_degree)?;
    let bin_w = obj.grid.bin_w.to_f64_lossy();
    let moves = obj.moves.clone();

    let mut u = init.clone();
    clamp_into(netlist, &core, &mut u);
    let mut v = u.clone();

    obj.set_iteration(0, cfg);
    obj.grid.deposit(netlist, &v)?;
    let mut overflow = obj.grid.overflow().to_f64_lossy();
    let mut gamma = gamma_for(overflow, bin_w);
    // balance wirelength and density gradients at the start
    let probe = obj.evaluate(&v, T::zero(), T::of(gamma))?;
    let mut lambda = if probe.density_l1 > T::zero() {
        (probe.wl_l1 / probe.density_l1).to_f64_lossy()
    } else {
        1.0
    };
    if !(lambda.is_finite() && lambda > 0.0) {
        lambda = 1.0;
    }
    let mut g = obj.evaluate(&v, T::of(lambda), T::of(gamma))?;

    // initial step from a short steepest-descent probe
    let gmax = g
        .gx
        .iter()
        .chain(&g.gy)
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let mut alpha = if gmax > T::zero() {
        let s = T::of(0.1 * bin_w) / gmax;
        let mut w = v.clone();
        for i in 0..w.len() {
            if moves[i] {
                w.x[i] = w.x[i] - s * g.gx[i];
                w.y[i] = w.y[i] - s * g.gy[i];
            }
        }
        clamp_into(netlist, &core, &mut w);
        let gw = obj.evaluate(&w, T::of(lambda), T::of(gamma))?;
        let dv = dist2(&w.x, &w.y, &v.x, &v.y);
        let dg = dist2(&gw.gx, &gw.gy, &g.gx, &g.gy);
        if dg > T::zero() {
            (dv / dg).sqrt().to_f64_lossy()
        } else {
            s.to_f64_lossy()
        }
    } else {
        bin_w
    };

    let mut a = 1.0f64;
    let mut trace = Vec::new();
    let mut stall = 0usize;
    let mut best_overflow = f64::INFINITY;
    let mut status = Status::MaxIterations;

    for k in 0..cfg.max_iterations {
        let row = TraceRow {
            iter: k,
            overflow,
            hpwl: hpwl(netlist, &v)?.to_f64_lossy(),
            lambda,
            gamma,
            penalty_cluster: penalty_at(PseudoKind::Cluster, k, cfg),
            momentum: a,
            step: alpha,
        };
        observer(&row, &v);
        trace.push(row);
        if !overflow.is_finite() {
            status = Status::Diverged;
            break;
        }
        if overflow <= stop {
            status = Status::Converged;
            break;
        }
        if overflow > DIVERGE_OVERFLOW && overflow >= best_overflow {
            stall += 1;
            if stall >= DIVERGE_WINDOW {
                log::warn!("placement diverged at overflow {overflow:.4}");
                status = Status::Diverged;
                break;
            }
        } else {
            stall = 0;
        }
        best_overflow = best_overflow.min(overflow);

        let a_next = next_momentum(a);
        let coef = T::of((a - 1.0) / a_next);
        let mut tries = 0;
        let (u_new, v_new, g_new, alpha_hat) = loop {
            let al = T::of(alpha);
            let mut un = u.clone();
            for i in 0..un.len() {
                if moves[i] {
                    un.x[i] = v.x[i] - al * g.gx[i];
                    un.y[i] = v.y[i] - al * g.gy[i];
                }
            }
            clamp_into(netlist, &core, &mut un);
            let mut vn = un.clone();
            for i in 0..vn.len() {
                if moves[i] {
                    vn.x[i] = un.x[i] + coef * (un.x[i] - u.x[i]);
                    vn.y[i] = un.y[i] + coef * (un.y[i] - u.y[i]);
                }
            }
            clamp_into(netlist, &core, &mut vn);
            let gn = obj.evaluate(&vn, T::of(lambda), T::of(gamma))?;
            let dv = dist2(&vn.x, &vn.y, &v.x, &v.y);
            let dg = dist2(&gn.gx, &gn.gy, &g.gx, &g.gy);
            let hat = if dg > T::zero() {
                (dv / dg).sqrt().to_f64_lossy()
            } else {
                alpha
            };
            tries += 1;
            if hat >= 0.95 * alpha || tries >= MAX_BACKTRACKS {
                break (un, vn, gn, hat);
            }
            alpha = if hat < 0.5 * alpha { hat } else { 0.5 * alpha };
        };
        u = u_new;
        v = v_new;
        g = g_new;
        alpha = alpha_hat;
        a = a_next;
        overflow = g.overflow.to_f64_lossy();

        gamma = gamma_for(overflow, bin_w);
        lambda *= lambda_factor(overflow, stop);
        obj.set_iteration(k + 1, cfg);
        // refresh the gradient under the new lambda, gamma and penalties
        g = obj.evaluate(&v, T::of(lambda), T::of(gamma))?;
    }

    Ok(PlaceOutcome {
        placement: v,
        trace,
        status,
    })
}

/// Deterministic offsets in `[-amp/2, amp/2]^2` from the R2 low-discrepancy
/// sequence, with a seeded starting phase.
pub fn r2_jitter(n: usize, seed: u64, amp: f64) -> Vec<(f64, f64)> {
    // plastic number
    const G: f64 = 1.324_717_957_244_746;
    let (a1, a2) = (1.0 / G, 1.0 / (G * G));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: f64 = rng.gen();
    (0..n)
        .map(|i| {
            let t = i as f64 + 1.0;
            (
                ((s + a1 * t).fract() - 0.5) * amp,
                ((s + a2 * t).fract() - 0.5) * amp,
            )
        })
        .collect()
}

/// Bloat factor: core area over total cluster area.
pub fn bloat_factor(core_area: f64, cluster_area: f64) -> f64 {
    core_area / cluster_area
}

/// Shrink factor: target overflow over achieved overflow.
pub fn shrink_factor(target_overflow: f64, achieved_overflow: f64) -> f64 {
    target_overflow / achieved_overflow
}

#[derive(Debug, Clone)]
pub struct ClusterPlacement<T> {
    /// Center per cluster id.
    pub centers: Vec<(T, T)>,
    pub bloat: f64,
    /// Cumulative shrink applied on the returned attempt.
    pub shrink: f64,
    pub attempts: usize,
    pub outcome: PlaceOutcome<T>,
}

const MAX_SHRINK_RETRIES: usize = 3;

/// The clustered netlist as a placeable netlist: one square soft block per
/// cluster (area scaled by `scale`), one terminal per referenced terminal.
fn cluster_netlist<T: Scalar>(cnl: &ClusteredNetlist<'_, T>, scale: f64) -> Result<(Netlist<T>, Vec<usize>)> {
    let origin = cnl.origin;
    let mut nl = Netlist::new(origin.core, origin.row_height);
    let blocks: Vec<usize> = cnl
        .clusters
        .iter()
        .map(|c| {
            let side = T::of((c.total_area.to_f64_lossy() * scale).sqrt());
            nl.add_instance(c.label.clone(), side, side, InstanceKind::StdCell, false)
        })
        .collect();
    let mut terminal = std::collections::BTreeMap::new();
    for b in &cnl.bundled_nets {
        for e in &b.endpoints {
            if let ClusterNode::Terminal(t) = *e {
                terminal.entry(t).or_insert_with(|| {
                    let inst = &origin.instances[t];
                    let (x, y) = inst.fixed_location.unwrap_or_else(|| origin.core.center());
                    nl.add_terminal(inst.name.clone(), x, y)
                });
            }
        }
    }
    for (k, b) in cnl.bundled_nets.iter().enumerate() {
        let pins: Vec<PinSpec<T>> = b
            .endpoints
            .iter()
            .map(|e| match *e {
                ClusterNode::Cluster(c) => PinSpec::center(blocks[c]),
                ClusterNode::Terminal(t) => PinSpec::center(terminal[&t]),
            })
            .collect();
        let name = if b.is_virtual { format!("v{k}") } else { format!("b{k}") };
        nl.add_weighted_net(name, &pins, b.weight, false)?;
    }
    Ok((nl, blocks))
}

/// Places clusters as bloated soft blocks at target density 1, shrinking
/// and retrying when the overflow target is missed.
pub fn place_clusters<T: Scalar>(cnl: &ClusteredNetlist<'_, T>, cfg: &PlacerConfig) -> Result<ClusterPlacement<T>> {
    let core = cnl.origin.core;
    let total: f64 = cnl.clusters.iter().map(|c| c.total_area.to_f64_lossy()).sum();
    if cnl.clusters.is_empty() || total <= 0.0 {
        return Err(PlaceError::Constraint("nothing to place: no cluster has area".into()));
    }
    let bloat = bloat_factor(core.area().to_f64_lossy(), total);
    let mut shrink = 1.0;
    let mut best: Option<ClusterPlacement<T>> = None;
    for attempt in 0..=MAX_SHRINK_RETRIES {
        let (nl, blocks) = cluster_netlist(cnl, bloat * shrink)?;
        let (cx, cy) = core.center();
        let mut init = Placement::uniform(&nl, cx, cy);
        let bin = core.width().to_f64_lossy() / crate::density::grid_dim(blocks.len()) as f64;
        for (&b, (dx, dy)) in blocks.iter().zip(r2_jitter(blocks.len(), cfg.seed, 0.01 * bin)) {
            init.x[b] = init.x[b] + T::of(dx);
            init.y[b] = init.y[b] + T::of(dy);
        }
        let out = run_nesterov(
            &nl,
            &PseudoNetSet::default(),
            &init,
            cfg,
            cfg.cluster_target_overflow,
            1.0,
            &mut |_, _| {},
        )?;
        let achieved = out.final_overflow();
        let placed = ClusterPlacement {
            centers: blocks.iter().map(|&b| (out.placement.x[b], out.placement.y[b])).collect(),
            bloat,
            shrink,
            attempts: attempt + 1,
            outcome: out,
        };
        let ok = placed.outcome.status == Status::Converged && achieved <= cfg.cluster_target_overflow;
        let better = best
            .as_ref()
            .is_none_or(|b| achieved < b.outcome.final_overflow());
        if better {
            best = Some(placed);
        }
        if ok {
            break;
        }
        if attempt == MAX_SHRINK_RETRIES {
            log::warn!("cluster placement missed overflow target after {MAX_SHRINK_RETRIES} shrink retries");
            break;
        }
        shrink *= shrink_factor(cfg.cluster_target_overflow, achieved.max(f64::MIN_POSITIVE));
    }
    let mut best = best.expect("at least one attempt");
    best.attempts = best.attempts.max(1);
    Ok(best)
}

/// Pooled RMS distance of cluster members from their cluster centroid.
pub fn intra_cluster_spread<T: Scalar>(clusters: &[Cluster<T>], placement: &Placement<T>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for c in clusters {
        if c.members.is_empty() {
            continue;
        }
        let k = c.members.len() as f64;
        let mx = c.members.iter().map(|&m| placement.x[m].to_f64_lossy()).sum::<f64>() / k;
        let my = c.members.iter().map(|&m| placement.y[m].to_f64_lossy()).sum::<f64>() / k;
        for &m in &c.members {
            let dx = placement.x[m].to_f64_lossy() - mx;
            let dy = placement.y[m].to_f64_lossy() - my;
            sum += dx * dx + dy * dy;
        }
        n += c.members.len();
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowFlags {
    pub use_dataflow: bool,
    pub use_datapath: bool,
}

impl FlowFlags {
    pub const FULL: FlowFlags = FlowFlags {
        use_dataflow: true,
        use_datapath: true,
    };
    pub const BASELINE: FlowFlags = FlowFlags {
        use_dataflow: false,
        use_datapath: false,
    };

    pub fn is_baseline(&self) -> bool {
        !self.use_dataflow && !self.use_datapath
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub extraction: Duration,
    pub cluster_place: Duration,
    pub flat_place: Duration,
}

#[derive(Debug, Clone)]
pub struct FlowResult<T> {
    /// Locations of the input netlist's instances.
    pub placement: Placement<T>,
    pub status: Status,
    /// Flat placement trace.
    pub trace: Vec<TraceRow>,
    pub cluster_trace: Vec<TraceRow>,
    pub clusters: Vec<Cluster<T>>,
    pub dataflow_edges: usize,
    pub alignment_groups: usize,
    pub hpwl: f64,
    pub times: StageTimes,
}

impl<T> FlowResult<T> {
    pub fn final_overflow(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.overflow)
    }
}

/// The full flow on `netlist`. Both flags off gives plain placement from
/// the core center; clusters are still extracted so spread is comparable.
pub fn dg_place<T: Scalar>(netlist: &Netlist<T>, cfg: &PlacerConfig, flags: FlowFlags) -> Result<FlowResult<T>> {
    dg_place_observed(netlist, cfg, flags, &mut |_, _| {})
}

pub fn dg_place_observed<T: Scalar>(
    netlist: &Netlist<T>,
    cfg: &PlacerConfig,
    flags: FlowFlags,
    observer: &mut dyn FnMut(&TraceRow, &Placement<T>),
) -> Result<FlowResult<T>> {
    cfg.validate()?;
    if netlist.nets.iter().any(|n| n.is_pseudo) {
        return Err(PlaceError::Constraint("input netlist already carries pseudo nets".into()));
    }
    let mut times = StageTimes::default();
    let n = netlist.instances.len();

    let t0 = Instant::now();
    let (min, max) = cfg.cluster_bounds(netlist.movable_count());
    let clusters = extract_hierarchy(netlist, min, max)?;
    let mut edges = Vec::new();
    let mut groups = Vec::new();
    if !flags.is_baseline() {
        if flags.use_dataflow {
            edges = register_hop_bfs(netlist, &clusters, cfg.hop_limit);
        }
        if flags.use_datapath {
            groups = extract_alignment_groups(netlist, &clusters);
        }
    }
    times.extraction = t0.elapsed();

    let mut flat = netlist.clone();
    let mut pseudo = PseudoNetSet::default();
    let (cx, cy) = netlist.core.center();
    let mut init = Placement::uniform(netlist, cx, cy);
    let mut cluster_trace = Vec::new();

    if !flags.is_baseline() {
        let t1 = Instant::now();
        let cnl = build_clustered_netlist(netlist, clusters.clone())?;
        let cnl = inject_virtual_connections(cnl, &edges)?;
        let placed = place_clusters(&cnl, cfg)?;
        times.cluster_place = t1.elapsed();
        cluster_trace = placed.outcome.trace.clone();
        for (c, &(x, y)) in clusters.iter().zip(&placed.centers) {
            for &m in &c.members {
                init.x[m] = x;
                init.y[m] = y;
            }
        }
        for c in clusters.iter().filter(|c| c.members.len() >= 2) {
            let frag = flat.star_decompose(&c.members, T::one())?;
            pseudo.push_all(&frag.nets, PseudoKind::Cluster);
        }
        for frag in build_datapath_pseudonets(&mut flat, &groups, T::one())? {
            pseudo.push_all(&frag.nets, PseudoKind::Datapath);
        }
    }

    // Star centers start at their members' centroid.
    let mut init_flat = Placement::uniform(&flat, cx, cy);
    init_flat.x[..n].copy_from_slice(&init.x);
    init_flat.y[..n].copy_from_slice(&init.y);
    let bin = netlist.core.width().to_f64_lossy() / crate::density::grid_dim(netlist.movable_count()) as f64;
    let jitter = r2_jitter(n, cfg.seed, 0.01 * bin);
    for inst in netlist.instances.iter().filter(|i| i.is_physical_movable()) {
        let (dx, dy) = jitter[inst.id];
        init_flat.x[inst.id] = init_flat.x[inst.id] + T::of(dx);
        init_flat.y[inst.id] = init_flat.y[inst.id] + T::of(dy);
    }
    for inst in flat.instances[n..].iter() {
        let members: Vec<usize> = inst
            .pin_ids
            .iter()
            .filter_map(|&p| {
                let net = &flat.nets[flat.pins[p].net];
                net.pin_ids.iter().map(|&q| flat.pins[q].owner).find(|&o| o != inst.id)
            })
            .collect();
        if !members.is_empty() {
            let k = T::of_usize(members.len());
            init_flat.x[inst.id] = members.iter().map(|&m| init_flat.x[m]).fold(T::zero(), |a, b| a + b) / k;
            init_flat.y[inst.id] = members.iter().map(|&m| init_flat.y[m]).fold(T::zero(), |a, b| a + b) / k;
        }
    }

    let t2 = Instant::now();
    let out = run_nesterov(
        &flat,
        &pseudo,
        &init_flat,
        cfg,
        cfg.stop_overflow,
        cfg.target_density,
        observer,
    )?;
    times.flat_place = t2.elapsed();

    let mut placement = out.placement;
    placement.x.truncate(n);
    placement.y.truncate(n);
    let wl = hpwl(netlist, &placement)?.to_f64_lossy();
    Ok(FlowResult {
        placement,
        status: out.status,
        trace: out.trace,
        cluster_trace,
        clusters,
        dataflow_edges: edges.len(),
        alignment_groups: groups.len(),
        hpwl: wl,
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PlacerConfig {
        PlacerConfig::default()
    }

    #[test]
    fn penalty_schedule_values() {
        let c = cfg();
        assert!((penalty_at(PseudoKind::Cluster, 0, &c) - 54.598_150_033_144_236).abs() < 1e-12);
        assert_eq!(penalty_at(PseudoKind::Cluster, 4, &c), 1.0);
        for k in [0, 7, 1000] {
            assert_eq!(penalty_at(PseudoKind::Datapath, k, &c), 1.0);
        }
        let decay = PlacerConfig {
            datapath_decay: true,
            ..cfg()
        };
        assert!(penalty_at(PseudoKind::Datapath, 1, &decay) < 1.0);
    }

    #[test]
    fn bloat_and_shrink_arithmetic() {
        assert_eq!(bloat_factor(1000.0 * 1000.0, 250_000.0), 4.0);
        assert_eq!(shrink_factor(0.2, 0.5), 0.4);
    }

    #[test]
    fn gamma_schedule_ends() {
        assert!((gamma_for(1.0, 2.0) - 160.0).abs() < 1e-9);
        assert!((gamma_for(0.1, 2.0) - 1.6).abs() < 1e-12);
        assert_eq!(gamma_for(5.0, 1.0), 80.0);
        assert_eq!(gamma_for(-1.0, 1.0), 0.8);
    }

    #[test]
    fn lambda_factor_clamped() {
        assert!((lambda_factor(0.1, 0.1) - 1.1).abs() < 1e-15);
        assert_eq!(lambda_factor(1.0, 0.1), 0.95);
        let mid = lambda_factor(0.5, 0.1);
        assert!(mid > 0.95 && mid < 1.1);
    }

    #[test]
    fn momentum_sequence() {
        assert_eq!(next_momentum(1.0), (1.0 + 5f64.sqrt()) / 2.0);
    }

    #[test]
    fn jitter_is_small_and_reproducible() {
        let a = r2_jitter(1000, 9, 0.02);
        assert_eq!(a, r2_jitter(1000, 9, 0.02));
        assert_ne!(a, r2_jitter(1000, 10, 0.02));
        assert!(a.iter().all(|(x, y)| x.abs() <= 0.01 && y.abs() <= 0.01));
    }

    #[test]
    fn bounds_scale_with_size() {
        let c = cfg();
        assert_eq!(c.cluster_bounds(100_000), (200, 4000));
        assert_eq!(c.cluster_bounds(10_000), (20, 400));
        assert_eq!(c.cluster_bounds(100), (10, 10));
    }

    #[test]
    fn config_rejects_bad_values() {
        let bad = PlacerConfig {
            stop_overflow: 0.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
        let bad = PlacerConfig {
            penalty_divisor: 0.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn zero_movables_return_at_once() {
        let mut nl: Netlist<f64> = Netlist::new(Rect::new(0.0, 0.0, 10.0, 10.0), 1.0);
        nl.add_terminal("p", 1.0, 1.0);
        let init = Placement::uniform(&nl, 5.0, 5.0);
        let out = nesterov_place(&nl, &PseudoNetSet::default(), &init, &cfg()).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.status, Status::Converged);
    }

    #[test]
    fn trace_csv_header() {
        let s = trace_csv(&[]);
        assert_eq!(s, "iter,overflow,hpwl,lambda,gamma,penalty_cluster\n");
    }
}
