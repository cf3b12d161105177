//! Electrostatic density model on a power-of-two bin grid.
//!
//! Movable instances are charges whose density `rho` is deposited by
//! geometric overlap. The potential solves the five-point discrete Poisson
//! equation `lap(psi) = -(rho - mean(rho))` with mirrored (zero normal
//! derivative) boundaries. Cosine modes diagonalize that stencil exactly, so
//! the solve is one forward DCT-II, a per-mode division and one DCT-III.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustdct::{Dct2, Dct3, DctPlanner};

use crate::error::{PlaceError, Result};
use crate::netlist::{InstanceKind, Instance, Netlist, Placement, Rect};
use crate::num::Scalar;
use crate::wirelength::Forces;

/// Bins per side for `movables` instances: the smallest power of two whose
/// square covers them, clamped to `[16, 1024]`.
pub fn grid_dim(movables: usize) -> usize {
    let side = (movables as f64).sqrt().ceil() as usize;
    side.next_power_of_two().clamp(16, 1024)
}

struct Plans<T: Scalar> {
    dct2_x: Arc<dyn Dct2<T>>,
    dct2_y: Arc<dyn Dct2<T>>,
    dct3_x: Arc<dyn Dct3<T>>,
    dct3_y: Arc<dyn Dct3<T>>,
}

impl<T: Scalar> Clone for Plans<T> {
    fn clone(&self) -> Self {
        Plans {
            dct2_x: Arc::clone(&self.dct2_x),
            dct2_y: Arc::clone(&self.dct2_y),
            dct3_x: Arc::clone(&self.dct3_x),
            dct3_y: Arc::clone(&self.dct3_y),
        }
    }
}

#[derive(Clone)]
pub struct BinGrid<T: Scalar> {
    pub nx: usize,
    pub ny: usize,
    pub bin_w: T,
    pub bin_h: T,
    pub region: Rect<T>,
    pub target_density: T,
    /// Row-major (`iy * nx + ix`) charge density, area per bin area.
    pub rho: Vec<T>,
    pub psi: Vec<T>,
    pub field_x: Vec<T>,
    pub field_y: Vec<T>,
    plans: Plans<T>,
}

impl<T: Scalar> fmt::Debug for BinGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinGrid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("bin_w", &self.bin_w)
            .field("bin_h", &self.bin_h)
            .field("target_density", &self.target_density)
            .finish_non_exhaustive()
    }
}

/// Deposition footprint of one instance: clamped rectangle and the factor
/// turning geometric overlap into deposited area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint<T> {
    pub lx: T,
    pub ly: T,
    pub ux: T,
    pub uy: T,
    pub scale: T,
    pub cx: T,
    pub cy: T,
}

impl<T: Scalar> BinGrid<T> {
    pub fn new(region: Rect<T>, nx: usize, ny: usize, target_density: T) -> Result<Self> {
        if !nx.is_power_of_two() || !ny.is_power_of_two() {
            return Err(PlaceError::Parameter(format!(
                "bin grid must be a power of two per side, got {nx}x{ny}"
            )));
        }
        if !(target_density > T::zero() && target_density <= T::one()) {
            return Err(PlaceError::Parameter(
                "target density must lie in (0, 1]".into(),
            ));
        }
        if !(region.width() > T::zero() && region.height() > T::zero()) {
            return Err(PlaceError::Parameter("empty placement region".into()));
        }
        let mut planner = DctPlanner::new();
        let plans = Plans {
            dct2_x: planner.plan_dct2(nx),
            dct2_y: planner.plan_dct2(ny),
            dct3_x: planner.plan_dct3(nx),
            dct3_y: planner.plan_dct3(ny),
        };
        let n = nx * ny;
        Ok(BinGrid {
            nx,
            ny,
            bin_w: region.width() / T::of_usize(nx),
            bin_h: region.height() / T::of_usize(ny),
            region,
            target_density,
            rho: vec![T::zero(); n],
            psi: vec![T::zero(); n],
            field_x: vec![T::zero(); n],
            field_y: vec![T::zero(); n],
            plans,
        })
    }

    /// Square grid sized for the netlist's movable count.
    pub fn for_netlist(netlist: &Netlist<T>, target_density: T) -> Result<Self> {
        let d = grid_dim(netlist.movable_count());
        BinGrid::new(netlist.core, d, d, target_density)
    }

    pub fn bin_area(&self) -> T {
        self.bin_w * self.bin_h
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Area-carrying footprint, or `None` for terminals and star centers.
    ///
    /// Std-cells narrower (shorter) than a bin are widened (heightened) to the
    /// bin size with density lowered to keep their area. Macros deposit their
    /// area scaled by the target density.
    pub fn footprint(&self, inst: &Instance<T>, x: T, y: T) -> Option<Footprint<T>> {
        let (w, h, scale) = match inst.kind {
            InstanceKind::Terminal | InstanceKind::StarCenter => return None,
            InstanceKind::Macro => (inst.width, inst.height, self.target_density),
            InstanceKind::StdCell => {
                let w = inst.width.max(self.bin_w);
                let h = inst.height.max(self.bin_h);
                (w, h, inst.width * inst.height / (w * h))
            }
        };
        let half = T::of(0.5);
        let r = &self.region;
        let clamp = |c: T, size: T, lo: T, hi: T| {
            if size >= hi - lo {
                (lo + hi) * half
            } else {
                c.max(lo + size * half).min(hi - size * half)
            }
        };
        let cx = clamp(x, w, r.lx, r.ux);
        let cy = clamp(y, h, r.ly, r.uy);
        let lx = (cx - w * half).max(r.lx);
        let ux = (cx + w * half).min(r.ux);
        let ly = (cy - h * half).max(r.ly);
        let uy = (cy + h * half).min(r.uy);
        Some(Footprint {
            lx,
            ly,
            ux,
            uy,
            scale,
            cx,
            cy,
        })
    }

    /// Area this instance contributes (its charge).
    pub fn charge(&self, inst: &Instance<T>) -> T {
        match inst.kind {
            InstanceKind::Terminal | InstanceKind::StarCenter => T::zero(),
            InstanceKind::Macro => inst.area() * self.target_density,
            InstanceKind::StdCell => inst.area(),
        }
    }

    fn span(&self, lo: T, hi: T, origin: T, step: T, n: usize) -> (usize, usize) {
        let a = ((lo - origin) / step).floor().to_f64_lossy().max(0.0) as usize;
        let b = ((hi - origin) / step).ceil().to_f64_lossy().max(1.0) as usize;
        (a.min(n - 1), b.min(n).max(a.min(n - 1) + 1))
    }

    /// Spreads every area-carrying instance over the bins it overlaps.
    pub fn deposit(&mut self, netlist: &Netlist<T>, placement: &Placement<T>) -> Result<()> {
        netlist.check_placement(placement)?;
        let mut outside = 0usize;
        let mut rows: Vec<Vec<(usize, Footprint<T>)>> = vec![Vec::new(); self.ny];
        for inst in &netlist.instances {
            let (x, y) = (placement.x[inst.id], placement.y[inst.id]);
            let Some(fp) = self.footprint(inst, x, y) else {
                continue;
            };
            let r = &self.region;
            let hw = inst.width * T::of(0.5);
            let hh = inst.height * T::of(0.5);
            if x + hw < r.lx || x - hw > r.ux || y + hh < r.ly || y - hh > r.uy {
                outside += 1;
            }
            let (r0, r1) = self.span(fp.ly, fp.uy, r.ly, self.bin_h, self.ny);
            for row in &mut rows[r0..r1] {
                row.push((inst.id, fp));
            }
        }
        if outside > 0 {
            log::warn!("{outside} instance(s) outside the core were clamped into it");
        }
        let (nx, bw, bh) = (self.nx, self.bin_w, self.bin_h);
        let (lx0, ly0) = (self.region.lx, self.region.ly);
        let inv_area = T::one() / self.bin_area();
        self.rho
            .par_chunks_mut(nx)
            .zip(rows.par_iter())
            .enumerate()
            .for_each(|(iy, (out, list))| {
                out.iter_mut().for_each(|v| *v = T::zero());
                let by0 = ly0 + T::of_usize(iy) * bh;
                let by1 = by0 + bh;
                for (_, fp) in list {
                    let oy = fp.uy.min(by1) - fp.ly.max(by0);
                    if oy <= T::zero() {
                        continue;
                    }
                    let a = ((fp.lx - lx0) / bw).floor().to_f64_lossy().max(0.0) as usize;
                    let b = (((fp.ux - lx0) / bw).ceil().to_f64_lossy().max(0.0) as usize).min(nx);
                    for ix in a.min(nx - 1)..b {
                        let bx0 = lx0 + T::of_usize(ix) * bw;
                        let ox = fp.ux.min(bx0 + bw) - fp.lx.max(bx0);
                        if ox > T::zero() {
                            out[ix] = out[ix] + ox * oy * fp.scale * inv_area;
                        }
                    }
                }
            });
        Ok(())
    }

    /// Total deposited area `sum rho * bin_area`.
    pub fn total_charge(&self) -> T {
        self.rho.iter().copied().sum::<T>() * self.bin_area()
    }

    pub fn mean_rho(&self) -> T {
        self.rho.iter().copied().sum::<T>() / T::of_usize(self.rho.len())
    }

    /// Solves for `psi` (zero mean) and the field `-grad psi`.
    pub fn solve_potential(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        let mean = self.mean_rho();
        let mut buf: Vec<T> = self.rho.iter().map(|&r| r - mean).collect();

        // forward: rows (x) then columns (y)
        let dct2_x = &self.plans.dct2_x;
        buf.par_chunks_mut(nx).for_each(|row| dct2_x.process_dct2(row));
        let mut cols = transpose(&buf, nx, ny);
        let dct2_y = &self.plans.dct2_y;
        cols.par_chunks_mut(ny).for_each(|col| dct2_y.process_dct2(col));

        // cols is indexed [u * ny + v]; divide by the stencil eigenvalue
        let two = T::of(2.0);
        let pi = T::of(std::f64::consts::PI);
        let lam_x: Vec<T> = (0..nx)
            .map(|u| (two - two * (pi * T::of_usize(u) / T::of_usize(nx)).cos()) / (self.bin_w * self.bin_w))
            .collect();
        let lam_y: Vec<T> = (0..ny)
            .map(|v| (two - two * (pi * T::of_usize(v) / T::of_usize(ny)).cos()) / (self.bin_h * self.bin_h))
            .collect();
        // DCT-III after DCT-II scales by n/2 per axis
        let norm = T::of(4.0) / T::of_usize(nx * ny);
        cols.par_chunks_mut(ny).enumerate().for_each(|(u, col)| {
            for (v, c) in col.iter_mut().enumerate() {
                let lam = lam_x[u] + lam_y[v];
                *c = if u == 0 && v == 0 {
                    T::zero()
                } else {
                    *c / lam * norm
                };
            }
        });

        let dct3_y = &self.plans.dct3_y;
        cols.par_chunks_mut(ny).for_each(|col| dct3_y.process_dct3(col));
        let mut psi = transpose(&cols, ny, nx);
        let dct3_x = &self.plans.dct3_x;
        psi.par_chunks_mut(nx).for_each(|row| dct3_x.process_dct3(row));

        let m = psi.iter().copied().sum::<T>() / T::of_usize(psi.len());
        psi.iter_mut().for_each(|p| *p = *p - m);
        self.psi = psi;
        self.compute_field();
    }

    fn compute_field(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        let psi = &self.psi;
        let inv2w = T::one() / (T::of(2.0) * self.bin_w);
        let inv2h = T::one() / (T::of(2.0) * self.bin_h);
        let at = |ix: usize, iy: usize| psi[iy * nx + ix];
        self.field_x
            .par_chunks_mut(nx)
            .zip(self.field_y.par_chunks_mut(nx))
            .enumerate()
            .for_each(|(iy, (fx, fy))| {
                for ix in 0..nx {
                    // mirrored ghosts: psi[-1] = psi[0], psi[n] = psi[n-1]
                    let l = at(ix.saturating_sub(1), iy);
                    let r = at((ix + 1).min(nx - 1), iy);
                    let d = at(ix, iy.saturating_sub(1));
                    let u = at(ix, (iy + 1).min(ny - 1));
                    fx[ix] = -(r - l) * inv2w;
                    fy[ix] = -(u - d) * inv2h;
                }
            });
    }

    /// Electrostatic energy `1/2 sum rho psi A_bin`.
    pub fn energy(&self) -> T {
        let s: T = self
            .rho
            .iter()
            .zip(&self.psi)
            .map(|(&r, &p)| r * p)
            .sum();
        T::of(0.5) * s * self.bin_area()
    }

    /// Field at `(x, y)` by bilinear interpolation between bin centers.
    pub fn field_at(&self, x: T, y: T) -> (T, T) {
        let half = T::of(0.5);
        let coord = |v: T, origin: T, step: T, n: usize| {
            let f = (v - origin) / step - half;
            let f = f.max(T::zero()).min(T::of_usize(n - 1));
            let i0 = f.floor().to_f64_lossy() as usize;
            let i0 = i0.min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, f - T::of_usize(i0))
        };
        let (x0, x1, tx) = coord(x, self.region.lx, self.bin_w, self.nx);
        let (y0, y1, ty) = coord(y, self.region.ly, self.bin_h, self.ny);
        let one = T::one();
        let lerp = |f: &[T]| {
            let a = f[self.idx(x0, y0)] * (one - tx) + f[self.idx(x1, y0)] * tx;
            let b = f[self.idx(x0, y1)] * (one - tx) + f[self.idx(x1, y1)] * tx;
            a * (one - ty) + b * ty
        };
        (lerp(&self.field_x), lerp(&self.field_y))
    }

    /// Density force per instance: charge times the field at its (clamped)
    /// center. Terminals and star centers feel nothing.
    pub fn density_force(&self, netlist: &Netlist<T>, placement: &Placement<T>) -> Result<Forces<T>> {
        netlist.check_placement(placement)?;
        let mut f = Forces::zeros(netlist.instances.len());
        f.x.par_iter_mut()
            .zip(f.y.par_iter_mut())
            .zip(netlist.instances.par_iter())
            .for_each(|((fx, fy), inst)| {
                if let Some(fp) = self.footprint(inst, placement.x[inst.id], placement.y[inst.id]) {
                    let q = self.charge(inst);
                    let (ex, ey) = self.field_at(fp.cx, fp.cy);
                    *fx = q * ex;
                    *fy = q * ey;
                }
            });
        Ok(f)
    }

    /// Share of deposited area above the target density:
    /// `sum max(0, rho_b A - target A) / sum rho_b A`, zero for an empty grid.
    pub fn overflow(&self) -> T {
        let a = self.bin_area();
        let total = self.total_charge();
        if total <= T::zero() {
            return T::zero();
        }
        let over: T = self
            .rho
            .iter()
            .map(|&r| (r * a - self.target_density * a).max(T::zero()))
            .sum();
        over / total
    }
}

fn transpose<T: Copy + Default>(src: &[T], w: usize, h: usize) -> Vec<T> {
    let mut out = vec![T::default(); src.len()];
    for r in 0..h {
        for c in 0..w {
            out[c * h + r] = src[r * w + c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::Netlist;

    fn one_cell(w: f64, h: f64, x: f64, y: f64, nx: usize) -> (Netlist<f64>, Placement<f64>, BinGrid<f64>) {
        let core = Rect::new(0.0, 0.0, 2.0 * nx as f64, 2.0 * nx as f64);
        let mut nl = Netlist::new(core, 1.0);
        nl.add_instance("c", w, h, InstanceKind::StdCell, false);
        let pl = Placement {
            x: vec![x],
            y: vec![y],
        };
        let grid = BinGrid::new(core, nx, nx, 1.0).unwrap();
        (nl, pl, grid)
    }

    #[test]
    fn grid_dim_rule() {
        assert_eq!(grid_dim(0), 16);
        assert_eq!(grid_dim(10_000), 128);
        assert_eq!(grid_dim(10_880), 128);
        assert_eq!(grid_dim(100_000_000), 1024);
    }

    #[test]
    fn non_power_of_two_rejected() {
        let core = Rect::new(0.0, 0.0, 1.0, 1.0);
        assert!(matches!(
            BinGrid::<f64>::new(core, 12, 16, 1.0),
            Err(PlaceError::Parameter(_))
        ));
    }

    #[test]
    fn full_containment() {
        // 2x2 bins; a 1x1 cell at the center of bin (3, 5) is not inflated
        // below bin size, so use a cell that is exactly one bin.
        let (nl, pl, mut g) = one_cell(2.0, 2.0, 7.0, 11.0, 16);
        g.deposit(&nl, &pl).unwrap();
        let a = g.bin_area();
        assert!((g.rho[g.idx(3, 5)] * a - 4.0).abs() < 1e-12);
        let others: f64 = g.rho.iter().sum::<f64>() * a - 4.0;
        assert!(others.abs() < 1e-12);

        // a 1x1 cell in a 2x2 bin is inflated to the bin with area kept
        let (nl, pl, mut g) = one_cell(1.0, 1.0, 7.0, 11.0, 16);
        g.deposit(&nl, &pl).unwrap();
        assert!((g.rho[g.idx(3, 5)] * g.bin_area() - 1.0).abs() < 1e-12);
        assert!((g.total_charge() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_and_half() {
        // 2x2 cell straddling the vertical line x = 8 between bins 3 and 4
        let (nl, pl, mut g) = one_cell(2.0, 2.0, 8.0, 11.0, 16);
        g.deposit(&nl, &pl).unwrap();
        let a = g.bin_area();
        assert!((g.rho[g.idx(3, 5)] * a - 2.0).abs() < 1e-12);
        assert!((g.rho[g.idx(4, 5)] * a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_netlist() {
        let core = Rect::new(0.0, 0.0, 32.0, 32.0);
        let nl: Netlist<f64> = Netlist::new(core, 1.0);
        let mut g = BinGrid::<f64>::new(core, 16, 16, 0.7).unwrap();
        g.deposit(&nl, &Placement::zeros(0)).unwrap();
        assert!(g.rho.iter().all(|&r| r == 0.0));
        assert_eq!(g.overflow(), 0.0);
    }

    #[test]
    fn uniform_density_has_no_field() {
        let core = Rect::new(0.0, 0.0, 32.0, 32.0);
        let mut g = BinGrid::<f64>::new(core, 16, 16, 1.0).unwrap();
        g.rho.iter_mut().for_each(|r| *r = 0.6);
        g.solve_potential();
        assert!(g.psi.iter().all(|p| p.abs() < 1e-12));
        assert!(g.field_x.iter().chain(&g.field_y).all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn point_charge_field_antisymmetric() {
        let core = Rect::<f64>::new(0.0, 0.0, 64.0, 64.0);
        let mut g = BinGrid::<f64>::new(core, 32, 32, 1.0).unwrap();
        // 2x2 bins around the grid center so the charge is centered
        for (ix, iy) in [(15, 15), (16, 15), (15, 16), (16, 16)] {
            let i = g.idx(ix, iy);
            g.rho[i] = 1.0;
        }
        g.solve_potential();
        for iy in 0..32 {
            for ix in 0..32 {
                let a = g.field_x[g.idx(ix, iy)];
                let b = g.field_x[g.idx(31 - ix, iy)];
                assert!((a + b).abs() < 1e-9, "{ix},{iy}: {a} vs {b}");
                let a = g.field_y[g.idx(ix, iy)];
                let b = g.field_y[g.idx(ix, 31 - iy)];
                assert!((a + b).abs() < 1e-9);
            }
        }
        // field points away from the charge
        assert!(g.field_x[g.idx(20, 16)] > 0.0);
        assert!(g.field_x[g.idx(10, 16)] < 0.0);
    }

    #[test]
    fn overflow_cases() {
        let core = Rect::new(0.0, 0.0, 16.0, 16.0);
        let mut g = BinGrid::<f64>::new(core, 16, 16, 0.5).unwrap();
        g.rho.iter_mut().for_each(|r| *r = 0.5);
        assert_eq!(g.overflow(), 0.0);

        // all area in one bin, target 1.0: tau = 1 - capacity / total
        let mut g = BinGrid::<f64>::new(core, 16, 16, 1.0).unwrap();
        let total = 40.0;
        g.rho[17] = total / g.bin_area();
        let expect = 1.0 - g.bin_area() / total;
        assert!((g.overflow() - expect).abs() < 1e-12);
    }

    #[test]
    fn mirrored_cells_feel_opposite_forces() {
        let core = Rect::<f64>::new(0.0, 0.0, 64.0, 64.0);
        let mut nl = Netlist::new(core, 1.0);
        nl.add_instance("a", 3.0, 2.0, InstanceKind::StdCell, false);
        nl.add_instance("b", 3.0, 2.0, InstanceKind::StdCell, false);
        let pl = Placement {
            x: vec![27.3, 64.0 - 27.3],
            y: vec![32.0, 32.0],
        };
        let mut g = BinGrid::<f64>::new(core, 32, 32, 1.0).unwrap();
        g.deposit(&nl, &pl).unwrap();
        g.solve_potential();
        let f = g.density_force(&nl, &pl).unwrap();
        assert!((f.x[0] + f.x[1]).abs() < 1e-9);
        assert!((f.y[0] - f.y[1]).abs() < 1e-9);
        assert!(f.x[0] < 0.0 && f.x[1] > 0.0);
    }
}
