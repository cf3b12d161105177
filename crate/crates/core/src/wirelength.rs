//! Weighted-average (WA) wirelength, its analytic gradient, and a
//! data-parallel gradient kernel without atomic accumulation.
//!
//! Per net and axis, with `x+ = max x_p`, `x- = min x_p`:
//!
//! ```text
//! a+_p = exp((x_p - x+) / g)      b+ = sum a+_p      c+ = sum x_p a+_p
//! a-_p = exp(-(x_p - x-) / g)     b- = sum a-_p      c- = sum x_p a-_p
//! WL   = c+/b+ - c-/b-
//! dWL/dx_p = ((1 + x_p/g) b+ - c+/g) / b+^2 * a+_p - ((1 - x_p/g) b- + c-/g) / b-^2 * a-_p
//! ```
//!
//! The max/min shift keeps every exponent non-positive and cancels in each
//! ratio. Net weights scale value and gradient uniformly. Nets with fewer than
//! two pins, or more than `ignore_net_degree`, contribute nothing.

use rayon::prelude::*;

use crate::error::{PlaceError, Result};
use crate::netlist::{Netlist, Placement};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct WaParams<'a, T> {
    pub gamma: T,
    pub ignore_net_degree: usize,
    /// Per-net weights overriding `Net::weight` (pseudo-net penalties).
    pub weights: Option<&'a [T]>,
}

impl<'a, T: Scalar> WaParams<'a, T> {
    pub fn new(gamma: T) -> Self {
        WaParams {
            gamma,
            ignore_net_degree: usize::MAX,
            weights: None,
        }
    }

    pub fn ignore_above(mut self, degree: usize) -> Self {
        self.ignore_net_degree = degree;
        self
    }

    pub fn with_weights(mut self, weights: &'a [T]) -> Self {
        self.weights = Some(weights);
        self
    }

    fn check(&self, netlist: &Netlist<T>) -> Result<()> {
        if !(self.gamma > T::zero()) {
            return Err(PlaceError::Parameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if let Some(w) = self.weights {
            if w.len() != netlist.nets.len() {
                return Err(PlaceError::Dimension {
                    what: "net weights",
                    expected: netlist.nets.len(),
                    got: w.len(),
                });
            }
        }
        Ok(())
    }

    #[inline]
    fn weight(&self, netlist: &Netlist<T>, net: usize) -> T {
        match self.weights {
            Some(w) => w[net],
            None => netlist.nets[net].weight,
        }
    }

    #[inline]
    fn active(&self, degree: usize) -> bool {
        degree >= 2 && degree <= self.ignore_net_degree
    }
}

/// Per-instance force vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Forces<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Scalar> Forces<T> {
    pub fn zeros(n: usize) -> Self {
        Forces {
            x: vec![T::zero(); n],
            y: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// WA value summed over nets and both axes.
pub fn wa_wirelength<T: Scalar>(netlist: &Netlist<T>, placement: &Placement<T>, gamma: T) -> Result<T> {
    wa_wirelength_with(netlist, placement, &WaParams::new(gamma))
}

pub fn wa_wirelength_with<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    params: &WaParams<'_, T>,
) -> Result<T> {
    params.check(netlist)?;
    netlist.check_placement(placement)?;
    let mut total = T::zero();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for net in &netlist.nets {
        if !params.active(net.degree()) {
            continue;
        }
        xs.clear();
        ys.clear();
        for &p in &net.pin_ids {
            let (x, y) = netlist.pin_position(p, placement);
            xs.push(x);
            ys.push(y);
        }
        let w = params.weight(netlist, net.id);
        total = total + w * (net_wa(&xs, params.gamma) + net_wa(&ys, params.gamma));
    }
    Ok(total)
}

/// WA value of one net along one axis.
pub fn net_wa<T: Scalar>(coords: &[T], gamma: T) -> T {
    if coords.len() < 2 {
        return T::zero();
    }
    let hi = coords.iter().copied().fold(T::neg_infinity(), T::max);
    let lo = coords.iter().copied().fold(T::infinity(), T::min);
    let (mut bp, mut bm, mut cp, mut cm) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &x in coords {
        let ap = ((x - hi) / gamma).exp();
        let am = (-(x - lo) / gamma).exp();
        bp = bp + ap;
        bm = bm + am;
        cp = cp + x * ap;
        cm = cm + x * am;
    }
    cp / bp - cm / bm
}

/// Reference gradient: nets, then pins, then a per-instance sum in ascending
/// pin order. Returns the wirelength *force* `-dWL/dX` per instance.
pub fn wa_gradient_serial<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    gamma: T,
) -> Result<Forces<T>> {
    wa_gradient_serial_with(netlist, placement, &WaParams::new(gamma))
}

pub fn wa_gradient_serial_with<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    params: &WaParams<'_, T>,
) -> Result<Forces<T>> {
    params.check(netlist)?;
    netlist.check_placement(placement)?;
    let g = params.gamma;
    let one = T::one();
    let mut grad_x = vec![T::zero(); netlist.pins.len()];
    let mut grad_y = vec![T::zero(); netlist.pins.len()];

    for net in &netlist.nets {
        if !params.active(net.degree()) {
            continue;
        }
        let w = params.weight(netlist, net.id);
        for axis in 0..2 {
            let coord = |p: usize| {
                let (x, y) = netlist.pin_position(p, placement);
                if axis == 0 {
                    x
                } else {
                    y
                }
            };
            let mut hi = T::neg_infinity();
            let mut lo = T::infinity();
            for &p in &net.pin_ids {
                let x = coord(p);
                hi = hi.max(x);
                lo = lo.min(x);
            }
            let (mut bp, mut bm, mut cp, mut cm) = (T::zero(), T::zero(), T::zero(), T::zero());
            for &p in &net.pin_ids {
                let x = coord(p);
                let ap = ((x - hi) / g).exp();
                let am = (-(x - lo) / g).exp();
                bp = bp + ap;
                bm = bm + am;
                cp = cp + x * ap;
                cm = cm + x * am;
            }
            let out = if axis == 0 { &mut grad_x } else { &mut grad_y };
            for &p in &net.pin_ids {
                let x = coord(p);
                let ap = ((x - hi) / g).exp();
                let am = (-(x - lo) / g).exp();
                let d = ((one + x / g) * bp - cp / g) / (bp * bp) * ap
                    - ((one - x / g) * bm + cm / g) / (bm * bm) * am;
                out[p] = w * d;
            }
        }
    }

    let mut f = Forces::zeros(netlist.instances.len());
    for inst in &netlist.instances {
        let (mut fx, mut fy) = (T::zero(), T::zero());
        for &p in &inst.pin_ids {
            fx = fx - grad_x[p];
            fy = fy - grad_y[p];
        }
        f.x[inst.id] = fx;
        f.y[inst.id] = fy;
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, Default)]
struct AxisNet<T> {
    hi: T,
    lo: T,
    b_plus: T,
    b_minus: T,
    c_plus: T,
    c_minus: T,
}

#[derive(Debug, Clone, Copy, Default)]
struct NetSlot<T> {
    x: AxisNet<T>,
    y: AxisNet<T>,
    weight: T,
    active: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct AxisPin<T> {
    coord: T,
    a_plus: T,
    a_minus: T,
    grad: T,
}

#[derive(Debug, Clone, Copy, Default)]
struct PinSlot<T> {
    x: AxisPin<T>,
    y: AxisPin<T>,
}

/// Scratch storage for [`wa_gradient_parallel`], sized to one netlist. Every
/// array is written through owned slots only, so it can be reused across
/// calls without clearing.
#[derive(Debug, Clone)]
pub struct WaWorkspace<T> {
    nets: Vec<NetSlot<T>>,
    pins: Vec<PinSlot<T>>,
    forces: Forces<T>,
}

impl<T: Scalar> WaWorkspace<T> {
    pub fn new(netlist: &Netlist<T>) -> Self {
        WaWorkspace {
            nets: vec![NetSlot::default(); netlist.nets.len()],
            pins: vec![PinSlot::default(); netlist.pins.len()],
            forces: Forces::zeros(netlist.instances.len()),
        }
    }

    fn check(&self, netlist: &Netlist<T>) -> Result<()> {
        let dims = [
            ("workspace nets", netlist.nets.len(), self.nets.len()),
            ("workspace pins", netlist.pins.len(), self.pins.len()),
            ("workspace instances", netlist.instances.len(), self.forces.len()),
        ];
        for (what, expected, got) in dims {
            if expected != got {
                return Err(PlaceError::Dimension {
                    what,
                    expected,
                    got,
                });
            }
        }
        Ok(())
    }

    /// The force vector written by the last gradient call.
    pub fn forces(&self) -> &Forces<T> {
        &self.forces
    }

    /// Shifted exponentials of the last call, `(a+_x, a-_x, a+_y, a-_y)` per pin.
    pub fn pin_exponentials(&self) -> impl Iterator<Item = (T, T, T, T)> + '_ {
        self.pins
            .iter()
            .map(|p| (p.x.a_plus, p.x.a_minus, p.y.a_plus, p.y.a_minus))
    }

    /// WA value implied by the sums of the last call.
    pub fn value(&self) -> T {
        self.nets
            .iter()
            .filter(|n| n.active)
            .map(|n| {
                let ax = n.x.c_plus / n.x.b_plus - n.x.c_minus / n.x.b_minus;
                let ay = n.y.c_plus / n.y.b_plus - n.y.c_minus / n.y.b_minus;
                n.weight * (ax + ay)
            })
            .sum()
    }
}

/// Five-phase parallel gradient on the current rayon pool:
///
/// 1. per net: `x+`, `x-`; zero `b`, `c`
/// 2. per pin: `a+`, `a-`
/// 3. per net: accumulate `b`, `c` over its pins in stored (ascending) order
/// 4. per pin: gradient
/// 5. per instance: force = `-sum` of its pins' gradients, ascending pin order
///
/// Each work item writes only its own slot, so the result is bitwise equal to
/// [`wa_gradient_serial`] and independent of the worker count.
pub fn wa_gradient_parallel<'w, T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    gamma: T,
    workspace: &'w mut WaWorkspace<T>,
) -> Result<&'w Forces<T>> {
    wa_gradient_parallel_with(netlist, placement, &WaParams::new(gamma), workspace)
}

pub fn wa_gradient_parallel_with<'w, T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    params: &WaParams<'_, T>,
    workspace: &'w mut WaWorkspace<T>,
) -> Result<&'w Forces<T>> {
    params.check(netlist)?;
    netlist.check_placement(placement)?;
    workspace.check(netlist)?;
    let g = params.gamma;
    let one = T::one();
    let WaWorkspace { nets, pins, forces } = workspace;

    // pin coordinates
    pins.par_iter_mut()
        .zip(netlist.pins.par_iter())
        .for_each(|(slot, pin)| {
            slot.x.coord = placement.x[pin.owner] + pin.offset_x;
            slot.y.coord = placement.y[pin.owner] + pin.offset_y;
        });

    // phase 1
    {
        let pins: &[PinSlot<T>] = pins;
        nets.par_iter_mut()
            .zip(netlist.nets.par_iter())
            .for_each(|(slot, net)| {
                slot.active = params.active(net.degree());
                slot.weight = params.weight(netlist, net.id);
                let (mut hx, mut lx) = (T::neg_infinity(), T::infinity());
                let (mut hy, mut ly) = (T::neg_infinity(), T::infinity());
                for &p in &net.pin_ids {
                    let pin = &pins[p];
                    hx = hx.max(pin.x.coord);
                    lx = lx.min(pin.x.coord);
                    hy = hy.max(pin.y.coord);
                    ly = ly.min(pin.y.coord);
                }
                slot.x = AxisNet {
                    hi: hx,
                    lo: lx,
                    ..AxisNet::default()
                };
                slot.y = AxisNet {
                    hi: hy,
                    lo: ly,
                    ..AxisNet::default()
                };
            });
    }

    // phase 2
    {
        let nets: &[NetSlot<T>] = nets;
        pins.par_iter_mut()
            .zip(netlist.pins.par_iter())
            .for_each(|(slot, pin)| {
                let net = &nets[pin.net];
                if !net.active {
                    slot.x.a_plus = T::zero();
                    slot.x.a_minus = T::zero();
                    slot.y.a_plus = T::zero();
                    slot.y.a_minus = T::zero();
                    return;
                }
                slot.x.a_plus = ((slot.x.coord - net.x.hi) / g).exp();
                slot.x.a_minus = (-(slot.x.coord - net.x.lo) / g).exp();
                slot.y.a_plus = ((slot.y.coord - net.y.hi) / g).exp();
                slot.y.a_minus = (-(slot.y.coord - net.y.lo) / g).exp();
            });
    }

    // phase 3
    {
        let pins: &[PinSlot<T>] = pins;
        nets.par_iter_mut()
            .zip(netlist.nets.par_iter())
            .for_each(|(slot, net)| {
                if !slot.active {
                    return;
                }
                for &p in &net.pin_ids {
                    let pin = &pins[p];
                    slot.x.b_plus = slot.x.b_plus + pin.x.a_plus;
                    slot.x.b_minus = slot.x.b_minus + pin.x.a_minus;
                    slot.x.c_plus = slot.x.c_plus + pin.x.coord * pin.x.a_plus;
                    slot.x.c_minus = slot.x.c_minus + pin.x.coord * pin.x.a_minus;
                    slot.y.b_plus = slot.y.b_plus + pin.y.a_plus;
                    slot.y.b_minus = slot.y.b_minus + pin.y.a_minus;
                    slot.y.c_plus = slot.y.c_plus + pin.y.coord * pin.y.a_plus;
                    slot.y.c_minus = slot.y.c_minus + pin.y.coord * pin.y.a_minus;
                }
            });
    }

    // phase 4
    {
        let nets: &[NetSlot<T>] = nets;
        let grad = |pin: &AxisPin<T>, net: &AxisNet<T>| {
            let x = pin.coord;
            let (bp, bm, cp, cm) = (net.b_plus, net.b_minus, net.c_plus, net.c_minus);
            ((one + x / g) * bp - cp / g) / (bp * bp) * pin.a_plus
                - ((one - x / g) * bm + cm / g) / (bm * bm) * pin.a_minus
        };
        pins.par_iter_mut()
            .zip(netlist.pins.par_iter())
            .for_each(|(slot, pin)| {
                let net = &nets[pin.net];
                if !net.active {
                    slot.x.grad = T::zero();
                    slot.y.grad = T::zero();
                    return;
                }
                slot.x.grad = net.weight * grad(&slot.x, &net.x);
                slot.y.grad = net.weight * grad(&slot.y, &net.y);
            });
    }

    // phase 5
    {
        let pins: &[PinSlot<T>] = pins;
        forces
            .x
            .par_iter_mut()
            .zip(forces.y.par_iter_mut())
            .zip(netlist.instances.par_iter())
            .for_each(|((fx, fy), inst)| {
                let (mut ax, mut ay) = (T::zero(), T::zero());
                for &p in &inst.pin_ids {
                    ax = ax - pins[p].x.grad;
                    ay = ay - pins[p].y.grad;
                }
                *fx = ax;
                *fy = ay;
            });
    }

    Ok(&workspace.forces)
}
