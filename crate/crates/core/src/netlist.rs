//! Flat mixed-size netlist model, geometry queries and the star transform.
//!
//! Instances, pins and nets live in dense vectors and refer to each other by
//! index. Coordinates are instance *centers*; a pin's absolute location is its
//! owner's center plus the pin offset. The first pin of a net is its driver.

use std::fmt;

use crate::error::{PlaceError, Result};
use crate::num::Scalar;

/// Axis-aligned rectangle `(lx, ly)`–`(ux, uy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub lx: T,
    pub ly: T,
    pub ux: T,
    pub uy: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(lx: T, ly: T, ux: T, uy: T) -> Self {
        Rect { lx, ly, ux, uy }
    }

    pub fn width(&self) -> T {
        self.ux - self.lx
    }

    pub fn height(&self) -> T {
        self.uy - self.ly
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn center(&self) -> (T, T) {
        let half = T::of(0.5);
        ((self.lx + self.ux) * half, (self.ly + self.uy) * half)
    }

    pub fn contains(&self, x: T, y: T) -> bool {
        x >= self.lx && x <= self.ux && y >= self.ly && y <= self.uy
    }
}

/// One `(x, y)` center per instance, terminals included.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Placement<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Scalar> Placement<T> {
    pub fn zeros(n: usize) -> Self {
        Placement {
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

    /// Every movable instance at `(x, y)`, terminals at their fixed spots.
    pub fn uniform(netlist: &Netlist<T>, x: T, y: T) -> Self {
        let mut p = Placement::zeros(netlist.instances.len());
        for inst in &netlist.instances {
            let (px, py) = inst.fixed_location.unwrap_or((x, y));
            p.x[inst.id] = px;
            p.y[inst.id] = py;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InstanceKind {
    StdCell,
    Macro,
    Terminal,
    StarCenter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    pub id: usize,
    pub name: String,
    pub width: T,
    pub height: T,
    pub kind: InstanceKind,
    pub is_sequential: bool,
    pub pin_ids: Vec<usize>,
    /// Set for terminals only.
    pub fixed_location: Option<(T, T)>,
}

impl<T: Scalar> Instance<T> {
    pub fn is_movable(&self) -> bool {
        self.kind != InstanceKind::Terminal
    }

    /// Movable and occupying area (std-cells and macros).
    pub fn is_physical_movable(&self) -> bool {
        matches!(self.kind, InstanceKind::StdCell | InstanceKind::Macro)
    }

    pub fn area(&self) -> T {
        self.width * self.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pin<T> {
    pub id: usize,
    pub owner: usize,
    pub offset_x: T,
    pub offset_y: T,
    pub net: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net<T> {
    pub id: usize,
    pub name: String,
    pub pin_ids: Vec<usize>,
    pub weight: T,
    pub is_pseudo: bool,
}

impl<T> Net<T> {
    pub fn degree(&self) -> usize {
        self.pin_ids.len()
    }

    pub fn driver(&self) -> Option<usize> {
        self.pin_ids.first().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist<T> {
    pub instances: Vec<Instance<T>>,
    pub pins: Vec<Pin<T>>,
    pub nets: Vec<Net<T>>,
    pub core: Rect<T>,
    pub row_height: T,
}

/// Pin endpoint description used when adding a net.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinSpec<T> {
    pub instance: usize,
    pub offset_x: T,
    pub offset_y: T,
}

impl<T: Scalar> PinSpec<T> {
    pub fn at(instance: usize, offset_x: T, offset_y: T) -> Self {
        PinSpec {
            instance,
            offset_x,
            offset_y,
        }
    }

    pub fn center(instance: usize) -> Self {
        PinSpec::at(instance, T::zero(), T::zero())
    }
}

/// Output of [`Netlist::star_decompose`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarFragment {
    pub center: usize,
    pub nets: Vec<usize>,
}

impl<T: Scalar> Netlist<T> {
    pub fn new(core: Rect<T>, row_height: T) -> Self {
        Netlist {
            instances: Vec::new(),
            pins: Vec::new(),
            nets: Vec::new(),
            core,
            row_height,
        }
    }

    pub fn add_instance(
        &mut self,
        name: impl Into<String>,
        width: T,
        height: T,
        kind: InstanceKind,
        is_sequential: bool,
    ) -> usize {
        let id = self.instances.len();
        self.instances.push(Instance {
            id,
            name: name.into(),
            width,
            height,
            kind,
            is_sequential,
            pin_ids: Vec::new(),
            fixed_location: None,
        });
        id
    }

    pub fn add_terminal(&mut self, name: impl Into<String>, x: T, y: T) -> usize {
        let id = self.add_instance(name, T::zero(), T::zero(), InstanceKind::Terminal, false);
        self.instances[id].fixed_location = Some((x, y));
        id
    }

    /// Adds a net and creates one fresh pin per entry of `pins`, in order.
    /// The first entry is the driver.
    pub fn add_net(&mut self, name: impl Into<String>, pins: &[PinSpec<T>]) -> Result<usize> {
        self.add_weighted_net(name, pins, T::one(), false)
    }

    pub fn add_weighted_net(
        &mut self,
        name: impl Into<String>,
        pins: &[PinSpec<T>],
        weight: T,
        is_pseudo: bool,
    ) -> Result<usize> {
        if let Some(bad) = pins.iter().find(|p| p.instance >= self.instances.len()) {
            return Err(PlaceError::Constraint(format!(
                "net references missing instance {}",
                bad.instance
            )));
        }
        if weight < T::zero() {
            return Err(PlaceError::Parameter("net weight must be nonnegative".into()));
        }
        let net_id = self.nets.len();
        let mut pin_ids = Vec::with_capacity(pins.len());
        for spec in pins {
            let pid = self.pins.len();
            self.pins.push(Pin {
                id: pid,
                owner: spec.instance,
                offset_x: spec.offset_x,
                offset_y: spec.offset_y,
                net: net_id,
            });
            self.instances[spec.instance].pin_ids.push(pid);
            pin_ids.push(pid);
        }
        self.nets.push(Net {
            id: net_id,
            name: name.into(),
            pin_ids,
            weight,
            is_pseudo,
        });
        Ok(net_id)
    }

    /// Replaces a group constraint over `members` with a zero-area star
    /// center and one two-pin pseudo net per member (member center to star
    /// center), each carrying `penalty_weight`.
    pub fn star_decompose(&mut self, members: &[usize], penalty_weight: T) -> Result<StarFragment> {
        if members.len() < 2 {
            return Err(PlaceError::Constraint(format!(
                "star needs at least 2 members, got {}",
                members.len()
            )));
        }
        let tag = self
            .instances
            .iter()
            .filter(|i| i.kind == InstanceKind::StarCenter)
            .count();
        let center = self.add_instance(
            format!("__star{tag}"),
            T::zero(),
            T::zero(),
            InstanceKind::StarCenter,
            false,
        );
        let mut nets = Vec::with_capacity(members.len());
        for (k, &m) in members.iter().enumerate() {
            let id = self.add_weighted_net(
                format!("__star{tag}/{k}"),
                &[PinSpec::center(m), PinSpec::center(center)],
                penalty_weight,
                true,
            )?;
            nets.push(id);
        }
        Ok(StarFragment { center, nets })
    }

    pub fn movable_count(&self) -> usize {
        self.instances
            .iter()
            .filter(|i| i.is_physical_movable())
            .count()
    }

    pub fn movable_area(&self) -> T {
        self.instances
            .iter()
            .filter(|i| i.is_physical_movable())
            .map(|i| i.area())
            .sum()
    }

    pub fn check_placement(&self, placement: &Placement<T>) -> Result<()> {
        let n = self.instances.len();
        if placement.x.len() != n || placement.y.len() != n {
            return Err(PlaceError::Dimension {
                what: "placement",
                expected: n,
                got: placement.x.len().min(placement.y.len()),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn pin_position(&self, pin: usize, placement: &Placement<T>) -> (T, T) {
        let p = &self.pins[pin];
        (
            placement.x[p.owner] + p.offset_x,
            placement.y[p.owner] + p.offset_y,
        )
    }

    /// Half-perimeter bounding box of one net, unweighted.
    pub fn net_hpwl(&self, net: usize, placement: &Placement<T>) -> T {
        let net = &self.nets[net];
        if net.pin_ids.len() < 2 {
            return T::zero();
        }
        let (mut x0, mut x1) = (T::infinity(), T::neg_infinity());
        let (mut y0, mut y1) = (T::infinity(), T::neg_infinity());
        for &p in &net.pin_ids {
            let (x, y) = self.pin_position(p, placement);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        (x1 - x0) + (y1 - y0)
    }
}

/// Weighted HPWL over all design nets. Pseudo nets are constraints, not wire,
/// and are skipped.
pub fn hpwl<T: Scalar>(netlist: &Netlist<T>, placement: &Placement<T>) -> Result<T> {
    netlist.check_placement(placement)?;
    Ok(netlist
        .nets
        .iter()
        .filter(|n| !n.is_pseudo)
        .map(|n| n.weight * netlist.net_hpwl(n.id, placement))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DanglingPin { pin: usize, net: usize },
    PinOwnerMissing { pin: usize, owner: usize },
    PinNotListedByOwner { pin: usize, owner: usize },
    PinOffInstance { pin: usize },
    NetPinMissing { net: usize, pin: usize },
    NetPinMismatch { net: usize, pin: usize },
    DuplicatePin { net: usize, pin: usize },
    NegativeWeight { net: usize },
    ZeroAreaMovable { instance: usize },
    StarCenterWithArea { instance: usize },
    InstancePinMissing { instance: usize, pin: usize },
    TerminalUnplaced { instance: usize },
    TerminalOutsideCore { instance: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DanglingPin { pin, net } => write!(f, "pin {pin} references missing net {net}"),
            PinOwnerMissing { pin, owner } => {
                write!(f, "pin {pin} references missing instance {owner}")
            }
            PinNotListedByOwner { pin, owner } => {
                write!(f, "pin {pin} not listed by its owner {owner}")
            }
            PinOffInstance { pin } => write!(f, "pin {pin} lies outside its instance"),
            NetPinMissing { net, pin } => write!(f, "net {net} references missing pin {pin}"),
            NetPinMismatch { net, pin } => {
                write!(f, "net {net} lists pin {pin} which belongs to another net")
            }
            DuplicatePin { net, pin } => write!(f, "net {net} lists pin {pin} twice"),
            NegativeWeight { net } => write!(f, "net {net} has a negative weight"),
            ZeroAreaMovable { instance } => {
                write!(f, "movable instance {instance} has zero area")
            }
            StarCenterWithArea { instance } => {
                write!(f, "star center {instance} has nonzero size")
            }
            InstancePinMissing { instance, pin } => {
                write!(f, "instance {instance} lists missing or foreign pin {pin}")
            }
            TerminalUnplaced { instance } => write!(f, "terminal {instance} has no location"),
            TerminalOutsideCore { instance } => {
                write!(f, "terminal {instance} lies outside the core region")
            }
        }
    }
}

/// Lists every broken invariant. An empty report means the netlist is valid.
pub fn validate<T: Scalar>(netlist: &Netlist<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let n_inst = netlist.instances.len();
    let n_pins = netlist.pins.len();
    let n_nets = netlist.nets.len();
    let half = T::of(0.5);
    let slack = T::of(1e-9);

    for pin in &netlist.pins {
        if pin.net >= n_nets {
            out.push(Violation::DanglingPin {
                pin: pin.id,
                net: pin.net,
            });
        }
        if pin.owner >= n_inst {
            out.push(Violation::PinOwnerMissing {
                pin: pin.id,
                owner: pin.owner,
            });
            continue;
        }
        let owner = &netlist.instances[pin.owner];
        if !owner.pin_ids.contains(&pin.id) {
            out.push(Violation::PinNotListedByOwner {
                pin: pin.id,
                owner: pin.owner,
            });
        }
        if pin.offset_x.abs() > owner.width * half + slack
            || pin.offset_y.abs() > owner.height * half + slack
        {
            out.push(Violation::PinOffInstance { pin: pin.id });
        }
    }

    for net in &netlist.nets {
        let mut seen = std::collections::HashSet::with_capacity(net.pin_ids.len());
        for &p in &net.pin_ids {
            if !seen.insert(p) {
                out.push(Violation::DuplicatePin { net: net.id, pin: p });
            }
            match netlist.pins.get(p) {
                None => out.push(Violation::NetPinMissing { net: net.id, pin: p }),
                // a pin whose own net index is out of range was reported above
                Some(pin) if pin.net < n_nets && pin.net != net.id => {
                    out.push(Violation::NetPinMismatch { net: net.id, pin: p })
                }
                _ => {}
            }
        }
        if net.weight < T::zero() {
            out.push(Violation::NegativeWeight { net: net.id });
        }
    }

    for inst in &netlist.instances {
        for &p in &inst.pin_ids {
            if p >= n_pins || netlist.pins[p].owner != inst.id {
                out.push(Violation::InstancePinMissing {
                    instance: inst.id,
                    pin: p,
                });
            }
        }
        match inst.kind {
            InstanceKind::StdCell | InstanceKind::Macro => {
                if !(inst.width > T::zero() && inst.height > T::zero()) {
                    out.push(Violation::ZeroAreaMovable { instance: inst.id });
                }
            }
            InstanceKind::StarCenter => {
                if inst.width != T::zero() || inst.height != T::zero() {
                    out.push(Violation::StarCenterWithArea { instance: inst.id });
                }
            }
            InstanceKind::Terminal => match inst.fixed_location {
                None => out.push(Violation::TerminalUnplaced { instance: inst.id }),
                Some((x, y)) if !netlist.core.contains(x, y) => {
                    out.push(Violation::TerminalOutsideCore { instance: inst.id })
                }
                _ => {}
            },
        }
    }
    out
}
