//! Dataflow-driven analytical global placement for mixed-size netlists.
//!
//! The pipeline extracts a physical hierarchy from hierarchical instance
//! names, places the resulting clusters with register-hop dataflow
//! connections, seeds every instance at its cluster's center and finishes with
//! a Nesterov electrostatic placer that honours cluster and datapath pseudo
//! nets. All numeric code is generic over [`Scalar`] (`f32` / `f64`); the
//! `*64` / `*32` aliases below fix the precision.

pub mod bench;
pub mod dataflow;
pub mod datapath;
pub mod density;
pub mod error;
pub mod exchange;
pub mod hierarchy;
pub mod netlist;
pub mod num;
pub mod optimizer;
pub mod wirelength;

pub use error::{PlaceError, Result};
pub use num::Scalar;

pub type Netlist64 = netlist::Netlist<f64>;
pub type Netlist32 = netlist::Netlist<f32>;
pub type Placement64 = netlist::Placement<f64>;
pub type Placement32 = netlist::Placement<f32>;
pub type Rect64 = netlist::Rect<f64>;
