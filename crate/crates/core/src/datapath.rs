//! Local alignment groups: bit stacks named `<base>[<i>]` inside one cluster.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{PlaceError, Result};
use crate::hierarchy::{cluster_of, Cluster};
use crate::netlist::{Netlist, StarFragment};
use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentGroup {
    pub cluster: usize,
    pub base_name: String,
    /// Instance ids ordered by bit index.
    pub members: Vec<usize>,
}

/// Splits `base[17]` into `("base", 17)`.
pub fn split_bit_index(name: &str) -> Option<(&str, u64)> {
    let inner = name.strip_suffix(']')?;
    let open = inner.rfind('[')?;
    let digits = &inner[open + 1..];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((&inner[..open], digits.parse().ok()?))
}

/// Groups indexed instances by `(cluster, base)`. The same base in two
/// clusters gives two groups; singletons are dropped.
pub fn extract_alignment_groups<T: Scalar>(
    netlist: &Netlist<T>,
    clusters: &[Cluster<T>],
) -> Vec<AlignmentGroup> {
    let of = cluster_of(netlist.instances.len(), clusters);
    let mut groups: BTreeMap<(usize, &str), Vec<(u64, usize)>> = BTreeMap::new();
    for inst in &netlist.instances {
        let Some(c) = of[inst.id] else {
            continue;
        };
        if let Some((base, bit)) = split_bit_index(&inst.name) {
            groups.entry((c, base)).or_default().push((bit, inst.id));
        }
    }
    groups
        .into_iter()
        .filter(|(_, m)| m.len() >= 2)
        .map(|((cluster, base), mut m)| {
            m.sort_unstable();
            if m.windows(2).any(|w| w[0].0 == w[1].0) {
                log::warn!("duplicate bit index in group {base} of cluster {cluster}");
            }
            AlignmentGroup {
                cluster,
                base_name: base.to_string(),
                members: m.into_iter().map(|(_, id)| id).collect(),
            }
        })
        .collect()
}

/// Star-decomposes every group into the netlist with `penalty_weight` on
/// each arm, returning one fragment per group.
pub fn build_datapath_pseudonets<T: Scalar>(
    netlist: &mut Netlist<T>,
    groups: &[AlignmentGroup],
    penalty_weight: T,
) -> Result<Vec<StarFragment>> {
    groups
        .iter()
        .map(|g| netlist.star_decompose(&g.members, penalty_weight))
        .collect()
}

/// `<group_id> <cluster>:<base> <size>` per group, members indented below.
pub fn group_dump<T: Scalar>(netlist: &Netlist<T>, groups: &[AlignmentGroup]) -> String {
    let mut s = String::new();
    for (i, g) in groups.iter().enumerate() {
        let _ = writeln!(s, "{i} {}:{} {}", g.cluster, g.base_name, g.members.len());
        for &m in &g.members {
            let _ = writeln!(s, "  {}", netlist.instances[m].name);
        }
    }
    s
}

pub fn write_group_dump<T: Scalar>(
    netlist: &Netlist<T>,
    groups: &[AlignmentGroup],
    path: &Path,
) -> Result<()> {
    std::fs::write(path, group_dump(netlist, groups)).map_err(|e| PlaceError::io(path, e))
}
