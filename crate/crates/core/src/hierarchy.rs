//! Physical hierarchy extraction by name-prefix clustering.
//!
//! Instance names are read as `/`-separated paths. The prefix tree is walked
//! breadth-first from the root; any prefix whose subtree fits under
//! `max_size` becomes one cluster, larger ones are opened up. Instances
//! sitting directly under an opened prefix are sliced by index. Undersized
//! clusters at one level are then folded into their smallest sibling.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{PlaceError, Result};
use crate::netlist::{InstanceKind, Netlist};
use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    pub id: usize,
    /// Instance ids in ascending order.
    pub members: Vec<usize>,
    pub total_area: T,
    pub label: String,
    pub contains_macro: bool,
}

impl<T> Cluster<T> {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Default)]
struct PrefixNode {
    children: BTreeMap<String, PrefixNode>,
    direct: Vec<usize>,
    size: usize,
}

impl PrefixNode {
    fn insert(&mut self, path: &[&str], id: usize) {
        self.size += 1;
        match path.split_first() {
            None => self.direct.push(id),
            Some((head, rest)) => self
                .children
                .entry((*head).to_string())
                .or_default()
                .insert(rest, id),
        }
    }

    fn collect(&self, out: &mut Vec<usize>) {
        out.extend_from_slice(&self.direct);
        for c in self.children.values() {
            c.collect(out);
        }
    }
}

fn join(prefix: &str, part: &str) -> String {
    if prefix.is_empty() {
        part.to_string()
    } else {
        format!("{prefix}/{part}")
    }
}

/// Instances that get clustered: movable cells and macros.
fn clusterable<T: Scalar>(netlist: &Netlist<T>) -> impl Iterator<Item = usize> + '_ {
    netlist
        .instances
        .iter()
        .filter(|i| i.is_physical_movable())
        .map(|i| i.id)
}

/// Groups at one level before merging: (label, members).
type Group = (String, Vec<usize>);

fn merge_undersized(groups: &mut Vec<Group>, min_size: usize, max_size: usize) {
    loop {
        let Some(small) = (0..groups.len())
            .filter(|&g| groups[g].1.len() < min_size)
            .min_by_key(|&g| (groups[g].1.len(), g))
        else {
            return;
        };
        let n = groups[small].1.len();
        let Some(into) = (0..groups.len())
            .filter(|&g| g != small && groups[g].1.len() + n <= max_size)
            .min_by_key(|&g| (groups[g].1.len(), g))
        else {
            return;
        };
        let (label, members) = groups[small].clone();
        let keep_label = groups[into].1.len() < n;
        let target = &mut groups[into];
        target.1.extend(members);
        if keep_label {
            target.0 = label;
        }
        groups.remove(small);
    }
}

fn slice(label: &str, ids: &[usize], max_size: usize) -> Vec<Group> {
    ids.chunks(max_size).map(|c| (label.to_string(), c.to_vec())).collect()
}

/// Clusters the movable instances of `netlist` by hierarchy prefix.
///
/// Clusters come out in breadth-first order of the prefix tree (children in
/// sorted order), so the result is a pure function of names and bounds.
pub fn extract_hierarchy<T: Scalar>(
    netlist: &Netlist<T>,
    min_size: usize,
    max_size: usize,
) -> Result<Vec<Cluster<T>>> {
    if min_size < 1 || min_size > max_size {
        return Err(PlaceError::Parameter(format!(
            "cluster bounds need 1 <= min_size <= max_size, got {min_size}..{max_size}"
        )));
    }
    let ids: Vec<usize> = clusterable(netlist).collect();
    let mut groups: Vec<Group> = Vec::new();

    let hierarchical = ids
        .iter()
        .any(|&i| netlist.instances[i].name.contains('/'));
    if !hierarchical {
        if !ids.is_empty() {
            log::warn!("no hierarchical names; slicing {} instances by index", ids.len());
        }
        groups = slice("", &ids, max_size);
    } else {
        let mut root = PrefixNode::default();
        for &i in &ids {
            let name = &netlist.instances[i].name;
            let parts: Vec<&str> = name.split('/').collect();
            root.insert(&parts[..parts.len() - 1], i);
        }
        let mut queue: VecDeque<(String, &PrefixNode)> = VecDeque::new();
        queue.push_back((String::new(), &root));
        while let Some((prefix, node)) = queue.pop_front() {
            if node.size <= max_size {
                let mut m = Vec::with_capacity(node.size);
                node.collect(&mut m);
                groups.push((prefix, m));
                continue;
            }
            let mut level: Vec<Group> = Vec::new();
            for (name, child) in &node.children {
                let p = join(&prefix, name);
                if child.size <= max_size {
                    let mut m = Vec::with_capacity(child.size);
                    child.collect(&mut m);
                    level.push((p, m));
                } else {
                    queue.push_back((p, child));
                }
            }
            level.extend(slice(&prefix, &node.direct, max_size));
            merge_undersized(&mut level, min_size, max_size);
            groups.extend(level);
        }
    }

    Ok(groups
        .into_iter()
        .filter(|(_, m)| !m.is_empty())
        .enumerate()
        .map(|(id, (label, mut members))| {
            members.sort_unstable();
            let total_area = members
                .iter()
                .map(|&i| netlist.instances[i].area())
                .fold(T::zero(), |a, b| a + b);
            let contains_macro = members
                .iter()
                .any(|&i| netlist.instances[i].kind == InstanceKind::Macro);
            Cluster {
                id,
                members,
                total_area,
                label: if label.is_empty() { "/".into() } else { label },
                contains_macro,
            }
        })
        .collect())
}

/// Cluster id per instance, `None` for instances outside every cluster.
pub fn cluster_of<T>(instance_count: usize, clusters: &[Cluster<T>]) -> Vec<Option<usize>> {
    let mut of = vec![None; instance_count];
    for c in clusters {
        for &m in &c.members {
            of[m] = Some(c.id);
        }
    }
    of
}

/// Endpoint of a bundled net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClusterNode {
    Cluster(usize),
    /// A fixed terminal, by instance id; acts as its own singleton cluster.
    Terminal(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundledNet<T> {
    /// Distinct endpoints in sorted order.
    pub endpoints: Vec<ClusterNode>,
    pub weight: T,
    /// Dataflow virtual connection rather than collapsed wiring.
    pub is_virtual: bool,
}

#[derive(Debug, Clone)]
pub struct ClusteredNetlist<'a, T: Scalar> {
    pub origin: &'a Netlist<T>,
    pub clusters: Vec<Cluster<T>>,
    pub bundled_nets: Vec<BundledNet<T>>,
}

/// Collapses every flat net onto the set of clusters (and terminals) it
/// touches. Nets that stay inside one cluster vanish; identical endpoint
/// sets add up, one unit per flat net.
pub fn build_clustered_netlist<'a, T: Scalar>(
    netlist: &'a Netlist<T>,
    clusters: Vec<Cluster<T>>,
) -> Result<ClusteredNetlist<'a, T>> {
    let of = cluster_of(netlist.instances.len(), &clusters);
    let covered = of.iter().filter(|c| c.is_some()).count();
    let total: usize = clusters.iter().map(|c| c.size()).sum();
    if covered != total {
        return Err(PlaceError::Constraint(
            "clusters overlap: an instance is listed twice".into(),
        ));
    }
    let mut bundles: BTreeMap<Vec<ClusterNode>, usize> = BTreeMap::new();
    for net in netlist.nets.iter().filter(|n| !n.is_pseudo) {
        let mut ends: Vec<ClusterNode> = net
            .pin_ids
            .iter()
            .filter_map(|&p| {
                let owner = netlist.pins[p].owner;
                match of[owner] {
                    Some(c) => Some(ClusterNode::Cluster(c)),
                    None if netlist.instances[owner].kind == InstanceKind::Terminal => {
                        Some(ClusterNode::Terminal(owner))
                    }
                    None => None,
                }
            })
            .collect();
        ends.sort_unstable();
        ends.dedup();
        if ends.len() >= 2 {
            *bundles.entry(ends).or_default() += 1;
        }
    }
    let bundled_nets = bundles
        .into_iter()
        .map(|(endpoints, count)| BundledNet {
            endpoints,
            weight: T::of_usize(count),
            is_virtual: false,
        })
        .collect();
    Ok(ClusteredNetlist {
        origin: netlist,
        clusters,
        bundled_nets,
    })
}

/// `<cluster_id> <label> <size>` per cluster, each followed by its member
/// names indented by two spaces.
pub fn cluster_dump<T: Scalar>(netlist: &Netlist<T>, clusters: &[Cluster<T>]) -> String {
    let mut s = String::new();
    for c in clusters {
        let _ = writeln!(s, "{} {} {}", c.id, c.label, c.size());
        for &m in &c.members {
            let _ = writeln!(s, "  {}", netlist.instances[m].name);
        }
    }
    s
}

pub fn write_cluster_dump<T: Scalar>(
    netlist: &Netlist<T>,
    clusters: &[Cluster<T>],
    path: &Path,
) -> Result<()> {
    std::fs::write(path, cluster_dump(netlist, clusters)).map_err(|e| PlaceError::io(path, e))
}

/// Adjusted Rand index between two labelings of the same items.
///
/// 1.0 means identical partitions up to relabeling. Two partitions that are
/// both a single block (or both all singletons) also score 1.0.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut ra: BTreeMap<usize, u64> = BTreeMap::new();
    let mut rb: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let c2 = |v: u64| (v * v.saturating_sub(1) / 2) as f64;
    let index: f64 = table.values().map(|&v| c2(v)).sum();
    let sa: f64 = ra.values().map(|&v| c2(v)).sum();
    let sb: f64 = rb.values().map(|&v| c2(v)).sum();
    let expected = sa * sb / c2(n as u64);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
