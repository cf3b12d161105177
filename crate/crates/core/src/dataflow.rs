//! Register-hop dataflow between clusters.
//!
//! From every sequential instance of a cluster the forward fanout is walked
//! with a 0-1 BFS: stepping into a combinational instance is free, stepping
//! into a sequential one costs a hop. The first sequential instance of
//! another cluster reached fixes the hop count for that source register.
//! A cluster pair's `info_flow` counts the source registers that reach the
//! destination at the pair's shortest hop count; the virtual connection
//! weight is `info_flow / 2^hops`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{PlaceError, Result};
use crate::hierarchy::{cluster_of, BundledNet, Cluster, ClusterNode, ClusteredNetlist};
use crate::netlist::Netlist;
use crate::num::Scalar;

pub const DEFAULT_HOP_LIMIT: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct DataflowEdge<T> {
    pub src_cluster: usize,
    pub dst_cluster: usize,
    pub info_flow: T,
    pub num_hops: u32,
    pub virtual_weight: T,
}

impl<T: Scalar> DataflowEdge<T> {
    pub fn new(src_cluster: usize, dst_cluster: usize, info_flow: T, num_hops: u32) -> Self {
        DataflowEdge {
            src_cluster,
            dst_cluster,
            info_flow,
            num_hops,
            virtual_weight: virtual_weight(info_flow, num_hops),
        }
    }
}

/// `info_flow / 2^hops`.
pub fn virtual_weight<T: Scalar>(info_flow: T, num_hops: u32) -> T {
    info_flow / T::of(2.0).powi(num_hops as i32)
}

/// Forward adjacency in CSR form: driver (first pin's owner) to sinks.
struct Fanout {
    start: Vec<usize>,
    to: Vec<usize>,
}

impl Fanout {
    fn build<T: Scalar>(netlist: &Netlist<T>) -> Self {
        let n = netlist.instances.len();
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for net in netlist.nets.iter().filter(|n| !n.is_pseudo) {
            let Some((&d, sinks)) = net.pin_ids.split_first() else {
                continue;
            };
            let driver = netlist.pins[d].owner;
            for &p in sinks {
                let s = netlist.pins[p].owner;
                if s != driver {
                    lists[driver].push(s);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut to = Vec::new();
        start.push(0);
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            to.extend(l);
            start.push(to.len());
        }
        Fanout { start, to }
    }

    fn of(&self, v: usize) -> &[usize] {
        &self.to[self.start[v]..self.start[v + 1]]
    }
}

/// Counts combinational instances that sit on a combinational cycle's
/// back edge (iterative DFS over combinational-to-combinational arcs).
fn combinational_back_edges<T: Scalar>(netlist: &Netlist<T>, fan: &Fanout) -> usize {
    let comb = |v: usize| {
        let i = &netlist.instances[v];
        i.is_physical_movable() && !i.is_sequential
    };
    let n = netlist.instances.len();
    // 0 unseen, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    let mut back = 0;
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in (0..n).filter(|&v| comb(v)) {
        if state[root] != 0 {
            continue;
        }
        state[root] = 1;
        stack.push((root, 0));
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let out = fan.of(v);
            if *next < out.len() {
                let w = out[*next];
                *next += 1;
                if !comb(w) {
                    continue;
                }
                match state[w] {
                    0 => {
                        state[w] = 1;
                        stack.push((w, 0));
                    }
                    1 => back += 1,
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    back
}

/// Dataflow edges between clusters, at most `hop_limit` register stages
/// apart. Output is sorted by `(src_cluster, dst_cluster)`.
pub fn register_hop_bfs<T: Scalar>(
    netlist: &Netlist<T>,
    clusters: &[Cluster<T>],
    hop_limit: u32,
) -> Vec<DataflowEdge<T>> {
    let n = netlist.instances.len();
    let of = cluster_of(n, clusters);
    let fan = Fanout::build(netlist);
    let cycles = combinational_back_edges(netlist, &fan);
    if cycles > 0 {
        log::warn!("{cycles} combinational cycle edge(s) in the netlist; dataflow traversal cuts them");
    }
    let seq = |v: usize| netlist.instances[v].is_sequential;

    let per_cluster: Vec<Vec<DataflowEdge<T>>> = clusters
        .par_iter()
        .map(|a| {
            let mut dist = vec![u32::MAX; n];
            let mut touched: Vec<usize> = Vec::new();
            let mut deque: VecDeque<usize> = VecDeque::new();
            // dst cluster -> (hops, source register count at that distance)
            let mut best: BTreeMap<usize, (u32, usize)> = BTreeMap::new();
            let mut reach: BTreeMap<usize, u32> = BTreeMap::new();
            for &src in a.members.iter().filter(|&&m| seq(m)) {
                for &t in &touched {
                    dist[t] = u32::MAX;
                }
                touched.clear();
                reach.clear();
                dist[src] = 0;
                touched.push(src);
                deque.push_back(src);
                while let Some(u) = deque.pop_front() {
                    let d = dist[u];
                    for &v in fan.of(u) {
                        let Some(cv) = of[v] else {
                            continue;
                        };
                        let step = u32::from(seq(v));
                        let nd = d + step;
                        if nd > hop_limit || nd >= dist[v] {
                            continue;
                        }
                        if dist[v] == u32::MAX {
                            touched.push(v);
                        }
                        dist[v] = nd;
                        if step == 0 {
                            deque.push_front(v);
                        } else {
                            deque.push_back(v);
                            if cv != a.id {
                                let e = reach.entry(cv).or_insert(nd);
                                *e = (*e).min(nd);
                            }
                        }
                    }
                }
                for (&b, &h) in &reach {
                    let e = best.entry(b).or_insert((h, 0));
                    if h < e.0 {
                        *e = (h, 1);
                    } else if h == e.0 {
                        e.1 += 1;
                    }
                }
            }
            best.into_iter()
                .map(|(b, (h, count))| DataflowEdge::new(a.id, b, T::of_usize(count), h))
                .collect()
        })
        .collect();
    let mut edges: Vec<DataflowEdge<T>> = per_cluster.into_iter().flatten().collect();
    edges.sort_by_key(|e| (e.src_cluster, e.dst_cluster));
    edges
}

/// Appends one virtual two-endpoint bundled net per edge. Opposite
/// directions stay separate nets.
pub fn inject_virtual_connections<'a, T: Scalar>(
    mut cnl: ClusteredNetlist<'a, T>,
    edges: &[DataflowEdge<T>],
) -> Result<ClusteredNetlist<'a, T>> {
    let k = cnl.clusters.len();
    for e in edges {
        if e.src_cluster >= k || e.dst_cluster >= k || e.src_cluster == e.dst_cluster {
            return Err(PlaceError::Constraint(format!(
                "dataflow edge {} -> {} does not join two existing clusters",
                e.src_cluster, e.dst_cluster
            )));
        }
        let mut endpoints = vec![
            ClusterNode::Cluster(e.src_cluster),
            ClusterNode::Cluster(e.dst_cluster),
        ];
        endpoints.sort_unstable();
        cnl.bundled_nets.push(BundledNet {
            endpoints,
            weight: e.virtual_weight,
            is_virtual: true,
        });
    }
    Ok(cnl)
}

/// `<srcLabel> <dstLabel> <info_flow> <hops> <weight>` per edge.
pub fn dataflow_dump<T: Scalar>(clusters: &[Cluster<T>], edges: &[DataflowEdge<T>]) -> String {
    let mut s = String::new();
    for e in edges {
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            clusters[e.src_cluster].label,
            clusters[e.dst_cluster].label,
            e.info_flow,
            e.num_hops,
            e.virtual_weight
        );
    }
    s
}

pub fn write_dataflow_dump<T: Scalar>(
    clusters: &[Cluster<T>],
    edges: &[DataflowEdge<T>],
    path: &Path,
) -> Result<()> {
    std::fs::write(path, dataflow_dump(clusters, edges)).map_err(|e| PlaceError::io(path, e))
}
