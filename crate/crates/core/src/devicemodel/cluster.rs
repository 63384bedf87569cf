//! Linked-cluster expansion of the effective qudit Hamiltonian.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use super::device::BareDevice;
use super::sw::{BareSystem, EffectiveOperator, SwOptions};
use crate::error::{domain, Result};

/// Connected set of device nodes (sorted).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cluster {
    pub nodes: Vec<usize>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_subset_of(&self, other: &Cluster) -> bool {
        self.nodes.iter().all(|n| other.nodes.binary_search(n).is_ok())
    }
}

fn neighbours(nnodes: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); nnodes];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Whether `nodes` induces a connected subgraph.
pub fn is_connected(nodes: &[usize], edges: &[(usize, usize)]) -> bool {
    let Some(&first) = nodes.first() else {
        return false;
    };
    let set: BTreeSet<usize> = nodes.iter().copied().collect();
    let mut seen = BTreeSet::from([first]);
    let mut stack = vec![first];
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            let w = if a == v { b } else if b == v { a } else { continue };
            if set.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == set.len()
}

/// Every connected node subset of size at most `kmax`, ordered by size and
/// then lexicographically.
pub fn enumerate_clusters(nnodes: usize, edges: &[(usize, usize)], kmax: usize) -> Vec<Cluster> {
    let adj = neighbours(nnodes, edges);
    let mut all: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    let mut layer: BTreeSet<Vec<usize>> = if kmax == 0 { BTreeSet::new() } else { (0..nnodes).map(|v| vec![v]).collect() };
    while !layer.is_empty() {
        let mut next = BTreeSet::new();
        for c in &layer {
            all.insert((c.len(), c.clone()));
            if c.len() == kmax {
                continue;
            }
            for &v in c {
                for &w in &adj[v] {
                    if c.binary_search(&w).is_err() {
                        let mut g = c.clone();
                        g.push(w);
                        g.sort_unstable();
                        next.insert(g);
                    }
                }
            }
        }
        layer = next;
    }
    all.into_iter().map(|(_, nodes)| Cluster { nodes }).collect()
}

/// `W(c) = H_eff(c) − Σ_{c′ ⊊ c} W(c′)`, with `heffs` aligned to `clusters`.
///
/// Fails when some connected subcluster of a listed cluster is missing, since
/// the recursion would then double count.
pub fn cluster_weights(
    edges: &[(usize, usize)],
    clusters: &[Cluster],
    heffs: &[EffectiveOperator],
) -> Result<Vec<EffectiveOperator>> {
    if clusters.len() != heffs.len() {
        return domain("one effective Hamiltonian is needed per cluster");
    }
    let index: HashMap<&Cluster, usize> = clusters.iter().enumerate().map(|(i, c)| (c, i)).collect();
    for c in clusters {
        if !is_connected(&c.nodes, edges) {
            return domain(format!("cluster {:?} is not connected", c.nodes));
        }
        if c.size() > 1 {
            for skip in 0..c.size() {
                let sub: Vec<usize> = c.nodes.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v).collect();
                if is_connected(&sub, edges) && !index.contains_key(&Cluster { nodes: sub.clone() }) {
                    return domain(format!("missing subcluster {sub:?} of {:?}", c.nodes));
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by_key(|&i| (clusters[i].size(), i));
    let mut weights = vec![EffectiveOperator::default(); clusters.len()];
    for &i in &order {
        let mut w = heffs[i].clone();
        for &j in &order {
            if clusters[j].size() >= clusters[i].size() {
                break;
            }
            if clusters[j].is_subset_of(&clusters[i]) {
                w.add_scaled(&weights[j], -1.0);
            }
        }
        weights[i] = w;
    }
    Ok(weights)
}

/// Sum of cluster weights.
pub fn aggregate(weights: &[EffectiveOperator]) -> EffectiveOperator {
    let mut total = EffectiveOperator::default();
    for w in weights {
        total.add_scaled(w, 1.0);
    }
    total
}

/// Effective Hamiltonian of one cluster, labelled by global qudit index.
pub fn cluster_heff(device: &BareDevice, cluster: &Cluster, opts: &SwOptions) -> Result<EffectiveOperator> {
    let qudits = device.qudits();
    let sub = device.subdevice(&cluster.nodes);
    let map: Vec<usize> = cluster
        .nodes
        .iter()
        .filter_map(|v| qudits.iter().position(|q| q == v))
        .collect();
    let local = BareSystem::new(&sub)?.effective_operator(opts)?;
    Ok(local.relabel(&map))
}

/// Clusters, their weights and the aggregated operator.
#[derive(Debug, Clone)]
pub struct ClusterExpansion {
    pub kmax: usize,
    pub clusters: Vec<Cluster>,
    pub weights: Vec<EffectiveOperator>,
    pub total: EffectiveOperator,
}

impl ClusterExpansion {
    /// Aggregate truncated to clusters of at most `k` nodes; weights do not
    /// depend on the truncation, so this equals a fresh expansion at `k`.
    pub fn total_up_to(&self, k: usize) -> EffectiveOperator {
        let mut t = EffectiveOperator::default();
        for (c, w) in self.clusters.iter().zip(&self.weights) {
            if c.size() <= k {
                t.add_scaled(w, 1.0);
            }
        }
        t
    }

    /// `(k, max per-term change from k−1 to k)` for `k = 2..=kmax`.
    pub fn convergence(&self) -> Vec<(usize, f64)> {
        (2..=self.kmax)
            .map(|k| (k, self.total_up_to(k).max_difference(&self.total_up_to(k - 1))))
            .collect()
    }
}

/// Run the expansion with clusters up to `kmax` nodes; cluster Hamiltonians
/// are computed in parallel.
pub fn linked_cluster_expansion(device: &BareDevice, kmax: usize, opts: &SwOptions) -> Result<ClusterExpansion> {
    if kmax == 0 {
        return domain("kmax must be at least 1");
    }
    let edges = device.edges();
    let clusters = enumerate_clusters(device.nnodes(), &edges, kmax);
    let heffs = clusters
        .par_iter()
        .map(|c| cluster_heff(device, c, opts))
        .collect::<Result<Vec<_>>>()?;
    let weights = cluster_weights(&edges, &clusters, &heffs)?;
    let total = aggregate(&weights);
    Ok(ClusterExpansion {
        kmax,
        clusters,
        weights,
        total,
    })
}

/// Largest coefficient change when every node keeps one more level and the
/// total cutoff grows by one.
pub fn truncation_sensitivity(device: &BareDevice, kmax: usize, opts: &SwOptions) -> Result<f64> {
    let base = linked_cluster_expansion(device, kmax, opts)?.total;
    let mut more = device.clone();
    for n in &mut more.nodes {
        n.levels += 1;
    }
    more.max_total += 1;
    Ok(linked_cluster_expansion(&more, kmax, opts)?.total.max_difference(&base))
}
