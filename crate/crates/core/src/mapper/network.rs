use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::union_find::UnionFind;

/// A cluster found in one bin: a vertex of the nerve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub node_id: usize,
    pub bin: usize,
    /// Global row ids, ascending.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    /// Number of shared rows.
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct NetworkRepr {
    nodes: Vec<Cluster>,
    edges: Vec<Edge>,
}

/// 1-skeleton of the nerve of the pullback cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "NetworkRepr", into = "NetworkRepr")]
pub struct TopologicalNetwork {
    pub nodes: Vec<Cluster>,
    /// `source < target`, sorted.
    pub edges: Vec<Edge>,
    row_to_nodes: BTreeMap<usize, Vec<usize>>,
}

impl From<NetworkRepr> for TopologicalNetwork {
    fn from(r: NetworkRepr) -> Self {
        let row_to_nodes = index_rows(&r.nodes);
        TopologicalNetwork {
            nodes: r.nodes,
            edges: r.edges,
            row_to_nodes,
        }
    }
}

impl From<TopologicalNetwork> for NetworkRepr {
    fn from(n: TopologicalNetwork) -> Self {
        NetworkRepr {
            nodes: n.nodes,
            edges: n.edges,
        }
    }
}

fn index_rows(nodes: &[Cluster]) -> BTreeMap<usize, Vec<usize>> {
    let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for node in nodes {
        for &r in &node.rows {
            map.entry(r).or_default().push(node.node_id);
        }
    }
    map
}

impl TopologicalNetwork {
    /// Nodes containing `row`, ascending.
    pub fn nodes_of(&self, row: usize) -> &[usize] {
        self.row_to_nodes.get(&row).map_or(&[], Vec::as_slice)
    }

    pub fn row_to_nodes(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.row_to_nodes
    }

    /// Rows appearing in at least one node, ascending.
    pub fn rows(&self) -> Vec<usize> {
        self.row_to_nodes.keys().copied().collect()
    }

    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.source == node {
                    Some(e.target)
                } else if e.target == node {
                    Some(e.source)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// Nodes numbered in `(bin, cluster order)` order; an edge for every pair of
/// clusters sharing rows, weighted by the size of the intersection.
pub fn build_network(per_bin: Vec<(usize, Vec<Vec<usize>>)>) -> TopologicalNetwork {
    let mut per_bin = per_bin;
    per_bin.sort_by_key(|(b, _)| *b);
    let mut nodes = Vec::new();
    for (bin, clusters) in per_bin {
        for rows in clusters {
            if rows.is_empty() {
                continue;
            }
            nodes.push(Cluster {
                node_id: nodes.len(),
                bin,
                rows,
            });
        }
    }
    let row_to_nodes = index_rows(&nodes);
    let mut weights: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for ids in row_to_nodes.values() {
        for (i, &u) in ids.iter().enumerate() {
            for &v in &ids[i + 1..] {
                *weights.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
    }
    let edges = weights
        .into_iter()
        .map(|((source, target), weight)| Edge { source, target, weight })
        .collect();
    TopologicalNetwork {
        nodes,
        edges,
        row_to_nodes,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub nodes: Vec<usize>,
    pub rows: Vec<usize>,
}

/// Connected components, largest row set first; ties go to the component
/// holding the smaller node id.
pub fn connected_components(net: &TopologicalNetwork) -> Vec<Component> {
    let mut uf = UnionFind::new(net.nodes.len());
    for e in &net.edges {
        uf.union(e.source, e.target);
    }
    let mut comps: Vec<Component> = uf
        .groups()
        .into_iter()
        .map(|nodes| {
            let mut rows: Vec<usize> = nodes.iter().flat_map(|&n| net.nodes[n].rows.iter().copied()).collect();
            rows.sort_unstable();
            rows.dedup();
            Component { nodes, rows }
        })
        .collect();
    comps.sort_by(|a, b| b.rows.len().cmp(&a.rows.len()).then(a.nodes[0].cmp(&b.nodes[0])));
    comps
}
