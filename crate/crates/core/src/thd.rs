//! The decomposition driver. Each group runs MAPPER at increasing
//! resolution until its network has at least two connected components of
//! `split_threshold` rows or more; those components become child groups and
//! are decomposed in turn. Rows in smaller components are the node's
//! outliers.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{label_distribution, to_hex, Dataset, Group};
use crate::error::{Result, ThdError};
use crate::geometry::{Lens, Metric};
use crate::mapper::{connected_components, CoverParams, PreparedGroup, TopologicalNetwork, DEFAULT_HISTOGRAM_BINS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThdParams {
    pub initial_resolution: usize,
    pub resolution_increment: usize,
    /// Held fixed for the whole decomposition.
    pub gain: f64,
    pub split_threshold: usize,
    pub max_resolution: usize,
    pub histogram_bins: usize,
    pub metric: Metric,
    pub lens: Lens,
}

impl Default for ThdParams {
    fn default() -> Self {
        ThdParams {
            initial_resolution: 1,
            resolution_increment: 1,
            gain: 2.7,
            split_threshold: 20,
            max_resolution: 100,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            metric: Metric::Vne,
            lens: Lens::nhl(),
        }
    }
}

impl ThdParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ThdError::InvalidParameter(m));
        if self.initial_resolution < 1 {
            return bad("initial_resolution must be >= 1".into());
        }
        if self.resolution_increment < 1 {
            return bad("resolution_increment must be >= 1".into());
        }
        if self.split_threshold < 1 {
            return bad("split_threshold must be >= 1".into());
        }
        if self.max_resolution < self.initial_resolution {
            return bad("max_resolution must be >= initial_resolution".into());
        }
        if self.histogram_bins < 1 {
            return bad("histogram_bins must be >= 1".into());
        }
        match self.lens {
            Lens::Mds { dims } if !(1..=2).contains(&dims) => return bad(format!("MDS dims must be 1 or 2, got {dims}")),
            Lens::Nhl { k_neighbors: 0 } => return bad("k_neighbors must be >= 1".into()),
            _ => {}
        }
        CoverParams::new(self.initial_resolution, self.gain).map(|_| ())
    }

    /// Upper bound on MAPPER runs per node.
    pub fn max_runs_per_node(&self) -> usize {
        (self.max_resolution - self.initial_resolution) / self.resolution_increment + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    /// Components with at least `split_threshold` rows.
    pub large_components: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionStep {
    pub resolution: usize,
    pub summary: NetworkSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThdNode {
    /// Dotted path such as `1.2.1`; the root is `1`.
    pub id: String,
    pub group: Group,
    pub resolution_history: Vec<ResolutionStep>,
    /// Network at the resolution where this node split or gave up.
    pub network: TopologicalNetwork,
    pub children: Vec<ThdNode>,
    /// Rows of components below the threshold at the split, ascending.
    pub outliers: Vec<usize>,
}

impl ThdNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.id.matches('.').count()
    }

    pub fn final_resolution(&self) -> usize {
        self.resolution_history.last().map_or(0, |s| s.resolution)
    }

    fn visit<'a>(&'a self, out: &mut Vec<&'a ThdNode>) {
        out.push(self);
        for c in &self.children {
            c.visit(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThdTree {
    pub params: ThdParams,
    pub root: ThdNode,
    pub dataset_rows: usize,
    pub dataset_fingerprint: String,
    /// Hash of the parameters and the dataset content.
    pub fingerprint: String,
}

impl ThdTree {
    /// All nodes in pre-order.
    pub fn nodes(&self) -> Vec<&ThdNode> {
        let mut out = Vec::new();
        self.root.visit(&mut out);
        out
    }

    pub fn find(&self, id: &str) -> Option<&ThdNode> {
        let mut parts = id.split('.');
        if parts.next() != Some("1") {
            return None;
        }
        let mut node = &self.root;
        for p in parts {
            let k: usize = p.parse().ok()?;
            node = node.children.get(k.checked_sub(1)?)?;
        }
        Some(node)
    }

    pub fn node(&self, id: &str) -> Result<&ThdNode> {
        self.find(id).ok_or_else(|| ThdError::UnknownNode(id.to_string()))
    }

    pub fn parent_of(&self, id: &str) -> Option<&ThdNode> {
        let (parent, _) = id.rsplit_once('.')?;
        self.find(parent)
    }

    /// Checks that the tree was built from this dataset.
    pub fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if dataset.rows() != self.dataset_rows || dataset.fingerprint() != self.dataset_fingerprint {
            return Err(ThdError::InvalidInput("dataset does not match the one the tree was built from".into()));
        }
        Ok(())
    }
}

pub fn run_thd(dataset: &Dataset, params: &ThdParams) -> Result<ThdTree> {
    run_thd_on(dataset, &Group::all(dataset), params)
}

/// Decomposes `group` (rather than the whole dataset).
pub fn run_thd_on(dataset: &Dataset, group: &Group, params: &ThdParams) -> Result<ThdTree> {
    params.validate()?;
    if group.len() < params.split_threshold {
        return Err(ThdError::InvalidInput(format!(
            "group has {} rows, fewer than the split threshold {}",
            group.len(),
            params.split_threshold
        )));
    }
    let root = decompose(dataset, group.clone(), "1".to_string(), params)?;
    let dataset_fingerprint = dataset.fingerprint();
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(params)?);
    h.update(dataset_fingerprint.as_bytes());
    h.update(serde_json::to_vec(group)?);
    Ok(ThdTree {
        params: params.clone(),
        root,
        dataset_rows: dataset.rows(),
        dataset_fingerprint,
        fingerprint: to_hex(&h.finalize()),
    })
}

fn decompose(dataset: &Dataset, group: Group, id: String, params: &ThdParams) -> Result<ThdNode> {
    let prepared = PreparedGroup::new(dataset, &group, params.metric, &params.lens)?;
    let t = params.split_threshold;
    let mut history = Vec::new();
    let mut resolution = params.initial_resolution;
    loop {
        let network = prepared.network(CoverParams::new(resolution, params.gain)?, params.histogram_bins)?;
        let components = connected_components(&network);
        let large: Vec<Vec<usize>> = components
            .iter()
            .filter(|c| c.rows.len() >= t)
            .map(|c| c.rows.clone())
            .collect();
        history.push(ResolutionStep {
            resolution,
            summary: NetworkSummary {
                nodes: network.nodes.len(),
                edges: network.edges.len(),
                components: components.len(),
                large_components: large.len(),
            },
        });

        if large.len() >= 2 {
            let mut kept: Vec<usize> = large.iter().flatten().copied().collect();
            kept.sort_unstable();
            let outliers: Vec<usize> = group.rows().iter().copied().filter(|r| kept.binary_search(r).is_err()).collect();
            // Components arrive largest first, which fixes the child numbering.
            let children = large
                .into_par_iter()
                .enumerate()
                .map(|(k, rows)| decompose(dataset, Group::from_sorted(rows), format!("{id}.{}", k + 1), params))
                .collect::<Result<Vec<_>>>()?;
            return Ok(ThdNode {
                id,
                group,
                resolution_history: history,
                network,
                children,
                outliers,
            });
        }

        let next = resolution + params.resolution_increment;
        if next > params.max_resolution {
            return Ok(ThdNode {
                id,
                group,
                resolution_history: history,
                network,
                children: Vec::new(),
                outliers: Vec::new(),
            });
        }
        resolution = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathEnd {
    Leaf,
    /// Dropped into the outlier set of the last node on the path.
    Outlier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointPath {
    pub row_id: usize,
    pub nodes: Vec<String>,
    pub end: PathEnd,
}

impl PointPath {
    pub fn last(&self) -> &str {
        self.nodes.last().expect("path starts at the root")
    }
}

pub fn trace_point_path(tree: &ThdTree, row_id: usize) -> Result<PointPath> {
    if !tree.root.group.contains(row_id) {
        return Err(ThdError::InvalidRow(row_id));
    }
    let mut node = &tree.root;
    let mut nodes = vec![node.id.clone()];
    loop {
        if node.is_leaf() {
            return Ok(PointPath { row_id, nodes, end: PathEnd::Leaf });
        }
        match node.children.iter().find(|c| c.group.contains(row_id)) {
            Some(child) => {
                node = child;
                nodes.push(node.id.clone());
            }
            None => return Ok(PointPath { row_id, nodes, end: PathEnd::Outlier }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStatistics {
    pub id: String,
    pub depth: usize,
    pub size: usize,
    pub outliers: usize,
    pub children: usize,
    pub final_resolution: usize,
    pub label_distribution: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeStatistics {
    pub node_count: usize,
    pub leaf_count: usize,
    pub max_depth: usize,
    pub total_outliers: usize,
    pub leaf_rows: usize,
    pub root_size: usize,
    pub nodes: Vec<NodeStatistics>,
}

pub fn tree_statistics(tree: &ThdTree, dataset: &Dataset) -> TreeStatistics {
    let nodes = tree.nodes();
    let per_node: Vec<NodeStatistics> = nodes
        .iter()
        .map(|n| NodeStatistics {
            id: n.id.clone(),
            depth: n.depth(),
            size: n.group.len(),
            outliers: n.outliers.len(),
            children: n.children.len(),
            final_resolution: n.final_resolution(),
            label_distribution: label_distribution(dataset, &n.group).ok(),
        })
        .collect();
    TreeStatistics {
        node_count: nodes.len(),
        leaf_count: nodes.iter().filter(|n| n.is_leaf()).count(),
        max_depth: nodes.iter().map(|n| n.depth()).max().unwrap_or(0),
        total_outliers: nodes.iter().map(|n| n.outliers.len()).sum(),
        leaf_rows: nodes.iter().filter(|n| n.is_leaf()).map(|n| n.group.len()).sum(),
        root_size: tree.root.group.len(),
        nodes: per_node,
    }
}
