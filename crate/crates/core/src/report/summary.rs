use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{label_distribution, Dataset};
use crate::error::Result;
use crate::stats::{compare_groups, Direction, FeatureStat, StatKind, StatsConfig};
use crate::thd::ThdTree;

/// A group at a split and what sets it apart from the rest of its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub node_id: String,
    pub parent_id: Option<String>,
    pub size: usize,
    pub label_distribution: Option<BTreeMap<String, f64>>,
    /// Significant features versus the parent's other rows, strongest first.
    pub top_features: Vec<FeatureStat>,
    pub phrases: Vec<String>,
}

/// "higher X than peers" style description of one statistic.
pub fn direction_phrase(stat: &FeatureStat) -> String {
    let word = match stat.direction {
        Direction::Higher => "higher",
        Direction::Lower => "lower",
    };
    match (&stat.kind, &stat.level) {
        (StatKind::Hypergeometric, Some(level)) => format!("{word} share of {} = {level} than peers", stat.feature),
        _ => format!("{word} {} than peers", stat.feature),
    }
}

/// Size, label distribution, and (for non-root nodes) the significant
/// features against the parent group minus this node.
pub fn summarize_split(tree: &ThdTree, dataset: &Dataset, node_id: &str, cfg: &StatsConfig) -> Result<SplitSummary> {
    let node = tree.node(node_id)?;
    let parent = tree.parent_of(node_id);
    let top_features = match parent {
        Some(parent) => {
            let baseline = parent.group.difference(&node.group);
            if baseline.is_empty() {
                Vec::new()
            } else {
                let cmp = compare_groups(dataset, &node.group, &baseline, &node.id, &format!("{}-rest", parent.id))?;
                cmp.significant(cfg.alpha, cfg.top_k).into_iter().cloned().collect()
            }
        }
        None => Vec::new(),
    };
    Ok(SplitSummary {
        node_id: node.id.clone(),
        parent_id: parent.map(|p| p.id.clone()),
        size: node.group.len(),
        label_distribution: label_distribution(dataset, &node.group).ok(),
        phrases: top_features.iter().map(direction_phrase).collect(),
        top_features,
    })
}

/// Summaries for every node of the tree, pre-order.
pub fn summarize_tree(tree: &ThdTree, dataset: &Dataset, cfg: &StatsConfig) -> Result<Vec<SplitSummary>> {
    tree.nodes().into_iter().map(|n| summarize_split(tree, dataset, &n.id, cfg)).collect()
}
