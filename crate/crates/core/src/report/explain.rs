use serde::{Deserialize, Serialize};

use super::summary::{direction_phrase, summarize_split};
use super::format::fmt_sig;
use crate::data::{label_distribution, Dataset, Group};
use crate::error::{Result, ThdError};
use crate::stats::{FeatureStat, StatsConfig};
use crate::thd::{trace_point_path, PathEnd, ThdTree};

/// Reasons cited per hop.
pub const REASONS_PER_HOP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    DenyLeaning,
    GrantLeaning,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationHop {
    pub node_id: String,
    pub size: usize,
    pub risky_fraction: Option<f64>,
    pub reasons: Vec<FeatureStat>,
    pub phrases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationTrace {
    pub row_id: usize,
    pub risky_level: String,
    pub path: Vec<ExplanationHop>,
    pub end: PathEnd,
    pub final_fraction: f64,
    pub global_fraction: f64,
    /// Risky fraction the final group is judged against.
    pub threshold: f64,
    pub verdict: Verdict,
    pub sentences: Vec<String>,
}

impl ExplanationTrace {
    pub fn text(&self) -> String {
        self.sentences.join("\n")
    }
}

fn fraction_of(dataset: &Dataset, group: &Group, level: &str) -> Result<f64> {
    Ok(label_distribution(dataset, group)?.get(level).copied().unwrap_or(0.0))
}

/// Tells the story of one row: the groups it passes through, what
/// distinguishes each from its siblings, and whether the final group is
/// riskier than `threshold` (the whole tree's risky fraction by default).
pub fn explain_individual(
    tree: &ThdTree,
    dataset: &Dataset,
    row_id: usize,
    risky_level: &str,
    threshold: Option<f64>,
    cfg: &StatsConfig,
) -> Result<ExplanationTrace> {
    let label = dataset.label_index().ok_or(ThdError::NoLabel)?;
    if !dataset.levels(label).iter().any(|l| l == risky_level) {
        return Err(ThdError::InvalidParameter(format!("label has no level `{risky_level}`")));
    }
    let path = trace_point_path(tree, row_id)?;
    let global_fraction = fraction_of(dataset, &tree.root.group, risky_level)?;
    let threshold = threshold.unwrap_or(global_fraction);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ThdError::InvalidParameter(format!("verdict threshold {threshold} is outside [0, 1]")));
    }

    let mut hops = Vec::with_capacity(path.nodes.len());
    let mut sentences = Vec::new();
    for id in &path.nodes {
        let node = tree.node(id)?;
        let summary = summarize_split(tree, dataset, id, cfg)?;
        let reasons: Vec<FeatureStat> = summary.top_features.into_iter().take(REASONS_PER_HOP).collect();
        let phrases: Vec<String> = reasons.iter().map(direction_phrase).collect();
        if let Some(parent) = &summary.parent_id {
            let because = if phrases.is_empty() {
                "no feature differs significantly from its peers".to_string()
            } else {
                phrases.join("; ")
            };
            sentences.push(format!("Split from group {parent} into group {id} ({} rows): {because}.", node.group.len()));
        }
        hops.push(ExplanationHop {
            node_id: id.clone(),
            size: node.group.len(),
            risky_fraction: fraction_of(dataset, &node.group, risky_level).ok(),
            reasons,
            phrases,
        });
    }
    let last = tree.node(path.last())?;
    let final_fraction = fraction_of(dataset, &last.group, risky_level)?;
    let verdict = if final_fraction > threshold {
        Verdict::DenyLeaning
    } else if final_fraction < threshold {
        Verdict::GrantLeaning
    } else {
        Verdict::Neutral
    };
    if path.end == PathEnd::Outlier {
        sentences.push(format!("Row {row_id} is an outlier at group {}: it fell in a component too small to split off.", last.id));
    }
    let verdict_word = match verdict {
        Verdict::DenyLeaning => "deny-leaning",
        Verdict::GrantLeaning => "grant-leaning",
        Verdict::Neutral => "neutral",
    };
    sentences.push(format!(
        "Row {row_id} ends in group {} where {}% are {risky_level} versus a threshold of {}%: {verdict_word}.",
        last.id,
        fmt_sig(100.0 * final_fraction),
        fmt_sig(100.0 * threshold),
    ));
    Ok(ExplanationTrace {
        row_id,
        risky_level: risky_level.to_string(),
        path: hops,
        end: path.end,
        final_fraction,
        global_fraction,
        threshold,
        verdict,
        sentences,
    })
}
