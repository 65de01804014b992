use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::format::{dot_escape, fmt_sig, round_sig, xml_escape};
use crate::data::{label_distribution, Column, Dataset};
use crate::error::{Result, ThdError};
use crate::mapper::TopologicalNetwork;
use crate::stats::node_coloring;
use crate::thd::ThdTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeFormat {
    Json,
    Dot,
}

impl FromStr for TreeFormat {
    type Err = ThdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(TreeFormat::Json),
            "dot" => Ok(TreeFormat::Dot),
            _ => Err(ThdError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkFormat {
    Graphml,
    Dot,
    Json,
}

impl FromStr for NetworkFormat {
    type Err = ThdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graphml" => Ok(NetworkFormat::Graphml),
            "dot" => Ok(NetworkFormat::Dot),
            "json" => Ok(NetworkFormat::Json),
            _ => Err(ThdError::UnknownFormat(s.to_string())),
        }
    }
}

impl NetworkFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            NetworkFormat::Graphml => "graphml",
            NetworkFormat::Dot => "dot",
            NetworkFormat::Json => "json",
        }
    }
}

/// Feature (and, for categoricals, level) used to color network nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coloring {
    pub feature: String,
    pub level: Option<String>,
}

fn distribution_text(dist: &BTreeMap<String, f64>) -> String {
    dist.iter()
        .map(|(k, v)| format!("{k} {}%", fmt_sig(100.0 * v)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// JSON is the full tree and re-imports losslessly; DOT is the skeleton
/// with one box per group labeled with id, size and label mix.
pub fn export_tree(tree: &ThdTree, dataset: &Dataset, format: TreeFormat) -> Result<String> {
    match format {
        TreeFormat::Json => Ok(serde_json::to_string_pretty(tree)?),
        TreeFormat::Dot => {
            let mut out = String::from("digraph thd {\n  node [shape=box];\n");
            for node in tree.nodes() {
                let mut label = format!("{}\\nn={}", node.id, node.group.len());
                if let Ok(dist) = label_distribution(dataset, &node.group) {
                    let _ = write!(label, "\\n{}", dot_escape(&distribution_text(&dist)));
                }
                let _ = writeln!(out, "  \"{}\" [label=\"{label}\"];", node.id);
            }
            for node in tree.nodes() {
                for child in &node.children {
                    let _ = writeln!(out, "  \"{}\" -> \"{}\";", node.id, child.id);
                }
            }
            out.push_str("}\n");
            Ok(out)
        }
    }
}

pub fn import_tree_json(text: &str) -> Result<ThdTree> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Serialize)]
struct JsonNode<'a> {
    id: usize,
    bin: usize,
    size: usize,
    rows: &'a [usize],
    means: BTreeMap<&'a str, Option<f64>>,
    color: Option<f64>,
}

#[derive(Serialize)]
struct JsonEdge {
    source: usize,
    target: usize,
    weight: usize,
}

#[derive(Serialize)]
struct JsonNetwork<'a> {
    coloring: Option<&'a Coloring>,
    nodes: Vec<JsonNode<'a>>,
    edges: Vec<JsonEdge>,
}

/// Means of every continuous non-label feature over each node.
fn feature_means<'a>(dataset: &'a Dataset, net: &TopologicalNetwork) -> Vec<BTreeMap<&'a str, Option<f64>>> {
    let continuous: Vec<usize> = dataset
        .features()
        .iter()
        .enumerate()
        .filter(|(j, f)| !f.is_label && matches!(dataset.column(*j), Column::Continuous(_)))
        .map(|(j, _)| j)
        .collect();
    net.nodes
        .iter()
        .map(|node| {
            continuous
                .iter()
                .map(|&j| {
                    let v = dataset.present_values(j, &node.rows);
                    let m = if v.is_empty() { None } else { Some(round_sig(v.iter().sum::<f64>() / v.len() as f64)) };
                    (dataset.features()[j].name.as_str(), m)
                })
                .collect()
        })
        .collect()
}

pub fn export_network(
    net: &TopologicalNetwork,
    dataset: &Dataset,
    format: NetworkFormat,
    coloring: Option<&Coloring>,
) -> Result<String> {
    let colors: Option<BTreeMap<usize, Option<f64>>> = coloring
        .map(|c| node_coloring(dataset, net, &c.feature, c.level.as_deref()))
        .transpose()?;
    let color_of = |id: usize| colors.as_ref().and_then(|c| c.get(&id).copied().flatten());
    match format {
        NetworkFormat::Json => {
            let means = feature_means(dataset, net);
            let doc = JsonNetwork {
                coloring,
                nodes: net
                    .nodes
                    .iter()
                    .zip(means)
                    .map(|(n, means)| JsonNode {
                        id: n.node_id,
                        bin: n.bin,
                        size: n.rows.len(),
                        rows: &n.rows,
                        means,
                        color: color_of(n.node_id).map(round_sig),
                    })
                    .collect(),
                edges: net
                    .edges
                    .iter()
                    .map(|e| JsonEdge { source: e.source, target: e.target, weight: e.weight })
                    .collect(),
            };
            Ok(serde_json::to_string_pretty(&doc)?)
        }
        NetworkFormat::Dot => {
            let mut out = String::from("graph network {\n");
            for n in &net.nodes {
                let _ = write!(out, "  n{} [label=\"{} ({})\", size={}, bin={}", n.node_id, n.node_id, n.rows.len(), n.rows.len(), n.bin);
                if let Some(c) = color_of(n.node_id) {
                    let _ = write!(out, ", color_value={}", fmt_sig(c));
                }
                out.push_str("];\n");
            }
            for e in &net.edges {
                let _ = writeln!(out, "  n{} -- n{} [weight={}];", e.source, e.target, e.weight);
            }
            out.push_str("}\n");
            Ok(out)
        }
        NetworkFormat::Graphml => {
            let mut out = String::from(
                "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
                 <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n\
                 \x20 <key id=\"size\" for=\"node\" attr.name=\"size\" attr.type=\"int\"/>\n\
                 \x20 <key id=\"bin\" for=\"node\" attr.name=\"bin\" attr.type=\"int\"/>\n\
                 \x20 <key id=\"rows\" for=\"node\" attr.name=\"rows\" attr.type=\"string\"/>\n\
                 \x20 <key id=\"color\" for=\"node\" attr.name=\"color\" attr.type=\"double\"/>\n\
                 \x20 <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n",
            );
            let _ = writeln!(out, "  <graph id=\"{}\" edgedefault=\"undirected\">", xml_escape("network"));
            for n in &net.nodes {
                let rows: Vec<String> = n.rows.iter().map(usize::to_string).collect();
                let _ = write!(
                    out,
                    "    <node id=\"n{}\"><data key=\"size\">{}</data><data key=\"bin\">{}</data><data key=\"rows\">{}</data>",
                    n.node_id,
                    n.rows.len(),
                    n.bin,
                    rows.join(" ")
                );
                if let Some(c) = color_of(n.node_id) {
                    let _ = write!(out, "<data key=\"color\">{}</data>", fmt_sig(c));
                }
                out.push_str("</node>\n");
            }
            for (i, e) in net.edges.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "    <edge id=\"e{i}\" source=\"n{}\" target=\"n{}\"><data key=\"weight\">{}</data></edge>",
                    e.source, e.target, e.weight
                );
            }
            out.push_str("  </graph>\n</graphml>\n");
            Ok(out)
        }
    }
}
