use std::collections::BTreeMap;

use crate::data::{Column, Dataset};
use crate::error::{Result, ThdError};
use crate::mapper::TopologicalNetwork;

/// Per-node color: the mean of a continuous feature over the node's rows, or
/// the fraction of rows at `level` for a categorical feature (the label
/// included). Missing values are skipped; a node with none present gets
/// `None`.
pub fn node_coloring(
    dataset: &Dataset,
    net: &TopologicalNetwork,
    feature: &str,
    level: Option<&str>,
) -> Result<BTreeMap<usize, Option<f64>>> {
    let j = dataset.feature_index(feature)?;
    let target = match (dataset.column(j), level) {
        (Column::Continuous(_), None) => None,
        (Column::Continuous(_), Some(_)) => {
            return Err(ThdError::InvalidParameter(format!("`{feature}` is continuous; a level does not apply")))
        }
        (Column::Categorical { levels, .. }, Some(l)) => Some(
            levels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| ThdError::InvalidParameter(format!("`{feature}` has no level `{l}`")))? as u32,
        ),
        (Column::Categorical { .. }, None) => {
            return Err(ThdError::InvalidParameter(format!("`{feature}` is categorical; choose a level to color by")))
        }
    };
    Ok(net
        .nodes
        .iter()
        .map(|node| {
            let values: Vec<f64> = match target {
                None => node.rows.iter().filter_map(|&r| dataset.value(j, r)).collect(),
                Some(code) => node
                    .rows
                    .iter()
                    .filter_map(|&r| dataset.code(j, r))
                    .map(|c| if c == code { 1.0 } else { 0.0 })
                    .collect(),
            };
            let color = if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            };
            (node.node_id, color)
        })
        .collect())
}
