//! Semi-supervised classification on top of a THD built over training and
//! test rows together. A test row is labeled by a vote among the nearest
//! training rows that share a network node with it in the deepest group it
//! reaches.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Group};
use crate::error::{Result, ThdError};
use crate::mapper::{CoverParams, PreparedGroup};
use crate::thd::{run_thd_on, trace_point_path, PathEnd, ThdParams, ThdTree};

pub const DEFAULT_K_VOTES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub row_id: usize,
    /// `None` when no labeled row was reachable.
    pub label: Option<String>,
    /// Fraction of votes for the winning label.
    pub confidence: f64,
    /// Deepest THD node reached by the row.
    pub node_id: String,
    pub outlier: bool,
    pub abstain: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub tree: ThdTree,
    /// Training rows and their labels.
    pub train: BTreeMap<usize, String>,
    pub test: Vec<usize>,
    pub k_votes: usize,
}

/// Builds the THD over `train ∪ test` and predicts every test row. Labels of
/// training rows are read from the dataset's label column; they play no part
/// in building the tree.
pub fn fit_predict(
    dataset: &Dataset,
    train: &[usize],
    test: &[usize],
    params: &ThdParams,
    k_votes: usize,
) -> Result<(ClassifierModel, Vec<Prediction>)> {
    if train.is_empty() {
        return Err(ThdError::InvalidInput("no training rows".into()));
    }
    if k_votes == 0 {
        return Err(ThdError::InvalidParameter("k_votes must be >= 1".into()));
    }
    dataset.label_index().ok_or(ThdError::NoLabel)?;
    let train_group = Group::new(dataset.rows(), train.iter().copied())?;
    let test_group = Group::new(dataset.rows(), test.iter().copied())?;
    if !train_group.is_disjoint(&test_group) {
        return Err(ThdError::InvalidInput("training and test rows overlap".into()));
    }
    let mut labels = BTreeMap::new();
    for &r in train_group.rows() {
        let label = dataset
            .label_of(r)
            .ok_or_else(|| ThdError::InvalidInput(format!("training row {r} has no label")))?;
        labels.insert(r, label.to_string());
    }
    let tree = run_thd_on(dataset, &train_group.union(&test_group), params)?;
    let model = ClassifierModel {
        tree,
        train: labels,
        test: test_group.rows().to_vec(),
        k_votes,
    };
    let predictions = model.predict(dataset)?;
    Ok((model, predictions))
}

impl ClassifierModel {
    /// Labels in order of descending training frequency, then by name.
    fn label_priority(&self) -> BTreeMap<String, (usize, usize)> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in self.train.values() {
            *counts.entry(l).or_default() += 1;
        }
        let mut order: Vec<(&str, usize)> = counts.into_iter().collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        order.into_iter().enumerate().map(|(rank, (l, c))| (l.to_string(), (rank, c))).collect()
    }

    pub fn predict(&self, dataset: &Dataset) -> Result<Vec<Prediction>> {
        // Test rows grouped by the deepest node they reach.
        let mut by_node: BTreeMap<String, Vec<Voter>> = BTreeMap::new();
        for &row in &self.test {
            let path = trace_point_path(&self.tree, row)?;
            by_node.entry(path.last().to_string()).or_default().push(Voter {
                row,
                outlier: path.end == PathEnd::Outlier,
            });
        }
        let priority = self.label_priority();
        let per_node: Vec<Vec<Prediction>> = by_node
            .into_par_iter()
            .map(|(node_id, voters)| self.vote_in(dataset, &node_id, &voters, &priority))
            .collect::<Result<_>>()?;
        let mut out: Vec<Prediction> = per_node.into_iter().flatten().collect();
        out.sort_by_key(|p| p.row_id);
        Ok(out)
    }

    /// Votes for each of `voters` among the training rows sharing a network
    /// node with it, widened to neighboring nodes when there are fewer than
    /// `k_votes` of them, ranked by the group's metric.
    ///
    /// The network is the group's network at the initial resolution. The
    /// group's stored network comes from the last resolution tried, which
    /// for a leaf is the failed search for a further split and for a split
    /// node the resolution where it broke apart; both are mostly tiny nodes
    /// and strand many rows without a labeled neighbor.
    fn vote_in(
        &self,
        dataset: &Dataset,
        node_id: &str,
        voters: &[Voter],
        priority: &BTreeMap<String, (usize, usize)>,
    ) -> Result<Vec<Prediction>> {
        let node = self.tree.node(node_id)?;
        let params = &self.tree.params;
        let prepared = PreparedGroup::new(dataset, &node.group, params.metric, &params.lens)?;
        let net = prepared.network(CoverParams::new(params.initial_resolution, params.gain)?, params.histogram_bins)?;
        let local = |r: usize| node.group.rows().binary_search(&r).expect("row belongs to the node group");
        let train_in = |ids: &BTreeSet<usize>| -> Vec<usize> {
            let mut v: Vec<usize> = ids
                .iter()
                .flat_map(|&n| net.nodes[n].rows.iter().copied())
                .filter(|r| self.train.contains_key(r))
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };

        let predictions = voters
            .iter()
            .map(|v| {
                let home: BTreeSet<usize> = net.nodes_of(v.row).iter().copied().collect();
                let mut candidates = train_in(&home);
                if candidates.len() < self.k_votes {
                    let expanded: BTreeSet<usize> =
                        home.iter().flat_map(|&n| net.neighbors(n)).chain(home.iter().copied()).collect();
                    candidates = train_in(&expanded);
                }
                let mut prediction = Prediction {
                    row_id: v.row,
                    label: None,
                    confidence: 0.0,
                    node_id: node_id.to_string(),
                    outlier: v.outlier,
                    abstain: true,
                };
                if candidates.is_empty() {
                    return prediction;
                }
                let i = local(v.row);
                let mut ranked: Vec<(f64, usize)> =
                    candidates.into_iter().map(|c| (prepared.distances.get(i, local(c)), c)).collect();
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                ranked.truncate(self.k_votes);
                let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
                for (_, c) in &ranked {
                    *votes.entry(self.train[c].as_str()).or_default() += 1;
                }
                let (winner, count) = votes
                    .into_iter()
                    .max_by(|a, b| a.1.cmp(&b.1).then(priority[b.0].0.cmp(&priority[a.0].0)))
                    .expect("at least one vote");
                prediction.label = Some(winner.to_string());
                prediction.confidence = count as f64 / ranked.len() as f64;
                prediction.abstain = false;
                prediction
            })
            .collect();
        Ok(predictions)
    }
}

struct Voter {
    row: usize,
    outlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Correct predictions over all test rows; abstentions count as wrong.
    pub accuracy: f64,
    pub abstain_rate: f64,
    pub per_class: BTreeMap<String, ClassMetrics>,
    /// `confusion[truth][predicted]`.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

pub fn evaluate(predictions: &[Prediction], truth: &BTreeMap<usize, String>) -> Result<Evaluation> {
    if predictions.is_empty() {
        return Err(ThdError::InvalidInput("no predictions to evaluate".into()));
    }
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut correct = 0usize;
    let mut abstained = 0usize;
    let mut classes: BTreeSet<String> = BTreeSet::new();
    for p in predictions {
        let t = truth
            .get(&p.row_id)
            .ok_or_else(|| ThdError::InvalidInput(format!("no true label for row {}", p.row_id)))?;
        classes.insert(t.clone());
        match &p.label {
            Some(l) => {
                classes.insert(l.clone());
                if l == t {
                    correct += 1;
                }
                *confusion.entry(t.clone()).or_default().entry(l.clone()).or_default() += 1;
            }
            None => abstained += 1,
        }
    }
    let n = predictions.len() as f64;
    let per_class = classes
        .iter()
        .map(|c| {
            let tp = confusion.get(c).and_then(|r| r.get(c)).copied().unwrap_or(0);
            let predicted: usize = confusion.values().filter_map(|r| r.get(c)).sum();
            let support = predictions.iter().filter(|p| truth.get(&p.row_id) == Some(c)).count();
            let ratio = |num: usize, den: usize| if den == 0 { None } else { Some(num as f64 / den as f64) };
            (
                c.clone(),
                ClassMetrics {
                    precision: ratio(tp, predicted),
                    recall: ratio(tp, support),
                    support,
                },
            )
        })
        .collect();
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        abstain_rate: abstained as f64 / n,
        per_class,
        confusion,
    })
}
