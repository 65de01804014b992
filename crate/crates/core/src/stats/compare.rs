use serde::{Deserialize, Serialize};

use super::hypergeom::{hypergeometric_lower_tail, hypergeometric_tail};
use super::ks::{ks_p_value, ks_sweep};
use crate::data::{median, Column, Dataset, Group};
use crate::error::{Result, ThdError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    Ks,
    Hypergeometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Higher,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Summary {
    Continuous {
        count: usize,
        mean: f64,
        median: f64,
    },
    Categorical {
        count: usize,
        hits: usize,
        fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStat {
    pub feature: String,
    /// Category level for hypergeometric statistics.
    pub level: Option<String>,
    pub kind: StatKind,
    /// KS distance, or the enrichment fold of the level in the group.
    pub statistic: f64,
    /// Ranking score in `[0, 1]`: the KS distance, or the absolute difference
    /// in level fraction (the KS distance of the level indicator).
    pub effect: f64,
    pub p_value: f64,
    pub direction: Direction,
    /// Whether the direction came from comparing medians (skewed feature).
    pub by_median: bool,
    pub group_summary: Summary,
    pub baseline_summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub group_id: String,
    pub baseline_id: String,
    /// Ranked: effect descending, then p-value ascending, then feature order.
    pub stats: Vec<FeatureStat>,
}

impl GroupComparison {
    /// Up to `top_k` features with `p <= alpha`, in rank order.
    pub fn significant(&self, alpha: f64, top_k: usize) -> Vec<&FeatureStat> {
        self.stats.iter().filter(|s| s.p_value <= alpha).take(top_k).collect()
    }
}

/// Reporting thresholds for "significant" features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub alpha: f64,
    pub top_k: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig { alpha: 0.01, top_k: 5 }
    }
}

/// Per-feature differences between `group` and a disjoint `baseline`.
///
/// Continuous features get a two-sample KS test; each level of a categorical
/// feature gets a hypergeometric test of its count in the group drawn from
/// the pooled population. Missing values are dropped per feature. The label
/// feature is never compared.
pub fn compare_groups(
    dataset: &Dataset,
    group: &Group,
    baseline: &Group,
    group_id: &str,
    baseline_id: &str,
) -> Result<GroupComparison> {
    if group.is_empty() || baseline.is_empty() {
        return Err(ThdError::EmptyGroup);
    }
    if !group.is_disjoint(baseline) {
        return Err(ThdError::InvalidInput("group and baseline overlap".into()));
    }
    let mut ranked: Vec<(usize, usize, FeatureStat)> = Vec::new();
    for (j, meta) in dataset.features().iter().enumerate() {
        if meta.is_label {
            continue;
        }
        match dataset.column(j) {
            Column::Continuous(_) => {
                if let Some(stat) = continuous_stat(dataset, j, group, baseline)? {
                    ranked.push((j, 0, stat));
                }
            }
            Column::Categorical { .. } => {
                for (level, stat) in categorical_stats(dataset, j, group, baseline)? {
                    ranked.push((j, level, stat));
                }
            }
        }
    }
    ranked.sort_by(|a, b| {
        b.2.effect
            .total_cmp(&a.2.effect)
            .then(a.2.p_value.total_cmp(&b.2.p_value))
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    Ok(GroupComparison {
        group_id: group_id.to_string(),
        baseline_id: baseline_id.to_string(),
        stats: ranked.into_iter().map(|(_, _, s)| s).collect(),
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
fn stdev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// A sample counts as skewed when its mean and median differ by more than
/// half a standard deviation; skewed features are compared by median.
pub fn is_skewed(values: &[f64]) -> bool {
    match median(values) {
        Some(med) => (mean(values) - med).abs() > 0.5 * stdev(values),
        None => false,
    }
}

fn continuous_stat(dataset: &Dataset, j: usize, group: &Group, baseline: &Group) -> Result<Option<FeatureStat>> {
    let a = dataset.present_values(j, group.rows());
    let b = dataset.present_values(j, baseline.rows());
    if a.is_empty() || b.is_empty() {
        return Ok(None);
    }
    let (d, sign) = ks_sweep(&a, &b)?;
    let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
    let by_median = is_skewed(&pooled);
    let (ma, mb) = (mean(&a), mean(&b));
    let (meda, medb) = (median(&a).unwrap_or(ma), median(&b).unwrap_or(mb));
    let (ca, cb) = if by_median { (meda, medb) } else { (ma, mb) };
    let direction = if ca > cb {
        Direction::Higher
    } else if ca < cb {
        Direction::Lower
    } else if sign > 0.0 {
        // Group ECDF above the baseline's: group values sit lower.
        Direction::Lower
    } else {
        Direction::Higher
    };
    Ok(Some(FeatureStat {
        feature: dataset.features()[j].name.clone(),
        level: None,
        kind: StatKind::Ks,
        statistic: d,
        effect: d,
        p_value: ks_p_value(d, a.len(), b.len()),
        direction,
        by_median,
        group_summary: Summary::Continuous { count: a.len(), mean: ma, median: meda },
        baseline_summary: Summary::Continuous { count: b.len(), mean: mb, median: medb },
    }))
}

fn categorical_stats(dataset: &Dataset, j: usize, group: &Group, baseline: &Group) -> Result<Vec<(usize, FeatureStat)>> {
    let levels = dataset.levels(j);
    let count = |g: &Group| {
        let mut hits = vec![0u64; levels.len()];
        let mut total = 0u64;
        for &r in g.rows() {
            if let Some(c) = dataset.code(j, r) {
                hits[c as usize] += 1;
                total += 1;
            }
        }
        (hits, total)
    };
    let (g_hits, g_total) = count(group);
    let (b_hits, b_total) = count(baseline);
    if g_total == 0 || b_total == 0 {
        return Ok(Vec::new());
    }
    let population = g_total + b_total;
    let mut out = Vec::new();
    for (level, name) in levels.iter().enumerate() {
        let (k, kb) = (g_hits[level], b_hits[level]);
        let successes = k + kb;
        if successes == 0 {
            continue;
        }
        let fg = k as f64 / g_total as f64;
        let fb = kb as f64 / b_total as f64;
        let direction = if fg > fb { Direction::Higher } else { Direction::Lower };
        let p_value = match direction {
            Direction::Higher => hypergeometric_tail(population, successes, g_total, k)?,
            Direction::Lower => hypergeometric_lower_tail(population, successes, g_total, k)?,
        };
        out.push((
            level,
            FeatureStat {
                feature: dataset.features()[j].name.clone(),
                level: Some(name.clone()),
                kind: StatKind::Hypergeometric,
                statistic: fg / (successes as f64 / population as f64),
                effect: (fg - fb).abs(),
                p_value,
                direction,
                by_median: false,
                group_summary: Summary::Categorical { count: g_total as usize, hits: k as usize, fraction: fg },
                baseline_summary: Summary::Categorical { count: b_total as usize, hits: kb as usize, fraction: fb },
            },
        ));
    }
    Ok(out)
}
