use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::AnalysisMatrix;
use crate::error::{Result, ThdError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Variance-normalized Euclidean.
    #[default]
    Vne,
    Euclidean,
}

/// Per-column population variance plus a flag for zero-variance columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVariances {
    pub variances: Vec<f64>,
    pub zero: Vec<bool>,
}

impl FeatureVariances {
    pub fn new(variances: Vec<f64>) -> Self {
        let zero = variances.iter().map(|v| *v <= 0.0).collect();
        FeatureVariances { variances, zero }
    }

    pub fn unit(dim: usize) -> Self {
        Self::new(vec![1.0; dim])
    }
}

pub fn feature_variances(matrix: &AnalysisMatrix) -> FeatureVariances {
    let n = matrix.nrows as f64;
    let variances = (0..matrix.ncols)
        .map(|j| {
            if matrix.nrows == 0 {
                return 0.0;
            }
            let mean = (0..matrix.nrows).map(|i| matrix.get(i, j)).sum::<f64>() / n;
            (0..matrix.nrows)
                .map(|i| {
                    let d = matrix.get(i, j) - mean;
                    d * d
                })
                .sum::<f64>()
                / n
        })
        .collect();
    FeatureVariances::new(variances)
}

/// `sqrt(sum (x_i - y_i)^2 / var_i)` over the columns with non-zero variance.
pub fn vne_distance(x: &[f64], y: &[f64], variances: &FeatureVariances) -> Result<f64> {
    if x.len() != y.len() {
        return Err(ThdError::DimensionMismatch(x.len(), y.len()));
    }
    if x.len() != variances.variances.len() {
        return Err(ThdError::DimensionMismatch(x.len(), variances.variances.len()));
    }
    Ok(vne_unchecked(x, y, variances))
}

#[inline]
fn vne_unchecked(x: &[f64], y: &[f64], variances: &FeatureVariances) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        if variances.zero[i] {
            continue;
        }
        let d = x[i] - y[i];
        acc += d * d / variances.variances[i];
    }
    acc.sqrt()
}

#[inline]
fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Symmetric distance matrix stored as its strict upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds from a full square matrix; only the upper triangle is read.
    pub fn from_square(square: &[Vec<f64>]) -> Result<Self> {
        let n = square.len();
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for (i, row) in square.iter().enumerate() {
            if row.len() != n {
                return Err(ThdError::DimensionMismatch(n, row.len()));
            }
            for &d in &row[i + 1..] {
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(ThdError::InvalidInput(format!("distance {d} is not a finite non-negative value")));
                }
                upper.push(d);
            }
        }
        Ok(DistanceMatrix { n, upper })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        // i < j
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.upper[self.offset(i, j)],
            std::cmp::Ordering::Greater => self.upper[self.offset(j, i)],
        }
    }

    pub fn max(&self) -> f64 {
        self.upper.iter().copied().fold(0.0, f64::max)
    }

    /// `y = A x` where `A[i][j] = f(d(i,j))` for `i != j` and `A[i][i] = diag`.
    pub(crate) fn apply_elementwise<F: Fn(f64) -> f64>(&self, x: &[f64], diag: f64, f: F) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = x.iter().map(|v| v * diag).collect();
        let mut k = 0;
        for i in 0..n {
            let xi = x[i];
            let mut acc = 0.0;
            for j in i + 1..n {
                let a = f(self.upper[k]);
                k += 1;
                acc += a * x[j];
                y[j] += a * xi;
            }
            y[i] += acc;
        }
        y
    }
}

/// All-pairs distances between matrix rows. Rows are evaluated in parallel;
/// each entry depends only on its two rows so the result is order independent.
pub fn pairwise_distances(matrix: &AnalysisMatrix, metric: Metric) -> DistanceMatrix {
    let n = matrix.nrows;
    let variances = match metric {
        Metric::Vne => Some(feature_variances(matrix)),
        Metric::Euclidean => None,
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = matrix.row(i);
            (i + 1..n)
                .map(|j| match &variances {
                    Some(v) => vne_unchecked(xi, matrix.row(j), v),
                    None => euclidean(xi, matrix.row(j)),
                })
                .collect()
        })
        .collect();
    DistanceMatrix {
        n,
        upper: rows.into_iter().flatten().collect(),
    }
}
