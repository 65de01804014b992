use std::collections::VecDeque;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::{dense_top, lanczos_top, EigenPair, DENSE_LIMIT};
use super::metric::DistanceMatrix;
use crate::error::{Result, ThdError};

/// Images of the points under a lens, row-major `n x dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterValues {
    pub n: usize,
    pub dim: usize,
    pub coords: Vec<f64>,
}

impl FilterValues {
    pub fn new(n: usize, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != n * dim {
            return Err(ThdError::DimensionMismatch(n * dim, coords.len()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(ThdError::InvalidInput(format!("non-finite filter value {bad}")));
        }
        Ok(FilterValues { n, dim, coords })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        FilterValues {
            n,
            dim,
            coords: vec![0.0; n * dim],
        }
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize, axis: usize) -> f64 {
        self.coords[i * self.dim + axis]
    }

    fn from_axes(n: usize, axes: &[Vec<f64>]) -> Self {
        let dim = axes.len();
        let mut coords = vec![0.0; n * dim];
        for (a, axis) in axes.iter().enumerate() {
            for i in 0..n {
                coords[i * dim + a] = axis[i];
            }
        }
        FilterValues { n, dim, coords }
    }
}

/// Flips an axis so that its largest-magnitude coordinate is positive; the
/// earliest row wins ties.
pub(crate) fn fix_sign(axis: &mut [f64]) {
    let mut best = 0usize;
    for i in 1..axis.len() {
        if axis[i].abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis.get(best).is_some_and(|v| *v < 0.0) {
        axis.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Torgerson classical scaling: top-`k` axes of the double-centered Gram
/// matrix `B = -1/2 J D^2 J`, scaled by the square roots of their eigenvalues.
/// Axes with non-positive eigenvalues collapse to zero.
pub fn classical_mds(d: &DistanceMatrix, k: usize) -> Result<FilterValues> {
    let n = d.len();
    if n < 2 {
        return Err(ThdError::InvalidInput(format!("classical MDS needs at least 2 points, got {n}")));
    }
    if !(1..=2).contains(&k) {
        return Err(ThdError::InvalidParameter(format!("MDS output dimension must be 1 or 2, got {k}")));
    }
    let pairs = if n <= DENSE_LIMIT {
        let mut sq = DMatrix::<f64>::from_fn(n, n, |i, j| {
            let v = d.get(i, j);
            v * v
        });
        let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
        let grand = row_means.iter().sum::<f64>() / n as f64;
        for i in 0..n {
            for j in 0..n {
                sq[(i, j)] = -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand);
            }
        }
        dense_top(sq, k)
    } else {
        let center = |x: &mut Vec<f64>| {
            let mean = x.iter().sum::<f64>() / n as f64;
            x.iter_mut().for_each(|v| *v -= mean);
        };
        lanczos_top(n, k, &[], |x| {
            let mut cx = x.to_vec();
            center(&mut cx);
            let mut y = d.apply_elementwise(&cx, 0.0, |v| v * v);
            center(&mut y);
            y.iter_mut().for_each(|v| *v *= -0.5);
            y
        })
    };
    let axes: Vec<Vec<f64>> = (0..k)
        .map(|a| match pairs.get(a) {
            Some(EigenPair { value, vector }) if *value > 0.0 && value.is_finite() => {
                let s = value.sqrt();
                let mut axis: Vec<f64> = vector.iter().map(|v| v * s).collect();
                fix_sign(&mut axis);
                axis
            }
            _ => vec![0.0; n],
        })
        .collect();
    Ok(FilterValues::from_axes(n, &axes))
}

/// Indices of the `k` nearest other points of each point; equal distances are
/// ordered by ascending index.
pub fn knn_indices(d: &DistanceMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = d.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (d.get(i, j), j)).collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            let k = k.min(others.len());
            if k < others.len() {
                others.select_nth_unstable_by(k, cmp);
                others.truncate(k);
            }
            others.sort_by(cmp);
            others.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// Laplacian-eigenmap lens on the symmetrized k-nearest-neighbor graph.
///
/// Each connected component of the graph is embedded separately with the
/// two eigenvectors of the normalized Laplacian that have the smallest
/// non-zero eigenvalues (mapped through `D^-1/2`). With more than one
/// component, each component's embedding is rescaled to the unit box and
/// shifted along the first axis by twice its component index.
pub fn neighborhood_lens(d: &DistanceMatrix, k_neighbors: usize) -> Result<FilterValues> {
    let n = d.len();
    if k_neighbors == 0 || n <= k_neighbors {
        return Err(ThdError::InvalidParameter(format!(
            "neighborhood lens needs 1 <= k_neighbors < n (k_neighbors = {k_neighbors}, n = {n})"
        )));
    }
    if d.max() == 0.0 {
        return Ok(FilterValues::zeros(n, 2));
    }
    let knn = knn_indices(d, k_neighbors);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, nbrs) in knn.iter().enumerate() {
        for &j in nbrs {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }

    let components = graph_components(&adj);
    let mut axes = vec![vec![0.0; n]; 2];
    let multi = components.len() > 1;
    for (c, members) in components.iter().enumerate() {
        let local = component_eigenmap(&adj, members);
        for (a, axis) in local.into_iter().enumerate() {
            let scaled = if multi { unit_box(axis) } else { axis };
            for (&row, v) in members.iter().zip(scaled) {
                axes[a][row] = v + if multi && a == 0 { 2.0 * c as f64 } else { 0.0 };
            }
        }
    }
    for axis in axes.iter_mut() {
        fix_sign(axis);
    }
    Ok(FilterValues::from_axes(n, &axes))
}

fn unit_box(axis: Vec<f64>) -> Vec<f64> {
    let lo = axis.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = axis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        axis.into_iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.5; axis.len()]
    }
}

/// Components in order of their smallest member; members ascending.
fn graph_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut members = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Two eigenmap axes for one connected component (zeros where the
/// component is too small to supply them).
fn component_eigenmap(adj: &[Vec<usize>], members: &[usize]) -> Vec<Vec<f64>> {
    let m = members.len();
    let mut axes = vec![vec![0.0; m]; 2];
    if m < 2 {
        return axes;
    }
    let pos = |row: usize| members.binary_search(&row).expect("member of component");
    let local_adj: Vec<Vec<usize>> = members.iter().map(|&r| adj[r].iter().map(|&j| pos(j)).collect()).collect();
    let inv_sqrt_deg: Vec<f64> = local_adj.iter().map(|a| 1.0 / (a.len() as f64).sqrt()).collect();
    let total_deg: f64 = local_adj.iter().map(|a| a.len() as f64).sum();
    // Eigenvector of S = D^-1/2 W D^-1/2 for eigenvalue 1.
    let trivial: Vec<f64> = local_adj.iter().map(|a| (a.len() as f64 / total_deg).sqrt()).collect();
    let want = 2.min(m - 1);

    let pairs = if m <= DENSE_LIMIT {
        let mut s = DMatrix::<f64>::zeros(m, m);
        for (i, nbrs) in local_adj.iter().enumerate() {
            for &j in nbrs {
                s[(i, j)] = inv_sqrt_deg[i] * inv_sqrt_deg[j];
            }
        }
        // Push the trivial eigenvalue 1 down to -1 so the top pairs are the
        // non-trivial ones.
        for i in 0..m {
            for j in 0..m {
                s[(i, j)] -= 2.0 * trivial[i] * trivial[j];
            }
        }
        dense_top(s, want)
    } else {
        lanczos_top(m, want, std::slice::from_ref(&trivial), |x| {
            local_adj
                .iter()
                .enumerate()
                .map(|(i, nbrs)| inv_sqrt_deg[i] * nbrs.iter().map(|&j| inv_sqrt_deg[j] * x[j]).sum::<f64>())
                .collect()
        })
    };
    for (a, p) in pairs.into_iter().enumerate() {
        axes[a] = p.vector.iter().zip(&inv_sqrt_deg).map(|(v, s)| v * s).collect();
    }
    axes
}

/// Lens selector used by MAPPER runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Lens {
    Mds {
        #[serde(default = "default_mds_dims")]
        dims: usize,
    },
    Nhl {
        #[serde(default = "default_k_neighbors")]
        k_neighbors: usize,
    },
}

fn default_mds_dims() -> usize {
    2
}

fn default_k_neighbors() -> usize {
    15
}

impl Lens {
    pub fn mds() -> Self {
        Lens::Mds { dims: 2 }
    }

    pub fn nhl() -> Self {
        Lens::Nhl { k_neighbors: 15 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Lens::Mds { .. } => "mds",
            Lens::Nhl { .. } => "nhl",
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Lens::Mds { dims } => *dims,
            Lens::Nhl { .. } => 2,
        }
    }

    /// Evaluates the lens on a group. Groups too small for the lens get
    /// degenerate but valid filter values: a single point maps to the
    /// origin, and the neighbor count is capped at `n - 1`.
    pub fn apply(&self, d: &DistanceMatrix) -> Result<FilterValues> {
        let n = d.len();
        if n == 0 {
            return Err(ThdError::EmptyGroup);
        }
        if n == 1 {
            return Ok(FilterValues::zeros(1, self.output_dim()));
        }
        match *self {
            Lens::Mds { dims } => classical_mds(d, dims),
            Lens::Nhl { k_neighbors } => neighborhood_lens(d, k_neighbors.min(n - 1)),
        }
    }
}
