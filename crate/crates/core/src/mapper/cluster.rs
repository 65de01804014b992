//! Per-bin clustering: single linkage via a minimum spanning tree, cut at the
//! first gap of the merge-height histogram.

use serde::{Deserialize, Serialize};

use super::union_find::UnionFind;
use crate::geometry::DistanceMatrix;

/// One agglomeration step joining the clusters that contain `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

/// Single-linkage merges for `rows` (indices into `d`), ordered by
/// non-decreasing height with ties broken by the `(a, b)` pair, `a < b`.
pub fn single_linkage(rows: &[usize], d: &DistanceMatrix) -> Vec<Merge> {
    let m = rows.len();
    if m < 2 {
        return Vec::new();
    }
    // Prim's algorithm on the dense submatrix.
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    let mut link = vec![0usize; m];
    let mut merges = Vec::with_capacity(m - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..m {
        let rc = rows[current];
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..m {
            if in_tree[j] {
                continue;
            }
            let dj = d.get(rc, rows[j]);
            if dj < best[j] || (dj == best[j] && rows[current] < rows[link[j]]) {
                best[j] = dj;
                link[j] = current;
            }
            if best[j] < next_d || (best[j] == next_d && rows[j] < rows[next]) {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        let (x, y) = (rows[next], rows[link[next]]);
        merges.push(Merge {
            a: x.min(y),
            b: x.max(y),
            distance: next_d,
        });
        current = next;
    }
    merges.sort_by(|p, q| p.distance.total_cmp(&q.distance).then(p.a.cmp(&q.a)).then(p.b.cmp(&q.b)));
    merges
}

/// Height at which the dendrogram is cut, or `None` to keep one cluster.
///
/// Merge heights are histogrammed into `histogram_bins` equal-width bins over
/// `[0, max]`. The cut is the lower edge of the first empty bin that follows
/// a non-empty one.
pub fn gap_threshold(merges: &[Merge], histogram_bins: usize) -> Option<f64> {
    let max = merges.iter().map(|m| m.distance).fold(0.0, f64::max);
    if merges.is_empty() || max <= 0.0 || histogram_bins < 2 {
        return None;
    }
    let width = max / histogram_bins as f64;
    let mut counts = vec![0usize; histogram_bins];
    for m in merges {
        let i = ((m.distance / width).floor() as usize).min(histogram_bins - 1);
        counts[i] += 1;
    }
    let first = counts.iter().position(|&c| c > 0)?;
    counts[first..].iter().position(|&c| c == 0).map(|off| (first + off) as f64 * width)
}

/// Partition of `rows` into the connected components of the merges below
/// the gap threshold. Clusters are ordered by their smallest row.
pub fn cut_by_gap(rows: &[usize], merges: &[Merge], histogram_bins: usize) -> Vec<Vec<usize>> {
    let Some(cut) = gap_threshold(merges, histogram_bins) else {
        return if rows.is_empty() { Vec::new() } else { vec![sorted(rows)] };
    };
    let sorted_rows = sorted(rows);
    let pos = |r: usize| sorted_rows.binary_search(&r).expect("merge row belongs to the clustered rows");
    let mut uf = UnionFind::new(sorted_rows.len());
    for m in merges.iter().filter(|m| m.distance < cut) {
        uf.union(pos(m.a), pos(m.b));
    }
    uf.groups()
        .into_iter()
        .map(|g| g.into_iter().map(|i| sorted_rows[i]).collect())
        .collect()
}

fn sorted(rows: &[usize]) -> Vec<usize> {
    let mut v = rows.to_vec();
    v.sort_unstable();
    v
}
