//! MAPPER: cover the filter space, cluster each bin's preimage in the data
//! space, and take the 1-skeleton of the nerve of the resulting cover.

pub mod cluster;
pub mod cover;
pub mod network;
mod union_find;

use rayon::prelude::*;

pub use cluster::{cut_by_gap, gap_threshold, single_linkage, Merge};
pub use cover::{assign_bins, build_cover, Bin, Cover, CoverParams};
pub use network::{build_network, connected_components, Cluster, Component, Edge, TopologicalNetwork};

use crate::data::{analysis_matrix, AnalysisMatrix, Dataset, Group};
use crate::error::{Result, ThdError};
use crate::geometry::{pairwise_distances, DistanceMatrix, FilterValues, Lens, Metric};

pub const DEFAULT_HISTOGRAM_BINS: usize = 10;

/// The resolution-independent part of a MAPPER run on one group: the
/// analysis matrix, its distance matrix, and the lens image. Computed once
/// and reused as the resolution changes.
#[derive(Debug, Clone)]
pub struct PreparedGroup {
    pub group: Group,
    pub matrix: AnalysisMatrix,
    pub distances: DistanceMatrix,
    pub filter: FilterValues,
}

impl PreparedGroup {
    pub fn new(dataset: &Dataset, group: &Group, metric: Metric, lens: &Lens) -> Result<Self> {
        if group.is_empty() {
            return Err(ThdError::EmptyGroup);
        }
        let matrix = analysis_matrix(dataset, group)?;
        let distances = pairwise_distances(&matrix, metric);
        let filter = lens.apply(&distances)?;
        Ok(PreparedGroup {
            group: group.clone(),
            matrix,
            distances,
            filter,
        })
    }

    /// Builds the network at the given cover parameters. Bins are clustered
    /// independently and merged in bin order.
    pub fn network(&self, params: CoverParams, histogram_bins: usize) -> Result<TopologicalNetwork> {
        let cover = build_cover(&self.filter, params)?;
        let members = assign_bins(&self.filter, &cover);
        let global = self.group.rows();
        let per_bin: Vec<(usize, Vec<Vec<usize>>)> = members
            .par_iter()
            .enumerate()
            .filter(|(_, rows)| !rows.is_empty())
            .map(|(b, rows)| {
                let merges = single_linkage(rows, &self.distances);
                let clusters = cut_by_gap(rows, &merges, histogram_bins)
                    .into_iter()
                    .map(|c| c.into_iter().map(|i| global[i]).collect())
                    .collect();
                (b, clusters)
            })
            .collect();
        Ok(build_network(per_bin))
    }
}

/// One complete MAPPER run over `group`.
pub fn mapper(
    dataset: &Dataset,
    group: &Group,
    metric: Metric,
    lens: &Lens,
    params: CoverParams,
    histogram_bins: usize,
) -> Result<TopologicalNetwork> {
    params.validate()?;
    PreparedGroup::new(dataset, group, metric, lens)?.network(params, histogram_bins)
}
