//! Metrics on the data space and lenses into the filter space.

mod eigen;
pub mod lens;
pub mod metric;

pub use lens::{classical_mds, knn_indices, neighborhood_lens, FilterValues, Lens};
pub use metric::{feature_variances, pairwise_distances, vne_distance, DistanceMatrix, FeatureVariances, Metric};
