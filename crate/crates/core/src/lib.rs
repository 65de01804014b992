//! Topological hierarchical decomposition (THD) of tabular data.
//!
//! A dataset is split into a tree of groups by running MAPPER on each group
//! at increasing resolution until its network falls apart into at least two
//! large connected components, then recursing into each component. Splits
//! are explained by per-feature two-sample statistics.

pub mod classifier;
pub mod data;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod mapper;
pub mod report;
pub mod stats;
pub mod thd;

pub use error::{Result, ThdError};

pub use classifier::{evaluate, fit_predict, Prediction};
pub use data::{analysis_matrix, ingest_csv, label_distribution, Dataset, Group, Schema};
pub use mapper::{mapper, CoverParams, TopologicalNetwork};
pub use report::{explain_individual, export_network, export_tree, summarize_split};
pub use stats::{compare_groups, hypergeometric_tail, ks_p_value, ks_statistic, node_coloring, StatsConfig};
pub use thd::{run_thd, trace_point_path, tree_statistics, ThdNode, ThdParams, ThdTree};
