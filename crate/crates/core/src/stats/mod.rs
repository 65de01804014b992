//! Two-sample statistics that explain how a group differs from its peers.

pub mod coloring;
pub mod compare;
pub mod hypergeom;
pub mod ks;

pub use coloring::node_coloring;
pub use compare::{compare_groups, is_skewed, Direction, FeatureStat, GroupComparison, StatKind, StatsConfig, Summary};
pub use hypergeom::{hypergeometric_lower_tail, hypergeometric_pmf, hypergeometric_tail, ln_factorial};
pub use ks::{ks_p_value, ks_statistic};
