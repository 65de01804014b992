//! Human-facing artifacts: split summaries, per-row explanations, and
//! tree/network exports.

pub mod explain;
pub mod export;
pub mod format;
pub mod summary;

pub use explain::{explain_individual, ExplanationHop, ExplanationTrace, Verdict};
pub use export::{export_network, export_tree, import_tree_json, Coloring, NetworkFormat, TreeFormat};
pub use format::{fmt_sig, round_sig};
pub use summary::{direction_phrase, summarize_split, summarize_tree, SplitSummary};
