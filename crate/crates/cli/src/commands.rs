use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thd_core::classifier::{evaluate, fit_predict, Prediction};
use thd_core::data::{ingest_csv, read_records, Dataset, Schema};
use thd_core::report::{
    explain_individual, export_network, export_tree, summarize_tree, Coloring, ExplanationTrace, NetworkFormat,
    TreeFormat,
};
use thd_core::stats::StatsConfig;
use thd_core::thd::{run_thd, tree_statistics, ThdTree};

use crate::config::RunConfig;
use crate::CliError;

/// The `tree.json` artifact: a tree plus what is needed to reload its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeArtifact {
    pub dataset: PathBuf,
    pub schema: Schema,
    pub stats: StatsConfig,
    pub risky_level: Option<String>,
    pub verdict_threshold: Option<f64>,
    pub tree: ThdTree,
}

impl TreeArtifact {
    pub fn load(path: &Path) -> Result<TreeArtifact, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid tree file {}: {e}", path.display())))
    }

    /// Re-ingests the dataset and checks it is the one the tree was built on.
    pub fn dataset(&self) -> Result<Dataset, CliError> {
        let d = ingest_csv(&self.dataset, &self.schema)?;
        self.tree.check_dataset(&d)?;
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Every file written by a run with its content hash. Holds no timestamps
/// or host details, so identical inputs give identical manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset_sha256: String,
    pub dataset_rows: usize,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(root: &Path, rel: &str, content: &[u8], files: &mut Vec<ManifestEntry>) -> Result<(), CliError> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, content)?;
    files.push(ManifestEntry {
        path: rel.to_string(),
        sha256: sha256_hex(content),
        bytes: content.len(),
    });
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(thd_core::ThdError::from)?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Level used for explanations when none is configured: the alphabetically
/// first label level.
fn default_risky_level(dataset: &Dataset) -> Option<String> {
    let j = dataset.label_index()?;
    dataset.levels(j).iter().min().cloned()
}

/// Runs one decomposition per configured lens and writes, under
/// `out_dir/<lens>/`, the tree (`tree.json`, `tree.dot`), split summaries,
/// tree statistics, and one network file per tree node; then the effective
/// config and a manifest of everything written.
pub fn cmd_run(cfg: &RunConfig, out_dir: &Path) -> Result<Manifest, CliError> {
    cfg.validate()?;
    let dataset_path = std::fs::canonicalize(&cfg.dataset)
        .map_err(|e| CliError::Config(format!("cannot open dataset {}: {e}", cfg.dataset.display())))?;
    let dataset = ingest_csv(&dataset_path, &cfg.schema)?;
    let risky = cfg.risky_level.clone().or_else(|| default_risky_level(&dataset));
    let coloring = dataset.label_index().zip(risky.clone()).map(|(j, level)| Coloring {
        feature: dataset.features()[j].name.clone(),
        level: Some(level),
    });

    let mut files = Vec::new();
    let mut effective = cfg.clone();
    effective.dataset = dataset_path.clone();
    effective.output_dir = PathBuf::new();
    write_file(out_dir, "config.json", &to_json(&effective)?, &mut files)?;

    for (lens, dir) in cfg.lenses.iter().zip(cfg.lens_dirs()) {
        let tree = run_thd(&dataset, &cfg.thd_params(lens))?;
        let artifact = TreeArtifact {
            dataset: dataset_path.clone(),
            schema: cfg.schema.clone(),
            stats: cfg.stats,
            risky_level: risky.clone(),
            verdict_threshold: cfg.verdict_threshold,
            tree,
        };
        let tree = &artifact.tree;
        write_file(out_dir, &format!("{dir}/tree.json"), &to_json(&artifact)?, &mut files)?;
        let dot = export_tree(tree, &dataset, TreeFormat::Dot)?;
        write_file(out_dir, &format!("{dir}/tree.dot"), dot.as_bytes(), &mut files)?;
        let summaries = summarize_tree(tree, &dataset, &cfg.stats)?;
        write_file(out_dir, &format!("{dir}/summaries.json"), &to_json(&summaries)?, &mut files)?;
        write_file(out_dir, &format!("{dir}/statistics.json"), &to_json(&tree_statistics(tree, &dataset))?, &mut files)?;
        for node in tree.nodes() {
            let doc = export_network(&node.network, &dataset, cfg.network_format, coloring.as_ref())?;
            let rel = format!("{dir}/networks/{}.{}", node.id, cfg.network_format.extension());
            write_file(out_dir, &rel, doc.as_bytes(), &mut files)?;
        }
    }

    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        dataset_sha256: dataset.fingerprint(),
        dataset_rows: dataset.rows(),
        seed: cfg.seed,
        files,
    };
    std::fs::write(out_dir.join(MANIFEST), to_json(&manifest)?)?;
    Ok(manifest)
}

/// Explanation of one row's path through a saved tree: the sentences, then
/// the full trace as JSON.
pub fn cmd_trace(
    tree_path: &Path,
    row_id: usize,
    risky_level: Option<&str>,
    threshold: Option<f64>,
) -> Result<(ExplanationTrace, String), CliError> {
    let artifact = TreeArtifact::load(tree_path)?;
    let dataset = artifact.dataset()?;
    let risky = risky_level
        .map(str::to_string)
        .or_else(|| artifact.risky_level.clone())
        .or_else(|| default_risky_level(&dataset))
        .ok_or_else(|| CliError::Usage("the dataset has no label to explain against".into()))?;
    let trace = explain_individual(
        &artifact.tree,
        &dataset,
        row_id,
        &risky,
        threshold.or(artifact.verdict_threshold),
        &artifact.stats,
    )?;
    let mut out = trace.text();
    out.push_str("\n\n");
    out.push_str(&serde_json::to_string_pretty(&trace).map_err(thd_core::ThdError::from)?);
    out.push('\n');
    Ok((trace, out))
}

/// The network of one tree node in the requested format.
pub fn cmd_export(
    tree_path: &Path,
    node_id: &str,
    format: NetworkFormat,
    coloring: Option<&Coloring>,
) -> Result<String, CliError> {
    let artifact = TreeArtifact::load(tree_path)?;
    let dataset = artifact.dataset()?;
    let node = artifact.tree.node(node_id)?;
    Ok(export_network(&node.network, &dataset, format, coloring)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOutput {
    pub predictions: Vec<Prediction>,
    /// CSV with one line per test row; `row_id` is the row's 0-based index
    /// in the test file.
    pub csv: String,
    /// Present when every test row carries a label.
    pub accuracy: Option<f64>,
}

/// Trains on `train_path`, predicts every row of `test_path`, and reports
/// predictions as CSV. The test file may omit the label column or leave it
/// empty; labels present in it are used only for scoring. The first
/// configured lens is used.
pub fn cmd_classify(cfg: &RunConfig, train_path: &Path, test_path: &Path) -> Result<ClassifyOutput, CliError> {
    cfg.validate()?;
    let label = cfg
        .schema
        .label
        .clone()
        .ok_or_else(|| CliError::Config("classification needs `schema.label`".into()))?;
    let open = |p: &Path| {
        std::fs::File::open(p).map_err(|e| CliError::Config(format!("cannot open {}: {e}", p.display())))
    };
    let (header, train) = read_records(open(train_path)?)?;
    let (test_header, test) = read_records(open(test_path)?)?;
    let label_col = header
        .iter()
        .position(|h| *h == label)
        .ok_or_else(|| CliError::Config(format!("training file has no `{label}` column")))?;
    let has_label = if test_header == header {
        true
    } else {
        let mut without = header.clone();
        without.remove(label_col);
        if test_header != without {
            return Err(CliError::Config("test file columns do not match the training file".into()));
        }
        false
    };

    let n_train = train.len();
    let mut truth = BTreeMap::new();
    let mut records = train;
    let mut hidden = Vec::with_capacity(test.len());
    for (i, (line, mut rec)) in test.into_iter().enumerate() {
        if has_label {
            let value = std::mem::take(&mut rec[label_col]);
            if !value.trim().is_empty() {
                truth.insert(n_train + i, value.trim().to_string());
            }
        } else {
            rec.insert(label_col, String::new());
        }
        hidden.push((line, rec));
    }
    let n_test = hidden.len();
    records.extend(hidden);
    let dataset = Dataset::from_records(header, records, &cfg.schema)?;

    let train_rows: Vec<usize> = (0..n_train).collect();
    let test_rows: Vec<usize> = (n_train..n_train + n_test).collect();
    let (_, predictions) = fit_predict(&dataset, &train_rows, &test_rows, &cfg.thd_params(&cfg.lenses[0]), cfg.k_votes)?;

    let accuracy = if n_test > 0 && truth.len() == n_test {
        Some(evaluate(&predictions, &truth)?.accuracy)
    } else {
        None
    };
    let mut csv = String::from("row_id,label,confidence,leaf_id,abstain,outlier\n");
    for p in &predictions {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            p.row_id - n_train,
            p.label.as_deref().map(csv_field).unwrap_or_default(),
            thd_core::report::fmt_sig(p.confidence),
            p.node_id,
            p.abstain,
            p.outlier
        );
    }
    Ok(ClassifyOutput { predictions, csv, accuracy })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
