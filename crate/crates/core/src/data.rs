//! Typed tabular data: ingestion, sentinel handling, groups, and the numeric
//! matrix the geometry layer works on.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ThdError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    /// Held out of the analysis matrix but still available to statistics.
    pub excluded: bool,
    pub is_label: bool,
}

/// Feature-typing directives applied at ingestion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    pub label: Option<String>,
    pub excluded: Vec<String>,
    /// Numeric codes that mark a cell as missing.
    pub sentinels: Vec<f64>,
    pub kinds: BTreeMap<String, FeatureKind>,
}

impl Schema {
    /// The FICO HELOC layout: `RiskPerformance` is the label,
    /// `ExternalRiskEstimate` is held out, and -7/-8/-9 are special values.
    pub fn heloc() -> Self {
        Schema {
            label: Some("RiskPerformance".to_string()),
            excluded: vec!["ExternalRiskEstimate".to_string()],
            sentinels: vec![-7.0, -8.0, -9.0],
            kinds: BTreeMap::new(),
        }
    }

    fn is_sentinel(&self, v: f64) -> bool {
        self.sentinels.iter().any(|s| *s == v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Continuous(Vec<f64>),
    /// Dense codes from 0 into `levels`, in order of first appearance.
    Categorical { codes: Vec<u32>, levels: Vec<String> },
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }
}

/// Immutable column-major table. Row ids are the positions `0..rows`.
///
/// Missing cells keep a placeholder value (the sentinel that triggered them,
/// or 0 / code 0 for empty cells) and are flagged in `missing`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: usize,
    features: Vec<FeatureMeta>,
    columns: Vec<Column>,
    missing: Vec<Vec<bool>>,
    schema: Schema,
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, schema)
}

pub fn ingest_reader<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let (header, records) = read_records(reader)?;
    Dataset::from_records(header, records, schema)
}

/// Header and raw records of a CSV document, each record tagged with its
/// line number. Rows whose arity differs from the header are rejected.
pub fn read_records<R: Read>(reader: R) -> Result<(Vec<String>, Vec<(u64, Vec<String>)>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(ThdError::Arity {
                line,
                expected: header.len(),
                found: rec.len(),
            });
        }
        records.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    Ok((header, records))
}

impl Dataset {
    /// Builds a dataset from already-split records. Each record carries the
    /// source line number used in error messages.
    pub fn from_records(
        header: Vec<String>,
        records: Vec<(u64, Vec<String>)>,
        schema: &Schema,
    ) -> Result<Dataset> {
        let index: HashMap<&str, usize> =
            header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
        let named = schema
            .label
            .iter()
            .chain(schema.excluded.iter())
            .chain(schema.kinds.keys());
        for name in named {
            if !index.contains_key(name.as_str()) {
                return Err(ThdError::UnknownColumn(name.clone()));
            }
        }
        for (line, rec) in &records {
            if rec.len() != header.len() {
                return Err(ThdError::Arity {
                    line: *line,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
        }

        let rows = records.len();
        let mut features = Vec::with_capacity(header.len());
        let mut columns = Vec::with_capacity(header.len());
        let mut missing = Vec::with_capacity(header.len());
        for (j, name) in header.iter().enumerate() {
            let is_label = schema.label.as_deref() == Some(name.as_str());
            let kind = match schema.kinds.get(name) {
                Some(k) => *k,
                None if is_label => FeatureKind::Categorical,
                None => infer_kind(records.iter().map(|(_, r)| r[j].trim()), schema),
            };
            let (column, mask) = match kind {
                FeatureKind::Continuous => parse_continuous(name, j, &records, schema)?,
                FeatureKind::Categorical => parse_categorical(j, &records, schema),
            };
            features.push(FeatureMeta {
                name: name.clone(),
                kind,
                excluded: is_label || schema.excluded.iter().any(|e| e == name),
                is_label,
            });
            columns.push(column);
            missing.push(mask);
        }
        debug_assert!(columns.iter().all(|c| c.len() == rows));
        Ok(Dataset {
            rows,
            features,
            columns,
            missing,
            schema: schema.clone(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row_ids(&self) -> impl Iterator<Item = usize> {
        0..self.rows
    }

    pub fn features(&self) -> &[FeatureMeta] {
        &self.features
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn column(&self, feature: usize) -> &Column {
        &self.columns[feature]
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| ThdError::UnknownFeature(name.to_string()))
    }

    pub fn label_index(&self) -> Option<usize> {
        self.features.iter().position(|f| f.is_label)
    }

    pub fn is_missing(&self, feature: usize, row: usize) -> bool {
        self.missing[feature][row]
    }

    /// Present (non-missing) value of a continuous feature.
    pub fn value(&self, feature: usize, row: usize) -> Option<f64> {
        match &self.columns[feature] {
            Column::Continuous(v) if !self.missing[feature][row] => Some(v[row]),
            _ => None,
        }
    }

    /// Present category code of a categorical feature.
    pub fn code(&self, feature: usize, row: usize) -> Option<u32> {
        match &self.columns[feature] {
            Column::Categorical { codes, .. } if !self.missing[feature][row] => Some(codes[row]),
            _ => None,
        }
    }

    pub fn levels(&self, feature: usize) -> &[String] {
        match &self.columns[feature] {
            Column::Categorical { levels, .. } => levels,
            Column::Continuous(_) => &[],
        }
    }

    /// Label string of a row, `None` if unlabeled or the dataset has no label.
    pub fn label_of(&self, row: usize) -> Option<&str> {
        let j = self.label_index()?;
        self.code(j, row).map(|c| self.levels(j)[c as usize].as_str())
    }

    /// Present values of a continuous feature over `rows`, in row order.
    pub fn present_values(&self, feature: usize, rows: &[usize]) -> Vec<f64> {
        rows.iter().filter_map(|&r| self.value(feature, r)).collect()
    }

    /// Writes the dataset back as comma-separated text that re-ingests to an
    /// identical dataset under the same schema.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.features.iter().map(|f| f.name.as_str()))?;
        for r in 0..self.rows {
            let rec: Vec<String> = (0..self.features.len())
                .map(|j| match &self.columns[j] {
                    Column::Continuous(v) => {
                        if self.missing[j][r] && !self.schema.is_sentinel(v[r]) {
                            String::new()
                        } else {
                            format!("{}", v[r])
                        }
                    }
                    Column::Categorical { codes, levels } => {
                        if self.missing[j][r] {
                            String::new()
                        } else {
                            levels[codes[r] as usize].clone()
                        }
                    }
                })
                .collect();
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// SHA-256 over the typed content, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.rows as u64).to_le_bytes());
        for (j, f) in self.features.iter().enumerate() {
            h.update(f.name.as_bytes());
            h.update([f.kind as u8, f.excluded as u8, f.is_label as u8]);
            match &self.columns[j] {
                Column::Continuous(v) => v.iter().for_each(|x| h.update(x.to_bits().to_le_bytes())),
                Column::Categorical { codes, levels } => {
                    levels.iter().for_each(|l| {
                        h.update(l.as_bytes());
                        h.update([0u8]);
                    });
                    codes.iter().for_each(|c| h.update(c.to_le_bytes()));
                }
            }
            h.update(self.missing[j].iter().map(|&m| m as u8).collect::<Vec<_>>());
        }
        to_hex(&h.finalize())
    }
}

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn infer_kind<'a>(cells: impl Iterator<Item = &'a str>, schema: &Schema) -> FeatureKind {
    for c in cells {
        if c.is_empty() {
            continue;
        }
        match c.parse::<f64>() {
            Ok(v) if v.is_finite() || schema.is_sentinel(v) => {}
            _ => return FeatureKind::Categorical,
        }
    }
    FeatureKind::Continuous
}

fn parse_continuous(
    name: &str,
    j: usize,
    records: &[(u64, Vec<String>)],
    schema: &Schema,
) -> Result<(Column, Vec<bool>)> {
    let mut values = Vec::with_capacity(records.len());
    let mut mask = Vec::with_capacity(records.len());
    for (line, rec) in records {
        let cell = rec[j].trim();
        if cell.is_empty() {
            values.push(0.0);
            mask.push(true);
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) if schema.is_sentinel(v) => {
                values.push(v);
                mask.push(true);
            }
            Ok(v) if v.is_finite() => {
                values.push(v);
                mask.push(false);
            }
            _ => {
                return Err(ThdError::NonNumeric {
                    line: *line,
                    column: name.to_string(),
                    value: cell.to_string(),
                })
            }
        }
    }
    Ok((Column::Continuous(values), mask))
}

fn parse_categorical(j: usize, records: &[(u64, Vec<String>)], schema: &Schema) -> (Column, Vec<bool>) {
    let mut levels: Vec<String> = Vec::new();
    let mut lookup: HashMap<String, u32> = HashMap::new();
    let mut codes = Vec::with_capacity(records.len());
    let mut mask = Vec::with_capacity(records.len());
    for (_, rec) in records {
        let cell = rec[j].trim();
        let is_missing =
            cell.is_empty() || cell.parse::<f64>().map(|v| schema.is_sentinel(v)).unwrap_or(false);
        if is_missing {
            codes.push(0);
            mask.push(true);
            continue;
        }
        let code = *lookup.entry(cell.to_string()).or_insert_with(|| {
            levels.push(cell.to_string());
            (levels.len() - 1) as u32
        });
        codes.push(code);
        mask.push(false);
    }
    (Column::Categorical { codes, levels }, mask)
}

/// A subset of dataset rows: sorted ascending, no duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Group {
    rows: Vec<usize>,
}

impl Group {
    pub fn new(dataset_rows: usize, rows: impl IntoIterator<Item = usize>) -> Result<Group> {
        let mut rows: Vec<usize> = rows.into_iter().collect();
        rows.sort_unstable();
        rows.dedup();
        if let Some(&last) = rows.last() {
            if last >= dataset_rows {
                return Err(ThdError::InvalidRow(last));
            }
        }
        Ok(Group { rows })
    }

    pub fn all(dataset: &Dataset) -> Group {
        Group {
            rows: (0..dataset.rows).collect(),
        }
    }

    /// Caller guarantees `rows` is sorted and unique.
    pub(crate) fn from_sorted(rows: Vec<usize>) -> Group {
        debug_assert!(rows.windows(2).all(|w| w[0] < w[1]));
        Group { rows }
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.rows.binary_search(&row).is_ok()
    }

    pub fn is_disjoint(&self, other: &Group) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.rows.len() && j < other.rows.len() {
            match self.rows[i].cmp(&other.rows[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn difference(&self, other: &Group) -> Group {
        Group {
            rows: self.rows.iter().copied().filter(|r| !other.contains(*r)).collect(),
        }
    }

    pub fn union(&self, other: &Group) -> Group {
        let mut rows: Vec<usize> = self.rows.iter().chain(other.rows.iter()).copied().collect();
        rows.sort_unstable();
        rows.dedup();
        Group { rows }
    }
}

/// Row-major numeric matrix over a group, one row per member in group order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<f64>,
    pub column_names: Vec<String>,
    /// Columns dropped because every group member was missing.
    pub warnings: Vec<String>,
}

impl AnalysisMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<AnalysisMatrix> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(ThdError::DimensionMismatch(ncols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(AnalysisMatrix {
            nrows: rows.len(),
            ncols,
            data,
            column_names: (0..ncols).map(|j| format!("x{j}")).collect(),
            warnings: Vec::new(),
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }
}

/// Numeric encoding of the non-excluded features restricted to `group`.
///
/// Continuous columns are imputed with the group median; categoricals are
/// one-hot encoded over the dataset's full level dictionary, with missing
/// cells taking the group's most frequent level.
pub fn analysis_matrix(dataset: &Dataset, group: &Group) -> Result<AnalysisMatrix> {
    if group.is_empty() {
        return Err(ThdError::EmptyGroup);
    }
    let rows = group.rows();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    let mut warnings = Vec::new();
    let mut any_feature = false;
    for (j, meta) in dataset.features.iter().enumerate() {
        if meta.excluded {
            continue;
        }
        any_feature = true;
        match &dataset.columns[j] {
            Column::Continuous(values) => {
                let present = dataset.present_values(j, rows);
                let Some(fill) = median(&present) else {
                    warnings.push(format!("column `{}` has no present values; dropped", meta.name));
                    continue;
                };
                cols.push(
                    rows.iter()
                        .map(|&r| if dataset.missing[j][r] { fill } else { values[r] })
                        .collect(),
                );
                names.push(meta.name.clone());
            }
            Column::Categorical { codes, levels } => {
                let mut counts = vec![0usize; levels.len()];
                for &r in rows {
                    if !dataset.missing[j][r] {
                        counts[codes[r] as usize] += 1;
                    }
                }
                // Ties go to the smaller code.
                let mode = counts
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c > 0)
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(k, _)| k as u32);
                let Some(mode) = mode else {
                    warnings.push(format!("column `{}` has no present values; dropped", meta.name));
                    continue;
                };
                for (k, level) in levels.iter().enumerate() {
                    cols.push(
                        rows.iter()
                            .map(|&r| {
                                let c = if dataset.missing[j][r] { mode } else { codes[r] };
                                if c as usize == k {
                                    1.0
                                } else {
                                    0.0
                                }
                            })
                            .collect(),
                    );
                    names.push(format!("{}={}", meta.name, level));
                }
            }
        }
    }
    if !any_feature || cols.is_empty() {
        return Err(ThdError::NoAnalysisColumns);
    }
    let ncols = cols.len();
    let mut data = Vec::with_capacity(rows.len() * ncols);
    for i in 0..rows.len() {
        data.extend(cols.iter().map(|c| c[i]));
    }
    Ok(AnalysisMatrix {
        nrows: rows.len(),
        ncols,
        data,
        column_names: names,
        warnings,
    })
}

/// Median of a sample; the mean of the two middle values for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Fraction of each label level among the labeled members of `group`.
pub fn label_distribution(dataset: &Dataset, group: &Group) -> Result<BTreeMap<String, f64>> {
    let j = dataset.label_index().ok_or(ThdError::NoLabel)?;
    if group.is_empty() {
        return Err(ThdError::EmptyGroup);
    }
    let levels = dataset.levels(j);
    let mut counts = vec![0usize; levels.len()];
    let mut total = 0usize;
    for &r in group.rows() {
        if let Some(c) = dataset.code(j, r) {
            counts[c as usize] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(ThdError::NoLabeledRows);
    }
    Ok(levels
        .iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(l, c)| (l.clone(), c as f64 / total as f64))
        .collect())
}
