//! Loading, normalizing and temporally batching labeled feature vectors.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default temporal batch size.
pub const DEFAULT_BATCH_SIZE: usize = 50;

/// Column name used for sample identifiers when writing CSV, and looked up
/// (if present) when reading.
pub const SAMPLE_ID_COLUMN: &str = "sample_id";

/// One timestamped sample of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub sample_id: String,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub values: Vec<f64>,
    pub family: String,
}

/// All samples of one family, in ascending `(timestamp, sample_id)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub family: String,
    pub dim: usize,
    pub samples: Vec<FeatureVector>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, checking shape invariants and sorting samples by
    /// `(timestamp, sample_id)`.
    pub fn new(
        family: impl Into<String>,
        feature_names: Vec<String>,
        mut samples: Vec<FeatureVector>,
    ) -> Result<Self> {
        let family = family.into();
        let dim = feature_names.len();
        if dim == 0 {
            return Err(Error::Data(format!(
                "family '{family}' has no numeric features"
            )));
        }
        for s in &samples {
            if s.values.len() != dim {
                return Err(Error::Data(format!(
                    "sample '{}' has {} values, expected {dim}",
                    s.sample_id,
                    s.values.len()
                )));
            }
            if s.family != family {
                return Err(Error::Data(format!(
                    "sample '{}' belongs to family '{}', not '{family}'",
                    s.sample_id, s.family
                )));
            }
            if let Some(v) = s.values.iter().find(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "sample '{}' contains non-finite value {v}",
                    s.sample_id
                )));
            }
        }
        samples.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.sample_id.cmp(&b.sample_id))
        });
        if let Some(w) = samples
            .windows(2)
            .find(|w| w[0].timestamp == w[1].timestamp && w[0].sample_id == w[1].sample_id)
        {
            return Err(Error::Data(format!(
                "duplicate sample '{}' at timestamp {}",
                w[0].sample_id, w[0].timestamp
            )));
        }
        Ok(Dataset {
            family,
            dim,
            samples,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Column names the CSV reader needs to know about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvColumns {
    pub timestamp: String,
    pub label: String,
    /// Sample identifier column. When absent from the file, the 1-based data
    /// row number (zero-padded) is used.
    pub id: String,
}

impl CsvColumns {
    pub fn new(timestamp: impl Into<String>, label: impl Into<String>) -> Self {
        CsvColumns {
            timestamp: timestamp.into(),
            label: label.into(),
            id: SAMPLE_ID_COLUMN.to_string(),
        }
    }
}

/// What the CSV reader kept and what it threw away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub path: PathBuf,
    pub rows: usize,
    pub total_columns: usize,
    pub retained_features: usize,
    /// Non-numeric feature columns, in file order.
    pub dropped_columns: Vec<String>,
    /// Sample count per label value.
    pub families: BTreeMap<String, usize>,
}

/// Reads a CSV file holding a single family.
///
/// A column is treated as a numeric feature when its value in the first data
/// row parses as a number; other columns (besides the timestamp, label and
/// id columns) are dropped and listed in the report. A later unparseable cell
/// in a numeric column is an error naming its row and column.
pub fn load_csv(
    path: impl AsRef<Path>,
    timestamp_column: &str,
    label_column: &str,
) -> Result<(Dataset, LoadReport)> {
    let (mut families, report) =
        load_csv_families(path.as_ref(), &CsvColumns::new(timestamp_column, label_column))?;
    if families.len() != 1 {
        let names: Vec<_> = families.keys().cloned().collect();
        return Err(Error::Data(format!(
            "{} holds {} families ({}); select one with load_csv_families",
            path.as_ref().display(),
            names.len(),
            names.join(", ")
        )));
    }
    let (_, ds) = families.pop_first().expect("exactly one family");
    Ok((ds, report))
}

/// Reads a CSV file and splits it into one [`Dataset`] per label value.
pub fn load_csv_families(
    path: &Path,
    columns: &CsvColumns,
) -> Result<(BTreeMap<String, Dataset>, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Data(format!("{}: {other:?}", path.display())),
        })?;
    let headers = reader.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);
    let ts_col = position(&columns.timestamp).ok_or_else(|| {
        Error::Config(format!(
            "timestamp column '{}' not found in {}",
            columns.timestamp,
            path.display()
        ))
    })?;
    let label_col = position(&columns.label).ok_or_else(|| {
        Error::Config(format!(
            "label column '{}' not found in {}",
            columns.label,
            path.display()
        ))
    })?;
    let id_col = position(&columns.id);

    let records = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    if records.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }

    let reserved = |c: usize| c == ts_col || c == label_col || Some(c) == id_col;
    let mut feature_cols = Vec::new();
    let mut dropped = Vec::new();
    for (c, name) in headers.iter().enumerate() {
        if reserved(c) {
            continue;
        }
        if parse_number(records[0].get(c).unwrap_or("")).is_some() {
            feature_cols.push(c);
        } else {
            dropped.push(name.to_string());
        }
    }
    if feature_cols.is_empty() {
        return Err(Error::Data(format!(
            "{} has no numeric feature columns",
            path.display()
        )));
    }
    let feature_names: Vec<String> = feature_cols
        .iter()
        .map(|&c| headers[c].to_string())
        .collect();

    let mut by_family: BTreeMap<String, Vec<FeatureVector>> = BTreeMap::new();
    let width = records.len().to_string().len().max(6);
    for (r, rec) in records.iter().enumerate() {
        let row = r + 1;
        let ts_raw = rec.get(ts_col).unwrap_or("");
        let timestamp = parse_timestamp(ts_raw).ok_or_else(|| {
            Error::Data(format!(
                "row {row}, column '{}': cannot parse timestamp '{ts_raw}'",
                columns.timestamp
            ))
        })?;
        let values = feature_cols
            .iter()
            .map(|&c| {
                let raw = rec.get(c).unwrap_or("");
                parse_number(raw).ok_or_else(|| Error::ParseCell {
                    row,
                    column: headers[c].to_string(),
                    value: raw.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let family = rec.get(label_col).unwrap_or("").to_string();
        let sample_id = match id_col {
            Some(c) => rec.get(c).unwrap_or("").to_string(),
            None => format!("{row:0width$}"),
        };
        by_family.entry(family.clone()).or_default().push(FeatureVector {
            sample_id,
            timestamp,
            values,
            family,
        });
    }

    let report = LoadReport {
        path: path.to_path_buf(),
        rows: records.len(),
        total_columns: headers.len(),
        retained_features: feature_names.len(),
        dropped_columns: dropped,
        families: by_family.iter().map(|(k, v)| (k.clone(), v.len())).collect(),
    };
    let datasets = by_family
        .into_iter()
        .map(|(fam, samples)| {
            let ds = Dataset::new(fam.clone(), feature_names.clone(), samples)?;
            Ok((fam, ds))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok((datasets, report))
}

/// Writes a dataset in the layout [`load_csv`] reads back:
/// `sample_id,timestamp,family,<features...>`.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    })?;
    let mut header = vec![
        SAMPLE_ID_COLUMN.to_string(),
        "timestamp".to_string(),
        "family".to_string(),
    ];
    header.extend(dataset.feature_names.iter().cloned());
    w.write_record(&header)?;
    for s in &dataset.samples {
        let mut rec = vec![s.sample_id.clone(), s.timestamp.to_string(), s.family.clone()];
        // `{}` on f64 prints the shortest string that parses back to the same value.
        rec.extend(s.values.iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Integer seconds, or an ISO-8601 date / date-time (UTC assumed when no
/// offset is given).
pub fn parse_timestamp(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

/// Per-feature `(min, max)` fitted by [`normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxTable {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxTable {
    pub fn fit(dataset: &Dataset) -> Self {
        let mut mins = vec![f64::INFINITY; dataset.dim];
        let mut maxs = vec![f64::NEG_INFINITY; dataset.dim];
        for s in &dataset.samples {
            for (j, &v) in s.values.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        MinMaxTable { mins, maxs }
    }

    /// Scales one value of feature `j`. Constant features map to 0.
    #[inline]
    pub fn scale(&self, j: usize, v: f64) -> f64 {
        let range = self.maxs[j] - self.mins[j];
        if range > 0.0 {
            (v - self.mins[j]) / range
        } else {
            0.0
        }
    }

    /// Applies the table to another dataset of the same dimension. Values of
    /// a foreign dataset may fall outside `[0, 1]`; they are not clamped.
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.dim != self.mins.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mins.len(),
                got: dataset.dim,
            });
        }
        let mut out = dataset.clone();
        for s in &mut out.samples {
            for (j, v) in s.values.iter_mut().enumerate() {
                *v = self.scale(j, *v);
            }
        }
        Ok(out)
    }
}

/// Min-max scales every feature to `[0, 1]` over the whole dataset.
///
/// The scaling is fitted on all samples of the family before batching, so
/// later batches influence the scale of earlier ones.
pub fn normalize(dataset: &Dataset) -> Result<(Dataset, MinMaxTable)> {
    if dataset.is_empty() {
        return Err(Error::Data(format!(
            "cannot normalize empty family '{}'",
            dataset.family
        )));
    }
    let table = MinMaxTable::fit(dataset);
    let out = table.apply(dataset)?;
    Ok((out, table))
}

/// A fixed-size block of consecutive samples. The first half trains, the
/// second half tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalBatch {
    /// 1-based position in the family's batch sequence.
    pub index: usize,
    pub samples: Vec<FeatureVector>,
}

impl TemporalBatch {
    pub fn half(&self) -> usize {
        self.samples.len() / 2
    }

    pub fn train_half(&self) -> &[FeatureVector] {
        &self.samples[..self.half()]
    }

    pub fn test_half(&self) -> &[FeatureVector] {
        &self.samples[self.half()..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchReport {
    pub batch_size: usize,
    pub batch_count: usize,
    pub dropped_remainder: usize,
}

/// Cuts the dataset into `floor(n / batch_size)` consecutive batches; the
/// trailing remainder is dropped and counted in the report.
pub fn partition_batches(
    dataset: &Dataset,
    batch_size: usize,
) -> Result<(Vec<TemporalBatch>, BatchReport)> {
    if batch_size == 0 || !batch_size.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "batch size must be a positive even number, got {batch_size}"
        )));
    }
    let n = dataset.len();
    if n < 2 * batch_size {
        return Err(Error::Data(format!(
            "family '{}' has {n} samples; at least {} are required for batch size {batch_size}",
            dataset.family,
            2 * batch_size
        )));
    }
    let batches: Vec<TemporalBatch> = dataset
        .samples
        .chunks_exact(batch_size)
        .enumerate()
        .map(|(i, chunk)| TemporalBatch {
            index: i + 1,
            samples: chunk.to_vec(),
        })
        .collect();
    let report = BatchReport {
        batch_size,
        batch_count: batches.len(),
        dropped_remainder: n % batch_size,
    };
    Ok((batches, report))
}

/// Two disjoint random draws from the "other" family: one for training,
/// one for testing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtherFamilySplit {
    pub y_train: Vec<FeatureVector>,
    pub y_test: Vec<FeatureVector>,
    pub seed: u64,
}

pub fn sample_other_family(
    other: &Dataset,
    half_size: usize,
    seed: u64,
) -> Result<OtherFamilySplit> {
    let needed = 2 * half_size;
    if half_size == 0 || other.len() < needed {
        return Err(Error::Data(format!(
            "family '{}' has {} samples; {needed} are required to draw two disjoint halves of {half_size}",
            other.family,
            other.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, other.len(), needed).into_vec();
    let take = |ids: &[usize]| ids.iter().map(|&i| other.samples[i].clone()).collect();
    Ok(OtherFamilySplit {
        y_train: take(&picked[..half_size]),
        y_test: take(&picked[half_size..]),
        seed,
    })
}

/// Ids present in both halves; empty for every valid split.
pub fn overlapping_ids(split: &OtherFamilySplit) -> BTreeSet<String> {
    let train: BTreeSet<&str> = split.y_train.iter().map(|s| s.sample_id.as_str()).collect();
    split
        .y_test
        .iter()
        .filter(|s| train.contains(s.sample_id.as_str()))
        .map(|s| s.sample_id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn fv(id: &str, ts: i64, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            sample_id: id.into(),
            timestamp: ts,
            values,
            family: "fam".into(),
        }
    }

    fn dataset_of(rows: Vec<Vec<f64>>) -> Dataset {
        let dim = rows[0].len();
        let names = (0..dim).map(|j| format!("f{j}")).collect();
        let samples = rows
            .into_iter()
            .enumerate()
            .map(|(i, v)| fv(&format!("s{i:04}"), i as i64, v))
            .collect();
        Dataset::new("fam", names, samples).unwrap()
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_keeps_sorted_input_order() {
        let f = write_tmp("ts,label,a,b\n1,X,0.5,1\n2,X,0.25,2\n3,X,1.0,3\n");
        let (ds, report) = load_csv(f.path(), "ts", "label").unwrap();
        assert_eq!(ds.dim, 2);
        assert_eq!(ds.samples.len(), 3);
        let ts: Vec<i64> = ds.samples.iter().map(|s| s.timestamp).collect();
        assert_eq!(ts, vec![1, 2, 3]);
        assert_eq!(ds.samples[1].values, vec![0.25, 2.0]);
        assert!(report.dropped_columns.is_empty());
    }

    #[test]
    fn load_sorts_shuffled_rows() {
        let f = write_tmp("sample_id,ts,label,a\nc,30,X,3\na,10,X,1\nd,30,X,4\nb,20,X,2\n");
        let (ds, _) = load_csv(f.path(), "ts", "label").unwrap();
        let ids: Vec<&str> = ds.samples.iter().map(|s| s.sample_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn load_drops_non_numeric_columns() {
        let f = write_tmp("ts,label,name,a,pkg\n1,X,foo,1,com.x\n2,X,bar,2,com.y\n");
        let (ds, report) = load_csv(f.path(), "ts", "label").unwrap();
        assert_eq!(ds.feature_names, vec!["a"]);
        assert_eq!(report.dropped_columns, vec!["name", "pkg"]);
    }

    #[test]
    fn load_reports_bad_cell_position() {
        let f = write_tmp("ts,label,a,b\n1,X,1,2\n2,X,1,oops\n");
        match load_csv(f.path(), "ts", "label") {
            Err(Error::ParseCell { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_missing_columns_is_config_error() {
        let f = write_tmp("ts,label,a\n1,X,1\n");
        assert!(matches!(
            load_csv(f.path(), "when", "label"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            load_csv(f.path(), "ts", "family"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn load_without_numeric_features_fails() {
        let f = write_tmp("ts,label,name\n1,X,foo\n");
        assert!(matches!(load_csv(f.path(), "ts", "label"), Err(Error::Data(_))));
    }

    #[test]
    fn load_parses_iso_dates() {
        let f = write_tmp("ts,label,a\n2012-01-02,X,1\n2012-01-01 10:00:00,X,2\n");
        let (ds, _) = load_csv(f.path(), "ts", "label").unwrap();
        assert_eq!(ds.samples[0].values, vec![2.0]);
        assert_eq!(ds.samples[1].timestamp, 1_325_462_400);
    }

    #[test]
    fn multi_family_files_split_by_label() {
        let f = write_tmp("ts,label,a\n1,X,1\n2,Y,2\n3,X,3\n");
        assert!(load_csv(f.path(), "ts", "label").is_err());
        let (fams, report) =
            load_csv_families(f.path(), &CsvColumns::new("ts", "label")).unwrap();
        assert_eq!(fams["X"].len(), 2);
        assert_eq!(fams["Y"].len(), 1);
        assert_eq!(report.families["X"], 2);
    }

    #[test]
    fn write_then_load_round_trips() {
        let ds = dataset_of(vec![vec![0.1, 1.0 / 3.0], vec![2.5e-17, 7.0]]);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, f.path()).unwrap();
        let (back, _) = load_csv(f.path(), "timestamp", "family").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn normalize_maps_endpoints() {
        let ds = dataset_of(vec![vec![2.0, 5.0], vec![4.0, 5.0], vec![6.0, 5.0]]);
        let (n, table) = normalize(&ds).unwrap();
        let col0: Vec<f64> = n.samples.iter().map(|s| s.values[0]).collect();
        let col1: Vec<f64> = n.samples.iter().map(|s| s.values[1]).collect();
        assert_eq!(col0, vec![0.0, 0.5, 1.0]);
        assert_eq!(col1, vec![0.0, 0.0, 0.0]);
        assert_eq!(table.mins, vec![2.0, 5.0]);
        assert_eq!(table.maxs, vec![6.0, 5.0]);
    }

    #[test]
    fn normalize_empty_fails() {
        let ds = Dataset::new("fam", vec!["a".into()], vec![]).unwrap();
        assert!(normalize(&ds).is_err());
    }

    #[test]
    fn partition_counts() {
        let mk = |n: usize| dataset_of((0..n).map(|i| vec![i as f64]).collect());
        let (b, r) = partition_batches(&mk(100), 50).unwrap();
        assert_eq!((b.len(), r.dropped_remainder), (2, 0));
        let (b, r) = partition_batches(&mk(120), 50).unwrap();
        assert_eq!((b.len(), r.dropped_remainder), (2, 20));
        let (b, r) = partition_batches(&mk(3597), 50).unwrap();
        assert_eq!((b.len(), r.dropped_remainder), (71, 47));
        assert_eq!(b[0].index, 1);
        assert_eq!(b[70].index, 71);
        assert_eq!(b[3].train_half().len(), 25);
        assert_eq!(b[3].test_half()[0].sample_id, b[3].samples[25].sample_id);
    }

    #[test]
    fn partition_rejects_small_or_odd() {
        let ds = dataset_of((0..99).map(|i| vec![i as f64]).collect());
        assert!(matches!(partition_batches(&ds, 50), Err(Error::Data(_))));
        assert!(matches!(partition_batches(&ds, 7), Err(Error::Config(_))));
        assert!(matches!(partition_batches(&ds, 0), Err(Error::Config(_))));
    }

    #[test]
    fn other_family_exact_size_uses_every_sample() {
        let ds = dataset_of((0..50).map(|i| vec![i as f64]).collect());
        let split = sample_other_family(&ds, 25, 3).unwrap();
        let mut ids: Vec<_> = split
            .y_train
            .iter()
            .chain(&split.y_test)
            .map(|s| s.sample_id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 50);
    }

    #[test]
    fn other_family_is_seeded_and_disjoint() {
        let ds = dataset_of((0..1000).map(|i| vec![i as f64]).collect());
        let a = sample_other_family(&ds, 25, 7).unwrap();
        let b = sample_other_family(&ds, 25, 7).unwrap();
        assert_eq!(a, b);
        assert!(overlapping_ids(&a).is_empty());
        let c = sample_other_family(&ds, 25, 8).unwrap();
        assert_ne!(a.y_train, c.y_train);
    }

    #[test]
    fn other_family_too_small() {
        let ds = dataset_of((0..49).map(|i| vec![i as f64]).collect());
        assert!(sample_other_family(&ds, 25, 1).is_err());
    }

    #[test]
    fn dataset_rejects_ragged_rows() {
        let samples = vec![fv("a", 1, vec![1.0]), fv("b", 2, vec![1.0, 2.0])];
        assert!(Dataset::new("fam", vec!["x".into()], samples).is_err());
    }
}
