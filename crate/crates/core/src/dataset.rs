//! Class-partitioned feature datasets.
//!
//! Samples are stored as the columns of a `q × L` matrix, grouped so that every
//! class occupies one contiguous column range. All solvers index training
//! samples by that grouped position; `source_index` maps a column back to the
//! record it was read from.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassPartitionedDataset {
    features: Mat<f64>,
    labels: Vec<usize>,
    class_ranges: Vec<Range<usize>>,
    class_names: Vec<String>,
    source_index: Vec<usize>,
}

impl ClassPartitionedDataset {
    /// Builds a dataset from sample columns and their raw labels.
    ///
    /// Class ids are assigned in sorted label order (numeric when every label
    /// parses as an integer). Requires at least two classes.
    pub fn from_columns(features: Mat<f64>, raw_labels: &[String]) -> Result<Self> {
        if raw_labels.len() != features.ncols() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                found: raw_labels.len(),
            });
        }
        if raw_labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let class_names = sorted_label_names(raw_labels);
        if class_names.len() < 2 {
            return Err(Error::SingleClass);
        }
        let lookup: BTreeMap<&str, usize> = class_names
            .iter()
            .enumerate()
            .map(|(c, name)| (name.as_str(), c))
            .collect();
        let ids: Vec<usize> = raw_labels.iter().map(|l| lookup[l.as_str()]).collect();
        let source: Vec<usize> = (0..ids.len()).collect();
        Ok(Self::group(features.as_ref(), &ids, class_names, &source))
    }

    /// Groups columns by class id. Classes without samples get empty ranges.
    fn group(
        features: MatRef<'_, f64>,
        ids: &[usize],
        class_names: Vec<String>,
        source: &[usize],
    ) -> Self {
        let m = class_names.len();
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by_key(|&j| ids[j]);
        let q = features.nrows();
        let grouped = Mat::from_fn(q, order.len(), |i, j| features[(i, order[j])]);
        let labels: Vec<usize> = order.iter().map(|&j| ids[j]).collect();
        let source_index = order.iter().map(|&j| source[j]).collect();
        let mut class_ranges = Vec::with_capacity(m);
        let mut start = 0;
        for c in 0..m {
            let len = labels[start..].iter().take_while(|&&l| l == c).count();
            class_ranges.push(start..start + len);
            start += len;
        }
        Self {
            features: grouped,
            labels,
            class_ranges,
            class_names,
            source_index,
        }
    }

    /// Selects the given grouped column positions, keeping the class space.
    /// Classes left without samples keep an empty range.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let q = self.q();
        let features = Mat::from_fn(q, sorted.len(), |i, j| self.features[(i, sorted[j])]);
        let ids: Vec<usize> = sorted.iter().map(|&j| self.labels[j]).collect();
        let source: Vec<usize> = sorted.iter().map(|&j| self.source_index[j]).collect();
        Self::group(features.as_ref(), &ids, self.class_names.clone(), &source)
    }

    /// Re-expresses this dataset in the label space `names`, appending any of
    /// this dataset's labels that `names` lacks.
    pub fn relabel(&self, names: &[String]) -> Self {
        let mut space = names.to_vec();
        for name in &self.class_names {
            if !space.contains(name) {
                space.push(name.clone());
            }
        }
        let ids: Vec<usize> = self
            .labels
            .iter()
            .map(|&c| {
                space
                    .iter()
                    .position(|n| *n == self.class_names[c])
                    .expect("label present in extended space")
            })
            .collect();
        Self::group(self.features.as_ref(), &ids, space, &self.source_index)
    }

    /// Feature dimension `q`.
    pub fn q(&self) -> usize {
        self.features.nrows()
    }

    /// Number of samples `L`.
    pub fn len(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Size of the class space `M` (including classes with no samples).
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Number of classes holding at least one sample.
    pub fn n_nonempty_classes(&self) -> usize {
        self.class_ranges.iter().filter(|r| !r.is_empty()).count()
    }

    pub fn features(&self) -> MatRef<'_, f64> {
        self.features.as_ref()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        self.features.col_as_slice(j)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_ranges(&self) -> &[Range<usize>] {
        &self.class_ranges
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.class_ranges.iter().map(|r| r.len()).collect()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn source_index(&self) -> &[usize] {
        &self.source_index
    }

    /// The `q × N_c` block of class `c`.
    pub fn class_block(&self, c: usize) -> MatRef<'_, f64> {
        let r = &self.class_ranges[c];
        self.features.as_ref().subcols(r.start, r.len())
    }

    /// Writes the dataset as a CSV with a header, one row per sample.
    pub fn write_csv(&self, path: &Path, label_column: &str) -> Result<()> {
        let mut out = String::new();
        out.push_str(label_column);
        for i in 0..self.q() {
            out.push_str(&format!(",f{i}"));
        }
        out.push('\n');
        for j in 0..self.len() {
            out.push_str(&self.class_names[self.labels[j]]);
            for v in self.column(j) {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

fn sorted_label_names(raw: &[String]) -> Vec<String> {
    let mut names: Vec<String> = raw.to_vec();
    names.sort();
    names.dedup();
    if names.iter().all(|n| n.parse::<i64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<i64>().unwrap());
    }
    names
}

/// Per-class random split parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub per_class_train: usize,
    pub seed: u64,
    pub trials: usize,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.per_class_train == 0 {
            return Err(Error::invalid("per_class", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        Ok(())
    }
}

/// Draws `per_class_train` columns per class without replacement; the
/// remaining columns form the held-out set. Identical seeds give identical
/// splits.
pub fn draw_split(
    ds: &ClassPartitionedDataset,
    spec: &SplitSpec,
) -> Result<(ClassPartitionedDataset, ClassPartitionedDataset)> {
    spec.validate()?;
    let n = spec.per_class_train;
    for (c, r) in ds.class_ranges().iter().enumerate() {
        if r.len() < n {
            return Err(Error::InsufficientSamples {
                class: ds.class_names()[c].clone(),
                available: r.len(),
                requested: n,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chosen = vec![false; ds.len()];
    for r in ds.class_ranges() {
        for k in rand::seq::index::sample(&mut rng, r.len(), n) {
            chosen[r.start + k] = true;
        }
    }
    let (train, held): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&j| chosen[j]);
    Ok((ds.subset(&train), ds.subset(&held)))
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_columns(ds: &ClassPartitionedDataset) -> Result<ClassPartitionedDataset> {
    let mut out = ds.clone();
    for j in 0..out.len() {
        let col = out.features.col_as_slice_mut(j);
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroColumn(ds.source_index[j]));
        }
        col.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Parsed IDX image payload: `count` images of `rows × cols` unsigned bytes.
#[derive(Debug, Clone)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    const WHAT: &str = "IDX images";
    if bytes.len() < 16 {
        return Err(Error::TruncatedFile {
            what: WHAT,
            needed: 16,
            found: bytes.len(),
        });
    }
    let magic = be_u32(bytes, 0);
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::BadMagic {
            what: WHAT,
            found: magic,
            expected: IDX_IMAGES_MAGIC,
        });
    }
    let count = be_u32(bytes, 4) as usize;
    let rows = be_u32(bytes, 8) as usize;
    let cols = be_u32(bytes, 12) as usize;
    let needed = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .and_then(|v| v.checked_add(16))
        .unwrap_or(usize::MAX);
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            what: WHAT,
            needed,
            found: bytes.len(),
        });
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..needed].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    const WHAT: &str = "IDX labels";
    if bytes.len() < 8 {
        return Err(Error::TruncatedFile {
            what: WHAT,
            needed: 8,
            found: bytes.len(),
        });
    }
    let magic = be_u32(bytes, 0);
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::BadMagic {
            what: WHAT,
            found: magic,
            expected: IDX_LABELS_MAGIC,
        });
    }
    let count = be_u32(bytes, 4) as usize;
    let needed = count.saturating_add(8);
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            what: WHAT,
            needed,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

/// Builds a dataset from in-memory IDX image and label files. Pixels are
/// scaled to `[0, 1]`; each image becomes one `rows·cols` column.
pub fn dataset_from_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<ClassPartitionedDataset> {
    let images = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if images.count != labels.len() {
        return Err(Error::CountMismatch {
            images: images.count,
            labels: labels.len(),
        });
    }
    let q = images.rows * images.cols;
    let features = Mat::from_fn(q, images.count, |i, j| {
        f64::from(images.pixels[j * q + i]) / 255.0
    });
    let raw: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
    ClassPartitionedDataset::from_columns(features, &raw)
}

pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<ClassPartitionedDataset> {
    let images = read_file(images_path)?;
    let labels = read_file(labels_path)?;
    dataset_from_idx(&images, &labels)
}

/// Loads a headed CSV: every column except `label_column` must be numeric.
pub fn load_csv(path: &Path, label_column: &str) -> Result<ClassPartitionedDataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    let label_at = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let width = header.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != width {
            return Err(Error::RaggedRows {
                row: row + 1,
                expected: width,
                found: record.len(),
            });
        }
        for (k, field) in record.iter().enumerate() {
            if k == label_at {
                labels.push(field.to_string());
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumericFeature {
                        row: row + 1,
                        column: header[k].to_string(),
                        value: field.to_string(),
                    })
                }
            }
        }
    }
    let q = width - 1;
    let features = Mat::from_fn(q, labels.len(), |i, j| values[j * q + i]);
    ClassPartitionedDataset::from_columns(features, &labels)
}

/// Parses LIBSVM sparse text (`label index:value ...`, 1-based indices).
/// The feature dimension is the largest index seen, at least `min_dim`.
pub fn parse_libsvm(text: &str, min_dim: usize) -> Result<ClassPartitionedDataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = min_dim;
    for (line_no, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else {
            continue;
        };
        let bad = |token: &str| Error::NonNumericFeature {
            row: line_no + 1,
            column: "index:value".into(),
            value: token.to_string(),
        };
        let mut entries = Vec::new();
        for token in tokens {
            let (idx, val) = token.split_once(':').ok_or_else(|| bad(token))?;
            let idx: usize = idx.parse().map_err(|_| bad(token))?;
            let val: f64 = val.parse().map_err(|_| bad(token))?;
            if idx == 0 || !val.is_finite() {
                return Err(bad(token));
            }
            dim = dim.max(idx);
            entries.push((idx - 1, val));
        }
        // labels such as "1" and "1.0" name the same class
        let label = match label.parse::<f64>() {
            Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
            _ => label.to_string(),
        };
        labels.push(label);
        rows.push(entries);
    }
    let mut features = Mat::zeros(dim, rows.len());
    for (j, entries) in rows.iter().enumerate() {
        for &(i, v) in entries {
            features[(i, j)] = v;
        }
    }
    ClassPartitionedDataset::from_columns(features, &labels)
}

pub fn load_libsvm(path: &Path, min_dim: usize) -> Result<ClassPartitionedDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(&text, min_dim)
}
