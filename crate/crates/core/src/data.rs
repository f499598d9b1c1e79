//! Datasets, CSV ingestion, the 70/30 split and synthetic fixtures.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of input features.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch { left: values.len(), right: rows * cols });
        }
        Ok(Matrix { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch { left: r.len(), right: cols });
            }
            values.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(j).step_by(self.cols).copied()
    }

    fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, values }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub inputs: Matrix,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, inputs: Matrix, targets: Vec<f64>) -> Result<Self> {
        let d = Dataset { name: name.into(), inputs, targets };
        d.validate()?;
        Ok(d)
    }

    pub fn rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.inputs.cols()
    }

    fn validate(&self) -> Result<()> {
        if self.inputs.rows() != self.targets.len() {
            return Err(Error::LengthMismatch { left: self.inputs.rows(), right: self.targets.len() });
        }
        if self.rows() < 2 {
            return Err(Error::Dataset(format!("{} row(s); at least 2 required", self.rows())));
        }
        if self.n_features() == 0 {
            return Err(Error::Dataset("no feature columns".into()));
        }
        if let Some(pos) = self.inputs.values.iter().chain(&self.targets).position(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!("non-finite value at flat position {pos}")));
        }
        Ok(())
    }

    fn subset(&self, idx: &[usize], suffix: &str) -> Dataset {
        Dataset {
            name: format!("{}-{suffix}", self.name),
            inputs: self.inputs.select_rows(idx),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// Reads a comma-separated file whose last column is the target.
///
/// Line numbers in errors are 1-based file lines, header included.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let name = path.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    let reader =
        csv::ReaderBuilder::new().has_headers(has_header).flexible(true).trim(csv::Trim::All).from_path(path)?;
    read_csv(reader, name)
}

/// Same as [`load_csv`] over an in-memory buffer.
pub fn parse_csv(name: &str, text: &str, has_header: bool) -> Result<Dataset> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    read_csv(reader, name.to_string())
}

fn read_csv<R: std::io::Read>(mut reader: csv::Reader<R>, name: String) -> Result<Dataset> {
    let mut width = None;
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow { line, expected, found: record.len() });
        }
        if expected < 2 {
            return Err(Error::Dataset(format!("line {line}: need at least one feature and a target column")));
        }
        for (column, cell) in record.iter().enumerate() {
            let v: f64 =
                cell.parse().map_err(|_| Error::ParseCell { line, column: column + 1, cell: cell.to_string() })?;
            if column + 1 == expected {
                targets.push(v);
            } else {
                features.push(v);
            }
        }
    }
    let Some(width) = width else {
        return Err(Error::Empty("csv file has no data rows"));
    };
    let inputs = Matrix::new(targets.len(), width - 1, features)?;
    Dataset::new(name, inputs, targets)
}

/// Writes `d` as header-less CSV; values use the shortest exact decimal form.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for (row, y) in d.inputs.iter_rows().zip(&d.targets) {
        w.write_record(row.iter().chain(std::iter::once(y)).map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitDataset {
    pub train: Dataset,
    pub test: Dataset,
    pub split_seed: u64,
    /// Original row indices of the training rows, in split order.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Number of training rows for a 70/30 split: 0.7·rows rounded half up.
pub fn train_size(rows: usize) -> usize {
    (7 * rows + 5) / 10
}

/// Shuffles the rows with `seed` and puts the first 70% (rounded half up) in training.
pub fn split_70_30(d: &Dataset, seed: u64) -> SplitDataset {
    let mut order: Vec<usize> = (0..d.rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train_rows, test_rows) = order.split_at(train_size(d.rows()));
    SplitDataset {
        train: d.subset(train_rows, "train"),
        test: d.subset(test_rows, "test"),
        split_seed: seed,
        train_rows: train_rows.to_vec(),
        test_rows: test_rows.to_vec(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Friedman #1 on U[0,1] inputs: 10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4.
    /// Terms whose feature is missing are dropped.
    FriedmanLike,
    /// x0^2 + x1 on U[-1,1] inputs (x0^2 alone with one feature).
    Polynomial,
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::FriedmanLike => "friedman-like",
            SyntheticKind::Polynomial => "polynomial",
        })
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "friedman-like" | "friedman" => Ok(SyntheticKind::FriedmanLike),
            "polynomial" | "poly" => Ok(SyntheticKind::Polynomial),
            other => Err(Error::Config(format!("unknown synthetic kind {other:?}"))),
        }
    }
}

/// Noise-free target of a synthetic dataset for one input row.
pub fn synthetic_target(kind: SyntheticKind, x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    match kind {
        SyntheticKind::Polynomial => x[0] * x[0] + x.get(1).copied().unwrap_or(0.0),
        SyntheticKind::FriedmanLike => {
            let g = |i: usize| x.get(i).copied();
            let mut y = 0.0;
            if let (Some(a), Some(b)) = (g(0), g(1)) {
                y += 10.0 * (PI * a * b).sin();
            } else if let Some(a) = g(0) {
                y += 10.0 * a;
            }
            if let Some(c) = g(2) {
                y += 20.0 * (c - 0.5) * (c - 0.5);
            }
            if let Some(d) = g(3) {
                y += 10.0 * d;
            }
            if let Some(e) = g(4) {
                y += 5.0 * e;
            }
            y
        }
    }
}

pub fn synthetic_dataset(
    kind: SyntheticKind,
    rows: usize,
    n_features: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if rows < 2 || n_features == 0 {
        return Err(Error::Dataset(format!("synthetic shape {rows}x{n_features} too small")));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::Config(format!("noise {noise} must be finite and non-negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = match kind {
        SyntheticKind::Polynomial => -1.0..=1.0,
        SyntheticKind::FriedmanLike => 0.0..=1.0,
    };
    let values: Vec<f64> = (0..rows * n_features).map(|_| rng.random_range(range.clone())).collect();
    let inputs = Matrix::new(rows, n_features, values)?;
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    let targets = inputs
        .iter_rows()
        .map(|x| {
            let y = synthetic_target(kind, x);
            if noise > 0.0 {
                y + noise * gauss.sample(&mut rng)
            } else {
                y
            }
        })
        .collect();
    Dataset::new(format!("{kind}-{rows}x{n_features}"), inputs, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn loads_small_numeric_file() {
        let d = parse_csv("t", "1,2,3\n4,5,6\n7,8,9\n10,11,12\n", false).unwrap();
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.rows(), 4);
        assert_eq!(d.inputs.row(3), &[10.0, 11.0]);
        assert_eq!(d.targets, vec![3.0, 6.0, 9.0, 12.0]);
    }

    #[test]
    fn header_is_skipped() {
        let d = parse_csv("t", "a,b,y\n1,2,3\n4,5,6\n", true).unwrap();
        assert_eq!(d.rows(), 2);
        assert_eq!(d.targets, vec![3.0, 6.0]);
    }

    #[test]
    fn bad_cell_names_its_line() {
        let text = "1,2\n1,2\n1,2\n1,2\n1,2\n1,2\nabc,2\n";
        match parse_csv("t", text, false) {
            Err(Error::ParseCell { line: 7, column: 1, cell }) => assert_eq!(cell, "abc"),
            other => panic!("unexpected {other:?}"),
        }
        let msg = parse_csv("t", text, false).unwrap_err().to_string();
        assert!(msg.contains("line 7"), "{msg}");
    }

    #[test]
    fn ragged_and_empty_files_fail() {
        assert!(matches!(
            parse_csv("t", "1,2,3\n4,5\n", false),
            Err(Error::RaggedRow { line: 2, expected: 3, found: 2 })
        ));
        assert!(matches!(parse_csv("t", "", false), Err(Error::Empty(_))));
        assert!(matches!(parse_csv("t", "a,b\n", true), Err(Error::Empty(_))));
    }

    #[test]
    fn single_row_is_rejected() {
        assert!(matches!(parse_csv("t", "1,2\n", false), Err(Error::Dataset(_))));
    }

    #[test]
    fn split_sizes_follow_rounding_rule() {
        assert_eq!(train_size(1503), 1052);
        assert_eq!(train_size(359), 251);
        assert_eq!(train_size(10), 7);
        assert_eq!(train_size(5), 4); // 3.5 rounds up
        let d = synthetic_dataset(SyntheticKind::Polynomial, 1503, 2, 0.0, 1).unwrap();
        let s = split_70_30(&d, 11);
        assert_eq!((s.train.rows(), s.test.rows()), (1052, 451));
    }

    #[test]
    fn split_is_a_seeded_partition() {
        let d = synthetic_dataset(SyntheticKind::FriedmanLike, 359, 5, 0.1, 2).unwrap();
        let a = split_70_30(&d, 5);
        let b = split_70_30(&d, 5);
        assert_eq!(a, b);
        let train: HashSet<_> = a.train_rows.iter().copied().collect();
        let test: HashSet<_> = a.test_rows.iter().copied().collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(train.len() + test.len(), 359);
        assert_eq!(a.train.inputs.row(0), d.inputs.row(a.train_rows[0]));
        assert_ne!(split_70_30(&d, 6).train_rows, a.train_rows);
    }

    #[test]
    fn synthetic_polynomial_is_exact_without_noise() {
        let d = synthetic_dataset(SyntheticKind::Polynomial, 200, 5, 0.0, 3).unwrap();
        assert_eq!((d.rows(), d.n_features()), (200, 5));
        for (x, y) in d.inputs.iter_rows().zip(&d.targets) {
            assert_eq!(x[0] * x[0] + x[1], *y);
        }
        assert_eq!(d, synthetic_dataset(SyntheticKind::Polynomial, 200, 5, 0.0, 3).unwrap());
    }

    #[test]
    fn column_iterates_feature() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(m.column(1).collect::<Vec<_>>(), vec![2.0, 4.0, 6.0]);
        assert_eq!(m.iter_rows().count(), 3);
    }
}
