//! CSV loading and saving, and the preprocessing steps applied before
//! formation: row exclusion, log-offset response scaling, variance-based
//! feature filtering and random train/test splits.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind, Matrix};
use crate::error::{contract, ErpxError, Result};
use crate::metrics::sample_variance;
use crate::scalar::Real;
use crate::seed::RngSeed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseColumn {
    Name(String),
    /// Zero-based column position.
    Index(usize),
}

impl Default for ResponseColumn {
    fn default() -> Self {
        ResponseColumn::Index(0)
    }
}

impl std::str::FromStr for ResponseColumn {
    type Err = ErpxError;

    /// Digits select a zero-based column position, anything else a header name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ErpxError::Config("empty response column".into()));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    E,
    Ten,
    Two,
}

impl LogBase {
    fn log<T: Real>(self, v: T) -> T {
        match self {
            LogBase::E => v.ln(),
            LogBase::Ten => v.log10(),
            LogBase::Two => v.log2(),
        }
    }

    fn exp<T: Real>(self, v: T) -> T {
        match self {
            LogBase::E => v.exp(),
            LogBase::Ten => T::of(10.0).powf(v),
            LogBase::Two => v.exp2(),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogBase::E => "e",
            LogBase::Ten => "10",
            LogBase::Two => "2",
        })
    }
}

/// A named dataset transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "kebab-case")]
pub enum Transform {
    /// Remove rows by one-based case number.
    DropRows { rows: Vec<usize> },
    /// `y ← log(y + offset)`.
    LogOffset { offset: f64, base: LogBase },
    /// Keep the `k` highest-variance features.
    TopVariance { k: usize },
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::DropRows { rows } => {
                let r: Vec<String> = rows.iter().map(usize::to_string).collect();
                write!(f, "drop-rows({})", r.join(" "))
            }
            Transform::LogOffset { offset, base } => write!(f, "log-offset(offset={offset},base={base})"),
            Transform::TopVariance { k } => write!(f, "top-variance(k={k})"),
        }
    }
}

impl Transform {
    pub fn apply<T: Real>(&self, data: &Dataset<T>) -> Result<Dataset<T>> {
        match self {
            Transform::DropRows { rows } => drop_rows(data, rows),
            Transform::LogOffset { offset, base } => {
                data.with_response(log_offset_transform_base(data.y(), T::of(*offset), *base)?)
            }
            Transform::TopVariance { k } => top_variance_filter(data, *k),
        }
    }
}

/// Applies transforms left to right.
pub fn apply_transforms<T: Real>(data: &Dataset<T>, chain: &[Transform]) -> Result<Dataset<T>> {
    chain.iter().try_fold(data.clone(), |d, t| t.apply(&d))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub response: ResponseColumn,
    /// When false every feature is continuous.
    pub infer_binary: bool,
    /// Per-column kind overrides by header name.
    pub kind_overrides: HashMap<String, FeatureKind>,
    /// One-based case numbers removed right after loading.
    pub exclude_rows: Vec<usize>,
    pub transforms: Vec<Transform>,
}

impl IngestOptions {
    pub fn new(response: ResponseColumn) -> Self {
        IngestOptions {
            response,
            infer_binary: true,
            ..Default::default()
        }
    }
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let t = cell.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Err(ErpxError::Data(format!("missing value at row {row}, column '{column}'")));
    }
    t.parse::<f64>()
        .map_err(|_| ErpxError::Data(format!("non-numeric value '{t}' at row {row}, column '{column}'")))
}

/// Header names and numeric columns of a comma-separated table. Row numbers
/// in errors are one-based data rows (the header is not counted).
pub fn read_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != names.len() {
            return Err(ErpxError::Data(format!(
                "row {} has {} fields, header has {}",
                i + 1,
                rec.len(),
                names.len()
            )));
        }
        for (j, cell) in rec.iter().enumerate() {
            cols[j].push(parse_cell(cell, i + 1, &names[j])?);
        }
    }
    Ok((names, cols))
}

pub fn read_csv<T: Real, R: Read>(reader: R, options: &IngestOptions) -> Result<Dataset<T>> {
    let (names, mut cols) = read_table(reader)?;
    let r = match &options.response {
        ResponseColumn::Index(i) => {
            if *i >= names.len() {
                return Err(ErpxError::Data(format!("response column {i} out of range ({} columns)", names.len())));
            }
            *i
        }
        ResponseColumn::Name(n) => names
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| ErpxError::Data(format!("response column '{n}' not found")))?,
    };
    if names.len() < 2 {
        return Err(ErpxError::Data("table needs a response and at least one feature column".into()));
    }
    let y: Vec<T> = cols.remove(r).into_iter().map(T::of).collect();
    let mut feature_names = names;
    feature_names.remove(r);
    for k in options.kind_overrides.keys() {
        if !feature_names.contains(k) {
            return Err(ErpxError::Config(format!("kind override for unknown column '{k}'")));
        }
    }
    let cols: Vec<Vec<T>> = cols.into_iter().map(|c| c.into_iter().map(T::of).collect()).collect();
    let kinds = cols
        .iter()
        .zip(&feature_names)
        .map(|(c, name)| match options.kind_overrides.get(name) {
            Some(&k) => k,
            None if options.infer_binary => FeatureKind::infer(c),
            None => FeatureKind::Continuous,
        })
        .collect();
    let data = Dataset::new(y, Matrix::from_columns(cols)?, feature_names, kinds)?;
    let data = if options.exclude_rows.is_empty() { data } else { drop_rows(&data, &options.exclude_rows)? };
    apply_transforms(&data, &options.transforms)
}

pub fn load_csv<T: Real>(path: &Path, options: &IngestOptions) -> Result<Dataset<T>> {
    let f = std::fs::File::open(path).map_err(|e| ErpxError::io(path, e))?;
    read_csv(f, options)
}

/// Writes the response first (under `response_name`) then the features.
/// Values use the shortest decimal form that parses back to the same value.
pub fn write_csv<T: Real, W: Write>(data: &Dataset<T>, response_name: &str, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header = std::iter::once(response_name).chain(data.feature_names().iter().map(String::as_str));
    w.write_record(header)?;
    let mut rec = Vec::with_capacity(data.n_features() + 1);
    for i in 0..data.n() {
        rec.clear();
        rec.push(data.y()[i].to_string());
        rec.extend(data.x().columns().map(|c| c[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| ErpxError::io("<csv>", e))?;
    Ok(())
}

pub fn save_csv<T: Real>(data: &Dataset<T>, response_name: &str, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| ErpxError::io(path, e))?;
    write_csv(data, response_name, std::io::BufWriter::new(f))
}

/// Removes rows given as one-based case numbers (duplicates ignored).
pub fn drop_rows<T: Real>(data: &Dataset<T>, rows: &[usize]) -> Result<Dataset<T>> {
    let n = data.n();
    contract!(
        rows.iter().all(|&r| (1..=n).contains(&r)),
        "row numbers must lie in 1..={n}"
    );
    let keep: Vec<usize> = (0..n).filter(|i| !rows.contains(&(i + 1))).collect();
    contract!(!keep.is_empty(), "dropping every row leaves an empty dataset");
    data.select_rows(&keep)
}

/// `ln(y_i + offset)`.
pub fn log_offset_transform<T: Real>(y: &[T], offset: T) -> Result<Vec<T>> {
    log_offset_transform_base(y, offset, LogBase::E)
}

pub fn log_offset_transform_base<T: Real>(y: &[T], offset: T, base: LogBase) -> Result<Vec<T>> {
    y.iter()
        .enumerate()
        .map(|(i, &v)| {
            let s = v + offset;
            if s > T::zero() {
                Ok(base.log(s))
            } else {
                Err(ErpxError::Data(format!("row {}: y + offset = {s} is not positive", i + 1)))
            }
        })
        .collect()
}

/// Inverse of [`log_offset_transform_base`].
pub fn inverse_log_offset<T: Real>(y: &[T], offset: T, base: LogBase) -> Vec<T> {
    y.iter().map(|&v| base.exp(v) - offset).collect()
}

/// Keeps the `k` features with the largest sample variance, in their
/// original order; ties favour earlier columns.
pub fn top_variance_filter<T: Real>(data: &Dataset<T>, k: usize) -> Result<Dataset<T>> {
    let p = data.n_features();
    contract!((1..=p).contains(&k), "k must lie in 1..={p}, got {k}");
    let var: Vec<T> = data.x().columns().map(sample_variance).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        var[b]
            .partial_cmp(&var[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut keep = order[..k].to_vec();
    keep.sort_unstable();
    data.select_features(&keep)
}

/// Random disjoint split into `n_train` training rows and the rest.
pub fn train_test_split<T: Real>(data: &Dataset<T>, n_train: usize, seed: RngSeed) -> Result<(Dataset<T>, Dataset<T>)> {
    let n = data.n();
    contract!(n_train >= 1 && n_train < n, "n_train must lie in 1..{n}, got {n_train}");
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut seed.rng());
    let (train, test) = rows.split_at(n_train);
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select_rows(&train)?, data.select_rows(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> IngestOptions {
        IngestOptions::new(ResponseColumn::Name("y".into()))
    }

    #[test]
    fn small_file_round_trips() {
        let text = "y,a,b\n1.5,0,2.25\n-3,1,4\n7,1,0.125\n";
        let d: Dataset<f64> = read_csv(text.as_bytes(), &opts()).unwrap();
        assert_eq!(d.y(), &[1.5, -3.0, 7.0]);
        assert_eq!(d.x().col(0), &[0.0, 1.0, 1.0]);
        assert_eq!(d.x().col(1), &[2.25, 4.0, 0.125]);
        assert_eq!(d.feature_kinds(), &[FeatureKind::Binary, FeatureKind::Continuous]);
        let mut buf = Vec::new();
        write_csv(&d, "y", &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn response_by_index_and_overrides() {
        let text = "a,y\n0,1\n1,2\n";
        let mut o = IngestOptions::new(ResponseColumn::Index(1));
        o.kind_overrides.insert("a".into(), FeatureKind::Continuous);
        let d: Dataset<f64> = read_csv(text.as_bytes(), &o).unwrap();
        assert_eq!(d.y(), &[1.0, 2.0]);
        assert_eq!(d.feature_kinds(), &[FeatureKind::Continuous]);
        o.kind_overrides.insert("zz".into(), FeatureKind::Binary);
        assert!(read_csv::<f64, _>(text.as_bytes(), &o).is_err());
    }

    #[test]
    fn bad_cells_name_row_and_column() {
        let missing = read_csv::<f64, _>("y,a\n1,2\n3,\n".as_bytes(), &opts()).unwrap_err().to_string();
        assert!(missing.contains("row 2") && missing.contains("'a'"), "{missing}");
        let text = read_csv::<f64, _>("y,a\n1,abc\n".as_bytes(), &opts()).unwrap_err().to_string();
        assert!(text.contains("non-numeric") && text.contains("row 1"), "{text}");
        assert!(read_csv::<f64, _>("q,a\n1,2\n".as_bytes(), &opts()).is_err());
    }

    fn ten_rows() -> Dataset<f64> {
        let x = Matrix::from_columns(vec![(0..10).map(f64::from).collect(), (0..10).map(|i| f64::from(i * i)).collect()]).unwrap();
        Dataset::from_parts((0..10).map(|i| f64::from(i) * 0.5).collect(), x).unwrap()
    }

    #[test]
    fn drop_rows_uses_case_numbers() {
        let d = ten_rows();
        assert_eq!(drop_rows(&d, &[]).unwrap(), d);
        let e = drop_rows(&d, &[1, 10]).unwrap();
        assert_eq!(e.n(), 8);
        assert_eq!(e.y()[0], 0.5);
        assert!(drop_rows(&d, &[0]).is_err());
        assert!(drop_rows(&d, &[11]).is_err());
        let one = drop_rows(&d, &(2..=10).collect::<Vec<_>>()).unwrap();
        assert!(one.require_fittable().is_err());
    }

    #[test]
    fn log_offset_examples() {
        let y = log_offset_transform(&[std::f64::consts::E - 1.0], 1.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
        assert_eq!(log_offset_transform(&[0.0], 1e-10).unwrap()[0], 1e-10f64.ln());
        assert!(log_offset_transform(&[-1.0], 0.5).is_err());
        let raw: [f64; 4] = [0.0, 3.5, 120.0, 1e-6];
        for base in [LogBase::E, LogBase::Ten, LogBase::Two] {
            let t = log_offset_transform_base(&raw, 1e-10, base).unwrap();
            for (a, b) in inverse_log_offset(&t, 1e-10, base).iter().zip(raw) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-10), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn top_variance_examples() {
        let x = Matrix::from_columns(vec![vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 4.0]]).unwrap();
        let d = Dataset::from_parts(vec![0.0, 1.0, 2.0], x).unwrap();
        let f = top_variance_filter(&d, 2).unwrap();
        assert_eq!(f.feature_names(), &["x2", "x3"]);
        assert_eq!(top_variance_filter(&d, 3).unwrap(), d);
        let f1 = top_variance_filter(&d.select_features(&[0, 1]).unwrap(), 1).unwrap();
        assert_eq!(f1.feature_names(), &["x2"]);
        assert!(top_variance_filter(&d, 0).is_err());
    }

    #[test]
    fn split_is_disjoint_and_seeded() {
        let d = ten_rows();
        let (a, b) = train_test_split(&d, 7, RngSeed(1)).unwrap();
        assert_eq!((a.n(), b.n()), (7, 3));
        let mut all: Vec<f64> = a.y().iter().chain(b.y()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, d.y());
        assert_eq!(train_test_split(&d, 7, RngSeed(1)).unwrap().0, a);
        let distinct: std::collections::HashSet<Vec<u64>> = (0..20)
            .map(|s| train_test_split(&d, 7, RngSeed(s)).unwrap().0.y().iter().map(|v| v.to_bits()).collect())
            .collect();
        assert!(distinct.len() >= 19);
        assert!(train_test_split(&d, 10, RngSeed(1)).is_err());
    }

    #[test]
    fn transform_chain_composes() {
        let d = ten_rows();
        let chain = vec![
            Transform::DropRows { rows: vec![1] },
            Transform::LogOffset { offset: 1.0, base: LogBase::E },
            Transform::TopVariance { k: 1 },
        ];
        let out = apply_transforms(&d, &chain).unwrap();
        let step = chain.iter().try_fold(d.clone(), |acc, t| t.apply(&acc)).unwrap();
        assert_eq!(out, step);
        assert_eq!((out.n(), out.n_features()), (9, 1));
        assert_eq!(chain[1].to_string(), "log-offset(offset=1,base=e)");
    }
}
