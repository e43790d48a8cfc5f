use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::prng::RandomKey;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at line {line}: {source}")]
    Csv {
        line: u64,
        #[source]
        source: csv::Error,
    },
    #[error("dataset needs at least one feature column and a label column")]
    TooFewColumns,
    #[error("dataset has no rows")]
    Empty,
    #[error("line {line}: expected {expected} columns, found {found}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: '{value}' is not a number")]
    NonNumeric {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("line {line}, column {column}: value is not finite")]
    NonFinite { line: u64, column: usize },
    #[error("line {line}: label '{value}' is not 0 or 1")]
    BadLabel { line: u64, value: String },
    #[error("feature matrix has {found} entries, expected {n} x {d}")]
    Shape { n: usize, d: usize, found: usize },
    #[error("sparsity must lie in [0, 1], got {0}")]
    InvalidSparsity(f64),
}

/// Binary-classification data: an `N × D` feature matrix (row-major) and
/// `N` labels in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    x: Vec<f64>,
    y: Vec<u8>,
    feature_names: Option<Vec<String>>,
}

/// A synthetic dataset together with the coefficients that generated it.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub coefficients: Vec<f64>,
}

impl Dataset {
    pub fn new(
        x: Vec<f64>,
        y: Vec<u8>,
        d: usize,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self, DatasetError> {
        let n = y.len();
        if d == 0 {
            return Err(DatasetError::TooFewColumns);
        }
        if n == 0 {
            return Err(DatasetError::Empty);
        }
        if x.len() != n * d {
            return Err(DatasetError::Shape { n, d, found: x.len() });
        }
        for (i, &label) in y.iter().enumerate() {
            if label > 1 {
                return Err(DatasetError::BadLabel {
                    line: i as u64 + 1,
                    value: label.to_string(),
                });
            }
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                line: (i / d) as u64 + 1,
                column: i % d + 1,
            });
        }
        Ok(Dataset {
            n,
            d,
            x,
            y,
            feature_names,
        })
    }

    /// Reads a CSV with a header row, numeric feature columns and a final
    /// 0/1 label column. Line numbers in errors count the header as line 1.
    pub fn load_csv(path: impl AsRef<Path>, standardize: bool) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(file, standardize)
    }

    pub fn read_csv(reader: impl std::io::Read, standardize: bool) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|source| DatasetError::Csv { line: 1, source })?
            .clone();
        let cols = header.len();
        if cols < 2 {
            return Err(DatasetError::TooFewColumns);
        }
        let d = cols - 1;
        let names: Vec<String> = header.iter().take(d).map(str::to_owned).collect();

        let mut x = Vec::new();
        let mut y = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|source| DatasetError::Csv {
                line: source.position().map_or(0, |p| p.line()),
                source,
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() == 1 && record.get(0) == Some("") {
                continue;
            }
            if record.len() != cols {
                return Err(DatasetError::Ragged {
                    line,
                    expected: cols,
                    found: record.len(),
                });
            }
            for (j, cell) in record.iter().take(d).enumerate() {
                let v: f64 = cell.parse().map_err(|_| DatasetError::NonNumeric {
                    line,
                    column: j + 1,
                    value: cell.to_owned(),
                })?;
                if !v.is_finite() {
                    return Err(DatasetError::NonFinite { line, column: j + 1 });
                }
                x.push(v);
            }
            let label = &record[d];
            let parsed = label.parse::<f64>().ok().filter(|v| *v == 0.0 || *v == 1.0);
            match parsed {
                Some(v) => y.push(v as u8),
                None => {
                    return Err(DatasetError::BadLabel {
                        line,
                        value: label.to_owned(),
                    })
                }
            }
        }
        let mut ds = Dataset::new(x, y, d, Some(names))?;
        if standardize {
            ds.standardize();
        }
        Ok(ds)
    }

    /// Rescales every feature column to mean 0 and sample standard
    /// deviation 1. Constant columns (including every column of a
    /// single-row dataset) become all zeros.
    pub fn standardize(&mut self) {
        let (n, d) = (self.n, self.d);
        for j in 0..d {
            let mean = (0..n).map(|i| self.x[i * d + j]).sum::<f64>() / n as f64;
            let ss: f64 = (0..n).map(|i| (self.x[i * d + j] - mean).powi(2)).sum();
            let sd = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
            for i in 0..n {
                let v = &mut self.x[i * d + j];
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
    }

    /// Synthetic logistic-regression data: i.i.d. standard normal features,
    /// `ceil(sparsity * d)` nonzero coefficients equal to ±2 at random
    /// positions, labels drawn from the logistic model.
    pub fn synthetic(
        key: RandomKey,
        n: usize,
        d: usize,
        sparsity: f64,
    ) -> Result<SyntheticData, DatasetError> {
        if !(0.0..=1.0).contains(&sparsity) {
            return Err(DatasetError::InvalidSparsity(sparsity));
        }
        if d == 0 {
            return Err(DatasetError::TooFewColumns);
        }
        if n == 0 {
            return Err(DatasetError::Empty);
        }
        let [feat_key, pos_key, sign_key, label_key]: [RandomKey; 4] =
            key.split(4).expect("nonzero split").try_into().unwrap();

        let x = feat_key.normal(n * d);
        // Guard against products like 0.1 * 30 landing just above an integer.
        let nonzero = ((sparsity * d as f64) - 1e-9).ceil().max(0.0) as usize;
        let mut order: Vec<usize> = (0..d).collect();
        for i in 0..nonzero {
            let j = pos_key
                .child(i as u64)
                .randint(i as i64, d as i64)
                .expect("nonempty range") as usize;
            order.swap(i, j);
        }
        let signs = sign_key.uniform(nonzero);
        let mut coefficients = vec![0.0; d];
        for (i, &pos) in order.iter().take(nonzero).enumerate() {
            coefficients[pos] = if signs[i] < 0.5 { -2.0 } else { 2.0 };
        }

        let u = label_key.uniform(n);
        let y = (0..n)
            .map(|i| {
                let t: f64 = (0..d).map(|j| x[i * d + j] * coefficients[j]).sum();
                let p = 1.0 / (1.0 + (-t).exp());
                u8::from(u[i] < p)
            })
            .collect();
        let names = (0..d).map(|j| format!("x{j}")).collect();
        Ok(SyntheticData {
            dataset: Dataset::new(x, y, d, Some(names))?,
            coefficients,
        })
    }

    /// The dataset stacked `k` times.
    pub fn replicate(&self, k: usize) -> Dataset {
        Dataset {
            n: self.n * k,
            d: self.d,
            x: self.x.repeat(k),
            y: self.y.repeat(k),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Row-major `N × D` features.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }
}
