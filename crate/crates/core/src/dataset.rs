//! Labeled data: LIBSVM / CSV loading, seeded train/test splits and
//! seeded sample streams.
//!
//! A [`Dataset`] is immutable once loaded. Every boosting loop consumes
//! samples through [`stream`], which emits each sample exactly once per
//! pass, optionally in a fresh seeded permutation per pass.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// What a sample is asked to predict.
#[derive(Clone, Debug, PartialEq)]
pub enum Supervision {
    /// Real-valued regression target of dimension m.
    Target(Vec<f64>),
    /// Binary label normalized to -1 or +1.
    Sign(f64),
    /// Class index in `[0, k)`.
    Class(usize),
}

impl Supervision {
    /// Euclidean norm of the supervision viewed as a target vector
    /// (labels count as unit vectors).
    pub fn norm(&self) -> f64 {
        match self {
            Supervision::Target(z) => z.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Supervision::Sign(_) | Supervision::Class(_) => 1.0,
        }
    }
}

/// Caller-supplied interpretation of the label column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Regression,
    Binary,
    Multiclass,
}

impl std::str::FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(TaskKind::Regression),
            "binary" => Ok(TaskKind::Binary),
            "multiclass" => Ok(TaskKind::Multiclass),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

/// Task together with its output dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Regression { outputs: usize },
    Binary,
    Multiclass { classes: usize },
}

impl Task {
    pub fn kind(&self) -> TaskKind {
        match self {
            Task::Regression { .. } => TaskKind::Regression,
            Task::Binary => TaskKind::Binary,
            Task::Multiclass { .. } => TaskKind::Multiclass,
        }
    }

    /// Dimension m of the boosted prediction.
    pub fn output_dim(&self) -> usize {
        match *self {
            Task::Regression { outputs } => outputs,
            Task::Binary => 1,
            Task::Multiclass { classes } => classes,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Position in the originally loaded dataset.
    pub index: usize,
    pub features: Vec<f64>,
    pub supervision: Supervision,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
    task: Task,
}

impl Dataset {
    /// Builds a dataset, checking that it is non-empty and homogeneous.
    pub fn new(samples: Vec<Sample>, dim: usize, task: Task) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for s in &samples {
            crate::error::check_dim(dim, s.features.len())?;
            match (&s.supervision, task) {
                (Supervision::Target(z), Task::Regression { outputs }) => {
                    crate::error::check_dim(outputs, z.len())?
                }
                (Supervision::Sign(u), Task::Binary) if *u == 1.0 || *u == -1.0 => {}
                (Supervision::Class(c), Task::Multiclass { classes }) if *c < classes => {}
                (sup, task) => {
                    return Err(Error::invalid(format!(
                        "sample {} has supervision {sup:?} incompatible with {task:?}",
                        s.index
                    )))
                }
            }
        }
        Ok(Dataset { samples, dim, task })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Largest supervision norm in the dataset.
    pub fn max_target_norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.supervision.norm())
            .fold(0.0, f64::max)
    }

    /// Returns a copy whose feature dimension is widened to `dim`
    /// (zero padding), used to align a test file with its train file.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::invalid(format!(
                "cannot shrink feature dimension from {} to {dim}",
                self.dim
            )));
        }
        for s in &mut self.samples {
            s.features.resize(dim, 0.0);
        }
        self.dim = dim;
        Ok(self)
    }

    /// Overrides the number of classes (multiclass only), so that a test
    /// split missing the top class still matches the train split.
    pub fn with_classes(mut self, classes: usize) -> Result<Self> {
        match self.task {
            Task::Multiclass { classes: k } if classes >= k => {
                self.task = Task::Multiclass { classes };
                Ok(self)
            }
            _ => Err(Error::invalid("class count override needs a larger multiclass task")),
        }
    }
}

/// Options for the text loaders.
#[derive(Clone, Copy, Debug)]
pub struct LoadOptions {
    pub task: TaskKind,
    /// Feature dimension; defaults to the maximum index observed.
    pub dim: Option<usize>,
}

impl LoadOptions {
    pub fn new(task: TaskKind) -> Self {
        LoadOptions { task, dim: None }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub fn load_libsvm(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    parse_libsvm(BufReader::new(open(path)?), opts)
}

fn parse_label(token: &str, task: TaskKind, line: usize) -> Result<Supervision> {
    let value: f64 = token.parse().map_err(|_| Error::Malformed {
        line,
        message: format!("bad label `{token}`"),
    })?;
    if !value.is_finite() {
        return Err(Error::Malformed {
            line,
            message: format!("non-finite label `{token}`"),
        });
    }
    Ok(match task {
        TaskKind::Regression => Supervision::Target(vec![value]),
        TaskKind::Binary => Supervision::Sign(if value > 0.0 { 1.0 } else { -1.0 }),
        TaskKind::Multiclass => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(Error::Malformed {
                    line,
                    message: format!("class label `{token}` is not a non-negative integer"),
                });
            }
            Supervision::Class(value as usize)
        }
    })
}

/// Parses LIBSVM text (`label idx:val ...`, 1-based ascending indices).
/// Blank lines and `#` comments are skipped.
pub fn parse_libsvm<R: BufRead>(reader: R, opts: LoadOptions) -> Result<Dataset> {
    let mut rows: Vec<(Supervision, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = parse_label(tokens.next().unwrap_or(""), opts.task, lineno)?;
        let mut entries = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Malformed {
                line: lineno,
                message: format!("expected idx:val, found `{tok}`"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Malformed {
                line: lineno,
                message: format!("bad feature index `{idx}`"),
            })?;
            let val: f64 = val.parse().map_err(|_| Error::Malformed {
                line: lineno,
                message: format!("bad feature value `{val}`"),
            })?;
            if idx == 0 {
                return Err(Error::Malformed {
                    line: lineno,
                    message: "feature indices are 1-based".into(),
                });
            }
            if idx <= prev {
                return Err(Error::NonAscending {
                    line: lineno,
                    prev,
                    next: idx,
                });
            }
            prev = idx;
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = match opts.dim {
        Some(d) if d < max_index => {
            return Err(Error::invalid(format!(
                "feature index {max_index} exceeds requested dimension {d}"
            )))
        }
        Some(d) => d,
        None => max_index,
    };
    let task = infer_task(opts.task, rows.iter().map(|(s, _)| s));
    let samples = rows
        .into_iter()
        .enumerate()
        .map(|(index, (supervision, entries))| {
            let mut features = vec![0.0; dim];
            for (j, v) in entries {
                features[j] = v;
            }
            Sample {
                index,
                features,
                supervision,
            }
        })
        .collect();
    Dataset::new(samples, dim, task)
}

fn infer_task<'a>(kind: TaskKind, labels: impl Iterator<Item = &'a Supervision>) -> Task {
    match kind {
        TaskKind::Regression => Task::Regression { outputs: 1 },
        TaskKind::Binary => Task::Binary,
        TaskKind::Multiclass => {
            let top = labels
                .filter_map(|s| match s {
                    Supervision::Class(c) => Some(*c),
                    _ => None,
                })
                .max()
                .unwrap_or(0);
            Task::Multiclass { classes: top + 1 }
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, target_column: usize, task: TaskKind) -> Result<Dataset> {
    let path = path.as_ref();
    parse_csv(open(path)?, target_column, task)
}

/// Parses a rectangular numeric CSV. A first row containing any
/// non-numeric cell is treated as a header and skipped.
pub fn parse_csv<R: Read>(reader: R, target_column: usize, task: TaskKind) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut width: Option<usize> = None;
    let mut rows: Vec<(Supervision, Vec<f64>)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Malformed {
            line: row,
            message: e.to_string(),
        })?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|c| c.parse::<f64>().ok()).collect();
        if i == 0 && parsed.iter().any(Option::is_none) {
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Ragged {
                row,
                expected,
                found: record.len(),
            });
        }
        if target_column >= expected {
            return Err(Error::invalid(format!(
                "target column {target_column} out of range for {expected} columns"
            )));
        }
        let mut values = Vec::with_capacity(expected);
        for (col, cell) in parsed.into_iter().enumerate() {
            values.push(cell.ok_or_else(|| Error::Malformed {
                line: row,
                message: format!("non-numeric cell `{}` in column {col}", &record[col]),
            })?);
        }
        let label = values.remove(target_column);
        let sup = parse_label(&label.to_string(), task, row)?;
        rows.push((sup, values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = rows[0].1.len();
    let task = infer_task(task, rows.iter().map(|(s, _)| s));
    let samples = rows
        .into_iter()
        .enumerate()
        .map(|(index, (supervision, features))| Sample {
            index,
            features,
            supervision,
        })
        .collect();
    Dataset::new(samples, dim, task)
}

/// Seeded random partition into `(train, test)` with
/// `|test| = round(test_fraction * |dataset|)`.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} must lie in (0, 1)"
        )));
    }
    let n = dataset.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} on {n} samples leaves an empty partition"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| -> Result<Dataset> {
        let samples = idx.iter().map(|&i| dataset.samples[i].clone()).collect();
        Dataset::new(samples, dataset.dim, dataset.task)
    };
    let test = pick(&order[..n_test])?;
    let train = pick(&order[n_test..])?;
    Ok((train, test))
}

/// Per-feature min-max scaling fitted on one dataset (train) and applied
/// to others. Constant features map to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: &Dataset) -> Self {
        let mut min = vec![f64::INFINITY; data.dim];
        let mut max = vec![f64::NEG_INFINITY; data.dim];
        for s in &data.samples {
            for (j, &v) in s.features.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        MinMaxScaler { min, max }
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        crate::error::check_dim(self.min.len(), data.dim)?;
        let mut out = data.clone();
        for s in &mut out.samples {
            for (j, v) in s.features.iter_mut().enumerate() {
                let range = self.max[j] - self.min[j];
                *v = if range > 0.0 {
                    (*v - self.min[j]) / range
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }
}

/// Iterator over a dataset in stored or seeded-shuffled order.
///
/// `passes = None` cycles forever; each pass draws a fresh permutation.
pub struct SampleStream<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    pos: usize,
    passes_left: Option<usize>,
    rng: Option<ChaCha8Rng>,
}

impl<'a> SampleStream<'a> {
    fn refill(&mut self) {
        if let Some(rng) = self.rng.as_mut() {
            self.order.shuffle(rng);
        }
        self.pos = 0;
    }
}

impl<'a> Iterator for SampleStream<'a> {
    type Item = &'a Sample;

    fn next(&mut self) -> Option<&'a Sample> {
        if self.pos == self.order.len() {
            match self.passes_left.as_mut() {
                Some(0) => return None,
                Some(p) => *p -= 1,
                None => {}
            }
            self.refill();
        }
        let s = &self.data.samples[self.order[self.pos]];
        self.pos += 1;
        Some(s)
    }
}

/// Streams `passes` passes over the data (`None` = unbounded).
pub fn stream(data: &Dataset, seed: u64, shuffle: bool, passes: Option<usize>) -> SampleStream<'_> {
    let n = data.len();
    SampleStream {
        data,
        order: (0..n).collect(),
        // start "exhausted" so the first call draws pass one
        pos: n,
        passes_left: passes,
        rng: shuffle.then(|| ChaCha8Rng::seed_from_u64(seed)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(n: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| Sample {
                index: i,
                features: vec![i as f64],
                supervision: Supervision::Target(vec![i as f64 * 2.0]),
            })
            .collect();
        Dataset::new(samples, 1, Task::Regression { outputs: 1 }).unwrap()
    }

    #[test]
    fn libsvm_classification_line() {
        let opts = LoadOptions {
            task: TaskKind::Binary,
            dim: Some(3),
        };
        let d = parse_libsvm("1 1:0.5 3:2.0\n".as_bytes(), opts).unwrap();
        assert_eq!(d.samples()[0].features, vec![0.5, 0.0, 2.0]);
        assert_eq!(d.samples()[0].supervision, Supervision::Sign(1.0));
    }

    #[test]
    fn libsvm_regression_line() {
        let opts = LoadOptions {
            task: TaskKind::Regression,
            dim: Some(4),
        };
        let d = parse_libsvm("-1.5 2:1.0\n".as_bytes(), opts).unwrap();
        assert_eq!(d.samples()[0].features, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.samples()[0].supervision, Supervision::Target(vec![-1.5]));
        assert_eq!(d.task(), Task::Regression { outputs: 1 });
    }

    #[test]
    fn libsvm_binary_labels_normalized() {
        let d = parse_libsvm("0 1:1\n-1 1:1\n2 1:1\n".as_bytes(), LoadOptions::new(TaskKind::Binary))
            .unwrap();
        let labels: Vec<_> = d.samples().iter().map(|s| s.supervision.clone()).collect();
        assert_eq!(
            labels,
            vec![Supervision::Sign(-1.0), Supervision::Sign(-1.0), Supervision::Sign(1.0)]
        );
    }

    #[test]
    fn libsvm_errors() {
        let opts = LoadOptions::new(TaskKind::Regression);
        assert!(matches!(parse_libsvm("".as_bytes(), opts), Err(Error::EmptyDataset)));
        assert!(matches!(
            parse_libsvm("1 1:1\n2 3:1 2:1\n".as_bytes(), opts),
            Err(Error::NonAscending { line: 2, .. })
        ));
        assert!(matches!(
            parse_libsvm("1 1:1\nx 1:1\n".as_bytes(), opts),
            Err(Error::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            parse_libsvm("1 0:1\n".as_bytes(), opts),
            Err(Error::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("1 1:abc\n".as_bytes(), opts),
            Err(Error::Malformed { line: 1, .. })
        ));
        let small = LoadOptions {
            task: TaskKind::Regression,
            dim: Some(1),
        };
        assert!(parse_libsvm("1 2:1\n".as_bytes(), small).is_err());
    }

    #[test]
    fn libsvm_multiclass_infers_classes() {
        let d = parse_libsvm("0 1:1\n3 1:2\n".as_bytes(), LoadOptions::new(TaskKind::Multiclass))
            .unwrap();
        assert_eq!(d.task(), Task::Multiclass { classes: 4 });
        assert!(parse_libsvm("1.5 1:1\n".as_bytes(), LoadOptions::new(TaskKind::Multiclass)).is_err());
    }

    #[test]
    fn csv_basic_and_header() {
        let d = parse_csv("1,2,3\n4,5,6\n".as_bytes(), 0, TaskKind::Regression).unwrap();
        assert_eq!(d.samples()[0].features, vec![2.0, 3.0]);
        assert_eq!(d.samples()[1].features, vec![5.0, 6.0]);
        assert_eq!(d.samples()[0].supervision, Supervision::Target(vec![1.0]));
        assert_eq!(d.samples()[1].supervision, Supervision::Target(vec![4.0]));

        let h = parse_csv("a,b,c\n1,2,3\n".as_bytes(), 2, TaskKind::Regression).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.samples()[0].features, vec![1.0, 2.0]);
        assert_eq!(h.samples()[0].supervision, Supervision::Target(vec![3.0]));
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            parse_csv("1,2,3\n4,5\n".as_bytes(), 0, TaskKind::Regression),
            Err(Error::Ragged { row: 2, expected: 3, found: 2 })
        ));
        assert!(matches!(
            parse_csv("1,2,3\n4,x,6\n".as_bytes(), 0, TaskKind::Regression),
            Err(Error::Malformed { line: 2, .. })
        ));
        assert!(parse_csv("a,b\n".as_bytes(), 0, TaskKind::Regression).is_err());
    }

    #[test]
    fn split_sizes() {
        let (tr, te) = split(&reg(10), 0.1, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (9, 1));
        let (tr, te) = split(&reg(4), 0.5, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (2, 2));
        assert!(split(&reg(4), 0.0, 1).is_err());
        assert!(split(&reg(4), 1.0, 1).is_err());
        assert!(split(&reg(4), 0.01, 1).is_err());
    }

    #[test]
    fn split_is_deterministic() {
        let d = reg(50);
        let a = split(&d, 0.3, 11).unwrap();
        let b = split(&d, 0.3, 11).unwrap();
        assert_eq!(a.0.samples(), b.0.samples());
        assert_eq!(a.1.samples(), b.1.samples());
    }

    #[test]
    fn stream_orders() {
        let d = reg(5);
        let plain: Vec<usize> = stream(&d, 0, false, Some(1)).map(|s| s.index).collect();
        assert_eq!(plain, vec![0, 1, 2, 3, 4]);
        let a: Vec<usize> = stream(&d, 3, true, Some(1)).map(|s| s.index).collect();
        let b: Vec<usize> = stream(&d, 3, true, Some(1)).map(|s| s.index).collect();
        assert_eq!(a, b);
        let two: Vec<usize> = stream(&d, 3, true, Some(2)).map(|s| s.index).collect();
        assert_eq!(two.len(), 10);
        let mut first: Vec<usize> = two[..5].to_vec();
        let mut second: Vec<usize> = two[5..].to_vec();
        first.sort_unstable();
        second.sort_unstable();
        assert_eq!(first, vec![0, 1, 2, 3, 4]);
        assert_eq!(second, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn scaler_uses_train_range() {
        let d = reg(5);
        let s = MinMaxScaler::fit(&d);
        let out = s.transform(&d).unwrap();
        assert_eq!(out.samples()[4].features, vec![1.0]);
        assert_eq!(out.samples()[2].features, vec![0.5]);
    }
}
