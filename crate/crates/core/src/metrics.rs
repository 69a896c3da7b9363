//! Datasets and the pairwise dissimilarities defined over them.
//!
//! Every evaluation performed through a [`Space`] is counted, so the MST
//! builders can be compared by the number of dissimilarity calls they make.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Numeric,
    Strings,
}

/// An immutable collection of `n >= 1` objects: either rows of a dense
/// numeric matrix or byte strings.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Numeric { values: Vec<f64>, n: usize, dim: usize },
    Strings(Vec<Box<[u8]>>),
}

impl Dataset {
    /// Builds a numeric dataset from row-major `values`.
    pub fn from_rows(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("numeric rows must have at least one column".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::Config(format!(
                "{} values do not form whole rows of length {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "non-finite value in row {}",
                pos / dim
            )));
        }
        let n = values.len() / dim;
        Ok(Dataset::Numeric { values, n, dim })
    }

    pub fn from_strings<I, S>(strings: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<Vec<u8>>,
    {
        let strings: Vec<Box<[u8]>> = strings
            .into_iter()
            .map(|s| s.into().into_boxed_slice())
            .collect();
        if strings.is_empty() {
            return Err(Error::Config("a dataset needs at least one object".into()));
        }
        Ok(Dataset::Strings(strings))
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Numeric { n, .. } => *n,
            Dataset::Strings(s) => s.len(),
        }
    }

    /// Always false: construction rejects empty datasets.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> DatasetKind {
        match self {
            Dataset::Numeric { .. } => DatasetKind::Numeric,
            Dataset::Strings(_) => DatasetKind::Strings,
        }
    }

    /// Row length for numeric data.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Dataset::Numeric { dim, .. } => Some(*dim),
            Dataset::Strings(_) => None,
        }
    }

    /// # Panics
    /// If the dataset is not numeric or `i` is out of range.
    pub fn row(&self, i: usize) -> &[f64] {
        match self {
            Dataset::Numeric { values, dim, .. } => &values[i * dim..(i + 1) * dim],
            Dataset::Strings(_) => panic!("row() called on a string dataset"),
        }
    }

    /// # Panics
    /// If the dataset is not a string dataset or `i` is out of range.
    pub fn string(&self, i: usize) -> &[u8] {
        match self {
            Dataset::Strings(s) => &s[i],
            Dataset::Numeric { .. } => panic!("string() called on a numeric dataset"),
        }
    }

    /// A new dataset whose object `k` is object `order[k]` of `self`.
    pub fn reordered(&self, order: &[usize]) -> Dataset {
        match self {
            Dataset::Numeric { dim, .. } => {
                let mut values = Vec::with_capacity(order.len() * dim);
                for &i in order {
                    values.extend_from_slice(self.row(i));
                }
                Dataset::Numeric {
                    values,
                    n: order.len(),
                    dim: *dim,
                }
            }
            Dataset::Strings(s) => Dataset::Strings(order.iter().map(|&i| s[i].clone()).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Euclidean,
    Manhattan,
    Maximum,
    Hamming,
    Levenshtein,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Euclidean,
        Metric::Manhattan,
        Metric::Maximum,
        Metric::Hamming,
        Metric::Levenshtein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Maximum => "maximum",
            Metric::Hamming => "hamming",
            Metric::Levenshtein => "levenshtein",
        }
    }

    pub fn accepts(self, kind: DatasetKind) -> bool {
        match self {
            Metric::Euclidean | Metric::Manhattan | Metric::Maximum => kind == DatasetKind::Numeric,
            Metric::Hamming => true,
            Metric::Levenshtein => kind == DatasetKind::Strings,
        }
    }

    /// Whether the triangle inequality holds, which the VP-tree relies on.
    /// True for every built-in measure.
    pub fn satisfies_triangle_inequality(self) -> bool {
        true
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

/// Number of dissimilarity evaluations. Safe to bump from several threads;
/// read it only after the workers have joined.
#[derive(Debug, Default)]
pub struct CallCounter(AtomicU64);

impl CallCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn add(&self, k: u64) {
        self.0.fetch_add(k, Ordering::Relaxed);
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

/// A dataset paired with a compatible dissimilarity and a call counter.
#[derive(Debug)]
pub struct Space<'a> {
    data: &'a Dataset,
    metric: Metric,
    calls: CallCounter,
}

impl<'a> Space<'a> {
    pub fn new(data: &'a Dataset, metric: Metric) -> Result<Self> {
        if !metric.accepts(data.kind()) {
            return Err(Error::Config(format!(
                "metric {metric} cannot be applied to {:?} data",
                data.kind()
            )));
        }
        if let (Metric::Hamming, Dataset::Strings(s)) = (metric, data) {
            let len = s[0].len();
            if let Some(bad) = s.iter().position(|x| x.len() != len) {
                return Err(Error::Config(format!(
                    "hamming distance needs equal lengths: object 0 has {len}, object {bad} has {}",
                    s[bad].len()
                )));
            }
        }
        Ok(Space {
            data,
            metric,
            calls: CallCounter::new(),
        })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }

    pub fn reset_calls(&self) {
        self.calls.reset();
    }

    /// Dissimilarity between objects `i` and `j`; counts one call.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.calls.add(1);
        self.dist_uncounted(i, j)
    }

    /// Evaluates without touching the counter. Callers batch their own
    /// counts through [`Space::record_calls`] to keep hot loops off the atomic.
    pub(crate) fn dist_uncounted(&self, i: usize, j: usize) -> f64 {
        match self.data {
            Dataset::Numeric { .. } => {
                let (x, y) = (self.data.row(i), self.data.row(j));
                match self.metric {
                    Metric::Euclidean => euclidean(x, y),
                    Metric::Manhattan => manhattan(x, y),
                    Metric::Maximum => maximum(x, y),
                    Metric::Hamming => x.iter().zip(y).filter(|(a, b)| a != b).count() as f64,
                    Metric::Levenshtein => unreachable!("rejected by Space::new"),
                }
            }
            Dataset::Strings(s) => {
                let (x, y) = (&s[i][..], &s[j][..]);
                match self.metric {
                    Metric::Hamming => hamming(x, y) as f64,
                    Metric::Levenshtein => levenshtein(x, y) as f64,
                    _ => unreachable!("rejected by Space::new"),
                }
            }
        }
    }

    pub(crate) fn record_calls(&self, k: u64) {
        self.calls.add(k);
    }
}

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn manhattan(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

pub fn maximum(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Number of mismatching positions of two equal-length strings.
pub fn hamming(x: &[u8], y: &[u8]) -> usize {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}

/// Unit-cost edit distance (insertions, deletions, substitutions).
pub fn levenshtein(x: &[u8], y: &[u8]) -> usize {
    let (x, y) = if x.len() < y.len() { (y, x) } else { (x, y) };
    if y.is_empty() {
        return x.len();
    }
    let mut prev: Vec<usize> = (0..=y.len()).collect();
    let mut cur = vec![0; y.len() + 1];
    for (i, &a) in x.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &b) in y.iter().enumerate() {
            let sub = prev[j] + usize::from(a != b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[y.len()]
}
