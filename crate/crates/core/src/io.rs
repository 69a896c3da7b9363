//! Benchmark file formats.
//!
//! Point files hold whitespace-separated numeric rows, label files one integer
//! per line and string files one object per line. Any of them may be gzipped;
//! compression is detected from the magic bytes, not the file name.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;

use crate::error::{Error, Result};
use crate::linkage::ClusterLabels;
use crate::metrics::{Dataset, DatasetKind, Metric};

/// Environment variable naming the benchmark cache directory.
pub const DATA_DIR_ENV: &str = "GENIE_DATA_DIR";

/// `x` with `sig` significant digits, formatted like C's `%.{sig}g`.
pub fn format_sig(x: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// File contents, transparently gunzipped.
pub fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes = if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        MultiGzDecoder::new(&bytes[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        out
    } else {
        bytes
    };
    String::from_utf8(bytes).map_err(|e| {
        let line = 1 + e.as_bytes()[..e.utf8_error().valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count();
        parse_error(path, line, "invalid UTF-8")
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Numeric rows of equal length. Blank lines are ignored.
pub fn load_points(path: &Path) -> Result<Dataset> {
    let text = read_text(path)?;
    let mut values = Vec::new();
    let mut dim = None;
    for (line, content) in content_lines(&text) {
        let before = values.len();
        for tok in content.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_error(path, line, format!("'{tok}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, format!("'{tok}' is not finite")));
            }
            values.push(v);
        }
        let width = values.len() - before;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(parse_error(
                    path,
                    line,
                    format!("expected {d} columns, found {width}"),
                ))
            }
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| parse_error(path, 1, "no data rows"))?;
    Dataset::from_rows(values, dim)
}

/// One integer label per line, remapped to `1..=k` by first appearance.
pub fn load_labels(path: &Path) -> Result<ClusterLabels> {
    let text = read_text(path)?;
    let mut raw = Vec::new();
    for (line, content) in content_lines(&text) {
        let v: i64 = content
            .parse()
            .map_err(|_| parse_error(path, line, format!("'{content}' is not an integer label")))?;
        raw.push(v);
    }
    if raw.is_empty() {
        return Err(parse_error(path, 1, "no labels"));
    }
    let mut seen = std::collections::HashMap::new();
    let ids: Vec<usize> = raw
        .iter()
        .map(|v| {
            let next = seen.len();
            *seen.entry(*v).or_insert(next)
        })
        .collect();
    Ok(ClusterLabels::from_raw(&ids))
}

/// One string per line. A trailing newline is allowed; empty lines are not.
pub fn load_strings(path: &Path) -> Result<Dataset> {
    let text = read_text(path)?;
    let mut strings = Vec::new();
    for (k, l) in text.lines().enumerate() {
        let l = l.strip_suffix('\r').unwrap_or(l);
        if l.is_empty() {
            return Err(parse_error(path, k + 1, "empty string object"));
        }
        strings.push(l.as_bytes().to_vec());
    }
    if strings.is_empty() {
        return Err(parse_error(path, 1, "no strings"));
    }
    Dataset::from_strings(strings)
}

/// Writes numeric rows with 12 significant digits.
pub fn write_points(path: &Path, data: &Dataset) -> Result<()> {
    let dim = data
        .dim()
        .ok_or_else(|| Error::Config("only numeric datasets can be written as points".into()))?;
    let mut out = String::new();
    for i in 0..data.len() {
        let row: Vec<String> = data.row(i).iter().map(|&v| format_sig(v, 12)).collect();
        debug_assert_eq!(row.len(), dim);
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// `$GENIE_DATA_DIR`, or `data` under the working directory.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// `<dir>/<name>.<ext>.gz` or `<dir>/<name>.<ext>`, whichever exists.
pub fn locate(dir: &Path, name: &str, ext: &str) -> Option<PathBuf> {
    [format!("{name}.{ext}.gz"), format!("{name}.{ext}")]
        .into_iter()
        .map(|f| dir.join(f))
        .find(|p| p.is_file())
}

/// A dataset with its reference partition.
#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub name: String,
    pub data: Dataset,
    pub reference: ClusterLabels,
    pub k: usize,
    /// Metric the benchmark is normally run with.
    pub metric: Metric,
}

impl BenchmarkCase {
    /// String benchmarks are recognised by name: `actg*` use Levenshtein,
    /// `binstr*` Hamming. Everything else is numeric and Euclidean.
    pub fn kind_of(name: &str) -> (DatasetKind, Metric) {
        if name.starts_with("actg") {
            (DatasetKind::Strings, Metric::Levenshtein)
        } else if name.starts_with("binstr") {
            (DatasetKind::Strings, Metric::Hamming)
        } else {
            (DatasetKind::Numeric, Metric::Euclidean)
        }
    }

    /// Loads `name` from `dir`; `Ok(None)` when either file is missing.
    pub fn load(dir: &Path, name: &str) -> Result<Option<BenchmarkCase>> {
        let (Some(data_path), Some(label_path)) =
            (locate(dir, name, "data"), locate(dir, name, "labels"))
        else {
            return Ok(None);
        };
        let (kind, metric) = Self::kind_of(name);
        let data = match kind {
            DatasetKind::Numeric => load_points(&data_path)?,
            DatasetKind::Strings => load_strings(&data_path)?,
        };
        let reference = load_labels(&label_path)?;
        if reference.len() != data.len() {
            return Err(Error::Config(format!(
                "{name}: {} labels for {} objects",
                reference.len(),
                data.len()
            )));
        }
        Ok(Some(BenchmarkCase {
            name: name.to_string(),
            k: reference.k(),
            data,
            reference,
            metric,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn parse_line(e: Error) -> usize {
        match e {
            Error::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(2.5, 12), "2.5");
        assert_eq!(format_sig(-0.125, 12), "-0.125");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_sig(0.00001234, 12), "1.234e-05");
        assert_eq!(format_sig(0.0001234, 12), "0.0001234");
        assert_eq!(format_sig(100.0, 3), "100");
        assert_eq!(format_sig(1000.0, 3), "1e+03");
        assert_eq!(format_sig(f64::INFINITY, 12), "Inf");
    }

    #[test]
    fn two_by_two_points() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.data", "0 0\n1 1\n");
        let d = load_points(&p).unwrap();
        assert_eq!((d.len(), d.dim()), (2, Some(2)));
        assert_eq!(d.row(1), &[1.0, 1.0]);
    }

    #[test]
    fn scientific_notation_and_tabs() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.data", "1e-3\t-2.5E+2\n\n  3 4  \n");
        let d = load_points(&p).unwrap();
        assert_eq!(d.row(0), &[0.001, -250.0]);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn point_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = write(dir.path(), "r", "1 2\n3 4\n5\n");
        assert_eq!(parse_line(load_points(&ragged).unwrap_err()), 3);
        let word = write(dir.path(), "w", "1 2\nx 4\n");
        assert_eq!(parse_line(load_points(&word).unwrap_err()), 2);
        let comma = write(dir.path(), "c", "1,5 2\n");
        assert_eq!(parse_line(load_points(&comma).unwrap_err()), 1);
        let empty = write(dir.path(), "e", "");
        assert!(matches!(load_points(&empty), Err(Error::Parse { .. })));
        let nan = write(dir.path(), "n", "1 nan\n");
        assert!(matches!(load_points(&nan), Err(Error::Parse { .. })));
        assert!(matches!(load_points(&dir.path().join("missing")), Err(Error::Io { .. })));
    }

    #[test]
    fn gzip_is_detected_by_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("plain-name.txt");
        let mut enc = GzEncoder::new(fs::File::create(&p).unwrap(), Compression::default());
        enc.write_all(b"1 2\n3 4\n").unwrap();
        enc.finish().unwrap();
        let d = load_points(&p).unwrap();
        assert_eq!(d.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn labels_are_remapped() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "l", "1\n1\n2\n");
        let l = load_labels(&p).unwrap();
        assert_eq!((l.k(), l.sizes()), (2, vec![2, 1]));
        let p = write(dir.path(), "l0", "7\n0\n7\n-3\n");
        assert_eq!(load_labels(&p).unwrap().labels(), &[1, 2, 1, 3]);
        let bad = write(dir.path(), "lb", "1\n2.5\n");
        assert_eq!(parse_line(load_labels(&bad).unwrap_err()), 2);
    }

    #[test]
    fn strings() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s", "actg\natg\nccc\n");
        let d = load_strings(&p).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.string(1), b"atg");
        let bad = write(dir.path(), "sb", "actg\n\natg\n");
        assert_eq!(parse_line(load_strings(&bad).unwrap_err()), 2);
        let crlf = write(dir.path(), "sc", "ac\r\ngt\r\n");
        assert_eq!(load_strings(&crlf).unwrap().string(1), b"gt");
    }

    #[test]
    fn point_round_trip_at_twelve_digits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let values: Vec<f64> = (0..300)
            .map(|_| {
                let m: f64 = rng.random_range(-1.0..1.0);
                m * 10f64.powi(rng.random_range(-8..8))
            })
            .collect();
        let data = Dataset::from_rows(values.clone(), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt");
        write_points(&p, &data).unwrap();
        let back = load_points(&p).unwrap();
        for (a, b) in values.iter().zip(match &back {
            Dataset::Numeric { values, .. } => values,
            _ => unreachable!(),
        }) {
            let rounded: f64 = format!("{a:.11e}").parse().unwrap();
            assert_eq!(*b, rounded);
        }
        // Writing the reloaded data again is byte-identical.
        let p2 = dir.path().join("rt2");
        write_points(&p2, &back).unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn benchmark_case_lookup() {
        let dir = tempfile::tempdir().unwrap();
        assert!(BenchmarkCase::load(dir.path(), "toy").unwrap().is_none());
        write(dir.path(), "toy.data", "0\n1\n5\n");
        write(dir.path(), "toy.labels", "2\n2\n1\n");
        let c = BenchmarkCase::load(dir.path(), "toy").unwrap().unwrap();
        assert_eq!((c.k, c.data.len(), c.metric), (2, 3, Metric::Euclidean));
        write(dir.path(), "short.data", "0\n1\n");
        write(dir.path(), "short.labels", "1\n");
        assert!(matches!(BenchmarkCase::load(dir.path(), "short"), Err(Error::Config(_))));
        write(dir.path(), "actg0.data", "acg\nactg\n");
        write(dir.path(), "actg0.labels", "1\n2\n");
        let c = BenchmarkCase::load(dir.path(), "actg0").unwrap().unwrap();
        assert_eq!(c.metric, Metric::Levenshtein);
        assert_eq!(c.data.kind(), DatasetKind::Strings);
    }
}
