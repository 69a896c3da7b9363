//! External validity scoring and the permutation benchmark protocol.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inequity::GiniTracker;
use crate::linkage::{cut, ClusterLabels, MergeHistory};
use crate::metrics::{Dataset, Metric, Space};
use crate::pipeline::{cluster, Algorithm, RunOptions};
use crate::vptree::with_threads;

/// Fowlkes-Mallows index of two partitions of the same objects.
///
/// Computed from the contingency table as
/// `(sum m_ij^2 - n) / sqrt((sum r_i^2 - n) (sum c_j^2 - n))`. The cluster
/// counts may differ. Undefined when either side is all singletons.
pub fn fm_index(a: &ClusterLabels, b: &ClusterLabels) -> Result<f64> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::Config(format!(
            "partitions cover {n} and {} objects",
            b.len()
        )));
    }
    let (ka, kb) = (a.k(), b.k());
    let mut table = vec![0u64; ka * kb];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        table[(x - 1) * kb + (y - 1)] += 1;
    }
    let sq = |v: u64| (v as u128) * (v as u128);
    let cells: u128 = table.iter().map(|&v| sq(v)).sum();
    let rows: u128 = a.sizes().iter().map(|&v| sq(v as u64)).sum();
    let cols: u128 = b.sizes().iter().map(|&v| sq(v as u64)).sum();
    let n = n as u128;
    let (num, ra, rb) = (cells - n, rows - n, cols - n);
    if ra == 0 || rb == 0 {
        return Err(Error::UndefinedScore(
            "FM index needs at least one non-singleton cluster on each side".into(),
        ));
    }
    Ok(num as f64 / ((ra as f64) * (rb as f64)).sqrt())
}

/// `(k, gini)` of the cluster sizes for `k = n, n-1, ..., 1`.
pub fn size_gini_curve(history: &MergeHistory) -> Result<Vec<(usize, f64)>> {
    let n = history.n();
    let mut tracker = GiniTracker::new(n);
    let mut out = Vec::with_capacity(n);
    out.push((n, tracker.value()));
    for (step, (a, b)) in history.replay().enumerate() {
        tracker.merge(a, b)?;
        out.push((n - step - 1, tracker.value()));
    }
    Ok(out)
}

/// Median with the two central values averaged for even lengths.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    Some(if m % 2 == 1 {
        s[m / 2]
    } else {
        (s[m / 2 - 1] + s[m / 2]) / 2.0
    })
}

/// Five-number summary plus mean and sample standard deviation. Quartiles
/// interpolate linearly between order statistics (`h = (m - 1) p`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
}

pub fn summarize(xs: &[f64]) -> Option<Summary> {
    if xs.is_empty() {
        return None;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    let q = |p: f64| {
        let h = (m - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(m - 1);
        s[lo] + (h - lo as f64) * (s[hi] - s[lo])
    };
    let mean = s.iter().sum::<f64>() / m as f64;
    let sd = if m > 1 {
        (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Some(Summary {
        min: s[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: s[m - 1],
        mean,
        sd,
    })
}

/// Per-run results of [`median_fm_protocol`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub median: f64,
    pub fm: Vec<f64>,
    pub seeds: Vec<u64>,
    pub calls: Vec<u64>,
}

/// Clusters `runs` random permutations of `data`, cuts each at `k` and
/// reports the median FM index against `reference`.
///
/// Run `r` shuffles with seed `base_seed + r`. Runs execute on
/// `opts.threads` workers, each clustering single-threaded, so the result
/// does not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn median_fm_protocol(
    data: &Dataset,
    metric: Metric,
    algo: Algorithm,
    opts: &RunOptions,
    reference: &ClusterLabels,
    k: usize,
    runs: usize,
    base_seed: u64,
) -> Result<ProtocolOutcome> {
    if runs == 0 {
        return Err(Error::Config("the protocol needs at least one run".into()));
    }
    if reference.len() != data.len() {
        return Err(Error::Config(format!(
            "{} reference labels for {} objects",
            reference.len(),
            data.len()
        )));
    }
    let inner = RunOptions { threads: 1, ..*opts };
    let one = |r: usize| -> Result<(f64, u64, u64)> {
        let seed = base_seed.wrapping_add(r as u64);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = data.reordered(&order);
        let space = Space::new(&shuffled, metric)?;
        let history = cluster(&space, algo, &inner)?;
        let labels = cut(&history, k)?;
        let mut back = vec![0; data.len()];
        for (p, &orig) in order.iter().enumerate() {
            back[orig] = labels.labels()[p];
        }
        let fm = fm_index(&ClusterLabels::from_raw(&back), reference)?;
        Ok((fm, seed, space.calls()))
    };
    let results: Vec<(f64, u64, u64)> = if opts.threads <= 1 {
        (0..runs).map(one).collect::<Result<_>>()?
    } else {
        with_threads(opts.threads, || (0..runs).into_par_iter().map(one).collect::<Result<_>>())?
    };
    let fm: Vec<f64> = results.iter().map(|r| r.0).collect();
    Ok(ProtocolOutcome {
        median: median(&fm).expect("runs > 0"),
        seeds: results.iter().map(|r| r.1).collect(),
        calls: results.iter().map(|r| r.2).collect(),
        fm,
    })
}
