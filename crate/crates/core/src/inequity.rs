//! Inequity indices of integer tuples.
//!
//! Both indices are normalised to `[0, 1]`: `(1, 1, ..., 1)` scores 0 and
//! `(n, 0, ..., 0)` scores 1.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Sum of `|x_i - x_j|` over unordered pairs, via the sorted-order identity.
fn abs_diff_sum(xs: &[usize]) -> u128 {
    let mut sorted = xs.to_vec();
    sorted.sort_unstable();
    let m = sorted.len() as i128;
    let total: i128 = sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| (2 * k as i128 - m + 1) * x as i128)
        .sum();
    total as u128
}

/// Normalised Gini index.
///
/// Order of `xs` is irrelevant. A single entry, or an all-zero tuple, has
/// no inequality and yields 0.
pub fn gini(xs: &[usize]) -> f64 {
    let m = xs.len();
    let total: u128 = xs.iter().map(|&x| x as u128).sum();
    if m < 2 || total == 0 {
        return 0.0;
    }
    abs_diff_sum(xs) as f64 / ((m as f64 - 1.0) * total as f64)
}

/// Normalised Bonferroni index. Entries are sorted non-increasingly first.
pub fn bonferroni(xs: &[usize]) -> f64 {
    let m = xs.len();
    let total: f64 = xs.iter().map(|&x| x as f64).sum();
    if m < 2 || total == 0.0 {
        return 0.0;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    // Walk from the smallest entry up, keeping the tail sum sum_{j>=i} x_j.
    let mut tail = 0.0;
    let mut acc = 0.0;
    for (i, &x) in sorted.iter().enumerate().rev() {
        tail += x as f64;
        acc += tail / (m - i) as f64;
    }
    let b = m as f64 / (m as f64 - 1.0) * (1.0 - acc / total);
    b.clamp(0.0, 1.0)
}

/// Gini index of the cluster-size distribution, maintained across merges.
///
/// Sizes are kept as a size -> multiplicity map, so one update costs
/// O(number of distinct sizes). The pairwise absolute-difference sum is kept
/// as an exact integer, which makes the tracked value agree with [`gini`] up
/// to the final division.
#[derive(Debug, Clone)]
pub struct GiniTracker {
    total: usize,
    clusters: usize,
    diff_sum: u128,
    counts: BTreeMap<usize, usize>,
    merges: usize,
}

impl GiniTracker {
    /// `n` singletons.
    pub fn new(n: usize) -> Self {
        let mut counts = BTreeMap::new();
        if n > 0 {
            counts.insert(1, n);
        }
        GiniTracker {
            total: n,
            clusters: n,
            diff_sum: 0,
            counts,
            merges: 0,
        }
    }

    /// Starts from an arbitrary distribution of positive sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::Internal("cluster sizes must be positive".into()));
        }
        let mut counts = BTreeMap::new();
        for &s in sizes {
            *counts.entry(s).or_insert(0) += 1;
        }
        Ok(GiniTracker {
            total: sizes.iter().sum(),
            clusters: sizes.len(),
            diff_sum: abs_diff_sum(sizes),
            counts,
            merges: 0,
        })
    }

    pub fn value(&self) -> f64 {
        if self.clusters < 2 {
            return 0.0;
        }
        self.diff_sum as f64 / ((self.clusters as f64 - 1.0) * self.total as f64)
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn merges(&self) -> usize {
        self.merges
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Current sizes, ascending.
    pub fn sizes(&self) -> Vec<usize> {
        self.counts
            .iter()
            .flat_map(|(&s, &c)| std::iter::repeat_n(s, c))
            .collect()
    }

    /// Replaces two clusters of sizes `a` and `b` by one of size `a + b`.
    ///
    /// Pairs involving either merged cluster leave the difference sum and
    /// pairs involving the new cluster enter it. Summing over *all* current
    /// clusters overcounts by `|a - b|` on the way out and by `a + b` on the
    /// way in, hence the two correction terms.
    pub fn merge(&mut self, a: usize, b: usize) -> Result<()> {
        let have = |s: usize| self.counts.get(&s).copied().unwrap_or(0);
        let needed_ok = if a == b { have(a) >= 2 } else { have(a) >= 1 && have(b) >= 1 };
        if !needed_ok {
            return Err(Error::Internal(format!(
                "cannot merge clusters of sizes {a} and {b}: not present"
            )));
        }
        let (a_, b_, ab) = (a as i128, b as i128, (a + b) as i128);
        let mut delta: i128 = 0;
        for (&c, &mult) in &self.counts {
            let c = c as i128;
            delta += mult as i128 * ((c - ab).abs() - (c - a_).abs() - (c - b_).abs());
        }
        delta += (a_ - b_).abs() - a_ - b_;
        self.diff_sum = (self.diff_sum as i128 + delta) as u128;

        for s in [a, b] {
            let e = self.counts.get_mut(&s).expect("checked above");
            *e -= 1;
            if *e == 0 {
                self.counts.remove(&s);
            }
        }
        *self.counts.entry(a + b).or_insert(0) += 1;
        self.clusters -= 1;
        self.merges += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Double sum over pairs, straight from the definition.
    fn gini_oracle(xs: &[usize]) -> f64 {
        let m = xs.len();
        let total: usize = xs.iter().sum();
        if m < 2 || total == 0 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                s += (xs[i] as f64 - xs[j] as f64).abs();
            }
        }
        s / ((m - 1) as f64 * total as f64)
    }

    /// Spelled out with 1-based indices over a non-increasing tuple.
    fn bonferroni_oracle(xs: &[usize]) -> f64 {
        let mut x: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        x.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let n = x.len();
        let total: f64 = x.iter().sum();
        let mut outer = 0.0;
        for i in 1..=n {
            let inner: f64 = (i..=n).map(|j| x[j - 1]).sum();
            outer += inner / (n - i + 1) as f64;
        }
        n as f64 / (n as f64 - 1.0) * (1.0 - outer / total)
    }

    #[test]
    fn gini_worked_example_values() {
        assert!((gini(&[2, 1, 1, 1]) - 0.2).abs() < 1e-15);
        assert!((gini(&[3, 1, 1]) - 0.4).abs() < 1e-15);
        assert!((gini(&[4, 1]) - 0.6).abs() < 1e-15);
        assert_eq!(gini(&[1, 1, 1, 1, 1]), 0.0);
        assert_eq!(gini(&[5, 0, 0, 0, 0]), 1.0);
        assert_eq!(gini(&[7]), 0.0);
    }

    #[test]
    fn bonferroni_values() {
        assert_eq!(bonferroni(&[1, 1, 1, 1]), 0.0);
        assert!((bonferroni(&[4, 0, 0, 0]) - 1.0).abs() < 1e-15);
        // (3,1,1): tails 5/3 + 2/2 + 1/1 = 11/3; 1.5 * (1 - 11/15) = 0.4.
        assert!((bonferroni_oracle(&[3, 1, 1]) - 0.4).abs() < 1e-15);
        assert!((bonferroni(&[3, 1, 1]) - 0.4).abs() < 1e-15);
        assert!((bonferroni(&[1, 3, 1]) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn tracker_worked_example() {
        let mut t = GiniTracker::new(5);
        assert_eq!(t.value(), 0.0);
        t.merge(1, 1).unwrap();
        assert!((t.value() - 0.2).abs() < 1e-15);
        t.merge(2, 1).unwrap();
        assert!((t.value() - 0.4).abs() < 1e-15);
        t.merge(3, 1).unwrap();
        assert!((t.value() - 0.6).abs() < 1e-15);
        t.merge(4, 1).unwrap();
        assert_eq!(t.value(), 0.0);
        assert_eq!(t.clusters(), 1);
    }

    #[test]
    fn tracker_rejects_absent_sizes() {
        let mut t = GiniTracker::new(3);
        assert!(matches!(t.merge(2, 1), Err(Error::Internal(_))));
        let mut t = GiniTracker::from_sizes(&[2, 1]).unwrap();
        assert!(matches!(t.merge(1, 1), Err(Error::Internal(_))));
        assert!(GiniTracker::from_sizes(&[0, 1]).is_err());
    }

    #[test]
    fn tracker_agrees_with_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(2016);
        for _ in 0..200 {
            let m = rng.random_range(2..60);
            let mut sizes: Vec<usize> = (0..m).map(|_| rng.random_range(1..20)).collect();
            let mut t = GiniTracker::from_sizes(&sizes).unwrap();
            assert!((t.value() - gini_oracle(&sizes)).abs() <= 1e-10);
            while sizes.len() > 1 {
                let i = rng.random_range(0..sizes.len());
                let a = sizes.swap_remove(i);
                let j = rng.random_range(0..sizes.len());
                let b = sizes.swap_remove(j);
                sizes.push(a + b);
                t.merge(a, b).unwrap();
                assert!((t.value() - gini_oracle(&sizes)).abs() <= 1e-10);
                let mut sorted = sizes.clone();
                sorted.sort_unstable();
                assert_eq!(t.sizes(), sorted);
            }
        }
    }

    fn nonincreasing(max_len: usize) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0usize..30, 2..max_len).prop_map(|mut v| {
            v.sort_unstable_by(|a, b| b.cmp(a));
            v
        })
    }

    /// `x` is majorised by `y` (same total, prefix sums of `x` never exceed `y`'s).
    fn majorised(x: &[usize], y: &[usize]) -> bool {
        let (mut px, mut py) = (0, 0);
        for (a, b) in x.iter().zip(y) {
            px += a;
            py += b;
            if px > py {
                return false;
            }
        }
        px == py
    }

    proptest! {
        #[test]
        fn indices_match_oracles_and_bounds(x in nonincreasing(40)) {
            prop_assume!(x.iter().sum::<usize>() > 0);
            let g = gini(&x);
            prop_assert!((g - gini_oracle(&x)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&g));
            let b = bonferroni(&x);
            prop_assert!((b - bonferroni_oracle(&x).clamp(0.0, 1.0)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&b));
        }

        #[test]
        fn pigou_dalton(x in nonincreasing(20), i_frac in 0.0f64..1.0, j_frac in 0.0f64..1.0, h in 1usize..10) {
            let n = x.len();
            let i = ((i_frac * (n - 1) as f64) as usize).min(n - 2);
            let j = i + 1 + ((j_frac * (n - i - 1) as f64) as usize).min(n - i - 2);
            let left_ok = if i + 1 < n { x[i] >= x[i + 1] + h } else { true };
            let right_ok = x[j - 1] >= x[j] + h;
            prop_assume!(left_ok && right_ok && x.iter().sum::<usize>() > 0);
            let mut y = x.clone();
            y[i] -= h;
            y[j] += h;
            prop_assert!(gini(&y) <= gini(&x) + 1e-12);
            prop_assert!(bonferroni(&y) <= bonferroni(&x) + 1e-12);
        }

        #[test]
        fn schur_convexity(total in 1usize..40, len in 2usize..10, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draw = |rng: &mut ChaCha8Rng| {
                let mut v = vec![0usize; len];
                for _ in 0..total {
                    v[rng.random_range(0..len)] += 1;
                }
                v.sort_unstable_by(|a, b| b.cmp(a));
                v
            };
            let (a, b) = (draw(&mut rng), draw(&mut rng));
            if majorised(&a, &b) {
                prop_assert!(gini(&a) <= gini(&b) + 1e-12);
                prop_assert!(bonferroni(&a) <= bonferroni(&b) + 1e-12);
            }
            if majorised(&b, &a) {
                prop_assert!(gini(&b) <= gini(&a) + 1e-12);
                prop_assert!(bonferroni(&b) <= bonferroni(&a) + 1e-12);
            }
        }
    }
}
