//! Disjoint sets that also know their sizes, how many sets there are and the
//! size of the smallest one.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SizedDisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
    size: Vec<usize>,
    /// `size_freq[s]` = number of sets of cardinality `s`.
    size_freq: Vec<usize>,
    set_count: usize,
    min_size: usize,
}

impl SizedDisjointSets {
    /// `n` singletons.
    pub fn new(n: usize) -> Self {
        let mut size_freq = vec![0; n + 1];
        if n > 0 {
            size_freq[1] = n;
        }
        SizedDisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
            size: vec![1; n],
            size_freq,
            set_count: n,
            min_size: if n > 0 { 1 } else { 0 },
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Root of the set containing `i`, compressing the path on the way.
    pub fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = i;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Root lookup without mutation, for shared read-only access.
    pub fn find_immutable(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    pub fn same_set(&mut self, i: usize, j: usize) -> bool {
        self.find(i) == self.find(j)
    }

    /// Merges the sets of `i` and `j` and returns the new root.
    pub fn link(&mut self, i: usize, j: usize) -> Result<usize> {
        let (ri, rj) = (self.find(i), self.find(j));
        if ri == rj {
            return Err(Error::Internal(format!(
                "objects {i} and {j} already share a set"
            )));
        }
        let (si, sj) = (self.size[ri], self.size[rj]);
        let (root, child) = match self.rank[ri].cmp(&self.rank[rj]) {
            std::cmp::Ordering::Less => (rj, ri),
            std::cmp::Ordering::Greater => (ri, rj),
            std::cmp::Ordering::Equal => {
                self.rank[ri] += 1;
                (ri, rj)
            }
        };
        self.parent[child] = root;
        self.size[root] = si + sj;

        self.size_freq[si] -= 1;
        self.size_freq[sj] -= 1;
        self.size_freq[si + sj] += 1;
        self.set_count -= 1;
        // Sets only ever grow, so the minimum can only move up.
        while self.size_freq[self.min_size] == 0 {
            self.min_size += 1;
        }
        Ok(root)
    }

    pub fn size_of(&mut self, i: usize) -> usize {
        let r = self.find(i);
        self.size[r]
    }

    pub fn min_size(&self) -> usize {
        self.min_size
    }

    pub fn set_count(&self) -> usize {
        self.set_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Label-array reference: relabel on every union.
    struct Naive {
        label: Vec<usize>,
    }

    impl Naive {
        fn link(&mut self, i: usize, j: usize) {
            let (a, b) = (self.label[i], self.label[j]);
            for l in &mut self.label {
                if *l == b {
                    *l = a;
                }
            }
        }
        fn size_of(&self, i: usize) -> usize {
            self.label.iter().filter(|&&l| l == self.label[i]).count()
        }
        fn sizes(&self) -> Vec<usize> {
            let mut distinct: Vec<usize> = self.label.clone();
            distinct.sort_unstable();
            distinct.dedup();
            distinct
                .iter()
                .map(|d| self.label.iter().filter(|&&l| l == *d).count())
                .collect()
        }
    }

    #[test]
    fn fresh_structure() {
        let mut ds = SizedDisjointSets::new(5);
        assert_eq!(ds.find(3), 3);
        assert_eq!(ds.min_size(), 1);
        assert_eq!(ds.set_count(), 5);
    }

    #[test]
    fn linking_to_one_set() {
        let mut ds = SizedDisjointSets::new(5);
        ds.link(0, 1).unwrap();
        assert_eq!(ds.set_count(), 4);
        assert_eq!(ds.min_size(), 1);
        assert!(ds.same_set(0, 1));
        ds.link(2, 3).unwrap();
        ds.link(1, 3).unwrap();
        ds.link(4, 0).unwrap();
        assert_eq!(ds.set_count(), 1);
        assert_eq!(ds.min_size(), 5);
        assert_eq!(ds.size_of(2), 5);
    }

    #[test]
    fn worked_example_partition() {
        // Objects 0..5 at 0, 1, 3, 6, 10: the first two merges join 0-1 then 1-2.
        let mut ds = SizedDisjointSets::new(5);
        ds.link(0, 1).unwrap();
        ds.link(1, 2).unwrap();
        assert_eq!(ds.find(0), ds.find(2));
        assert_ne!(ds.find(3), ds.find(0));
    }

    #[test]
    fn linking_one_set_twice_fails() {
        let mut ds = SizedDisjointSets::new(3);
        ds.link(0, 1).unwrap();
        assert!(matches!(ds.link(1, 0), Err(Error::Internal(_))));
        assert_eq!(ds.set_count(), 2);
    }

    #[test]
    fn random_sequences_match_label_array() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let n = rng.random_range(1..80);
            let mut ds = SizedDisjointSets::new(n);
            let mut naive = Naive { label: (0..n).collect() };
            while ds.set_count() > 1 {
                let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
                if naive.label[i] == naive.label[j] {
                    assert!(ds.same_set(i, j));
                    continue;
                }
                ds.link(i, j).unwrap();
                naive.link(i, j);
                let sizes = naive.sizes();
                assert_eq!(ds.set_count(), sizes.len());
                assert_eq!(ds.min_size(), *sizes.iter().min().unwrap());
                for k in 0..n {
                    assert_eq!(ds.size_of(k), naive.size_of(k));
                    assert_eq!(ds.find_immutable(k), ds.find(k));
                }
                let roots: usize = (0..n)
                    .filter(|&k| ds.find_immutable(k) == k)
                    .map(|k| naive.size_of(k))
                    .sum();
                assert_eq!(roots, n);
            }
        }
    }
}
