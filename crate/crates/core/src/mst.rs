//! Exact minimum spanning trees of the complete dissimilarity graph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::format_sig;
use crate::metrics::Space;
use crate::unionfind::SizedDisjointSets;
use crate::vptree::{with_threads, Key, NeighborStreams, VpTree};

/// Undirected weighted edge with `index1 < index2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub index1: usize,
    pub index2: usize,
    pub dist: f64,
}

impl MstEdge {
    pub fn new(a: usize, b: usize, dist: f64) -> Self {
        let (index1, index2) = if a < b { (a, b) } else { (b, a) };
        MstEdge {
            index1,
            index2,
            dist,
        }
    }

    /// Total order `(dist, index1, index2)` used for every tie-break.
    pub fn order_key(&self) -> (OrdF64, usize, usize) {
        (OrdF64(self.dist), self.index1, self.index2)
    }
}

/// `f64` under `total_cmp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrdF64(pub f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mst {
    n: usize,
    edges: Vec<MstEdge>,
}

impl Mst {
    pub fn new(n: usize, edges: Vec<MstEdge>) -> Result<Self> {
        let mst = Mst { n, edges };
        mst.validate()?;
        Ok(mst)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[MstEdge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.dist).sum()
    }

    /// Edges sorted by `(dist, index1, index2)`.
    pub fn sorted_edges(&self) -> Vec<MstEdge> {
        let mut e = self.edges.clone();
        e.sort_by_key(MstEdge::order_key);
        e
    }

    /// Exactly `n - 1` edges with `index1 < index2 < n`, connected and acyclic.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.edges.len() + 1 != n.max(1) {
            return Err(Error::Internal(format!(
                "{} edges cannot span {n} objects",
                self.edges.len()
            )));
        }
        let mut ds = SizedDisjointSets::new(n);
        for e in &self.edges {
            if e.index1 >= e.index2 || e.index2 >= n {
                return Err(Error::Internal(format!("malformed edge {e:?}")));
            }
            ds.link(e.index1, e.index2)
                .map_err(|_| Error::Internal(format!("edge {e:?} closes a cycle")))?;
        }
        Ok(())
    }

    /// One `index1 index2 dist` line per edge, 1-based, 12 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.index1 + 1, e.index2 + 1, format_sig(e.dist, 12));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    index: usize,
    /// Distance to the nearest object already in the tree.
    dist: f64,
    /// That nearest object.
    from: usize,
}

/// Below this many remaining objects the inner loop is not worth splitting.
const PAR_MIN_REMAINING: usize = 4096;

/// Prim-style MST performing exactly `(n^2 - n) / 2` dissimilarity calls.
///
/// Each round relaxes every object outside the tree against the object added
/// last, then moves the closest one into the tree. With `threads > 1` the
/// relaxation is split into chunks whose local minima are reduced under the
/// `(dist, index)` order, so the output does not depend on the thread count.
pub fn mst_prim(space: &Space, threads: usize) -> Mst {
    let n = space.len();
    let mut remaining: Vec<Slot> = (1..n)
        .map(|index| Slot {
            index,
            dist: f64::INFINITY,
            from: usize::MAX,
        })
        .collect();
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut last = 0;

    let relax_chunk = |chunk: &mut [Slot], offset: usize, last: usize| -> Option<(OrdF64, usize, usize)> {
        let mut best: Option<(OrdF64, usize, usize)> = None;
        for (p, slot) in chunk.iter_mut().enumerate() {
            let d = space.dist_uncounted(last, slot.index);
            if d < slot.dist {
                slot.dist = d;
                slot.from = last;
            }
            let key = (OrdF64(slot.dist), slot.index, offset + p);
            if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                best = Some(key);
            }
        }
        best
    };

    let threads = threads.max(1);
    let mut run = || {
        while !remaining.is_empty() {
            let m = remaining.len();
            let best = if threads == 1 || m < PAR_MIN_REMAINING {
                relax_chunk(&mut remaining, 0, last)
            } else {
                let chunk = m.div_ceil(threads * 4);
                remaining
                    .par_chunks_mut(chunk)
                    .enumerate()
                    .map(|(c, slots)| relax_chunk(slots, c * chunk, last))
                    .reduce(|| None, |a, b| match (a, b) {
                        (Some(x), Some(y)) => Some(if (y.0, y.1) < (x.0, x.1) { y } else { x }),
                        (x, None) => x,
                        (None, y) => y,
                    })
            };
            space.record_calls(m as u64);
            let (_, index, pos) = best.expect("remaining is non-empty");
            let slot = remaining.swap_remove(pos);
            debug_assert!(slot.from != usize::MAX, "object {index} was never relaxed");
            edges.push(MstEdge::new(slot.from, slot.index, slot.dist));
            last = slot.index;
        }
    };
    if threads == 1 {
        run();
    } else {
        with_threads(threads, run);
    }
    Mst { n, edges }
}

/// Kruskal-style MST driven by per-object nearest-neighbour streams.
///
/// The queue holds the current head `(i, j)` of each object's stream. Popping
/// the global minimum and refilling from the popped object's stream visits
/// all pairs in ascending order, as Kruskal requires, while the VP-tree keeps
/// most far-away pairs from ever being evaluated. The prefetch of the first
/// head per object runs on `threads` workers; the merge phase is sequential.
pub fn mst_kruskal_nn(space: &Space, tree: &VpTree, threads: usize) -> Result<Mst> {
    let n = space.len();
    if n <= 1 {
        return Ok(Mst { n, edges: Vec::new() });
    }
    let mut streams = NeighborStreams::new(tree);
    streams.prefetch(space, threads);

    let mut pq: BinaryHeap<Reverse<(OrdF64, usize, usize)>> = BinaryHeap::with_capacity(n);
    for i in 0..n - 1 {
        if let Some(Key { dist, index }) = streams.next(space, i, None) {
            debug_assert!(i < index);
            pq.push(Reverse((OrdF64(dist), i, index)));
        }
    }

    let mut ds = SizedDisjointSets::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    while edges.len() < n - 1 {
        let Some(Reverse((OrdF64(dist), i, j))) = pq.pop() else {
            return Err(Error::Internal(format!(
                "neighbour streams exhausted with {} of {} edges found; \
                 is the dissimilarity a pseudometric?",
                edges.len(),
                n - 1
            )));
        };
        if ds.find(i) != ds.find(j) {
            edges.push(MstEdge::new(i, j, dist));
            ds.link(i, j)?;
            streams.mark_linked(&mut ds, i, j);
            if edges.len() == n - 1 {
                break;
            }
        }
        if let Some(Key { dist, index }) = streams.next(space, i, Some(&mut ds)) {
            debug_assert!(i < index);
            pq.push(Reverse((OrdF64(dist), i, index)));
        }
    }
    Ok(Mst { n, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Dataset, Metric};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Kruskal over the explicit distance matrix.
    fn full_matrix_kruskal(space: &Space) -> f64 {
        let n = space.len();
        let mut all = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                all.push(MstEdge::new(i, j, space.dist_uncounted(i, j)));
            }
        }
        all.sort_by_key(MstEdge::order_key);
        let mut ds = SizedDisjointSets::new(n);
        let mut total = 0.0;
        for e in all {
            if ds.link(e.index1, e.index2).is_ok() {
                total += e.dist;
            }
        }
        total
    }

    fn line() -> Dataset {
        Dataset::from_rows(vec![0.0, 1.0, 3.0, 6.0, 10.0], 1).unwrap()
    }

    fn random_points(seed: u64, n: usize, dim: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n * dim).map(|_| rng.random_range(0.0..1.0)).collect();
        Dataset::from_rows(values, dim).unwrap()
    }

    fn as_pairs(mst: &Mst) -> Vec<(usize, usize, f64)> {
        mst.sorted_edges()
            .iter()
            .map(|e| (e.index1, e.index2, e.dist))
            .collect()
    }

    #[test]
    fn worked_example() {
        let data = line();
        let space = Space::new(&data, Metric::Euclidean).unwrap();
        let prim = mst_prim(&space, 1);
        let expected = vec![(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0), (3, 4, 4.0)];
        assert_eq!(as_pairs(&prim), expected);
        assert_eq!(space.calls(), 10);
        assert_eq!(prim.to_text(), "1 2 1\n2 3 2\n3 4 3\n4 5 4\n");

        let tree = VpTree::build(&space);
        let kruskal = mst_kruskal_nn(&space, &tree, 1).unwrap();
        assert_eq!(as_pairs(&kruskal), expected);
    }

    #[test]
    fn trivial_sizes() {
        let one = Dataset::from_rows(vec![3.0], 1).unwrap();
        let space = Space::new(&one, Metric::Euclidean).unwrap();
        assert!(mst_prim(&space, 1).edges().is_empty());
        assert_eq!(space.calls(), 0);
        let tree = VpTree::build(&space);
        assert!(mst_kruskal_nn(&space, &tree, 1).unwrap().edges().is_empty());

        let two = Dataset::from_rows(vec![3.0, 5.0], 1).unwrap();
        let space = Space::new(&two, Metric::Euclidean).unwrap();
        let tree = VpTree::build(&space);
        let m = mst_kruskal_nn(&space, &tree, 1).unwrap();
        assert_eq!(as_pairs(&m), vec![(0, 1, 2.0)]);
    }

    #[test]
    fn weights_match_full_matrix_kruskal() {
        for trial in 0..20 {
            let data = random_points(100 + trial, 50, 3);
            let space = Space::new(&data, Metric::Euclidean).unwrap();
            let oracle = full_matrix_kruskal(&space);
            let prim = mst_prim(&space, 1);
            prim.validate().unwrap();
            assert!((prim.total_weight() - oracle).abs() <= 1e-9 * oracle);
            let tree = VpTree::build(&space);
            let kr = mst_kruskal_nn(&space, &tree, 2).unwrap();
            kr.validate().unwrap();
            assert!((kr.total_weight() - oracle).abs() <= 1e-9 * oracle);
        }
    }

    #[test]
    fn integer_metric_with_many_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let strings: Vec<Vec<u8>> = (0..120)
            .map(|_| (0..8).map(|_| b"acgt"[rng.random_range(0..4)]).collect())
            .collect();
        let data = Dataset::from_strings(strings).unwrap();
        let space = Space::new(&data, Metric::Levenshtein).unwrap();
        let oracle = full_matrix_kruskal(&space);
        assert_eq!(mst_prim(&space, 1).total_weight(), oracle);
        let tree = VpTree::build(&space);
        assert_eq!(mst_kruskal_nn(&space, &tree, 1).unwrap().total_weight(), oracle);
    }

    #[test]
    fn prim_call_count_and_thread_invariance() {
        let data = random_points(5, 5000, 2);
        let space = Space::new(&data, Metric::Euclidean).unwrap();
        let one = mst_prim(&space, 1);
        assert_eq!(space.calls(), 5000 * 4999 / 2);
        space.reset_calls();
        let four = mst_prim(&space, 4);
        assert_eq!(space.calls(), 5000 * 4999 / 2);
        assert_eq!(one, four);
    }

    #[test]
    fn validation_catches_cycles() {
        assert!(Mst::new(3, vec![MstEdge::new(0, 1, 1.0), MstEdge::new(1, 0, 1.0)]).is_err());
        assert!(Mst::new(3, vec![MstEdge::new(0, 1, 1.0)]).is_err());
        assert!(Mst::new(3, vec![MstEdge::new(0, 1, 1.0), MstEdge::new(2, 1, 1.0)]).is_ok());
    }
}
