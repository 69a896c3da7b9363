//! Vantage-point tree serving per-object "next nearest neighbour with a larger
//! index" streams.
//!
//! Three additions on top of a textbook VP-tree:
//!
//! * every node knows the largest object index in its subtree, so a query
//!   for object `i` skips subtrees holding only indices `<= i` and never
//!   evaluates a pair `(i, j)` with `j <= i`. The vantage of each internal
//!   node is its subtree's largest index, which makes this work at every level;
//! * every node carries a `same_set` flag, true once all of its objects are
//!   known to share a disjoint set. During the MST merge phase such a subtree
//!   is skipped when it sits in the querying object's own set;
//! * queries fetch a batch of 20 to 256 neighbours at once and cache them per
//!   object. The batch grows when the tree prunes well.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::metrics::Space;
use crate::unionfind::SizedDisjointSets;

pub const LEAF_CAPACITY: usize = 16;
pub const MIN_BATCH: usize = 20;
pub const MAX_BATCH: usize = 256;

const NONE: usize = usize::MAX;

/// `(dist, index)` ordered lexicographically; the stream order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Key {
    pub dist: f64,
    pub index: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy)]
struct Child {
    node: usize,
    /// Range of distances from the parent's vantage to objects in this child.
    lo: f64,
    hi: f64,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Inner {
        vantage: usize,
        inner: Option<Child>,
        outer: Option<Child>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    kind: NodeKind,
    max_index: usize,
    parent: usize,
}

#[derive(Debug, Clone)]
pub struct VpTree {
    nodes: Vec<Node>,
    /// Leaf buckets, each sorted by index.
    objects: Vec<usize>,
    /// Node holding each object (as vantage or in a leaf bucket).
    home: Vec<usize>,
}

impl VpTree {
    /// Builds the tree; distances evaluated here are counted by `space`.
    pub fn build(space: &Space) -> VpTree {
        let n = space.len();
        let mut tree = VpTree {
            nodes: Vec::new(),
            objects: Vec::with_capacity(n),
            home: vec![NONE; n],
        };
        let mut ids: Vec<usize> = (0..n).collect();
        let mut calls = 0u64;
        if n > 0 {
            tree.build_node(space, &mut ids, NONE, &mut calls);
        }
        space.record_calls(calls);
        tree
    }

    fn build_node(&mut self, space: &Space, ids: &mut [usize], parent: usize, calls: &mut u64) -> usize {
        let id = self.nodes.len();
        if ids.len() <= LEAF_CAPACITY {
            ids.sort_unstable();
            let start = self.objects.len();
            self.objects.extend_from_slice(ids);
            for &o in ids.iter() {
                self.home[o] = id;
            }
            self.nodes.push(Node {
                kind: NodeKind::Leaf {
                    start,
                    end: self.objects.len(),
                },
                max_index: *ids.last().expect("leaf is never empty"),
                parent,
            });
            return id;
        }

        let (pos, &vantage) = ids
            .iter()
            .enumerate()
            .max_by_key(|(_, &o)| o)
            .expect("non-empty");
        let last = ids.len() - 1;
        ids.swap(pos, last);
        let rest = &mut ids[..last];
        let mut keyed: Vec<Key> = rest
            .iter()
            .map(|&o| Key {
                dist: space.dist_uncounted(vantage, o),
                index: o,
            })
            .collect();
        *calls += keyed.len() as u64;
        keyed.sort_unstable();
        for (slot, k) in rest.iter_mut().zip(&keyed) {
            *slot = k.index;
        }
        let mid = keyed.len() / 2;

        self.home[vantage] = id;
        self.nodes.push(Node {
            kind: NodeKind::Inner {
                vantage,
                inner: None,
                outer: None,
            },
            max_index: vantage,
            parent,
        });

        let (inner_ids, outer_ids) = rest.split_at_mut(mid);
        let inner = (!inner_ids.is_empty()).then(|| Child {
            lo: keyed[0].dist,
            hi: keyed[mid - 1].dist,
            node: self.build_node(space, inner_ids, id, calls),
        });
        let outer = (!outer_ids.is_empty()).then(|| Child {
            lo: keyed[mid].dist,
            hi: keyed[keyed.len() - 1].dist,
            node: self.build_node(space, outer_ids, id, calls),
        });
        self.nodes[id].kind = NodeKind::Inner {
            vantage,
            inner,
            outer,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.home.len()
    }

    pub fn is_empty(&self) -> bool {
        self.home.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// All objects stored in the tree, in no particular order.
    pub fn objects(&self) -> Vec<usize> {
        let mut out = self.objects.clone();
        for node in &self.nodes {
            if let NodeKind::Inner { vantage, .. } = node.kind {
                out.push(vantage);
            }
        }
        out
    }

    /// Checks the structural invariants; used by tests.
    pub fn validate(&self, space: &Space) -> Result<(), String> {
        let mut seen = vec![false; self.len()];
        for o in self.objects() {
            if std::mem::replace(&mut seen[o], true) {
                return Err(format!("object {o} stored twice"));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(format!("object {missing} missing"));
        }
        for id in 0..self.nodes.len() {
            let members = self.subtree_objects(id);
            let max = members.iter().copied().max().unwrap_or(0);
            if max != self.nodes[id].max_index {
                return Err(format!("node {id}: max_index {} != {max}", self.nodes[id].max_index));
            }
            if let NodeKind::Inner { vantage, inner, outer } = self.nodes[id].kind {
                for child in [inner, outer].into_iter().flatten() {
                    for o in self.subtree_objects(child.node) {
                        let d = space.dist_uncounted(vantage, o);
                        if d < child.lo || d > child.hi {
                            return Err(format!("node {id}: object {o} outside child range"));
                        }
                    }
                }
                if let (Some(a), Some(b)) = (inner, outer) {
                    if a.hi > b.lo {
                        return Err(format!("node {id}: inner/outer ranges overlap"));
                    }
                }
            }
        }
        Ok(())
    }

    fn subtree_objects(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(nd) = stack.pop() {
            match self.nodes[nd].kind {
                NodeKind::Leaf { start, end } => out.extend_from_slice(&self.objects[start..end]),
                NodeKind::Inner { vantage, inner, outer } => {
                    out.push(vantage);
                    stack.extend([inner, outer].into_iter().flatten().map(|c| c.node));
                }
            }
        }
        out
    }

    fn representative(&self, id: usize) -> usize {
        match self.nodes[id].kind {
            NodeKind::Leaf { start, .. } => self.objects[start],
            NodeKind::Inner { vantage, .. } => vantage,
        }
    }

    /// The `k` nearest objects to `q` (excluding `q`), ascending by `(dist, index)`.
    pub fn knn(&self, space: &Space, q: usize, k: usize) -> Vec<Key> {
        let mut s = Search::new(space, q, None, None, Limit::Count(k));
        if !self.nodes.is_empty() && k > 0 {
            self.visit(0, &mut s, &mut None);
        }
        space.record_calls(s.calls);
        s.into_sorted()
    }

    /// All objects other than `q` within distance `radius` (inclusive).
    pub fn range(&self, space: &Space, q: usize, radius: f64) -> Vec<Key> {
        let mut s = Search::new(space, q, None, None, Limit::Radius(radius));
        if !self.nodes.is_empty() {
            self.visit(0, &mut s, &mut None);
        }
        space.record_calls(s.calls);
        s.into_sorted()
    }

    fn visit(&self, id: usize, s: &mut Search, merge: &mut Option<MergeCtx>) {
        let node = &self.nodes[id];
        if let Some(m) = s.min_index {
            if node.max_index <= m {
                return;
            }
        }
        if let Some(ctx) = merge.as_mut() {
            if ctx.flags[id] && ctx.ds.find(self.representative(id)) == ctx.root {
                return;
            }
        }
        match node.kind {
            NodeKind::Leaf { start, end } => {
                let bucket = &self.objects[start..end];
                let from = s.min_index.map_or(0, |m| bucket.partition_point(|&o| o <= m));
                for &o in &bucket[from..] {
                    if o == s.q {
                        continue;
                    }
                    if let Some(ctx) = merge.as_mut() {
                        if ctx.ds.find(o) == ctx.root {
                            continue;
                        }
                    }
                    let d = s.dist(o);
                    s.consider(Key { dist: d, index: o });
                }
            }
            NodeKind::Inner { vantage, inner, outer } => {
                let d_qv = if vantage == s.q { 0.0 } else { s.dist(vantage) };
                let eligible = vantage != s.q
                    && s.min_index.is_none_or(|m| vantage > m)
                    && merge.as_mut().is_none_or(|ctx| ctx.ds.find(vantage) != ctx.root);
                if eligible {
                    s.consider(Key { dist: d_qv, index: vantage });
                }
                // Nearer child first tightens the k-th distance sooner.
                let inner_first = match (inner, outer) {
                    (Some(a), Some(b)) => d_qv <= 0.5 * (a.hi + b.lo),
                    _ => true,
                };
                let order = if inner_first { [inner, outer] } else { [outer, inner] };
                for child in order.into_iter().flatten() {
                    s.considered += 1;
                    if s.can_prune(d_qv, child.lo, child.hi) {
                        s.pruned += 1;
                    } else {
                        self.visit(child.node, s, merge);
                    }
                }
            }
        }
        if let Some(ctx) = merge.as_mut() {
            if !ctx.flags[id] {
                ctx.flags[id] = self.node_uniform(id, ctx.flags, ctx.ds);
            }
        }
    }

    /// Whether all objects under `id` share a set, judged from the children's
    /// flags; sound but possibly pessimistic.
    fn node_uniform(&self, id: usize, flags: &[bool], ds: &mut SizedDisjointSets) -> bool {
        match self.nodes[id].kind {
            NodeKind::Leaf { start, end } => {
                let root = ds.find(self.objects[start]);
                self.objects[start + 1..end].iter().all(|&o| ds.find(o) == root)
            }
            NodeKind::Inner { vantage, inner, outer } => {
                let root = ds.find(vantage);
                [inner, outer].into_iter().flatten().all(|c| {
                    flags[c.node] && ds.find(self.representative(c.node)) == root
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Limit {
    Count(usize),
    Radius(f64),
}

struct MergeCtx<'a> {
    ds: &'a mut SizedDisjointSets,
    flags: &'a mut [bool],
    root: usize,
}

struct Search<'s, 'a> {
    space: &'s Space<'a>,
    q: usize,
    /// Only objects with a strictly larger index qualify.
    min_index: Option<usize>,
    /// Only keys strictly above this qualify.
    cursor: Option<Key>,
    limit: Limit,
    heap: BinaryHeap<Key>,
    calls: u64,
    considered: u32,
    pruned: u32,
}

impl<'s, 'a> Search<'s, 'a> {
    fn new(space: &'s Space<'a>, q: usize, min_index: Option<usize>, cursor: Option<Key>, limit: Limit) -> Self {
        Search {
            space,
            q,
            min_index,
            cursor,
            limit,
            heap: BinaryHeap::new(),
            calls: 0,
            considered: 0,
            pruned: 0,
        }
    }

    fn dist(&mut self, o: usize) -> f64 {
        debug_assert!(
            self.min_index.is_none_or(|m| o > m),
            "pair ({}, {o}) evaluated against the index order",
            self.q
        );
        self.calls += 1;
        self.space.dist_uncounted(self.q, o)
    }

    fn consider(&mut self, key: Key) {
        if self.cursor.is_some_and(|c| key <= c) {
            return;
        }
        match self.limit {
            Limit::Radius(r) => {
                if key.dist <= r {
                    self.heap.push(key);
                }
            }
            Limit::Count(k) => {
                if self.heap.len() < k {
                    self.heap.push(key);
                } else if key < *self.heap.peek().expect("k > 0") {
                    self.heap.pop();
                    self.heap.push(key);
                }
            }
        }
    }

    /// Triangle-inequality bounds on `d(q, x)` for `x` in a child whose
    /// distances to the vantage lie in `[lo, hi]`. The margin absorbs
    /// floating-point slop so that ties are never pruned away.
    fn can_prune(&self, d_qv: f64, lo: f64, hi: f64) -> bool {
        let lower = (d_qv - hi).max(lo - d_qv).max(0.0);
        let upper = d_qv + hi;
        let margin = |x: f64| 1e-9 * (1.0 + d_qv.abs() + hi.abs() + x.abs());
        let beyond = match self.limit {
            Limit::Radius(r) => lower - r > margin(r),
            Limit::Count(k) => {
                self.heap.len() >= k && {
                    let tau = self.heap.peek().expect("full heap").dist;
                    lower - tau > margin(tau)
                }
            }
        };
        let below_cursor = self.cursor.is_some_and(|c| c.dist - upper > margin(c.dist));
        beyond || below_cursor
    }

    fn into_sorted(self) -> Vec<Key> {
        self.heap.into_sorted_vec()
    }
}

/// Per-object neighbour caches and search cursors over a [`VpTree`].
///
/// Object `i`'s stream yields every `j > i` in ascending `(dist, j)` order,
/// then `None`. In merge mode (a disjoint-sets structure is supplied) objects
/// already in `i`'s set are skipped, since an MST can never use them.
#[derive(Debug)]
pub struct NeighborStreams<'t> {
    tree: &'t VpTree,
    /// Fetched, unconsumed neighbours; sorted descending so `pop` yields the nearest.
    cache: Vec<Vec<Key>>,
    /// Largest key handed to the cache so far.
    cursor: Vec<Option<Key>>,
    batch: Vec<u16>,
    /// No keys remain beyond the cursor.
    drained: Vec<bool>,
    same_set: Vec<bool>,
}

impl<'t> NeighborStreams<'t> {
    pub fn new(tree: &'t VpTree) -> Self {
        let n = tree.len();
        let mut same_set = vec![false; tree.nodes.len()];
        // A bucket of one object is trivially uniform.
        for (id, node) in tree.nodes.iter().enumerate() {
            if let NodeKind::Leaf { start, end } = node.kind {
                same_set[id] = end - start == 1;
            }
        }
        NeighborStreams {
            tree,
            cache: vec![Vec::new(); n],
            cursor: vec![None; n],
            batch: vec![MIN_BATCH as u16; n],
            drained: vec![false; n],
            same_set,
        }
    }

    pub fn tree(&self) -> &VpTree {
        self.tree
    }

    /// Fills the first batch of every stream, `threads` queries at a time.
    /// Read-only on the tree, so the result does not depend on `threads`.
    pub fn prefetch(&mut self, space: &Space, threads: usize) {
        let n = self.tree.len();
        if n < 2 {
            return;
        }
        let tree = self.tree;
        let batch = MIN_BATCH;
        let run = || {
            (0..n - 1)
                .into_par_iter()
                .map(|i| {
                    let mut s = Search::new(space, i, Some(i), None, Limit::Count(batch));
                    tree.visit(0, &mut s, &mut None);
                    (s.calls, s.considered, s.pruned, s.into_sorted())
                })
                .collect::<Vec<_>>()
        };
        let results = with_threads(threads, run);
        let mut calls = 0;
        for (i, (c, considered, pruned, found)) in results.into_iter().enumerate() {
            calls += c;
            self.store(i, found, batch, considered, pruned);
        }
        space.record_calls(calls);
    }

    fn store(&mut self, i: usize, mut found: Vec<Key>, asked: usize, considered: u32, pruned: u32) {
        if found.len() < asked {
            self.drained[i] = true;
        }
        if let Some(&last) = found.last() {
            self.cursor[i] = Some(last);
        }
        if considered > 0 && 2 * pruned >= considered {
            self.batch[i] = (self.batch[i] as usize * 2).min(MAX_BATCH) as u16;
        }
        found.reverse();
        self.cache[i] = found;
    }

    fn refill(&mut self, space: &Space, i: usize, ds: Option<&mut SizedDisjointSets>) {
        let k = self.batch[i] as usize;
        let mut s = Search::new(space, i, Some(i), self.cursor[i], Limit::Count(k));
        match ds {
            Some(ds) => {
                let root = ds.find(i);
                let mut ctx = Some(MergeCtx {
                    ds,
                    flags: &mut self.same_set,
                    root,
                });
                self.tree.visit(0, &mut s, &mut ctx);
            }
            None => self.tree.visit(0, &mut s, &mut None),
        }
        space.record_calls(s.calls);
        let (considered, pruned) = (s.considered, s.pruned);
        let found = s.into_sorted();
        self.store(i, found, k, considered, pruned);
    }

    /// Next neighbour `j > i` of `i`, or `None` once the stream is exhausted.
    pub fn next(&mut self, space: &Space, i: usize, mut ds: Option<&mut SizedDisjointSets>) -> Option<Key> {
        loop {
            while let Some(key) = self.cache[i].pop() {
                if let Some(ds) = ds.as_deref_mut() {
                    if ds.find(key.index) == ds.find(i) {
                        continue;
                    }
                }
                return Some(key);
            }
            if self.drained[i] {
                return None;
            }
            self.refill(space, i, ds.as_deref_mut());
        }
    }

    /// Refreshes `same_set` flags on the paths from `i` and `j` to the root
    /// after the two were linked. Other flags catch up during later queries.
    pub fn mark_linked(&mut self, ds: &mut SizedDisjointSets, i: usize, j: usize) {
        for start in [i, j] {
            let mut id = self.tree.home[start];
            while id != NONE {
                if !self.same_set[id] {
                    if !self.tree.node_uniform(id, &self.same_set, ds) {
                        break;
                    }
                    self.same_set[id] = true;
                }
                id = self.tree.nodes[id].parent;
            }
        }
    }

    /// Recomputes every flag bottom-up.
    pub fn refresh_all(&mut self, ds: &mut SizedDisjointSets) {
        // Children are created after their parent, so reverse order is bottom-up.
        for id in (0..self.tree.nodes.len()).rev() {
            self.same_set[id] = self.same_set[id] || self.tree.node_uniform(id, &self.same_set, ds);
        }
    }

    pub fn root_same_set(&self) -> bool {
        self.same_set.first().copied().unwrap_or(true)
    }

    /// Flags that claim uniformity where there is none; must always be empty.
    pub fn unsound_flags(&self, ds: &mut SizedDisjointSets) -> Vec<usize> {
        (0..self.tree.nodes.len())
            .filter(|&id| self.same_set[id])
            .filter(|&id| {
                let members = self.tree.subtree_objects(id);
                let root = ds.find(members[0]);
                members.iter().any(|&o| ds.find(o) != root)
            })
            .collect()
    }

    pub fn cached(&self, i: usize) -> usize {
        self.cache[i].len()
    }

    pub fn total_cached(&self) -> usize {
        self.cache.iter().map(Vec::len).sum()
    }
}

/// Runs `f` on a rayon pool with exactly `threads` workers.
pub(crate) fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
