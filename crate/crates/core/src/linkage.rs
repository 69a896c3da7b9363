//! Agglomerative linkages and merge histories.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::inequity::GiniTracker;
use crate::io::format_sig;
use crate::metrics::Space;
use crate::mst::{Mst, MstEdge, OrdF64};
use crate::unionfind::SizedDisjointSets;

/// A leaf (0-based object) or the cluster created at a merge step (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Object(usize),
    Cluster(usize),
}

impl Node {
    /// `i` for objects and `n + t` for the cluster created at step `t`.
    pub fn id(self, n: usize) -> usize {
        match self {
            Node::Object(i) => i,
            Node::Cluster(t) => n + t,
        }
    }

    pub fn from_id(id: usize, n: usize) -> Node {
        if id < n {
            Node::Object(id)
        } else {
            Node::Cluster(id - n)
        }
    }

    fn rank(self) -> (u8, usize) {
        match self {
            Node::Object(i) => (0, i),
            Node::Cluster(t) => (1, t),
        }
    }
}

impl fmt::Display for Node {
    /// Merge-matrix convention: objects `-1..-n`, clusters `1..n-1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Node::Object(i) => write!(f, "-{}", i + 1),
            Node::Cluster(t) => write!(f, "{}", t + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: Node,
    pub right: Node,
    pub height: f64,
}

impl Merge {
    /// Objects before clusters, then by index.
    pub fn new(a: Node, b: Node, height: f64) -> Self {
        let (left, right) = if a.rank() <= b.rank() { (a, b) } else { (b, a) };
        Merge {
            left,
            right,
            height,
        }
    }
}

/// The `n - 1` merges of a full dendrogram over `n` objects.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeHistory {
    n: usize,
    merges: Vec<Merge>,
}

impl MergeHistory {
    pub fn new(n: usize, merges: Vec<Merge>) -> Result<Self> {
        let h = MergeHistory { n, merges };
        h.validate()?;
        Ok(h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Every node is used exactly once and only after it exists.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.merges.len() + 1 != n.max(1) {
            return Err(Error::Internal(format!(
                "{} merges cannot join {n} objects",
                self.merges.len()
            )));
        }
        let mut used = vec![false; 2 * n];
        for (t, m) in self.merges.iter().enumerate() {
            for node in [m.left, m.right] {
                let ok = match node {
                    Node::Object(i) => i < n,
                    Node::Cluster(s) => s < t,
                };
                let id = node.id(n);
                if !ok || used[id] {
                    return Err(Error::Internal(format!("step {t} reuses or invents {node}")));
                }
                used[id] = true;
            }
        }
        Ok(())
    }

    /// One `left right height` line per merge.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.merges {
            let _ = writeln!(out, "{} {} {}", m.left, m.right, format_sig(m.height, 12));
        }
        out
    }

    /// Inverse of [`MergeHistory::to_text`] for a history over `n` objects.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let node = |tok: &str, line: usize| -> Result<Node> {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::Config(format!("line {line}: bad node '{tok}'")))?;
            match v {
                v if v < 0 && (-v) as usize <= n => Ok(Node::Object((-v) as usize - 1)),
                v if v > 0 => Ok(Node::Cluster(v as usize - 1)),
                _ => Err(Error::Config(format!("line {line}: node {v} out of range"))),
            }
        };
        let mut merges = Vec::new();
        for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::Config(format!("line {}: expected 3 fields", k + 1)));
            }
            let height: f64 = toks[2]
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad height", k + 1)))?;
            merges.push(Merge {
                left: node(toks[0], k + 1)?,
                right: node(toks[1], k + 1)?,
                height,
            });
        }
        MergeHistory::new(n, merges)
    }

    /// Cluster sizes after each prefix of merges, as multiplicities.
    pub(crate) fn replay(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        let mut size = vec![1usize; 2 * n];
        self.merges.iter().enumerate().map(move |(t, m)| {
            let (a, b) = (size[m.left.id(n)], size[m.right.id(n)]);
            size[n + t] = a + b;
            (a, b)
        })
    }
}

/// A flat partition with labels `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterLabels {
    /// Relabels arbitrary ids to `1..=k` in order of first appearance.
    pub fn from_raw(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|r| {
                let next = map.len() + 1;
                *map.entry(*r).or_insert(next)
            })
            .collect();
        ClusterLabels {
            labels,
            k: map.len(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l - 1] += 1;
        }
        s
    }
}

/// Flat `k`-partition from the first `n - k` merges. Labels follow the
/// smallest member of each cluster.
pub fn cut(history: &MergeHistory, k: usize) -> Result<ClusterLabels> {
    let n = history.n();
    if k == 0 || k > n {
        return Err(Error::Config(format!("cannot cut {n} objects into {k} clusters")));
    }
    let mut ds = SizedDisjointSets::new(n);
    // Any member of each node.
    let mut repr: Vec<usize> = (0..n).collect();
    repr.resize(2 * n, 0);
    for (t, m) in history.merges().iter().take(n - k).enumerate() {
        let (a, b) = (repr[m.left.id(n)], repr[m.right.id(n)]);
        ds.link(a, b)?;
        repr[n + t] = a;
    }
    let raw: Vec<usize> = (0..n).map(|i| ds.find(i)).collect();
    Ok(ClusterLabels::from_raw(&raw))
}

/// Min-queue of MST edges with a side buffer for conditional pops.
///
/// `pop_conditional` parks the edges it rejects. They stay parked only while
/// the caller promises they still fail (same smallest size, still in the
/// restricted regime); otherwise [`ConditionalPq::release`] returns them.
#[derive(Debug, Default)]
pub struct ConditionalPq {
    heap: BinaryHeap<Reverse<(OrdF64, usize, usize)>>,
    parked: Vec<Reverse<(OrdF64, usize, usize)>>,
}

impl ConditionalPq {
    pub fn new(edges: &[MstEdge]) -> Self {
        ConditionalPq {
            heap: edges.iter().map(|e| Reverse(e.order_key())).collect(),
            parked: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len() + self.parked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn release(&mut self) {
        self.heap.extend(self.parked.drain(..));
    }

    pub fn pop(&mut self) -> Option<MstEdge> {
        self.release();
        self.heap.pop().map(|Reverse((d, i, j))| MstEdge {
            index1: i,
            index2: j,
            dist: d.0,
        })
    }

    /// Cheapest edge satisfying `accept`, parking everything cheaper.
    pub fn pop_conditional(
        &mut self,
        mut accept: impl FnMut(&MstEdge) -> bool,
    ) -> Option<MstEdge> {
        while let Some(Reverse((d, i, j))) = self.heap.pop() {
            let e = MstEdge {
                index1: i,
                index2: j,
                dist: d.0,
            };
            if accept(&e) {
                return Some(e);
            }
            self.parked.push(Reverse((d, i, j)));
        }
        None
    }
}

/// Genie linkage over a precomputed MST.
///
/// While the Gini index of the cluster sizes is at most `g` the cheapest
/// remaining edge is merged; above it, the cheapest edge with at least one
/// endpoint in a cluster of the current minimum size.
pub fn genie(mst: &Mst, g: f64) -> Result<MergeHistory> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::Config(format!("threshold g must lie in (0, 1], got {g}")));
    }
    mst.validate()?;
    let n = mst.n();
    let mut pq = ConditionalPq::new(mst.edges());
    let mut ds = SizedDisjointSets::new(n);
    let mut tracker = GiniTracker::new(n);
    let mut node: Vec<Node> = (0..n).map(Node::Object).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    // Smallest size at which the parked edges were rejected.
    let mut parked_at = 0;

    for step in 0..n.saturating_sub(1) {
        let restricted = tracker.value() > g;
        let edge = if restricted {
            let m = ds.min_size();
            if m != parked_at {
                pq.release();
                parked_at = m;
            }
            pq.pop_conditional(|e| ds.size_of(e.index1) == m || ds.size_of(e.index2) == m)
        } else {
            parked_at = 0;
            pq.pop()
        };
        let e = edge.ok_or_else(|| {
            Error::Internal(format!("no admissible edge at step {step} ({} queued)", pq.len()))
        })?;
        let (ri, rj) = (ds.find(e.index1), ds.find(e.index2));
        let (si, sj) = (ds.size_of(ri), ds.size_of(rj));
        merges.push(Merge::new(node[ri], node[rj], e.dist));
        let root = ds.link(ri, rj)?;
        tracker.merge(si, sj)?;
        node[root] = Node::Cluster(step);
    }
    MergeHistory::new(n, merges)
}

/// Single linkage: MST edges merged in `(dist, index1, index2)` order.
pub fn single_linkage(mst: &Mst) -> Result<MergeHistory> {
    mst.validate()?;
    let n = mst.n();
    let mut ds = SizedDisjointSets::new(n);
    let mut node: Vec<Node> = (0..n).map(Node::Object).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for (step, e) in mst.sorted_edges().into_iter().enumerate() {
        let (ri, rj) = (ds.find(e.index1), ds.find(e.index2));
        merges.push(Merge::new(node[ri], node[rj], e.dist));
        let root = ds.link(ri, rj)?;
        node[root] = Node::Cluster(step);
    }
    MergeHistory::new(n, merges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassicScheme {
    Complete,
    Average,
    /// Heights are `2 |U| |V| / (|U| + |V|) * d(c_U, c_V)^2`.
    Ward,
}

impl ClassicScheme {
    pub fn name(self) -> &'static str {
        match self {
            ClassicScheme::Complete => "complete",
            ClassicScheme::Average => "average",
            ClassicScheme::Ward => "ward",
        }
    }
}

/// Largest input accepted by [`classic_linkage`] by default.
pub const CLASSIC_MAX_N: usize = 20_000;

/// Packed strict upper triangle.
struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    fn at(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.at(i, j)]
    }
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.at(i, j);
        self.d[k] = v;
    }
}

/// Complete, average or Ward linkage via Lance-Williams updates on the full
/// dissimilarity matrix. Refuses `n > max_n`.
pub fn classic_linkage(space: &Space, scheme: ClassicScheme, max_n: usize) -> Result<MergeHistory> {
    let n = space.len();
    if n > max_n {
        return Err(Error::Resource(format!(
            "{} linkage needs an n x n matrix; n = {n} exceeds the limit of {max_n}",
            scheme.name()
        )));
    }
    let mut m = Condensed {
        n,
        d: Vec::with_capacity(n * n.saturating_sub(1) / 2),
    };
    for i in 0..n {
        for j in i + 1..n {
            let d = space.dist(i, j);
            m.d.push(if scheme == ClassicScheme::Ward { d * d } else { d });
        }
    }

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node: Vec<Node> = (0..n).map(Node::Object).collect();
    // Nearest active partner of each slot under (dist, index).
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![f64::INFINITY; n];
    let recompute = |i: usize, m: &Condensed, active: &[bool], nn: &mut [usize], nn_d: &mut [f64]| {
        let (mut best, mut bd) = (usize::MAX, f64::INFINITY);
        for j in (0..m.n).filter(|&j| j != i && active[j]) {
            let d = m.get(i, j);
            if best == usize::MAX || d < bd {
                best = j;
                bd = d;
            }
        }
        nn[i] = best;
        nn_d[i] = bd;
    };
    for i in 0..n {
        recompute(i, &m, &active, &mut nn, &mut nn_d);
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(OrdF64, usize, usize)> = None;
        for i in (0..n).filter(|&i| active[i]) {
            let key = (OrdF64(nn_d[i]), i.min(nn[i]), i.max(nn[i]));
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let (OrdF64(h), a, b) = best.ok_or_else(|| Error::Internal("no active pair".into()))?;
        merges.push(Merge::new(node[a], node[b], h));

        let (na, nb) = (size[a] as f64, size[b] as f64);
        let d_ab = m.get(a, b);
        active[b] = false;
        for k in (0..n).filter(|&k| active[k] && k != a) {
            let (d_ak, d_bk) = (m.get(a, k), m.get(b, k));
            let nk = size[k] as f64;
            let v = match scheme {
                ClassicScheme::Complete => d_ak.max(d_bk),
                ClassicScheme::Average => (na * d_ak + nb * d_bk) / (na + nb),
                ClassicScheme::Ward => {
                    ((na + nk) * d_ak + (nb + nk) * d_bk - nk * d_ab) / (na + nb + nk)
                }
            };
            m.set(a, k, v);
        }
        size[a] += size[b];
        node[a] = Node::Cluster(step);

        recompute(a, &m, &active, &mut nn, &mut nn_d);
        for k in (0..n).filter(|&k| active[k] && k != a) {
            if nn[k] == a || nn[k] == b {
                recompute(k, &m, &active, &mut nn, &mut nn_d);
            } else {
                let d = m.get(a, k);
                if d < nn_d[k] || (d == nn_d[k] && a < nn[k]) {
                    nn[k] = a;
                    nn_d[k] = d;
                }
            }
        }
    }
    MergeHistory::new(n, merges)
}
