//! Genie hierarchical clustering.
//!
//! Genie is single linkage with a guard on cluster-size inequality: while the
//! Gini index of the current cluster sizes stays at or below a threshold `g`
//! the cheapest remaining minimum-spanning-tree edge is merged, otherwise only
//! edges touching one of the smallest clusters are eligible. Because every
//! merge uses an MST edge, the whole procedure runs on top of an exact MST and
//! needs O(n) working memory.
//!
//! The crate is organised bottom-up:
//!
//! * [`metrics`]: datasets and instrumented dissimilarities,
//! * [`inequity`]: Gini and Bonferroni indices plus an incremental tracker,
//! * [`unionfind`]: disjoint sets with size bookkeeping,
//! * [`vptree`]: a vantage-point tree serving "next nearest neighbour" streams,
//! * [`mst`]: Prim-style and nearest-neighbour Kruskal MST builders,
//! * [`linkage`]: Genie, single linkage, reference classic linkages, cutting,
//! * [`eval`]: FM index, size-inequality curves, the permutation protocol,
//! * [`io`]: benchmark file ingestion,
//! * [`datagen`]: the Gaussian-blob generator used for call-count experiments,
//! * [`pipeline`]: one-call clustering with a chosen algorithm and backend.

pub mod datagen;
pub mod error;
pub mod eval;
pub mod inequity;
pub mod io;
pub mod linkage;
pub mod metrics;
pub mod mst;
pub mod pipeline;
pub mod unionfind;
pub mod vptree;

pub use error::{Error, Result};
pub use eval::{fm_index, median_fm_protocol, size_gini_curve, ProtocolOutcome};
pub use inequity::{bonferroni, gini, GiniTracker};
pub use linkage::{
    classic_linkage, cut, genie, single_linkage, ClassicScheme, ClusterLabels, ConditionalPq,
    Merge, MergeHistory, Node,
};
pub use metrics::{CallCounter, Dataset, Metric, Space};
pub use mst::{mst_kruskal_nn, mst_prim, Mst, MstEdge};
pub use pipeline::{cluster, Algorithm, MstBackend, RunOptions};
pub use unionfind::SizedDisjointSets;
pub use vptree::{NeighborStreams, VpTree};
