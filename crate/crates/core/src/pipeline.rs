//! One-call clustering: pick an algorithm and an MST backend, get a history.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linkage::{classic_linkage, genie, single_linkage, ClassicScheme, MergeHistory, CLASSIC_MAX_N};
use crate::metrics::Space;
use crate::mst::{mst_kruskal_nn, mst_prim, Mst};
use crate::vptree::VpTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Genie { g: f64 },
    Single,
    Complete,
    Average,
    Ward,
}

impl Algorithm {
    /// Parses an algorithm name; `g` is required for `genie` only.
    pub fn from_name(name: &str, g: Option<f64>) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "genie" => {
                let g = g.ok_or_else(|| Error::Config("genie needs a threshold g".into()))?;
                if !(g > 0.0 && g <= 1.0) {
                    return Err(Error::Config(format!("threshold g must lie in (0, 1], got {g}")));
                }
                Algorithm::Genie { g }
            }
            "single" => Algorithm::Single,
            "complete" => Algorithm::Complete,
            "average" => Algorithm::Average,
            "ward" => Algorithm::Ward,
            other => return Err(Error::Config(format!("unknown algorithm '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Genie { .. } => "genie",
            Algorithm::Single => "single",
            Algorithm::Complete => "complete",
            Algorithm::Average => "average",
            Algorithm::Ward => "ward",
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Algorithm::Genie { g } => Some(*g),
            _ => None,
        }
    }

    /// Whether the algorithm runs on an MST (and so honours the backend).
    pub fn uses_mst(&self) -> bool {
        matches!(self, Algorithm::Genie { .. } | Algorithm::Single)
    }

    fn scheme(&self) -> Option<ClassicScheme> {
        match self {
            Algorithm::Complete => Some(ClassicScheme::Complete),
            Algorithm::Average => Some(ClassicScheme::Average),
            Algorithm::Ward => Some(ClassicScheme::Ward),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Genie { g } => write!(f, "genie(g={g})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MstBackend {
    #[default]
    Prim,
    VpTree,
}

impl MstBackend {
    pub fn name(self) -> &'static str {
        match self {
            MstBackend::Prim => "prim",
            MstBackend::VpTree => "vptree",
        }
    }
}

impl fmt::Display for MstBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MstBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prim" => Ok(MstBackend::Prim),
            "vptree" | "vp-tree" => Ok(MstBackend::VpTree),
            other => Err(Error::Config(format!("unknown MST backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: usize,
    pub backend: MstBackend,
    /// Size limit for the matrix-based linkages.
    pub classic_max_n: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            threads: 1,
            backend: MstBackend::Prim,
            classic_max_n: CLASSIC_MAX_N,
        }
    }
}

/// Exact MST with the requested backend.
pub fn build_mst(space: &Space, opts: &RunOptions) -> Result<Mst> {
    if opts.threads == 0 {
        return Err(Error::Config("at least one thread is required".into()));
    }
    match opts.backend {
        MstBackend::Prim => Ok(mst_prim(space, opts.threads)),
        MstBackend::VpTree => {
            if !space.metric().satisfies_triangle_inequality() {
                return Err(Error::Config(format!(
                    "the vptree backend needs a metric obeying the triangle inequality, not {}",
                    space.metric()
                )));
            }
            let tree = VpTree::build(space);
            mst_kruskal_nn(space, &tree, opts.threads)
        }
    }
}

/// Full merge history of `space` under `algo`.
pub fn cluster(space: &Space, algo: Algorithm, opts: &RunOptions) -> Result<MergeHistory> {
    match algo {
        Algorithm::Genie { g } => {
            let mst = build_mst(space, opts)?;
            genie(&mst, g)
        }
        Algorithm::Single => single_linkage(&build_mst(space, opts)?),
        _ => classic_linkage(space, algo.scheme().expect("classic scheme"), opts.classic_max_n),
    }
}
