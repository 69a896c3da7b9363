use std::path::PathBuf;

use genie_core::datagen::gaussian_blobs;
use genie_core::io::{load_labels, load_points};
use genie_core::{
    cluster, cut, fm_index, gini, mst_kruskal_nn, mst_prim, Algorithm, Dataset, Metric, MstBackend,
    RunOptions, Space, VpTree,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn iris() -> (Dataset, genie_core::ClusterLabels) {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    (
        load_points(&dir.join("iris.data.gz")).unwrap(),
        load_labels(&dir.join("iris.labels.gz")).unwrap(),
    )
}

#[test]
fn bundled_iris_is_balanced() {
    let (data, labels) = iris();
    assert_eq!((data.len(), data.dim()), (150, Some(4)));
    assert_eq!(labels.sizes(), vec![50, 50, 50]);
    assert_eq!(gini(&labels.sizes()), 0.0);
}

#[test]
fn string_metrics_agree_across_backends() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let base: Vec<u8> = (0..40).map(|_| b"actg"[rng.random_range(0..4)]).collect();
    let strings: Vec<Vec<u8>> = (0..300)
        .map(|_| {
            let mut s = base.clone();
            for _ in 0..rng.random_range(0..10) {
                let p = rng.random_range(0..s.len());
                match rng.random_range(0..3) {
                    0 => s[p] = b"actg"[rng.random_range(0..4)],
                    1 => s.insert(p, b"actg"[rng.random_range(0..4)]),
                    _ => {
                        s.remove(p);
                    }
                }
            }
            s
        })
        .collect();
    let data = Dataset::from_strings(strings).unwrap();
    let space = Space::new(&data, Metric::Levenshtein).unwrap();
    let prim = mst_prim(&space, 1);
    let tree = VpTree::build(&space);
    let kr = mst_kruskal_nn(&space, &tree, 2).unwrap();
    assert_eq!(prim.total_weight(), kr.total_weight());

    let bits: Vec<Vec<u8>> = (0..200)
        .map(|_| (0..32).map(|_| b"01"[rng.random_range(0..2)]).collect())
        .collect();
    let data = Dataset::from_strings(bits).unwrap();
    let space = Space::new(&data, Metric::Hamming).unwrap();
    let tree = VpTree::build(&space);
    assert_eq!(
        mst_prim(&space, 1).total_weight(),
        mst_kruskal_nn(&space, &tree, 1).unwrap().total_weight()
    );
}

#[test]
fn blobs_are_recovered() {
    let (data, which) = gaussian_blobs(1000, 2, 5, 0.05, 13).unwrap();
    let reference = genie_core::ClusterLabels::from_raw(&which);
    let space = Space::new(&data, Metric::Euclidean).unwrap();
    for backend in [MstBackend::Prim, MstBackend::VpTree] {
        let opts = RunOptions {
            backend,
            ..RunOptions::default()
        };
        let h = cluster(&space, Algorithm::Genie { g: 0.3 }, &opts).unwrap();
        let labels = cut(&h, reference.k()).unwrap();
        assert!(fm_index(&labels, &reference).unwrap() > 0.99, "{backend}");
    }
}

#[test]
fn vptree_needs_a_metric_space() {
    let data = Dataset::from_rows(vec![0.0, 1.0, 2.0], 1).unwrap();
    for metric in [Metric::Euclidean, Metric::Manhattan, Metric::Maximum, Metric::Hamming] {
        let space = Space::new(&data, metric).unwrap();
        let opts = RunOptions {
            backend: MstBackend::VpTree,
            ..RunOptions::default()
        };
        assert!(cluster(&space, Algorithm::Single, &opts).is_ok());
    }
}

#[test]
fn duplicates_and_ties_stay_consistent() {
    // Many exact duplicates. Edge choices may differ between backends, the
    // total merge height (the MST weight) may not.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values: Vec<f64> = (0..600).map(|_| rng.random_range(0..3) as f64).collect();
    let data = Dataset::from_rows(values, 2).unwrap();
    let space = Space::new(&data, Metric::Manhattan).unwrap();
    let mut seen = Vec::new();
    for backend in [MstBackend::Prim, MstBackend::VpTree] {
        for threads in [1, 3] {
            let opts = RunOptions {
                backend,
                threads,
                ..RunOptions::default()
            };
            let h = cluster(&space, Algorithm::Genie { g: 0.5 }, &opts).unwrap();
            seen.push(h.heights().iter().sum::<f64>());
        }
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]), "{seen:?}");
}
