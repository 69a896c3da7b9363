//! Synthetic Gaussian blobs for dissimilarity-call experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::metrics::Dataset;

/// `n` points in `dim` dimensions around `centers` centres drawn uniformly from
/// `[0, 10]^dim`. Each point picks a centre uniformly and adds iid
/// `N(0, sigma^2)` noise per coordinate. Returns the data and the 0-based
/// centre of every point.
pub fn gaussian_blobs(
    n: usize,
    dim: usize,
    centers: usize,
    sigma: f64,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    if n == 0 || dim == 0 || centers == 0 {
        return Err(Error::Config("n, dim and the centre count must be positive".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("bad standard deviation {sigma}")));
    }
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::Config(format!("bad standard deviation {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mids: Vec<f64> = (0..centers * dim).map(|_| rng.random_range(0.0..=10.0)).collect();
    let mut values = Vec::with_capacity(n * dim);
    let mut which = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..centers);
        which.push(c);
        values.extend(mids[c * dim..(c + 1) * dim].iter().map(|m| m + noise.sample(&mut rng)));
    }
    Ok((Dataset::from_rows(values, dim)?, which))
}
