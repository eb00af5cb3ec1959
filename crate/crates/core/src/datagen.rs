//! Seeded synthetic data: separable classification problems, clustered
//! points, exactly low-rank ratings, and block-diagonal tiling of a ratings matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::learn::{dot, FactorizationModel, LabeledTable, RatingsMatrix};
use crate::localmatrix::{LocalMatrix, Triplet};
use crate::mltable::MLNumericTable;

/// Smallest distance of a generated point from the labeling hyperplane.
pub const CLASSIFICATION_MARGIN: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct SyntheticClassification {
    pub data: LabeledTable,
    /// Unit normal of the hyperplane through the origin that labels the
    /// points.
    pub hyperplane: Vec<f64>,
}

/// `n` standard-normal points in `d` dimensions labeled by a random
/// hyperplane through the origin: label 1 on the side the normal points to.
/// Points closer than [`CLASSIFICATION_MARGIN`] to the hyperplane are
/// redrawn, so the data is linearly separable with that margin.
pub fn generate_classification_data(
    n: usize,
    d: usize,
    seed: u64,
    partitions: usize,
) -> Result<SyntheticClassification> {
    if n == 0 || d == 0 {
        return Err(Error::Config(format!(
            "need at least one point and one feature, got n={n}, d={d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> Vec<f64> { (0..d).map(|_| rng.sample(StandardNormal)).collect() };
    let mut hyperplane = normal();
    while hyperplane.iter().all(|&x| x == 0.0) {
        hyperplane = normal();
    }
    let norm = dot(&hyperplane, &hyperplane).sqrt();
    hyperplane.iter_mut().for_each(|x| *x /= norm);

    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while points.len() < n {
        let x = normal();
        let side = dot(&hyperplane, &x);
        if side.abs() >= CLASSIFICATION_MARGIN {
            labels.push(if side > 0.0 { 1.0 } else { 0.0 });
            points.push(x);
        }
    }
    let features = MLNumericTable::from_vectors(&points, partitions)?;
    Ok(SyntheticClassification {
        data: LabeledTable::new(features, labels)?,
        hyperplane,
    })
}

#[derive(Debug, Clone)]
pub struct ClusteredPoints {
    pub points: MLNumericTable,
    /// `k x d`, the center each point was drawn around.
    pub centers: Vec<Vec<f64>>,
    /// Index of the generating center of every point.
    pub labels: Vec<usize>,
}

/// `n` points around `k` centers drawn uniformly from `[-5, 5)^d`: point
/// `i` belongs to center `i % k` and is offset by standard-normal noise
/// scaled by `spread`.
pub fn generate_clustered_points(
    n: usize,
    k: usize,
    d: usize,
    spread: f64,
    seed: u64,
    partitions: usize,
) -> Result<ClusteredPoints> {
    if n == 0 || k == 0 || d == 0 {
        return Err(Error::Config(format!(
            "need at least one point, center and feature, got n={n}, k={k}, d={d}"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::Config(format!(
            "spread must be finite and non-negative, got {spread}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let points: Vec<Vec<f64>> = labels
        .iter()
        .map(|&c| {
            centers[c]
                .iter()
                .map(|&x| x + spread * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    Ok(ClusteredPoints {
        points: MLNumericTable::from_vectors(&points, partitions)?,
        centers,
        labels,
    })
}

#[derive(Debug, Clone)]
pub struct LowRankRatings {
    pub ratings: RatingsMatrix,
    /// The factors whose product generated every rating.
    pub truth: FactorizationModel,
}

/// Ratings `M = U V^T` with `U` and `V` drawn uniformly from `[0.5, 1.5)`,
/// each entry observed independently with probability `density`.
pub fn generate_low_rank_ratings(
    users: usize,
    items: usize,
    rank: usize,
    density: f64,
    seed: u64,
) -> Result<LowRankRatings> {
    if rank == 0 {
        return Err(Error::Config("rank must be at least 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Config(format!(
            "density must be in (0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factor = |rows: usize| {
        let data = (0..rows * rank)
            .map(|_| rng.random_range(0.5..1.5))
            .collect();
        LocalMatrix::from_vec(rows, rank, data).expect("shape matches")
    };
    let u = factor(users);
    let v = factor(items);
    let (ud, vd) = (u.as_dense_slice().unwrap(), v.as_dense_slice().unwrap());
    let mut entries = Vec::new();
    for i in 0..users {
        for j in 0..items {
            if rng.random::<f64>() < density {
                let value = dot(&ud[i * rank..(i + 1) * rank], &vd[j * rank..(j + 1) * rank]);
                entries.push(Triplet {
                    row: i,
                    col: j,
                    value,
                });
            }
        }
    }
    Ok(LowRankRatings {
        ratings: RatingsMatrix::from_triplets(users, items, &entries)?,
        truth: FactorizationModel::new(u, v)?,
    })
}

/// Block-diagonal tiling: copy `c` of `base` occupies users
/// `c*m..(c+1)*m` and items `c*n..(c+1)*n`. Keeps the sparsity pattern of
/// every block; the partition count and pool are carried over.
pub fn tile_ratings(base: &RatingsMatrix, t: usize) -> Result<RatingsMatrix> {
    if t == 0 {
        return Err(Error::Config("tiling factor must be at least 1".into()));
    }
    let (m, n) = (base.num_users(), base.num_items());
    let block = base.entries();
    let mut entries = Vec::with_capacity(block.len() * t);
    for c in 0..t {
        entries.extend(block.iter().map(|e| Triplet {
            row: e.row + c * m,
            col: e.col + c * n,
            value: e.value,
        }));
    }
    Ok(RatingsMatrix::from_triplets(m * t, n * t, &entries)?
        .with_partitions(base.partitions())?
        .with_pool(base.pool().clone()))
}
