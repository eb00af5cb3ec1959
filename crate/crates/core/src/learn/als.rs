use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_finite, dot, Model};
use crate::engine::{broadcast, Broadcast, WorkerPool};
use crate::error::{Error, Result};
use crate::localmatrix::{LocalMatrix, Triplet};

/// Observed entries of an `m x n` ratings matrix, held both by user (rows)
/// and by item (the transpose), so that either factor can be updated from
/// row-local data.
#[derive(Debug, Clone)]
pub struct RatingsMatrix {
    by_user: LocalMatrix,
    by_item: LocalMatrix,
    partitions: usize,
    pool: WorkerPool,
}

impl RatingsMatrix {
    /// Builds both encodings from `(user, item, rating)` entries.
    ///
    /// Ratings must be finite and nonzero: the sparse encoding does not
    /// store zeros, so a zero rating could not be told apart from a missing
    /// one.
    pub fn from_triplets(users: usize, items: usize, entries: &[Triplet]) -> Result<Self> {
        if let Some(t) = entries
            .iter()
            .find(|t| !t.value.is_finite() || t.value == 0.0)
        {
            return Err(Error::Config(format!(
                "rating at ({}, {}) is {}; ratings must be finite and nonzero",
                t.row, t.col, t.value
            )));
        }
        let by_user = LocalMatrix::from_triplets(users, items, entries)?;
        let by_item = by_user.transpose();
        let pool = WorkerPool::default();
        Ok(RatingsMatrix {
            by_user,
            by_item,
            partitions: pool.workers(),
            pool,
        })
    }

    /// Splits users and items into `partitions` contiguous row blocks each.
    pub fn with_partitions(mut self, partitions: usize) -> Result<Self> {
        if partitions == 0 {
            return Err(Error::Config("partition count must be at least 1".into()));
        }
        self.partitions = partitions;
        Ok(self)
    }

    pub fn with_pool(mut self, pool: WorkerPool) -> Self {
        self.pool = pool;
        self
    }

    pub fn num_users(&self) -> usize {
        self.by_user.num_rows()
    }

    pub fn num_items(&self) -> usize {
        self.by_user.num_cols()
    }

    pub fn nnz(&self) -> usize {
        self.by_user.nnz()
    }

    pub fn partitions(&self) -> usize {
        self.partitions
    }

    pub fn pool(&self) -> &WorkerPool {
        &self.pool
    }

    /// Users x items, CSR.
    pub fn by_user(&self) -> &LocalMatrix {
        &self.by_user
    }

    /// Items x users, CSR.
    pub fn by_item(&self) -> &LocalMatrix {
        &self.by_item
    }

    /// Observed entries in user-major order.
    pub fn entries(&self) -> Vec<Triplet> {
        let (indptr, indices, values) = csr(&self.by_user);
        let mut out = Vec::with_capacity(values.len());
        for row in 0..self.num_users() {
            for k in indptr[row]..indptr[row + 1] {
                out.push(Triplet {
                    row,
                    col: indices[k],
                    value: values[k],
                });
            }
        }
        out
    }
}

fn csr(m: &LocalMatrix) -> (&[usize], &[usize], &[f64]) {
    m.csr_parts().expect("ratings are stored as CSR")
}

fn observed(m: &LocalMatrix, row: usize) -> (&[usize], &[f64]) {
    let (indptr, indices, values) = csr(m);
    let span = indptr[row]..indptr[row + 1];
    (&indices[span.clone()], &values[span])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsConfig {
    pub rank: usize,
    pub lambda: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            rank: 10,
            lambda: 0.01,
            iterations: 10,
            seed: 0,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be a non-negative number, got {}",
                self.lambda
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Low-rank factors `U` (users x k) and `V` (items x k).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationModel {
    pub u: LocalMatrix,
    pub v: LocalMatrix,
}

impl FactorizationModel {
    pub fn new(u: LocalMatrix, v: LocalMatrix) -> Result<Self> {
        if u.num_cols() != v.num_cols() {
            return Err(Error::Dim(format!(
                "user factors have rank {}, item factors rank {}",
                u.num_cols(),
                v.num_cols()
            )));
        }
        let (u, v) = (u.to_dense(), v.to_dense());
        check_finite(u.dense_data(), "user factors")?;
        check_finite(v.dense_data(), "item factors")?;
        Ok(FactorizationModel { u, v })
    }

    pub fn rank(&self) -> usize {
        self.u.num_cols()
    }

    fn check_shape(&self, ratings: &RatingsMatrix) -> Result<()> {
        if self.u.num_rows() != ratings.num_users() || self.v.num_rows() != ratings.num_items() {
            return Err(Error::Dim(format!(
                "model is {}x{}, ratings are {}x{}",
                self.u.num_rows(),
                self.v.num_rows(),
                ratings.num_users(),
                ratings.num_items()
            )));
        }
        Ok(())
    }

    /// Root mean squared error over the observed entries.
    pub fn rmse(&self, ratings: &RatingsMatrix) -> Result<f64> {
        self.check_shape(ratings)?;
        if ratings.nnz() == 0 {
            return Err(Error::EmptyTable);
        }
        Ok((squared_error(&self.u, &self.v, ratings) / ratings.nnz() as f64).sqrt())
    }
}

impl Model for FactorizationModel {
    type Input = (usize, usize);
    type Output = f64;

    /// Predicted rating `U_i . V_j`.
    fn predict(&self, &(i, j): &(usize, usize)) -> Result<f64> {
        if i >= self.u.num_rows() {
            return Err(Error::Index {
                index: i,
                bound: self.u.num_rows(),
            });
        }
        if j >= self.v.num_rows() {
            return Err(Error::Index {
                index: j,
                bound: self.v.num_rows(),
            });
        }
        Ok(dot(factor_row(&self.u, i), factor_row(&self.v, j)))
    }
}

/// Exact least-squares update of one row given the other factor.
///
/// With `B` the rows of `factor_fixed` at the observed indices `cols` and
/// `r` the observed ratings, solves `(B^T B + lambda |cols| I) u = B^T r`.
/// A row without observations gets the zero vector.
pub fn als_row_update(
    factor_fixed: &LocalMatrix,
    cols: &[usize],
    ratings: &[f64],
    lambda: f64,
    k: usize,
) -> Result<Vec<f64>> {
    if factor_fixed.num_cols() != k {
        return Err(Error::Dim(format!(
            "factor has rank {}, expected {k}",
            factor_fixed.num_cols()
        )));
    }
    if cols.len() != ratings.len() {
        return Err(Error::Dim(format!(
            "{} indices for {} ratings",
            cols.len(),
            ratings.len()
        )));
    }
    if cols.is_empty() {
        return Ok(vec![0.0; k]);
    }
    let b = factor_fixed.slice(cols, ..)?.into_matrix().to_dense();
    let bt = b.transpose();
    let mut gram = bt.times(&b)?;
    let ridge = lambda * cols.len() as f64;
    for d in 0..k {
        let g = gram.get(d, d)?;
        gram.update(d, d, g + ridge)?;
    }
    let rhs = bt.times(&LocalMatrix::column(ratings))?;
    gram.solve_vector(rhs.dense_data())
}

/// Scaled objective values recorded after every half-sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AlsTrace {
    pub objectives: Vec<f64>,
}

/// Alternating least squares with the default initialization.
pub fn als_train(ratings: &RatingsMatrix, config: &AlsConfig) -> Result<FactorizationModel> {
    config.validate()?;
    let v0 = initial_item_factors(ratings.num_items(), config.rank, config.seed);
    run(ratings, config, v0, None)
}

/// Like [`als_train`], also returning the scaled objective (see
/// [`als_scaled_objective`]) after each half-sweep.
pub fn als_train_traced(
    ratings: &RatingsMatrix,
    config: &AlsConfig,
) -> Result<(FactorizationModel, AlsTrace)> {
    config.validate()?;
    let v0 = initial_item_factors(ratings.num_items(), config.rank, config.seed);
    let mut objectives = Vec::with_capacity(2 * config.iterations);
    let model = run(ratings, config, v0, Some(&mut objectives))?;
    Ok((model, AlsTrace { objectives }))
}

/// Alternating least squares starting from the given item factors instead
/// of the seeded random ones.
pub fn als_train_from(
    ratings: &RatingsMatrix,
    config: &AlsConfig,
    v0: LocalMatrix,
) -> Result<FactorizationModel> {
    config.validate()?;
    run(ratings, config, v0, None)
}

/// Item factors drawn uniformly from `[0, 1)` and scaled by `1/sqrt(k)`.
pub fn initial_item_factors(items: usize, k: usize, seed: u64) -> LocalMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (k as f64).sqrt();
    let data = (0..items * k)
        .map(|_| rng.random::<f64>() * scale)
        .collect();
    LocalMatrix::from_vec(items, k, data).expect("shape matches")
}

/// Each iteration solves every user row with the item factors broadcast,
/// then every item row with the new user factors broadcast. Rows are
/// updated in parallel over contiguous row blocks; every row update is
/// exact, so the result does not depend on the partitioning.
fn run(
    ratings: &RatingsMatrix,
    config: &AlsConfig,
    v0: LocalMatrix,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<FactorizationModel> {
    if ratings.nnz() == 0 {
        return Err(Error::EmptyTable);
    }
    if v0.dims() != (ratings.num_items(), config.rank) {
        return Err(Error::Dim(format!(
            "initial item factors are {:?}, expected ({}, {})",
            v0.dims(),
            ratings.num_items(),
            config.rank
        )));
    }
    let mut v = broadcast(v0.to_dense());
    let mut u = broadcast(LocalMatrix::zeros(ratings.num_users(), config.rank));
    for _ in 0..config.iterations {
        u = broadcast(half_sweep(ratings, &ratings.by_user, &v, config)?);
        if let Some(t) = trace.as_deref_mut() {
            t.push(scaled_objective(&u, &v, ratings, config.lambda));
        }
        v = broadcast(half_sweep(ratings, &ratings.by_item, &u, config)?);
        if let Some(t) = trace.as_deref_mut() {
            t.push(scaled_objective(&u, &v, ratings, config.lambda));
        }
    }
    FactorizationModel::new(u.value().clone(), v.value().clone())
}

fn half_sweep(
    ratings: &RatingsMatrix,
    by_row: &LocalMatrix,
    fixed: &Broadcast<LocalMatrix>,
    config: &AlsConfig,
) -> Result<LocalMatrix> {
    let k = config.rank;
    let blocks = row_blocks(by_row.num_rows(), ratings.partitions);
    let solved = ratings.pool.run(blocks.len(), |p| {
        let mut out = Vec::with_capacity(blocks[p].len() * k);
        for row in blocks[p].clone() {
            let (cols, vals) = observed(by_row, row);
            out.extend(als_row_update(fixed, cols, vals, config.lambda, k)?);
        }
        check_finite(&out, "factors")?;
        Ok(out)
    })?;
    LocalMatrix::from_vec(by_row.num_rows(), k, solved.concat())
}

/// `parts` contiguous ranges covering `0..len`, sizes differing by at most
/// one, larger first.
fn row_blocks(len: usize, parts: usize) -> Vec<Range<usize>> {
    let parts = parts.clamp(1, len.max(1));
    let (base, extra) = (len / parts, len % parts);
    let mut start = 0;
    (0..parts)
        .map(|p| {
            let end = start + base + usize::from(p < extra);
            let r = start..end;
            start = end;
            r
        })
        .collect()
}

/// The literal objective
/// `sum over observed (M_ij - U_i . V_j)^2 + lambda (|U|_F^2 + |V|_F^2)`.
pub fn als_objective(
    model: &FactorizationModel,
    ratings: &RatingsMatrix,
    lambda: f64,
) -> Result<f64> {
    model.check_shape(ratings)?;
    let norms = sum_squares(model.u.dense_data()) + sum_squares(model.v.dense_data());
    Ok(squared_error(&model.u, &model.v, ratings) + lambda * norms)
}

/// The objective the row updates minimize exactly: each row's penalty is
/// weighted by its number of observations,
/// `sum (M_ij - U_i . V_j)^2 + lambda (sum_i n_i |U_i|^2 + sum_j n_j |V_j|^2)`.
pub fn als_scaled_objective(
    model: &FactorizationModel,
    ratings: &RatingsMatrix,
    lambda: f64,
) -> Result<f64> {
    model.check_shape(ratings)?;
    Ok(scaled_objective(&model.u, &model.v, ratings, lambda))
}

fn scaled_objective(u: &LocalMatrix, v: &LocalMatrix, ratings: &RatingsMatrix, lambda: f64) -> f64 {
    let weighted = |by_row: &LocalMatrix, f: &LocalMatrix| {
        let (indptr, _, _) = csr(by_row);
        (0..by_row.num_rows())
            .map(|i| (indptr[i + 1] - indptr[i]) as f64 * sum_squares(factor_row(f, i)))
            .sum::<f64>()
    };
    let penalty = weighted(&ratings.by_user, u) + weighted(&ratings.by_item, v);
    squared_error(u, v, ratings) + lambda * penalty
}

fn squared_error(u: &LocalMatrix, v: &LocalMatrix, ratings: &RatingsMatrix) -> f64 {
    let mut sum = 0.0;
    for i in 0..ratings.num_users() {
        let (cols, vals) = observed(&ratings.by_user, i);
        for (&j, &r) in cols.iter().zip(vals) {
            let e = r - dot(factor_row(u, i), factor_row(v, j));
            sum += e * e;
        }
    }
    sum
}

fn factor_row(f: &LocalMatrix, i: usize) -> &[f64] {
    let k = f.num_cols();
    &f.dense_data()[i * k..(i + 1) * k]
}

fn sum_squares(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}
