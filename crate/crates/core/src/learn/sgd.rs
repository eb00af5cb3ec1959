use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::logistic::check_labels;
use super::{check_finite, GradientFn, Optimizer, WeightVector};
use crate::engine::{broadcast, gather_average};
use crate::error::{Error, Result};
use crate::localmatrix::LocalMatrix;
use crate::mltable::MLNumericTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    /// Constant step size.
    pub learning_rate: f64,
    /// Broadcast/average rounds (or full-gradient steps for gradient descent).
    pub rounds: usize,
    /// Passes over the local partition between two averaging rounds.
    pub local_passes: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.5,
            rounds: 20,
            local_passes: 1,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.local_passes == 0 {
            return Err(Error::Config("local passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Random stream used by partition `partition` in round `round`. Each local
/// pass shuffles the previous pass's example order in place with it,
/// starting from the identity order.
pub fn partition_rng(seed: u64, round: usize, partition: usize) -> ChaCha8Rng {
    // splitmix64 finalizer over the three coordinates
    let mut z = seed
        ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (partition as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

struct Partitioned<'a> {
    matrices: Vec<LocalMatrix>,
    labels: Vec<&'a [f64]>,
    d: usize,
}

fn split_labels<'a>(data: &MLNumericTable, labels: &'a [f64]) -> Result<Partitioned<'a>> {
    check_labels(data, labels)?;
    if data.num_rows() == 0 {
        return Err(Error::EmptyTable);
    }
    let mut parts = Vec::with_capacity(data.num_partitions());
    let mut start = 0;
    for size in data.partition_sizes() {
        parts.push(&labels[start..start + size]);
        start += size;
    }
    Ok(Partitioned {
        matrices: data.partition_matrices(),
        labels: parts,
        d: data.num_features(),
    })
}

fn row(m: &LocalMatrix, i: usize) -> &[f64] {
    let d = m.num_cols();
    &m.as_dense_slice().expect("partition matrices are dense")[i * d..(i + 1) * d]
}

/// Full-batch gradient descent from `w = 0`: `w <- w - eta * grad f(w)` for
/// `config.rounds` steps.
///
/// Each partition returns the mean of its gradient summands; the master
/// averages them weighted by partition size and rescales by `n` to recover
/// the full gradient sum.
pub fn gradient_descent(
    data: &MLNumericTable,
    labels: &[f64],
    gradient: &dyn GradientFn,
    config: &SgdConfig,
) -> Result<WeightVector> {
    config.validate()?;
    let parts = split_labels(data, labels)?;
    let n = data.num_rows() as f64;
    let pool = data.pool();
    let mut w = vec![0.0; parts.d];
    for _ in 0..config.rounds {
        let shared = broadcast(w);
        let partials = pool.run(parts.matrices.len(), |p| {
            let x = &parts.matrices[p];
            let y = parts.labels[p];
            let mut sum = vec![0.0; parts.d];
            let mut g = vec![0.0; parts.d];
            for (i, &yi) in y.iter().enumerate() {
                gradient.summand(shared.value(), row(x, i), yi, &mut g);
                for (s, gj) in sum.iter_mut().zip(&g) {
                    *s += gj;
                }
            }
            let count = x.num_rows() as f64;
            if count > 0.0 {
                for s in &mut sum {
                    *s /= count;
                }
            }
            Ok((sum, count))
        })?;
        let mean = gather_average(&partials)?;
        w = shared.value().clone();
        for (wj, gj) in w.iter_mut().zip(&mean) {
            *wj -= config.learning_rate * (gj * n);
        }
        check_finite(&w, "weights")?;
    }
    Ok(WeightVector(w))
}

/// Locally averaged SGD from `w = 0`.
///
/// Each round broadcasts `w`; every partition copies it and runs
/// `local_passes` passes of single-example updates `w <- w - eta * g_i(w)`
/// over its rows in the order drawn from [`partition_rng`]; the master then
/// replaces `w` by the average of the partition weights, weighted by
/// partition size. The result depends only on the seed and the partitioning.
pub fn sgd_optimize(
    data: &MLNumericTable,
    labels: &[f64],
    gradient: &dyn GradientFn,
    config: &SgdConfig,
) -> Result<WeightVector> {
    config.validate()?;
    let parts = split_labels(data, labels)?;
    let pool = data.pool();
    let mut w = vec![0.0; parts.d];
    for round in 0..config.rounds {
        let shared = broadcast(w);
        let locals = pool.run(parts.matrices.len(), |p| {
            let x = &parts.matrices[p];
            let y = parts.labels[p];
            let mut local = shared.value().clone();
            let count = x.num_rows();
            if count == 0 {
                return Ok((local, 0.0));
            }
            let mut rng = partition_rng(config.seed, round, p);
            let mut order: Vec<usize> = (0..count).collect();
            let mut g = vec![0.0; parts.d];
            for _ in 0..config.local_passes {
                order.shuffle(&mut rng);
                for &i in &order {
                    gradient.summand(&local, row(x, i), y[i], &mut g);
                    for (wj, gj) in local.iter_mut().zip(&g) {
                        *wj -= config.learning_rate * gj;
                    }
                }
            }
            check_finite(&local, "local weights")?;
            Ok((local, count as f64))
        })?;
        w = gather_average(&locals)?;
        check_finite(&w, "weights")?;
    }
    Ok(WeightVector(w))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StochasticGradientDescent {
    pub config: SgdConfig,
}

impl Optimizer for StochasticGradientDescent {
    fn optimize(
        &self,
        data: &MLNumericTable,
        labels: &[f64],
        gradient: &dyn GradientFn,
    ) -> Result<WeightVector> {
        sgd_optimize(data, labels, gradient, &self.config)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GradientDescent {
    pub config: SgdConfig,
}

impl Optimizer for GradientDescent {
    fn optimize(
        &self,
        data: &MLNumericTable,
        labels: &[f64],
        gradient: &dyn GradientFn,
    ) -> Result<WeightVector> {
        gradient_descent(data, labels, gradient, &self.config)
    }
}
