//! Optimizer, algorithm and model interfaces and the learners built on them.
//!
//! Every learner expresses its parallelism through the engine: per-partition
//! work on the table's [`WorkerPool`](crate::WorkerPool), master-side
//! [`gather_average`](crate::gather_average), and
//! [`broadcast`](crate::broadcast) of the updated parameters.

mod als;
mod kmeans;
mod logistic;
pub mod model_io;
mod sgd;
mod text;

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::mltable::MLNumericTable;

pub use als::{
    als_objective, als_row_update, als_scaled_objective, als_train, als_train_from,
    als_train_traced, initial_item_factors, AlsConfig, AlsTrace, FactorizationModel, RatingsMatrix,
};
pub use kmeans::{k_means, KMeansModel};
pub use logistic::{
    logistic_gradient_summand, logistic_loss, sigmoid, LabeledTable, LogisticGradient,
    LogisticModel, LogisticRegression,
};
pub use sgd::{
    gradient_descent, partition_rng, sgd_optimize, GradientDescent, SgdConfig,
    StochasticGradientDescent,
};
pub use text::{n_grams, n_grams_table, tf_idf, TfIdf};

/// Something that makes predictions.
pub trait Model {
    type Input: ?Sized;
    type Output;

    fn predict(&self, input: &Self::Input) -> Result<Self::Output>;
}

/// Trains a [`Model`] from data and hyperparameters.
pub trait Algorithm {
    type Data;
    type Config;
    type Model: Model;

    fn train(&self, data: &Self::Data, config: &Self::Config) -> Result<Self::Model>;
}

/// Per-example gradient of a loss, the plug-in point for optimizers.
pub trait GradientFn: Sync {
    /// Writes the gradient of the loss on `(x, y)` at `w` into `out`.
    /// All three slices have the same length.
    fn summand(&self, w: &[f64], x: &[f64], y: f64, out: &mut [f64]);
}

impl<F> GradientFn for F
where
    F: Fn(&[f64], &[f64], f64, &mut [f64]) + Sync,
{
    fn summand(&self, w: &[f64], x: &[f64], y: f64, out: &mut [f64]) {
        self(w, x, y, out)
    }
}

/// Minimizes a sum of per-example losses over a labeled numeric table.
pub trait Optimizer {
    fn optimize(
        &self,
        data: &MLNumericTable,
        labels: &[f64],
        gradient: &dyn GradientFn,
    ) -> Result<WeightVector>;
}

/// Learned linear model parameters; always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        check_finite(&w, "weights")?;
        Ok(WeightVector(w))
    }

    pub fn zeros(d: usize) -> Self {
        WeightVector(vec![0.0; d])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Divergence(format!(
            "{what} entry {i} became {}",
            values[i]
        ))),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
