use super::Optimizer;
use super::{
    dot, Algorithm, GradientFn, Model, SgdConfig, StochasticGradientDescent, WeightVector,
};
use crate::error::{Error, Result};
use crate::mltable::MLNumericTable;

/// `1 / (1 + e^-x)`, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradient of the negative log-likelihood of one example:
/// `(sigmoid(w . x) - y) * x`.
pub fn logistic_gradient_summand(w: &[f64], x: &[f64], y: f64) -> Result<Vec<f64>> {
    if w.len() != x.len() {
        return Err(Error::Dim(format!(
            "weights have {} entries, example has {}",
            w.len(),
            x.len()
        )));
    }
    let mut out = vec![0.0; w.len()];
    LogisticGradient.summand(w, x, y, &mut out);
    Ok(out)
}

/// Negative log-likelihood of one example,
/// `-y ln sigmoid(w.x) - (1 - y) ln(1 - sigmoid(w.x))`.
pub fn logistic_loss(w: &[f64], x: &[f64], y: f64) -> f64 {
    let z = dot(w, x);
    // ln(1 + e^z) - y z, stable on both tails
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - y * z
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticGradient;

impl GradientFn for LogisticGradient {
    fn summand(&self, w: &[f64], x: &[f64], y: f64, out: &mut [f64]) {
        let scale = sigmoid(dot(w, x)) - y;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = scale * xi;
        }
    }
}

/// Feature table with one 0/1 label per row, in row order.
#[derive(Debug, Clone)]
pub struct LabeledTable {
    pub features: MLNumericTable,
    pub labels: Vec<f64>,
}

impl LabeledTable {
    pub fn new(features: MLNumericTable, labels: Vec<f64>) -> Result<Self> {
        check_labels(&features, &labels)?;
        Ok(LabeledTable { features, labels })
    }
}

pub(crate) fn check_labels(features: &MLNumericTable, labels: &[f64]) -> Result<()> {
    if labels.len() != features.num_rows() {
        return Err(Error::Dim(format!(
            "{} labels for {} rows",
            labels.len(),
            features.num_rows()
        )));
    }
    if let Some(i) = labels.iter().position(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::Config(format!(
            "label {i} is {}, expected 0 or 1",
            labels[i]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: WeightVector,
}

impl LogisticModel {
    pub fn new(weights: WeightVector) -> Self {
        LogisticModel { weights }
    }

    pub fn predict_probability(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::Dim(format!(
                "model has {} weights, example has {} features",
                self.weights.len(),
                x.len()
            )));
        }
        Ok(sigmoid(dot(&self.weights, x)))
    }

    /// Fraction of rows whose predicted label matches.
    pub fn accuracy(&self, data: &MLNumericTable, labels: &[f64]) -> Result<f64> {
        check_labels(data, labels)?;
        if labels.is_empty() {
            return Err(Error::EmptyTable);
        }
        let mut correct = 0usize;
        for (x, &y) in data.to_vectors().iter().zip(labels) {
            if self.predict(x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / labels.len() as f64)
    }
}

impl Model for LogisticModel {
    type Input = [f64];
    type Output = f64;

    /// Label `1.0` when `sigmoid(w . x) >= 0.5`, else `0.0`.
    fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.predict_probability(x)? >= 0.5 {
            1.0
        } else {
            0.0
        })
    }
}

/// Logistic regression trained by locally averaged SGD.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticRegression;

impl Algorithm for LogisticRegression {
    type Data = LabeledTable;
    type Config = SgdConfig;
    type Model = LogisticModel;

    fn train(&self, data: &LabeledTable, config: &SgdConfig) -> Result<LogisticModel> {
        let sgd = StochasticGradientDescent { config: *config };
        let w = sgd.optimize(&data.features, &data.labels, &LogisticGradient)?;
        Ok(LogisticModel::new(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        // 1 / (1 + e^-2) evaluated to 20 digits: 0.88079707797788244406
        assert!((sigmoid(2.0) - 0.8807970779778823).abs() < 1e-16);
        for x in [0.3, 1.7, 12.0, 45.5, 700.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
        assert!(sigmoid(700.0) <= 1.0 && sigmoid(-700.0) > 0.0);
        assert!(sigmoid(-700.0).is_finite());
    }

    #[test]
    fn summand_examples() {
        let g = logistic_gradient_summand(&[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap();
        assert_eq!(g, vec![0.0, -0.5]);
        let x = [0.5, -2.0, 3.0];
        let g0 = logistic_gradient_summand(&[0.0; 3], &x, 0.0).unwrap();
        assert_eq!(g0, vec![0.25, -1.0, 1.5]);
        assert!(matches!(
            logistic_gradient_summand(&[0.0], &x, 1.0),
            Err(Error::Dim(_))
        ));
    }

    #[test]
    fn loss_is_stable() {
        assert!((logistic_loss(&[0.0], &[1.0], 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(logistic_loss(&[800.0], &[1.0], 0.0).is_finite());
        assert!(logistic_loss(&[-800.0], &[1.0], 1.0).is_finite());
    }

    #[test]
    fn prediction_tie_goes_to_one() {
        let zero = LogisticModel::new(WeightVector::zeros(2));
        assert_eq!(zero.predict(&[3.0, -4.0]).unwrap(), 1.0);
        let m = LogisticModel::new(WeightVector::new(vec![10.0, 0.0]).unwrap());
        assert_eq!(m.predict(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(m.predict(&[-1.0, 0.0]).unwrap(), 0.0);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn labels_validated() {
        let t = MLNumericTable::from_vectors(&[vec![1.0], vec![2.0]], 1).unwrap();
        assert!(LabeledTable::new(t.clone(), vec![1.0]).is_err());
        assert!(LabeledTable::new(t.clone(), vec![1.0, 0.5]).is_err());
        assert!(LabeledTable::new(t, vec![1.0, 0.0]).is_ok());
    }
}
