//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function generates a small synthetic problem, trains on it
//! and returns the result as a JSON string for the page to draw. The pool
//! runs single-threaded, so results match native runs bit for bit.

use mlkit::datagen::{
    generate_classification_data, generate_clustered_points, generate_low_rank_ratings,
};
use mlkit::learn::{
    als_train_traced, k_means, Algorithm, AlsConfig, LogisticRegression, SgdConfig,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Logistic regression on `n` separable points in the plane. Returns the
/// points, their labels, the generating hyperplane normal, the learned
/// weights after every averaging round and the matching training accuracy.
pub fn classifier_json(
    n: usize,
    seed: u64,
    learning_rate: f64,
    rounds: usize,
    partitions: usize,
) -> mlkit::Result<Value> {
    let synthetic = generate_classification_data(n, 2, seed, partitions)?;
    let data = &synthetic.data;
    let mut weights = Vec::with_capacity(rounds);
    let mut accuracy = Vec::with_capacity(rounds);
    for r in 1..=rounds {
        let config = SgdConfig {
            learning_rate,
            rounds: r,
            local_passes: 1,
            seed,
        };
        let model = LogisticRegression.train(data, &config)?;
        accuracy.push(model.accuracy(&data.features, &data.labels)?);
        weights.push(model.weights.to_vec());
    }
    Ok(json!({
        "points": data.features.to_vectors(),
        "labels": data.labels,
        "hyperplane": synthetic.hyperplane,
        "weights": weights,
        "accuracy": accuracy,
    }))
}

/// k-means on `n` points around `k` random centers in the plane. Returns the
/// points, final assignments and centroids, and the cost after every
/// assignment step.
pub fn clusters_json(
    n: usize,
    k: usize,
    spread: f64,
    seed: u64,
    iterations: usize,
) -> mlkit::Result<Value> {
    let data = generate_clustered_points(n, k, 2, spread, seed, 4)?;
    let model = k_means(&data.points, k, iterations, seed)?;
    Ok(json!({
        "points": data.points.to_vectors(),
        "assignments": model.assignments,
        "centroids": model.centroids.to_row_vecs(),
        "costs": model.costs,
    }))
}

/// ALS on exactly low-rank ratings. Returns the regularized objective after
/// every half-sweep and the final observed RMSE.
pub fn factorization_json(
    users: usize,
    items: usize,
    rank: usize,
    density: f64,
    lambda: f64,
    iterations: usize,
    seed: u64,
) -> mlkit::Result<Value> {
    let generated = generate_low_rank_ratings(users, items, rank, density, seed)?;
    let ratings = generated.ratings.with_partitions(4)?;
    let config = AlsConfig {
        rank,
        lambda,
        iterations,
        seed,
    };
    let (model, trace) = als_train_traced(&ratings, &config)?;
    Ok(json!({
        "observed": ratings.nnz(),
        "objectives": trace.objectives,
        "rmse": model.rmse(&ratings)?,
    }))
}

fn to_js(result: mlkit::Result<Value>) -> Result<String, JsError> {
    result
        .map(|v| v.to_string())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = trainClassifier)]
pub fn train_classifier(
    n: usize,
    seed: u32,
    learning_rate: f64,
    rounds: usize,
) -> Result<String, JsError> {
    to_js(classifier_json(n, seed.into(), learning_rate, rounds, 4))
}

#[wasm_bindgen(js_name = clusterPoints)]
pub fn cluster_points(
    n: usize,
    k: usize,
    spread: f64,
    seed: u32,
    iterations: usize,
) -> Result<String, JsError> {
    to_js(clusters_json(n, k, spread, seed.into(), iterations))
}

#[wasm_bindgen(js_name = factorizeRatings)]
pub fn factorize_ratings(
    users: usize,
    items: usize,
    rank: usize,
    density: f64,
    lambda: f64,
    iterations: usize,
    seed: u32,
) -> Result<String, JsError> {
    to_js(factorization_json(
        users,
        items,
        rank,
        density,
        lambda,
        iterations,
        seed.into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifier_reaches_high_accuracy() {
        let v = classifier_json(300, 3, 0.5, 10, 4).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 300);
        assert_eq!(v["weights"].as_array().unwrap().len(), 10);
        let acc = v["accuracy"].as_array().unwrap();
        assert!(acc.last().unwrap().as_f64().unwrap() >= 0.97);
    }

    #[test]
    fn clusters_have_valid_assignments() {
        let v = clusters_json(200, 4, 0.6, 1, 50).unwrap();
        let assignments = v["assignments"].as_array().unwrap();
        assert_eq!(assignments.len(), 200);
        assert!(assignments.iter().all(|a| a.as_u64().unwrap() < 4));
        let costs: Vec<f64> = v["costs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_f64().unwrap())
            .collect();
        assert!(costs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn factorization_objective_decreases() {
        let v = factorization_json(60, 40, 3, 0.4, 0.01, 8, 2).unwrap();
        let obj: Vec<f64> = v["objectives"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_f64().unwrap())
            .collect();
        assert_eq!(obj.len(), 16);
        assert!(obj.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(v["rmse"].as_f64().unwrap() < 0.1);
    }

    #[test]
    fn errors_are_reported() {
        assert!(clusters_json(3, 5, 1.0, 0, 10).is_err());
        assert!(factorization_json(10, 10, 0, 0.5, 0.01, 3, 0).is_err());
    }
}
