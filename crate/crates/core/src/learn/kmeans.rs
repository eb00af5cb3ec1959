use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Model;
use crate::engine::broadcast;
use crate::error::{Error, Result};
use crate::localmatrix::LocalMatrix;
use crate::mltable::MLNumericTable;

/// Result of [`k_means`].
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    /// `k x d`, one centroid per row.
    pub centroids: LocalMatrix,
    /// Cluster of every row of the training table, in row order.
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centroid after every
    /// assignment step, starting with the seeding.
    pub costs: Vec<f64>,
}

impl KMeansModel {
    pub fn k(&self) -> usize {
        self.centroids.num_rows()
    }

    fn centroid(&self, c: usize) -> &[f64] {
        centroid(&self.centroids, c)
    }
}

impl Model for KMeansModel {
    type Input = [f64];
    type Output = usize;

    /// Index of the nearest centroid, lowest index on ties.
    fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.centroids.num_cols() {
            return Err(Error::Dim(format!(
                "centroids have {} features, point has {}",
                self.centroids.num_cols(),
                x.len()
            )));
        }
        Ok(nearest(x, self.k(), |c| self.centroid(c)).0)
    }
}

fn centroid(m: &LocalMatrix, c: usize) -> &[f64] {
    let d = m.num_cols();
    &m.as_dense_slice().expect("centroids are dense")[c * d..(c + 1) * d]
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest<'a>(x: &[f64], k: usize, centroid: impl Fn(usize) -> &'a [f64]) -> (usize, f64) {
    let mut best = (0, squared_distance(x, centroid(0)));
    for c in 1..k {
        let d = squared_distance(x, centroid(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Per-partition output of an assignment step.
struct Partial {
    assignments: Vec<usize>,
    sums: Vec<f64>,
    counts: Vec<usize>,
    cost: f64,
}

/// Lloyd's algorithm.
///
/// Centroids are seeded with `k` rows of distinct value drawn in a
/// seed-determined order. Each step assigns every row to its nearest
/// centroid (lowest index on ties) in parallel over partitions and moves
/// each centroid to the mean of its rows from the gathered partial sums; a
/// cluster that loses all its rows keeps its centroid. Stops after
/// `iterations` updates or as soon as the assignment stops changing.
pub fn k_means(
    data: &MLNumericTable,
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<KMeansModel> {
    let n = data.num_rows();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "k must be between 1 and the number of rows ({n}), got {k}"
        )));
    }
    let d = data.num_features();
    let parts = data.partition_matrices();
    let rows: Vec<&[f64]> = parts
        .iter()
        .flat_map(|m| {
            let data = m.as_dense_slice().expect("partition matrices are dense");
            (0..m.num_rows()).map(move |i| &data[i * d..(i + 1) * d])
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut seeds: Vec<usize> = Vec::with_capacity(k);
    for &i in &order {
        if seeds.len() == k {
            break;
        }
        if seeds.iter().all(|&s| rows[s] != rows[i]) {
            seeds.push(i);
        }
    }
    // fewer than k distinct rows: the surplus centroids duplicate a point
    // and never win a tie
    for &i in &order {
        if seeds.len() == k {
            break;
        }
        if !seeds.contains(&i) {
            seeds.push(i);
        }
    }
    let mut centroids =
        LocalMatrix::from_vec(k, d, seeds.iter().flat_map(|&i| rows[i].to_vec()).collect())?;

    let pool = data.pool();
    let assign = |centroids: &LocalMatrix| -> Result<Vec<Partial>> {
        let shared = broadcast(centroids.clone());
        pool.run(parts.len(), |p| {
            let m = &parts[p];
            let x = m.as_dense_slice().expect("partition matrices are dense");
            let mut partial = Partial {
                assignments: Vec::with_capacity(m.num_rows()),
                sums: vec![0.0; k * d],
                counts: vec![0; k],
                cost: 0.0,
            };
            for i in 0..m.num_rows() {
                let row = &x[i * d..(i + 1) * d];
                let (c, dist) = nearest(row, k, |c| centroid(&shared, c));
                partial.assignments.push(c);
                partial.counts[c] += 1;
                partial.cost += dist;
                for (s, v) in partial.sums[c * d..(c + 1) * d].iter_mut().zip(row) {
                    *s += v;
                }
            }
            Ok(partial)
        })
    };

    let mut partials = assign(&centroids)?;
    let mut assignments = concat_assignments(&partials);
    let mut costs = vec![partials.iter().map(|p| p.cost).sum()];
    for _ in 0..iterations {
        centroids = update_centroids(&centroids, &partials, k, d)?;
        partials = assign(&centroids)?;
        let next = concat_assignments(&partials);
        costs.push(partials.iter().map(|p| p.cost).sum());
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(KMeansModel {
        centroids,
        assignments,
        costs,
    })
}

fn concat_assignments(partials: &[Partial]) -> Vec<usize> {
    partials
        .iter()
        .flat_map(|p| p.assignments.iter().copied())
        .collect()
}

fn update_centroids(
    old: &LocalMatrix,
    partials: &[Partial],
    k: usize,
    d: usize,
) -> Result<LocalMatrix> {
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for p in partials {
        for (s, v) in sums.iter_mut().zip(&p.sums) {
            *s += v;
        }
        for (c, v) in counts.iter_mut().zip(&p.counts) {
            *c += v;
        }
    }
    for c in 0..k {
        let block = &mut sums[c * d..(c + 1) * d];
        if counts[c] == 0 {
            block.copy_from_slice(centroid(old, c));
        } else {
            for s in block {
                *s /= counts[c] as f64;
            }
        }
    }
    LocalMatrix::from_vec(k, d, sums)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[f64]], partitions: usize) -> MLNumericTable {
        MLNumericTable::from_vectors(rows, partitions).unwrap()
    }

    #[test]
    fn k_distinct_points_cost_zero() {
        let t = table(
            &[
                &[0.0, 0.0],
                &[5.0, 5.0],
                &[0.0, 0.0],
                &[9.0, 1.0],
                &[5.0, 5.0],
            ],
            2,
        );
        let m = k_means(&t, 3, 10, 4).unwrap();
        assert_eq!(m.costs[0], 0.0);
        assert_eq!(m.assignments[0], m.assignments[2]);
        assert_eq!(m.assignments[1], m.assignments[4]);
    }

    #[test]
    fn single_cluster_is_mean() {
        let t = table(&[&[1.0, 2.0], &[3.0, 6.0], &[5.0, 1.0]], 2);
        let m = k_means(&t, 1, 5, 0).unwrap();
        assert_eq!(m.assignments, vec![0, 0, 0]);
        assert_eq!(m.centroids.row_values(0).unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn rejects_bad_k() {
        let t = table(&[&[1.0]], 1);
        assert!(matches!(k_means(&t, 0, 1, 0), Err(Error::Config(_))));
        assert!(matches!(k_means(&t, 2, 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_points_fill_surplus_centroids() {
        let t = table(&[&[1.0], &[1.0], &[1.0]], 1);
        let m = k_means(&t, 2, 3, 0).unwrap();
        assert_eq!(m.assignments, vec![0, 0, 0]);
        assert_eq!(m.costs, vec![0.0, 0.0]);
    }

    #[test]
    fn predict_matches_assignment() {
        let t = table(&[&[0.0], &[0.1], &[10.0], &[10.2]], 2);
        let m = k_means(&t, 2, 10, 1).unwrap();
        for (i, x) in t.to_vectors().iter().enumerate() {
            assert_eq!(m.predict(x).unwrap(), m.assignments[i]);
        }
        assert!(m.predict(&[1.0, 2.0]).is_err());
    }
}
