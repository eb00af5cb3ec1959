//! End-to-end runs behind the subcommands.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::time::Instant;

use mlkit::datagen::{generate_classification_data, generate_low_rank_ratings, tile_ratings};
use mlkit::learn::{
    als_objective, als_train, k_means, n_grams_table, tf_idf, Algorithm, FactorizationModel,
    LabeledTable, LogisticModel, LogisticRegression, RatingsMatrix,
};
use mlkit::localmatrix::read_triplets;
use mlkit::mltable::read_corpus;
use mlkit::{Error, MLRow, MLTable, Result, WorkerPool};

use crate::config::{ExperimentConfig, Mode, RatingsSource, Scaling, TextConfig};
use crate::report::{ScalingReport, ScalingRow};

/// Wall time of `f` in seconds, kept strictly positive.
fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let value = f()?;
    Ok((value, start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE)))
}

pub struct LogisticRun {
    pub model: LogisticModel,
    pub accuracy: f64,
    pub seconds: f64,
}

/// Generated separable classification data with `points` rows split into
/// one partition per worker.
pub fn classification_data(
    config: &ExperimentConfig,
    points: usize,
    workers: usize,
) -> Result<LabeledTable> {
    let data = generate_classification_data(points, config.features, config.seed, workers)?.data;
    LabeledTable::new(
        data.features.with_pool(WorkerPool::new(workers)?),
        data.labels,
    )
}

fn train_logistic(config: &ExperimentConfig, data: &LabeledTable) -> Result<LogisticRun> {
    let (model, seconds) = timed(|| LogisticRegression.train(data, &config.sgd))?;
    let accuracy = model.accuracy(&data.features, &data.labels)?;
    Ok(LogisticRun {
        model,
        accuracy,
        seconds,
    })
}

/// Trains on `config.points` generated points using the first worker count.
pub fn run_logistic(config: &ExperimentConfig) -> Result<LogisticRun> {
    let data = classification_data(config, config.points, config.workers[0])?;
    train_logistic(config, &data)
}

pub struct AlsRun {
    pub model: FactorizationModel,
    pub rmse: f64,
    pub objective: f64,
    pub seconds: f64,
}

/// The untiled ratings: read from a triplet file or generated.
pub fn base_ratings(config: &ExperimentConfig) -> Result<RatingsMatrix> {
    match &config.ratings {
        RatingsSource::File(path) => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let entries = read_triplets(BufReader::new(file))?;
            let users = entries.iter().map(|e| e.row + 1).max().unwrap_or(0);
            let items = entries.iter().map(|e| e.col + 1).max().unwrap_or(0);
            RatingsMatrix::from_triplets(users, items, &entries)
        }
        &RatingsSource::Generated {
            users,
            items,
            density,
        } => Ok(
            generate_low_rank_ratings(users, items, config.als.rank, density, config.seed)?.ratings,
        ),
    }
}

fn train_als(config: &ExperimentConfig, ratings: &RatingsMatrix) -> Result<AlsRun> {
    let (model, seconds) = timed(|| als_train(ratings, &config.als))?;
    Ok(AlsRun {
        rmse: model.rmse(ratings)?,
        objective: als_objective(&model, ratings, config.als.lambda)?,
        model,
        seconds,
    })
}

fn tiled(base: &RatingsMatrix, tile: usize, workers: usize) -> Result<RatingsMatrix> {
    Ok(tile_ratings(base, tile)?
        .with_partitions(workers)?
        .with_pool(WorkerPool::new(workers)?))
}

/// Trains on the base ratings tiled `config.tile` times using the first
/// worker count.
pub fn run_als(config: &ExperimentConfig) -> Result<AlsRun> {
    let workers = config.workers[0];
    let ratings = tiled(&base_ratings(config)?, config.tile, workers)?;
    train_als(config, &ratings)
}

/// One k-means cluster of a text corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub size: usize,
    /// Up to five terms with the largest centroid weight, heaviest first.
    pub top_terms: Vec<String>,
}

/// Result of the text clustering pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TextClusters {
    /// Cluster of every document, in file order.
    pub assignments: Vec<usize>,
    pub clusters: Vec<ClusterSummary>,
    /// Final k-means cost.
    pub cost: f64,
    pub seconds: f64,
}

impl TextClusters {
    /// CSV with header `docIndex,cluster`.
    pub fn write_assignments<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["docIndex", "cluster"])?;
        for (i, c) in self.assignments.iter().enumerate() {
            w.write_record([i.to_string(), c.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<assignments>", e))?;
        Ok(())
    }

    /// One line per cluster: its size and top terms.
    pub fn summary(&self) -> String {
        self.clusters
            .iter()
            .enumerate()
            .map(|(c, s)| {
                format!(
                    "cluster {c} ({} docs): {}\n",
                    s.size,
                    s.top_terms.join(", ")
                )
            })
            .collect()
    }
}

const TOP_TERMS: usize = 5;

fn cluster_corpus(corpus: &MLTable, text: &TextConfig, seed: u64) -> Result<TextClusters> {
    let terms = n_grams_table(corpus, 0, text.ngram)?;
    let features = tf_idf(&terms, corpus.num_rows())?;
    let (model, seconds) = timed(|| k_means(&features.features, text.k, text.iterations, seed))?;
    let clusters = (0..model.k())
        .map(|c| {
            let weights = model.centroids.row_values(c)?;
            let mut order: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] > 0.0).collect();
            // stable sort keeps vocabulary order among equal weights
            order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
            Ok(ClusterSummary {
                size: model.assignments.iter().filter(|&&a| a == c).count(),
                top_terms: order
                    .into_iter()
                    .take(TOP_TERMS)
                    .map(|j| features.vocabulary[j].clone())
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TextClusters {
        cost: *model
            .costs
            .last()
            .expect("k-means records the seeding cost"),
        assignments: model.assignments,
        clusters,
        seconds,
    })
}

fn load_corpus(path: &Path, workers: usize) -> Result<MLTable> {
    let corpus = read_corpus(path, Some(workers))?;
    if corpus.num_rows() == 0 {
        return Err(Error::Config(format!(
            "{}: corpus has no documents",
            path.display()
        )));
    }
    Ok(corpus.with_pool(WorkerPool::new(workers)?))
}

fn corpus_path(text: &TextConfig) -> Result<&Path> {
    text.corpus
        .as_deref()
        .ok_or_else(|| Error::Config("no corpus given (use --input)".into()))
}

/// Loads one document per line, extracts word n-grams, computes tf-idf
/// features and clusters them with k-means.
pub fn run_text_pipeline(
    corpus: &Path,
    ngram: usize,
    k: usize,
    iterations: usize,
    seed: u64,
    workers: usize,
) -> Result<TextClusters> {
    let text = TextConfig {
        corpus: Some(corpus.to_path_buf()),
        ngram,
        k,
        iterations,
    };
    cluster_corpus(&load_corpus(corpus, workers)?, &text, seed)
}

/// Runs `config.mode` once per worker count.
///
/// Under weak scaling the data grows with the worker count: `points` per
/// worker for logistic regression, `tile` copies of the base ratings per
/// worker for ALS, and one copy of the corpus per worker for text
/// clustering. Otherwise every run sees the same data. Only the training
/// call is timed.
pub fn run_scaling(config: &ExperimentConfig) -> Result<ScalingReport> {
    let weak = config.scaling == Scaling::Weak;
    let factor = |w: usize| if weak { w } else { 1 };
    let mut rows = Vec::with_capacity(config.workers.len());
    match config.mode {
        Mode::Logistic => {
            let fixed = if weak {
                None
            } else {
                Some(
                    generate_classification_data(config.points, config.features, config.seed, 1)?
                        .data,
                )
            };
            for &w in &config.workers {
                let scale = config.points * factor(w);
                let data = match &fixed {
                    Some(d) => LabeledTable::new(
                        d.features.repartition(w)?.with_pool(WorkerPool::new(w)?),
                        d.labels.clone(),
                    )?,
                    None => classification_data(config, scale, w)?,
                };
                let run = train_logistic(config, &data)?;
                rows.push(row(config.mode, w, scale, run.seconds, run.accuracy));
            }
        }
        Mode::Als => {
            let base = base_ratings(config)?;
            for &w in &config.workers {
                let scale = config.tile * factor(w);
                let run = train_als(config, &tiled(&base, scale, w)?)?;
                rows.push(row(config.mode, w, scale, run.seconds, run.rmse));
            }
        }
        Mode::ClusterText => {
            let path = corpus_path(&config.text)?;
            for &w in &config.workers {
                let corpus = load_corpus(path, w)?;
                let copies: Vec<MLRow> = (0..factor(w))
                    .flat_map(|_| corpus.rows().cloned())
                    .collect();
                let corpus = MLTable::with_partitions(corpus.schema().clone(), copies, w)?
                    .with_pool(WorkerPool::new(w)?);
                let run = cluster_corpus(&corpus, &config.text, config.seed)?;
                rows.push(row(
                    config.mode,
                    w,
                    corpus.num_rows(),
                    run.seconds,
                    run.cost,
                ));
            }
        }
    }
    Ok(ScalingReport { rows })
}

fn row(mode: Mode, workers: usize, scale: usize, seconds: f64, metric: f64) -> ScalingRow {
    ScalingRow {
        mode,
        workers,
        scale,
        seconds,
        metric,
    }
}

/// The text pipeline as configured, using the first worker count.
pub fn run_cluster_text(config: &ExperimentConfig) -> Result<TextClusters> {
    let text = &config.text;
    run_text_pipeline(
        corpus_path(text)?,
        text.ngram,
        text.k,
        text.iterations,
        config.seed,
        config.workers[0],
    )
}
