//! Data-parallel machine learning building blocks.
//!
//! * [`mltable`]: immutable, partitioned tables of typed rows with relational
//!   and map/reduce operations, plus the all-numeric [`MLNumericTable`].
//! * [`localmatrix`]: dense and CSR matrices local to a partition, with the
//!   linear algebra the learners need.
//! * [`engine`]: the worker pool, master-side weighted averaging and
//!   broadcast that every algorithm uses to communicate.
//! * [`learn`]: optimizer, algorithm and model interfaces with logistic
//!   regression (gradient descent and locally averaged SGD), alternating
//!   least squares, k-means, and n-gram/tf-idf featurization.
//! * [`datagen`]: synthetic workloads for experiments.
//!
//! ```
//! use mlkit::learn::{LogisticRegression, SgdConfig, Model, Algorithm};
//! use mlkit::datagen::generate_classification_data;
//!
//! let synthetic = generate_classification_data(400, 5, 7, 4).unwrap();
//! let config = SgdConfig { learning_rate: 0.5, rounds: 10, ..SgdConfig::default() };
//! let model = LogisticRegression.train(&synthetic.data, &config).unwrap();
//!
//! let features = &synthetic.data.features;
//! let accuracy = model.accuracy(features, &synthetic.data.labels).unwrap();
//! assert!(accuracy > 0.95);
//! let first = features.to_vectors().remove(0);
//! assert!(model.predict(&first).unwrap() == synthetic.data.labels[0] || accuracy < 1.0);
//! ```

pub mod datagen;
pub mod engine;
pub mod error;
pub mod learn;
pub mod localmatrix;
pub mod mltable;

pub use engine::{broadcast, gather_average, Broadcast, WorkerPool};
pub use error::{Error, Result};
pub use localmatrix::LocalMatrix;
pub use mltable::{MLNumericTable, MLRow, MLTable, MLValue, Schema, ValueKind};
