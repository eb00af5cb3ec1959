//! Experiment settings from command-line flags and `key=value` files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use mlkit::engine::default_workers;
use mlkit::learn::{AlsConfig, SgdConfig};
use mlkit::{Error, Result};

/// Which algorithm an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Logistic,
    Als,
    ClusterText,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Logistic => "logistic",
            Mode::Als => "als",
            Mode::ClusterText => "cluster-text",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "logistic" => Ok(Mode::Logistic),
            "als" => Ok(Mode::Als),
            "cluster-text" => Ok(Mode::ClusterText),
            _ => Err(format!(
                "unknown mode {s:?} (expected logistic, als or cluster-text)"
            )),
        }
    }
}

/// How the data grows with the worker count in a scaling experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// Data proportional to the number of workers.
    Weak,
    /// Fixed data, varying workers.
    Strong,
    /// A single run per worker count at the configured size.
    None,
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scaling::Weak => "weak",
            Scaling::Strong => "strong",
            Scaling::None => "none",
        })
    }
}

impl FromStr for Scaling {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "weak" => Ok(Scaling::Weak),
            "strong" => Ok(Scaling::Strong),
            "none" => Ok(Scaling::None),
            _ => Err(format!(
                "unknown scaling {s:?} (expected weak, strong or none)"
            )),
        }
    }
}

/// Comma-separated list of positive worker counts, e.g. `1,2,4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerList(pub Vec<usize>);

impl FromStr for WorkerList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let workers = s
            .split(',')
            .map(|w| match w.trim().parse::<usize>() {
                Ok(0) => Err("worker counts must be positive".to_string()),
                Ok(n) => Ok(n),
                Err(e) => Err(format!("bad worker count {w:?}: {e}")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(WorkerList(workers))
    }
}

/// Every tunable of an experiment, each optional so that a config file and
/// the command line can be layered. Config file keys are the flag names
/// without the leading dashes.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// key=value file with defaults for any of these flags
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Algorithm for `scaling`: logistic, als or cluster-text
    #[arg(long)]
    pub mode: Option<Mode>,
    /// weak, strong or none
    #[arg(long)]
    pub scaling: Option<Scaling>,
    /// Worker counts, comma separated
    #[arg(long)]
    pub workers: Option<WorkerList>,
    /// Number of points (per worker under weak scaling)
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of features
    #[arg(long)]
    pub d: Option<usize>,
    /// Block-diagonal tiling factor of the ratings (per worker under weak scaling)
    #[arg(long)]
    pub tile: Option<usize>,
    /// Users of the generated base ratings
    #[arg(long)]
    pub users: Option<usize>,
    /// Items of the generated base ratings
    #[arg(long)]
    pub items: Option<usize>,
    /// Fraction of observed entries in the generated base ratings
    #[arg(long)]
    pub density: Option<f64>,
    /// Ratings file with `user item rating` lines instead of generated data
    #[arg(long, value_name = "FILE")]
    pub ratings: Option<PathBuf>,
    /// Factorization rank
    #[arg(long)]
    pub rank: Option<usize>,
    /// Regularization strength
    #[arg(long)]
    pub lambda: Option<f64>,
    /// ALS or k-means iterations
    #[arg(long)]
    pub iters: Option<usize>,
    /// SGD learning rate
    #[arg(long)]
    pub eta: Option<f64>,
    /// SGD averaging rounds
    #[arg(long)]
    pub rounds: Option<usize>,
    /// SGD passes over each partition between averaging rounds
    #[arg(long)]
    pub local_passes: Option<usize>,
    /// Corpus file, one document per line
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Number of clusters
    #[arg(long)]
    pub k: Option<usize>,
    /// Word n-gram length
    #[arg(long)]
    pub ngram: Option<usize>,
    /// Seed for data generation and the algorithms
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn parse_field<T: FromStr>(key: &str, value: &str, line: usize) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    value.parse().map(Some).map_err(|e| Error::Parse {
        line,
        message: format!("bad value {value:?} for {key}: {e}"),
    })
}

impl Settings {
    /// Parses a `key=value` file. Blank lines and `#` comments are skipped;
    /// keys may use `-` or `_`.
    pub fn parse(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected key=value, found {content:?}"),
            })?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            match key.as_str() {
                "mode" => s.mode = parse_field(&key, value, line)?,
                "scaling" => s.scaling = parse_field(&key, value, line)?,
                "workers" => s.workers = parse_field(&key, value, line)?,
                "n" => s.n = parse_field(&key, value, line)?,
                "d" => s.d = parse_field(&key, value, line)?,
                "tile" => s.tile = parse_field(&key, value, line)?,
                "users" => s.users = parse_field(&key, value, line)?,
                "items" => s.items = parse_field(&key, value, line)?,
                "density" => s.density = parse_field(&key, value, line)?,
                "ratings" => s.ratings = Some(value.into()),
                "rank" => s.rank = parse_field(&key, value, line)?,
                "lambda" => s.lambda = parse_field(&key, value, line)?,
                "iters" => s.iters = parse_field(&key, value, line)?,
                "eta" => s.eta = parse_field(&key, value, line)?,
                "rounds" => s.rounds = parse_field(&key, value, line)?,
                "local-passes" => s.local_passes = parse_field(&key, value, line)?,
                "input" => s.input = Some(value.into()),
                "k" => s.k = parse_field(&key, value, line)?,
                "ngram" => s.ngram = parse_field(&key, value, line)?,
                "seed" => s.seed = parse_field(&key, value, line)?,
                "out" => s.out = Some(value.into()),
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown key {key:?}"),
                    })
                }
            }
        }
        Ok(s)
    }

    pub fn read(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Settings::parse(&text).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }

    /// Command-line settings layered over the config file they name, if any.
    pub fn resolve(self) -> Result<Settings> {
        match &self.config {
            Some(path) => Ok(Settings::read(path)?.overridden_by(self)),
            None => Ok(self),
        }
    }

    /// `self` with every field that `other` sets replaced by `other`'s value.
    pub fn overridden_by(self, other: Settings) -> Settings {
        Settings {
            config: other.config.or(self.config),
            mode: other.mode.or(self.mode),
            scaling: other.scaling.or(self.scaling),
            workers: other.workers.or(self.workers),
            n: other.n.or(self.n),
            d: other.d.or(self.d),
            tile: other.tile.or(self.tile),
            users: other.users.or(self.users),
            items: other.items.or(self.items),
            density: other.density.or(self.density),
            ratings: other.ratings.or(self.ratings),
            rank: other.rank.or(self.rank),
            lambda: other.lambda.or(self.lambda),
            iters: other.iters.or(self.iters),
            eta: other.eta.or(self.eta),
            rounds: other.rounds.or(self.rounds),
            local_passes: other.local_passes.or(self.local_passes),
            input: other.input.or(self.input),
            k: other.k.or(self.k),
            ngram: other.ngram.or(self.ngram),
            seed: other.seed.or(self.seed),
            out: other.out.or(self.out),
        }
    }
}

/// Where the ratings of an ALS experiment come from.
#[derive(Debug, Clone, PartialEq)]
pub enum RatingsSource {
    File(PathBuf),
    /// Exactly low-rank ratings with `rank` equal to the training rank.
    Generated {
        users: usize,
        items: usize,
        density: f64,
    },
}

/// Settings of the text clustering pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TextConfig {
    pub corpus: Option<PathBuf>,
    pub ngram: usize,
    pub k: usize,
    pub iterations: usize,
}

/// A fully specified experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub scaling: Scaling,
    pub workers: Vec<usize>,
    /// Classification points: the total for a single run or strong
    /// scaling, per worker for weak scaling.
    pub points: usize,
    pub features: usize,
    pub ratings: RatingsSource,
    /// Tiling factor: the total for a single run or strong scaling, per
    /// worker for weak scaling.
    pub tile: usize,
    pub sgd: SgdConfig,
    pub als: AlsConfig,
    pub text: TextConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Fills every unset field with its default for `mode` and `scaling`
    /// and validates the result.
    ///
    /// Classification defaults to 2000 points in 10 dimensions for single
    /// runs. Scaling runs default to 100 features and 100 000 points for
    /// strong scaling, i.e. the weak-scaling size at four workers of 25 000
    /// points each.
    pub fn new(mode: Mode, scaling: Scaling, s: &Settings) -> Result<ExperimentConfig> {
        let scaled = scaling != Scaling::None;
        let points = s.n.unwrap_or(match scaling {
            Scaling::None => 2_000,
            Scaling::Weak => 25_000,
            Scaling::Strong => 100_000,
        });
        let features = s.d.unwrap_or(if scaled { 100 } else { 10 });
        let workers = match &s.workers {
            Some(list) => list.0.clone(),
            None if scaled => vec![1, 2, 4],
            None => vec![default_workers()],
        };
        let tile = s
            .tile
            .unwrap_or(if scaling == Scaling::Strong { 4 } else { 1 });
        let seed = s.seed.unwrap_or(0);
        let sgd_default = SgdConfig::default();
        let als_default = AlsConfig::default();
        let ratings = match &s.ratings {
            Some(path) => RatingsSource::File(path.clone()),
            None => RatingsSource::Generated {
                users: s.users.unwrap_or(200),
                items: s.items.unwrap_or(150),
                density: s.density.unwrap_or(0.3),
            },
        };
        let config = ExperimentConfig {
            mode,
            scaling,
            workers,
            points,
            features,
            ratings,
            tile,
            sgd: SgdConfig {
                learning_rate: s.eta.unwrap_or(sgd_default.learning_rate),
                rounds: s.rounds.unwrap_or(sgd_default.rounds),
                local_passes: s.local_passes.unwrap_or(sgd_default.local_passes),
                seed,
            },
            als: AlsConfig {
                rank: s.rank.unwrap_or(als_default.rank),
                lambda: s.lambda.unwrap_or(als_default.lambda),
                iterations: s.iters.unwrap_or(als_default.iterations),
                seed,
            },
            text: TextConfig {
                corpus: s.input.clone(),
                ngram: s.ngram.unwrap_or(1),
                k: s.k.unwrap_or(4),
                iterations: s.iters.unwrap_or(20),
            },
            seed,
            out: s.out.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.workers.is_empty() {
            return fail("the workers list is empty".into());
        }
        if self.workers.contains(&0) {
            return fail("worker counts must be positive".into());
        }
        if self.tile == 0 {
            return fail("tiling factor must be at least 1".into());
        }
        if self.points == 0 || self.features == 0 {
            return fail(format!(
                "need at least one point and one feature, got n={}, d={}",
                self.points, self.features
            ));
        }
        if let RatingsSource::Generated {
            users,
            items,
            density,
        } = self.ratings
        {
            if users == 0 || items == 0 {
                return fail("generated ratings need at least one user and one item".into());
            }
            if !(density > 0.0 && density <= 1.0) {
                return fail(format!("density must be in (0, 1], got {density}"));
            }
        }
        if self.text.ngram == 0 {
            return fail("n-gram length must be at least 1".into());
        }
        if self.text.k == 0 {
            return fail("k must be at least 1".into());
        }
        self.sgd.validate()?;
        self.als.validate()
    }
}
