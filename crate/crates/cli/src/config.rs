//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sfem::chaining::{Distance, ModelKind};
use sfem::corpus::{Decade, TableParams, VocabularyFilter};
use sfem::knowledge::ModalityMask;
use sfem::linalg::RandomizedSvdOptions;
use sfem::neuralnet::{NetworkShape, SgdConfig};
use sfem::rng::derive_seed;
use sfem::training::{SplitSpec, TrainConfig};

use crate::CliError;

pub const SEED_ENV: &str = "SFEM_SEED";

/// Numeric precision of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

/// Every setting of a pipeline run. Relative paths are resolved against the
/// directory of the configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub base_dir: PathBuf,
    pub triples: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub linguistic: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub frequencies: Option<PathBuf>,
    pub out: PathBuf,

    pub dim: usize,
    pub image_dim: usize,
    /// Prediction decades; empty means every decade with a non-empty table.
    pub decades: Vec<Decade>,

    pub filter: VocabularyFilter,
    pub table: TableParams,
    pub concept_min_count: u64,
    pub svd_oversample: usize,
    pub svd_power_iterations: usize,

    pub kind: ModelKind,
    pub mask: ModalityMask,
    pub distance: Distance,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_frames: usize,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub warm_start: bool,
    pub precision: Precision,

    pub seed: u64,
    pub ablation_top_k: usize,
    pub pca_decade: Option<Decade>,
    pub pca_frames: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            base_dir: PathBuf::from("."),
            triples: None,
            graph: None,
            linguistic: None,
            images: None,
            frequencies: None,
            out: PathBuf::from("out"),
            dim: 300,
            image_dim: 1000,
            decades: Vec::new(),
            filter: VocabularyFilter::default(),
            table: TableParams::default(),
            concept_min_count: 10,
            svd_oversample: 10,
            svd_power_iterations: 7,
            kind: ModelKind::Exemplar,
            mask: ModalityMask::ALL,
            distance: Distance::Euclidean,
            hidden: vec![300, 200, 100],
            learning_rate: 0.1,
            epochs: 200,
            batch_frames: 64,
            train_fraction: 0.7,
            validation_fraction: 0.1,
            warm_start: true,
            precision: Precision::F64,
            seed: 0,
            ablation_top_k: 10,
            pca_decade: None,
            pca_frames: Vec::new(),
        }
    }
}

// Streams for seeds derived from the base seed.
const STREAM_SPLIT: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_SGD: u64 = 3;
const STREAM_PROJECTION: u64 = 4;
const STREAM_SVD: u64 = 5;
const STREAM_RANDOM_BASELINE: u64 = 6;

fn bad(key: &str, value: &str, expected: &str) -> CliError {
    CliError::Config(format!("{key} = {value:?}: expected {expected}"))
}

fn parse_num<N: std::str::FromStr>(key: &str, value: &str) -> Result<N, CliError> {
    value.parse().map_err(|_| bad(key, value, "a number"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "true or false")),
    }
}

fn parse_list<N: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<N>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("config line {}: expected key = value", i + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Reads a configuration file, then applies `overrides` in order. When
    /// neither sets `seed`, `SFEM_SEED` is consulted.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut pairs = Vec::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            pairs = parse_pairs(&text)?;
            cfg.base_dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
            if cfg.base_dir.as_os_str().is_empty() {
                cfg.base_dir = PathBuf::from(".");
            }
        }
        pairs.extend(overrides.iter().cloned());
        cfg.out = cfg.base_dir.join("out");
        let mut seed_set = false;
        for (k, v) in &pairs {
            seed_set |= k == "seed";
            cfg.set(k, v)?;
        }
        if !seed_set {
            if let Ok(v) = std::env::var(SEED_ENV) {
                cfg.seed = parse_num(SEED_ENV, v.trim())?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn path(&self, value: &str) -> PathBuf {
        let p = PathBuf::from(value);
        if p.is_absolute() {
            p
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "triples" => self.triples = Some(self.path(value)),
            "graph" => self.graph = Some(self.path(value)),
            "linguistic" => self.linguistic = Some(self.path(value)),
            "images" => self.images = Some(self.path(value)),
            "frequencies" => self.frequencies = Some(self.path(value)),
            "out" => self.out = self.path(value),
            "dim" => self.dim = parse_num(key, value)?,
            "image_dim" => self.image_dim = parse_num(key, value)?,
            "decades" => self.decades = parse_list(key, value)?,
            "min_images" => self.filter.min_images = parse_num(key, value)?,
            "min_concept_edges" => self.filter.min_concept_edges = parse_num(key, value)?,
            "min_noun_count" => self.filter.min_noun_count = parse_num(key, value)?,
            "min_verb_count" => self.filter.min_verb_count = parse_num(key, value)?,
            "top_relations" => self.filter.top_relations = parse_num(key, value)?,
            "theta_q" => self.table.theta_q = parse_num(key, value)?,
            "theta_s" => self.table.theta_s = parse_num(key, value)?,
            "delta" => self.table.delta = parse_num(key, value)?,
            "min_support" => self.table.min_support = parse_num(key, value)?,
            "min_query" => self.table.min_query = parse_num(key, value)?,
            "concept_min_count" => self.concept_min_count = parse_num(key, value)?,
            "svd_oversample" => self.svd_oversample = parse_num(key, value)?,
            "svd_power_iterations" => self.svd_power_iterations = parse_num(key, value)?,
            "kind" => self.kind = value.parse().map_err(|_| bad(key, value, "dem or dpm"))?,
            "mask" => self.mask = value.parse().map_err(|e: String| CliError::Config(e))?,
            "distance" => {
                self.distance = match value {
                    "euclidean" => Distance::Euclidean,
                    "squared_euclidean" => Distance::SquaredEuclidean,
                    _ => return Err(bad(key, value, "euclidean or squared_euclidean")),
                }
            }
            "hidden" => self.hidden = parse_list(key, value)?,
            "learning_rate" => self.learning_rate = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "batch_frames" => self.batch_frames = parse_num(key, value)?,
            "train_fraction" => self.train_fraction = parse_num(key, value)?,
            "validation_fraction" => self.validation_fraction = parse_num(key, value)?,
            "warm_start" => self.warm_start = parse_bool(key, value)?,
            "precision" => {
                self.precision = match value {
                    "f32" => Precision::F32,
                    "f64" => Precision::F64,
                    _ => return Err(bad(key, value, "f32 or f64")),
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            "ablation_top_k" => self.ablation_top_k = parse_num(key, value)?,
            "pca_decade" => self.pca_decade = Some(parse_num(key, value)?),
            "pca_frames" => {
                self.pca_frames = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            _ => {
                return Err(CliError::Config(format!(
                    "unknown configuration key {key:?}"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.filter
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.table
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.dim == 0 || self.image_dim == 0 {
            return Err(CliError::Config("dimensions must be positive".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(CliError::Config(
                "hidden layer sizes must be positive".into(),
            ));
        }
        self.sgd()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.split()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.decades.iter().any(|d| d.rem_euclid(10) != 0) {
            return Err(CliError::Config(format!(
                "decades {:?} must be multiples of 10",
                self.decades
            )));
        }
        Ok(())
    }

    /// A configured input file, checked to exist.
    pub fn input(&self, key: &str) -> Result<&Path, CliError> {
        let p = match key {
            "triples" => &self.triples,
            "graph" => &self.graph,
            "linguistic" => &self.linguistic,
            "images" => &self.images,
            "frequencies" => &self.frequencies,
            _ => unreachable!("not an input key: {key}"),
        }
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("missing configuration key {key:?}")))?;
        if !p.is_file() {
            return Err(CliError::Io(format!(
                "{key} file {} does not exist",
                p.display()
            )));
        }
        Ok(p)
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape::new(self.dim, &self.hidden)
    }

    pub fn split(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            validation_fraction: self.validation_fraction,
            seed: derive_seed(self.seed, STREAM_SPLIT),
        }
    }

    pub fn sgd(&self) -> SgdConfig {
        SgdConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_frames: self.batch_frames,
            seed: derive_seed(self.seed, STREAM_SGD),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            kind: self.kind,
            distance: self.distance,
            mask: self.mask,
            sgd: self.sgd(),
            split: self.split(),
            warm_start: self.warm_start,
        }
    }

    pub fn init_seed(&self) -> u64 {
        derive_seed(self.seed, STREAM_INIT)
    }

    pub fn projection_seed(&self) -> u64 {
        derive_seed(self.seed, STREAM_PROJECTION)
    }

    pub fn svd_options(&self) -> RandomizedSvdOptions {
        RandomizedSvdOptions {
            oversample: self.svd_oversample,
            power_iterations: self.svd_power_iterations,
            seed: derive_seed(self.seed, STREAM_SVD),
        }
    }

    pub fn random_baseline_seed(&self) -> u64 {
        derive_seed(self.seed, STREAM_RANDOM_BASELINE)
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.out.join("dataset")
    }

    pub fn concepts_dir(&self) -> PathBuf {
        self.out.join("concepts")
    }

    pub fn model_dir(&self, kind: ModelKind, mask: ModalityMask) -> PathBuf {
        self.out
            .join("models")
            .join(format!("{}-{}", kind.short_name(), mask))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.out.join("reports")
    }

    /// Every setting as `key=value` lines, for run manifests.
    pub fn provenance(&self) -> BTreeMap<String, String> {
        let p = |o: &Option<PathBuf>| {
            o.as_ref()
                .map_or("-".to_string(), |p| p.display().to_string())
        };
        let list = |xs: &[usize]| {
            xs.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut m = BTreeMap::new();
        m.insert("triples".into(), p(&self.triples));
        m.insert("graph".into(), p(&self.graph));
        m.insert("linguistic".into(), p(&self.linguistic));
        m.insert("images".into(), p(&self.images));
        m.insert("frequencies".into(), p(&self.frequencies));
        m.insert("dim".into(), self.dim.to_string());
        m.insert("image_dim".into(), self.image_dim.to_string());
        m.insert("min_images".into(), self.filter.min_images.to_string());
        m.insert(
            "min_concept_edges".into(),
            self.filter.min_concept_edges.to_string(),
        );
        m.insert(
            "min_noun_count".into(),
            self.filter.min_noun_count.to_string(),
        );
        m.insert(
            "min_verb_count".into(),
            self.filter.min_verb_count.to_string(),
        );
        m.insert(
            "top_relations".into(),
            self.filter.top_relations.to_string(),
        );
        m.insert("theta_q".into(), self.table.theta_q.to_string());
        m.insert("theta_s".into(), self.table.theta_s.to_string());
        m.insert("delta".into(), self.table.delta.to_string());
        m.insert(
            "concept_min_count".into(),
            self.concept_min_count.to_string(),
        );
        m.insert("kind".into(), self.kind.short_name().into());
        m.insert("mask".into(), self.mask.to_string());
        m.insert(
            "distance".into(),
            format!("{:?}", self.distance).to_lowercase(),
        );
        m.insert("hidden".into(), list(&self.hidden));
        m.insert("learning_rate".into(), self.learning_rate.to_string());
        m.insert("epochs".into(), self.epochs.to_string());
        m.insert("batch_frames".into(), self.batch_frames.to_string());
        m.insert("train_fraction".into(), self.train_fraction.to_string());
        m.insert(
            "validation_fraction".into(),
            self.validation_fraction.to_string(),
        );
        m.insert("warm_start".into(), self.warm_start.to_string());
        m.insert(
            "precision".into(),
            format!("{:?}", self.precision).to_lowercase(),
        );
        m.insert("seed".into(), self.seed.to_string());
        m
    }
}
