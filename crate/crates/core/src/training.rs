//! Per-decade training of the integration network under a chaining loss.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::warn;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chaining::{
    ChainingError, ChainingModel, Distance, IndexedCategories, ModelKind, Representations,
};
use crate::corpus::{Decade, Frame, FrameTable};
use crate::eval::rank_frames;
use crate::knowledge::{fuse, EmbeddingStore, KnowledgeError, Modality, ModalityMask};
use crate::neuralnet::{
    Dense, Gradients, IntegrationNetwork, NetError, NetworkShape, SgdConfig, Tape,
};
use crate::rng::{decade_stream, derive_seed, seeded};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("no input vector for noun {0:?}")]
    MissingInput(String),
    #[error("decade {decade} has no training queries")]
    NoTrainingQueries { decade: Decade },
    #[error("non-finite loss in epoch {epoch}, batch {batch} (frames {frames})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        frames: String,
    },
    #[error("validation scores became non-finite after epoch {epoch}")]
    NonFiniteValidation { epoch: usize },
    #[error("parameters became non-finite in epoch {epoch}, batch {batch} (frames {frames})")]
    Diverged {
        epoch: usize,
        batch: usize,
        frames: String,
    },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Chaining(#[from] ChainingError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error("checkpoint line {line}: {message}")]
    Checkpoint { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TrainError {
    /// Numerical aborts and invariant violations, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TrainError::NonFiniteLoss { .. }
                | TrainError::Diverged { .. }
                | TrainError::NonFiniteValidation { .. }
                | TrainError::Net(NetError::NonFiniteGradient { .. })
        )
    }
}

/// How query nouns are divided into train, validation and test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    /// Share of the training nouns held out for checkpoint selection.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), TrainError> {
        for (name, v) in [
            ("train", self.train_fraction),
            ("validation", self.validation_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(TrainError::InvalidSplit(format!(
                    "{name} fraction {v} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }

    /// `(train, validation, test)` noun counts for `n` query nouns.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        if n == 0 {
            return (0, 0, 0);
        }
        let train_total = ((self.train_fraction * n as f64).round() as usize).clamp(1, n);
        let mut val = (self.validation_fraction * train_total as f64).floor() as usize;
        if train_total >= 2 {
            val = val.max(1);
        }
        (train_total - val, val, n - train_total)
    }
}

/// Query nouns of one decade divided at the noun level.
#[derive(Debug, Clone)]
pub struct QuerySplit {
    pub train: FrameTable,
    pub validation: FrameTable,
    pub test: FrameTable,
    pub train_nouns: BTreeSet<String>,
    pub validation_nouns: BTreeSet<String>,
    pub test_nouns: BTreeSet<String>,
    pub warnings: Vec<String>,
}

/// Shuffles the sorted query nouns with a seed derived from the split seed
/// and the decade, then cuts them into train, validation and test. Every
/// split keeps all frames and their supports.
pub fn split_queries(table: &FrameTable, spec: &SplitSpec) -> Result<QuerySplit, TrainError> {
    spec.validate()?;
    let mut nouns: Vec<String> = table.query_nouns().into_iter().collect();
    let mut rng = seeded(derive_seed(spec.seed, decade_stream(table.decade)));
    nouns.shuffle(&mut rng);
    let (n_train, n_val, _) = spec.sizes(nouns.len());
    let train_nouns: BTreeSet<String> = nouns[..n_train].iter().cloned().collect();
    let validation_nouns: BTreeSet<String> =
        nouns[n_train..n_train + n_val].iter().cloned().collect();
    let test_nouns: BTreeSet<String> = nouns[n_train + n_val..].iter().cloned().collect();

    let mut warnings = Vec::new();
    if validation_nouns.is_empty() {
        warnings.push(format!("decade {}: no validation nouns", table.decade));
    }
    if test_nouns.is_empty() {
        warnings.push(format!("decade {}: no test nouns", table.decade));
    }
    let train = table.with_queries(|_, n| train_nouns.contains(n));
    for (f, e) in &train.entries {
        if e.queries.is_empty() {
            warnings.push(format!(
                "decade {}: frame {f} has no training queries",
                table.decade
            ));
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    Ok(QuerySplit {
        validation: table.with_queries(|_, n| validation_nouns.contains(n)),
        test: table.with_queries(|_, n| test_nouns.contains(n)),
        train,
        train_nouns,
        validation_nouns,
        test_nouns,
        warnings,
    })
}

/// Source of 300-d network inputs.
pub trait InputLookup<T>: Sync {
    fn input(&self, noun: &str) -> Option<&[T]>;
    fn dim(&self) -> usize;
}

/// The three unimodal stores; any of them may be absent.
#[derive(Debug, Clone, Default)]
pub struct ModalityStores<T> {
    pub perceptual: Option<EmbeddingStore<T>>,
    pub conceptual: Option<EmbeddingStore<T>>,
    pub linguistic: Option<EmbeddingStore<T>>,
}

impl<T: Scalar> ModalityStores<T> {
    pub fn get(&self, m: Modality) -> Option<&EmbeddingStore<T>> {
        match m {
            Modality::Perceptual => self.perceptual.as_ref(),
            Modality::Conceptual => self.conceptual.as_ref(),
            Modality::Linguistic => self.linguistic.as_ref(),
            Modality::Fused => None,
        }
    }

    fn lookup(&self, m: Modality, noun: &str, t: Decade) -> Option<&[T]> {
        self.get(m).and_then(|s| s.get(noun, t))
    }
}

/// Fused inputs of every noun needed at one decade under one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DecadeInputs<T> {
    pub decade: Decade,
    pub mask: ModalityMask,
    dim: usize,
    vectors: BTreeMap<String, Vec<T>>,
    /// Nouns with no vector in any selected modality; they get the zero input.
    pub zero_filled: BTreeSet<String>,
}

impl<T: Scalar> DecadeInputs<T> {
    pub fn build<'a>(
        nouns: impl IntoIterator<Item = &'a str>,
        decade: Decade,
        mask: ModalityMask,
        stores: &ModalityStores<T>,
        dim: usize,
    ) -> Result<Self, TrainError> {
        let mut vectors = BTreeMap::new();
        let mut zero_filled = BTreeSet::new();
        for noun in nouns {
            let v = match fuse(
                stores.lookup(Modality::Perceptual, noun, decade),
                stores.lookup(Modality::Conceptual, noun, decade),
                stores.lookup(Modality::Linguistic, noun, decade),
                mask,
            ) {
                Ok(v) => v,
                Err(KnowledgeError::AllMissing) => {
                    zero_filled.insert(noun.to_string());
                    vec![T::zero(); dim]
                }
                Err(e) => return Err(e.into()),
            };
            if v.len() != dim {
                return Err(KnowledgeError::DimensionMismatch {
                    token: noun.to_string(),
                    expected: dim,
                    found: v.len(),
                }
                .into());
            }
            vectors.insert(noun.to_string(), v);
        }
        Ok(Self {
            decade,
            mask,
            dim,
            vectors,
            zero_filled,
        })
    }

    pub fn from_vectors(
        decade: Decade,
        mask: ModalityMask,
        dim: usize,
        vectors: BTreeMap<String, Vec<T>>,
    ) -> Self {
        Self {
            decade,
            mask,
            dim,
            vectors,
            zero_filled: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn nouns(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }
}

impl<T: Scalar> InputLookup<T> for DecadeInputs<T> {
    fn input(&self, noun: &str) -> Option<&[T]> {
        self.vectors.get(noun).map(Vec::as_slice)
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

/// Wraps a lookup and records every noun read through it.
pub struct AuditedLookup<'a, L> {
    inner: &'a L,
    reads: Mutex<BTreeSet<String>>,
}

impl<'a, L> AuditedLookup<'a, L> {
    pub fn new(inner: &'a L) -> Self {
        Self {
            inner,
            reads: Mutex::new(BTreeSet::new()),
        }
    }

    pub fn reads(&self) -> BTreeSet<String> {
        self.reads.lock().expect("audit lock").clone()
    }
}

impl<T, L: InputLookup<T>> InputLookup<T> for AuditedLookup<'_, L> {
    fn input(&self, noun: &str) -> Option<&[T]> {
        self.reads
            .lock()
            .expect("audit lock")
            .insert(noun.to_string());
        self.inner.input(noun)
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }
}

fn input_matrix<T: Scalar>(
    lookup: &dyn InputLookup<T>,
    nouns: &[&str],
) -> Result<Array2<T>, TrainError> {
    let dim = lookup.dim();
    let mut x = Array2::zeros((nouns.len(), dim));
    for (i, n) in nouns.iter().enumerate() {
        let v = lookup
            .input(n)
            .ok_or_else(|| TrainError::MissingInput(n.to_string()))?;
        x.row_mut(i).assign(&ndarray::ArrayView1::from(v));
    }
    Ok(x)
}

/// `h = g(x)` for each noun.
pub fn represent<T: Scalar>(
    net: &IntegrationNetwork<T>,
    lookup: &dyn InputLookup<T>,
    nouns: &[&str],
) -> Result<Representations<T>, TrainError> {
    let h = net.forward_batch(&input_matrix(lookup, nouns)?)?;
    Ok(nouns
        .iter()
        .zip(h.rows())
        .map(|(n, r)| (n.to_string(), r.to_vec()))
        .collect())
}

/// Everything that determines a training run besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub distance: Distance,
    pub mask: ModalityMask,
    pub sgd: SgdConfig,
    pub split: SplitSpec,
    /// Start each decade from the previous decade's best parameters.
    pub warm_start: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Exemplar,
            distance: Distance::Euclidean,
            mask: ModalityMask::ALL,
            sgd: SgdConfig::default(),
            split: SplitSpec::default(),
            warm_start: true,
        }
    }
}

/// Summary of one decade's run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub decade: Decade,
    pub kind: ModelKind,
    pub mask: ModalityMask,
    /// Training loss `J` summed over the epoch's batches, one per epoch.
    pub loss_trace: Vec<f64>,
    /// Validation score per epoch; higher is better.
    pub validation_trace: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_score: f64,
    /// Parameter updates performed.
    pub steps: usize,
    pub checkpoint_path: Option<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub run: TrainRun,
    pub network: IntegrationNetwork<T>,
    pub split: QuerySplit,
}

fn intern<'a>(
    rows: &mut BTreeMap<&'a str, usize>,
    order: &mut Vec<&'a str>,
    noun: &'a str,
) -> usize {
    *rows.entry(noun).or_insert_with(|| {
        order.push(noun);
        order.len() - 1
    })
}

/// Loss and parameter gradients of the queries of `frames` (indices into
/// the table's frame order), normalizing over every frame of `table`.
pub fn batch_loss_grad<T: Scalar>(
    net: &IntegrationNetwork<T>,
    lookup: &dyn InputLookup<T>,
    table: &FrameTable,
    kind: ModelKind,
    distance: Distance,
    frames: &[usize],
) -> Result<(T, Gradients<T>), TrainError> {
    let entries: Vec<&crate::corpus::FrameEntry> = table.entries.values().collect();
    let mut rows: BTreeMap<&str, usize> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    let support_rows: Vec<Vec<usize>> = entries
        .iter()
        .map(|e| {
            e.supports
                .iter()
                .map(|s| intern(&mut rows, &mut order, s))
                .collect()
        })
        .collect();
    let mut examples = Vec::new();
    let total_supports: usize = support_rows.iter().map(Vec::len).sum();
    for &fi in frames {
        for q in &entries[fi].queries {
            examples.push((intern(&mut rows, &mut order, q), fi));
        }
    }
    let cats = IndexedCategories { support_rows };
    let x = input_matrix(lookup, &order)?;
    let mut tape = Tape::new();
    let h = net.forward_recorded(&x, &mut tape)?;
    let mut grad_h = Array2::zeros(h.dim());
    let mut loss = T::zero();
    for &(q, fi) in &examples {
        let log_prior =
            T::lit(cats.support_rows[fi].len() as f64).ln() - T::lit(total_supports as f64).ln();
        loss += crate::chaining::query_loss_grad(
            kind,
            distance,
            &h,
            &cats,
            q,
            fi,
            T::one(),
            &mut grad_h,
        ) - log_prior;
    }
    let grads = net.backward(&tape, &grad_h)?;
    Ok((loss, grads))
}

/// Mean reciprocal rank of each validation pair's frame under the posterior.
pub fn validation_mrr<T: Scalar>(
    net: &IntegrationNetwork<T>,
    lookup: &dyn InputLookup<T>,
    table: &FrameTable,
    kind: ModelKind,
    distance: Distance,
) -> Result<Option<f64>, TrainError> {
    let queries = table.query_nouns();
    if queries.is_empty() {
        return Ok(None);
    }
    let supports = table.support_nouns();
    let mut nouns: BTreeSet<&str> = supports.iter().map(String::as_str).collect();
    nouns.extend(queries.iter().map(String::as_str));
    let list: Vec<&str> = nouns.into_iter().collect();
    let reps = represent(net, lookup, &list)?;
    let model = ChainingModel::from_table(kind, distance, table, &reps)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for noun in &queries {
        let pred = rank_frames(noun, &reps[noun.as_str()], &model, table)?;
        for f in table.frames_with_query(noun) {
            if let Some(r) = pred.rank_of(&f.to_string()) {
                sum += 1.0 / r as f64;
                count += 1;
            }
        }
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Trains `net` in place on one decade and returns the best-validation
/// parameters. `lookup` must cover every support noun and every training
/// and validation query; test queries are never read.
pub fn train_decade<T: Scalar>(
    split: &QuerySplit,
    lookup: &dyn InputLookup<T>,
    net: IntegrationNetwork<T>,
    config: &TrainConfig,
) -> Result<(TrainRun, IntegrationNetwork<T>), TrainError> {
    config.sgd.validate()?;
    let train = &split.train;
    let decade = train.decade;
    let trainable: Vec<usize> = train
        .entries
        .values()
        .enumerate()
        .filter(|(_, e)| !e.queries.is_empty())
        .map(|(i, _)| i)
        .collect();
    if trainable.is_empty() {
        return Err(TrainError::NoTrainingQueries { decade });
    }
    let frames: Vec<&Frame> = train.frames().collect();
    let lr = T::lit(config.sgd.learning_rate);
    let mut rng = seeded(derive_seed(config.sgd.seed, decade_stream(decade)));
    let mut net = net;
    let mut best = net.clone();
    let mut best_score = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut loss_trace = Vec::with_capacity(config.sgd.epochs);
    let mut validation_trace = Vec::with_capacity(config.sgd.epochs);
    let mut steps = 0;
    let mut warnings = split.warnings.clone();
    let has_validation = !split.validation_nouns.is_empty();
    if !has_validation {
        warnings.push(format!(
            "decade {decade}: checkpoint chosen by training loss"
        ));
    }
    let mut order = trainable.clone();
    for epoch in 1..=config.sgd.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(config.sgd.batch_frames).enumerate() {
            let names = || {
                batch
                    .iter()
                    .map(|&i| frames[i].to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let (loss, grads) =
                batch_loss_grad(&net, lookup, train, config.kind, config.distance, batch)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: b,
                    frames: names(),
                });
            }
            net.apply_sgd(&grads, lr)?;
            if !net.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    batch: b,
                    frames: names(),
                });
            }
            epoch_loss += loss.as_f64();
            steps += 1;
        }
        loss_trace.push(epoch_loss);
        let score = if has_validation {
            match validation_mrr(
                &net,
                lookup,
                &split.validation,
                config.kind,
                config.distance,
            ) {
                Ok(s) => s.unwrap_or(f64::NEG_INFINITY),
                Err(TrainError::Eval(crate::eval::EvalError::NonFiniteScore(_))) => {
                    return Err(TrainError::NonFiniteValidation { epoch })
                }
                Err(e) => return Err(e),
            }
        } else {
            -epoch_loss
        };
        validation_trace.push(score);
        if score > best_score || best_epoch == 0 {
            best_score = score;
            best_epoch = epoch;
            best = net.clone();
        }
    }
    Ok((
        TrainRun {
            decade,
            kind: config.kind,
            mask: config.mask,
            loss_trace,
            validation_trace,
            best_epoch,
            best_score,
            steps,
            checkpoint_path: None,
            warnings,
        },
        best,
    ))
}

/// One decade's data for incremental training.
pub struct DecadeData<'a, T> {
    pub table: &'a FrameTable,
    pub lookup: &'a dyn InputLookup<T>,
}

/// Trains decades in the given (chronological) order. With warm start each
/// decade begins from the previous decade's best parameters; otherwise it
/// starts from a fresh initialization seeded by the decade.
pub fn train_incremental<T: Scalar>(
    decades: &[DecadeData<'_, T>],
    shape: &NetworkShape,
    init_seed: u64,
    config: &TrainConfig,
) -> Result<Vec<TrainOutcome<T>>, TrainError> {
    let mut out: Vec<TrainOutcome<T>> = Vec::with_capacity(decades.len());
    for d in decades {
        let split = split_queries(d.table, &config.split)?;
        let start = match out.last() {
            Some(prev) if config.warm_start => prev.network.clone(),
            _ if config.warm_start => IntegrationNetwork::init(shape, init_seed),
            _ => IntegrationNetwork::init(
                shape,
                derive_seed(init_seed, decade_stream(d.table.decade)),
            ),
        };
        let (run, network) = train_decade(&split, d.lookup, start, config)?;
        out.push(TrainOutcome {
            run,
            network,
            split,
        });
    }
    Ok(out)
}

/// Header fields stored with a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub shape: NetworkShape,
    pub seed: u64,
    pub decade: Decade,
    pub kind: ModelKind,
    pub mask: ModalityMask,
    pub warm_start: bool,
    pub best_epoch: usize,
    pub scalar: String,
}

impl CheckpointMeta {
    pub fn for_run<T: Scalar>(
        run: &TrainRun,
        net: &IntegrationNetwork<T>,
        warm_start: bool,
    ) -> Self {
        Self {
            shape: net.shape(),
            seed: net.seed(),
            decade: run.decade,
            kind: run.kind,
            mask: run.mask,
            warm_start,
            best_epoch: run.best_epoch,
            scalar: scalar_name::<T>().to_string(),
        }
    }
}

fn scalar_name<T: Scalar>() -> &'static str {
    if T::EXACT_DIGITS == 9 {
        "f32"
    } else {
        "f64"
    }
}

/// Writes the header then one block per parameter: a `[name] rows cols`
/// line followed by row-major values, one matrix row per line.
pub fn save_checkpoint<T: Scalar, W: Write>(
    mut w: W,
    net: &IntegrationNetwork<T>,
    meta: &CheckpointMeta,
) -> std::io::Result<()> {
    let shape = net.shape();
    let dims: Vec<String> = shape.outputs.iter().map(|d| d.to_string()).collect();
    writeln!(w, "layers={}", shape.outputs.len())?;
    writeln!(w, "input={}", shape.input)?;
    writeln!(w, "dims={}", dims.join(","))?;
    writeln!(w, "seed={}", meta.seed)?;
    writeln!(w, "decade={}", meta.decade)?;
    writeln!(w, "kind={}", meta.kind)?;
    writeln!(w, "mask={}", meta.mask)?;
    writeln!(w, "warm_start={}", meta.warm_start)?;
    writeln!(w, "best_epoch={}", meta.best_epoch)?;
    writeln!(w, "scalar={}", scalar_name::<T>())?;
    for (i, layer) in net.layers().iter().enumerate() {
        let (rows, cols) = layer.weights.dim();
        writeln!(w, "[layer{}.weight] {rows} {cols}", i + 1)?;
        for r in layer.weights.rows() {
            let vals: Vec<String> = r.iter().map(|v| v.exact_string()).collect();
            writeln!(w, "{}", vals.join("\t"))?;
        }
        writeln!(w, "[layer{}.bias] 1 {}", i + 1, layer.bias.len())?;
        let vals: Vec<String> = layer.bias.iter().map(|v| v.exact_string()).collect();
        writeln!(w, "{}", vals.join("\t"))?;
    }
    Ok(())
}

pub fn save_checkpoint_file<T: Scalar>(
    path: &Path,
    net: &IntegrationNetwork<T>,
    meta: &CheckpointMeta,
) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    save_checkpoint(&mut w, net, meta)?;
    w.flush()
}

fn ck_err(line: usize, message: impl Into<String>) -> TrainError {
    TrainError::Checkpoint {
        line,
        message: message.into(),
    }
}

/// Inverse of [`save_checkpoint`]. Errors name the 1-based line.
pub fn load_checkpoint<T: Scalar, R: BufRead>(
    reader: R,
) -> Result<(IntegrationNetwork<T>, CheckpointMeta), TrainError> {
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let mut header: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut pos = 0;
    while pos < lines.len() && !lines[pos].starts_with('[') {
        let line = lines[pos].trim();
        if !line.is_empty() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ck_err(pos + 1, "expected key=value"))?;
            header.insert(k.trim(), (pos + 1, v.trim()));
        }
        pos += 1;
    }
    let get = |k: &str| {
        header
            .get(k)
            .copied()
            .ok_or_else(|| ck_err(pos + 1, format!("missing header field {k}")))
    };
    fn num<X: std::str::FromStr>((line, v): (usize, &str), what: &str) -> Result<X, TrainError> {
        v.parse()
            .map_err(|_| ck_err(line, format!("bad {what} {v:?}")))
    }
    let n_layers: usize = num(get("layers")?, "layer count")?;
    let input: usize = num(get("input")?, "input dimension")?;
    let (dims_line, dims_v) = get("dims")?;
    let outputs = dims_v
        .split(',')
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .map_err(|_| ck_err(dims_line, format!("bad dims {dims_v:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if outputs.len() != n_layers {
        return Err(ck_err(
            dims_line,
            format!("dims lists {} layers but layers={n_layers}", outputs.len()),
        ));
    }
    let (scalar_line, scalar) = get("scalar")?;
    if scalar != scalar_name::<T>() {
        return Err(ck_err(
            scalar_line,
            format!(
                "checkpoint holds {scalar}, loading as {}",
                scalar_name::<T>()
            ),
        ));
    }
    let (kind_line, kind_v) = get("kind")?;
    let (mask_line, mask_v) = get("mask")?;
    let (ws_line, ws_v) = get("warm_start")?;
    let meta = CheckpointMeta {
        shape: NetworkShape::new(input, &outputs),
        seed: num(get("seed")?, "seed")?,
        decade: num(get("decade")?, "decade")?,
        kind: kind_v.parse().map_err(|e: String| ck_err(kind_line, e))?,
        mask: mask_v.parse().map_err(|e: String| ck_err(mask_line, e))?,
        warm_start: ws_v
            .parse()
            .map_err(|_| ck_err(ws_line, "bad warm_start"))?,
        best_epoch: num(get("best_epoch")?, "best epoch")?,
        scalar: scalar.to_string(),
    };

    let mut read_block = |name: &str, rows: usize, cols: usize| -> Result<Array2<T>, TrainError> {
        let head = lines
            .get(pos)
            .ok_or_else(|| ck_err(pos + 1, format!("missing block {name}")))?;
        let expected = format!("[{name}] {rows} {cols}");
        if head.trim() != expected {
            return Err(ck_err(
                pos + 1,
                format!("expected {expected:?}, found {head:?}"),
            ));
        }
        pos += 1;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = lines
                .get(pos)
                .ok_or_else(|| ck_err(pos + 1, format!("truncated block {name}")))?;
            let before = data.len();
            for tok in line.split('\t') {
                let v: T = tok
                    .trim()
                    .parse()
                    .map_err(|_| ck_err(pos + 1, format!("bad value {tok:?}")))?;
                if !v.is_finite() {
                    return Err(ck_err(pos + 1, "non-finite parameter"));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(ck_err(
                    pos + 1,
                    format!("expected {cols} values, found {}", data.len() - before),
                ));
            }
            pos += 1;
        }
        Ok(Array2::from_shape_vec((rows, cols), data).expect("block shape"))
    };
    let mut layers = Vec::with_capacity(n_layers);
    let mut fan_in = input;
    for (i, &out) in outputs.iter().enumerate() {
        let weights = read_block(&format!("layer{}.weight", i + 1), out, fan_in)?;
        let bias = read_block(&format!("layer{}.bias", i + 1), 1, out)?;
        layers.push(Dense {
            weights,
            bias: Array1::from(bias.into_raw_vec_and_offset().0),
        });
        fan_in = out;
    }
    if let Some(extra) = lines[pos..].iter().position(|l| !l.trim().is_empty()) {
        return Err(ck_err(pos + extra + 1, "trailing content after last block"));
    }
    let net = IntegrationNetwork::from_layers(layers, meta.seed)?;
    Ok((net, meta))
}

pub fn load_checkpoint_file<T: Scalar>(
    path: &Path,
) -> Result<(IntegrationNetwork<T>, CheckpointMeta), TrainError> {
    load_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Hex SHA-256 of a byte stream.
pub fn sha256_hex<R: Read>(mut r: R) -> std::io::Result<String> {
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    sha256_hex(std::fs::File::open(path)?)
}

/// Ordered `key=value` record of a run's settings and input hashes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub entries: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn set(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.entries.insert(key.into(), value.to_string());
        self
    }

    pub fn add_file_hash(&mut self, key: &str, path: &Path) -> std::io::Result<&mut Self> {
        let digest = sha256_file(path)?;
        Ok(self.set(format!("sha256.{key}"), digest))
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> std::io::Result<Self> {
        let mut m = Self::default();
        for line in reader.lines() {
            let line = line?;
            if let Some((k, v)) = line.split_once('=') {
                m.entries.insert(k.to_string(), v.to_string());
            }
        }
        Ok(m)
    }
}

/// Checks that `store` still serializes to `snapshot`, i.e. training left
/// it untouched.
pub fn store_unchanged<T: Scalar>(store: &EmbeddingStore<T>, snapshot: &[u8]) -> bool {
    let mut buf = Vec::new();
    store.write(&mut buf).is_ok() && buf == snapshot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FrameEntry, TableParams};
    use rand::Rng;

    fn fixture(seed: u64) -> (FrameTable, DecadeInputs<f64>) {
        let mut rng = seeded(seed);
        let mut table = FrameTable::new(1950, TableParams::default());
        let mut vectors = BTreeMap::new();
        for (fi, verb) in ["eat", "drive", "wear"].iter().enumerate() {
            let center: Vec<f64> = (0..6)
                .map(|d| if d % 3 == fi { 2.0 } else { 0.0 })
                .collect();
            let mut e = FrameEntry::default();
            for k in 0..4 {
                let noun = format!("{verb}-s{k}");
                vectors.insert(
                    noun.clone(),
                    center
                        .iter()
                        .map(|c| c + rng.random_range(-0.3..0.3))
                        .collect(),
                );
                e.supports.insert(noun);
            }
            for k in 0..4 {
                let noun = format!("{verb}-q{k}");
                vectors.insert(
                    noun.clone(),
                    center
                        .iter()
                        .map(|c| c + rng.random_range(-0.3..0.3))
                        .collect(),
                );
                e.queries.insert(noun);
            }
            table.entries.insert(Frame::new(*verb, "dobj"), e);
        }
        (
            table,
            DecadeInputs::from_vectors(1950, ModalityMask::ALL, 6, vectors),
        )
    }

    fn small_shape() -> NetworkShape {
        NetworkShape::new(6, &[5, 4, 3])
    }

    #[test]
    fn split_sizes_follow_rounding_rule() {
        let s = SplitSpec::default();
        assert_eq!(s.sizes(10), (6, 1, 3));
        assert_eq!(s.sizes(1), (1, 0, 0));
        assert_eq!(s.sizes(2), (1, 0, 1));
        assert_eq!(s.sizes(3), (1, 1, 1));
        assert_eq!(s.sizes(100), (63, 7, 30));
        assert!(SplitSpec {
            train_fraction: 1.0,
            ..s
        }
        .validate()
        .is_err());
    }

    #[test]
    fn split_partitions_nouns_deterministically() {
        let (table, _) = fixture(1);
        let spec = SplitSpec {
            seed: 5,
            ..Default::default()
        };
        let a = split_queries(&table, &spec).unwrap();
        let b = split_queries(&table, &spec).unwrap();
        assert_eq!(a.train_nouns, b.train_nouns);
        assert_eq!(a.test_nouns, b.test_nouns);
        let all: BTreeSet<String> = a
            .train_nouns
            .iter()
            .chain(&a.validation_nouns)
            .chain(&a.test_nouns)
            .cloned()
            .collect();
        assert_eq!(all, table.query_nouns());
        assert_eq!(
            a.train_nouns.len() + a.validation_nouns.len() + a.test_nouns.len(),
            12
        );
        assert!(a.train_nouns.is_disjoint(&a.test_nouns));
        assert_eq!(a.test.support_nouns(), table.support_nouns());
    }

    #[test]
    fn single_query_goes_to_train() {
        let mut t = FrameTable::new(1900, TableParams::default());
        let mut e = FrameEntry::default();
        e.supports.extend(["a".to_string(), "b".into()]);
        e.queries.insert("q".into());
        t.entries.insert(Frame::new("v", "dobj"), e);
        let s = split_queries(&t, &SplitSpec::default()).unwrap();
        assert_eq!(s.train_nouns.len(), 1);
        assert!(s.validation_nouns.is_empty() && s.test_nouns.is_empty());
        assert_eq!(s.warnings.len(), 2);
    }

    fn full_loss(
        net: &IntegrationNetwork<f64>,
        inputs: &DecadeInputs<f64>,
        table: &FrameTable,
        kind: ModelKind,
    ) -> f64 {
        let owned = table.vocabulary();
        let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
        let reps = represent(net, inputs, &refs).unwrap();
        crate::chaining::nll_loss(kind, Distance::Euclidean, table, &reps)
            .unwrap()
            .total
    }

    #[test]
    fn batch_loss_matches_nll_and_finite_differences() {
        let (table, inputs) = fixture(2);
        // zero biases put dead-unit samples exactly on a rectifier kink
        let mut net = IntegrationNetwork::<f64>::init(&small_shape(), 11);
        let mut rng = seeded(12);
        for l in net.layers_mut() {
            l.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
        let all: Vec<usize> = (0..table.len()).collect();
        for kind in [ModelKind::Prototype, ModelKind::Exemplar] {
            let (loss, grads) =
                batch_loss_grad(&net, &inputs, &table, kind, Distance::Euclidean, &all).unwrap();
            assert!((loss - full_loss(&net, &inputs, &table, kind)).abs() < 1e-10);
            let step = 1e-4;
            for (li, layer) in net.layers().iter().enumerate() {
                let (rows, cols) = layer.weights.dim();
                for r in 0..rows {
                    for c in 0..=cols {
                        let perturb = |delta: f64| {
                            let mut n = net.clone();
                            let l = &mut n.layers_mut()[li];
                            if c < cols {
                                l.weights[[r, c]] += delta;
                            } else {
                                l.bias[r] += delta;
                            }
                            full_loss(&n, &inputs, &table, kind)
                        };
                        let fd = (perturb(step) - perturb(-step)) / (2.0 * step);
                        let g = &grads.layers[li];
                        let an = if c < cols {
                            g.weights[[r, c]]
                        } else {
                            g.bias[r]
                        };
                        let tol = 1e-4 * fd.abs().max(an.abs()).max(1e-2);
                        assert!(
                            (fd - an).abs() <= tol,
                            "{kind} layer {li} ({r},{c}): fd {fd} analytic {an}"
                        );
                    }
                }
            }
        }
    }

    fn config(epochs: usize, batch: usize) -> TrainConfig {
        TrainConfig {
            sgd: SgdConfig {
                learning_rate: 0.05,
                epochs,
                batch_frames: batch,
                seed: 3,
            },
            ..Default::default()
        }
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let (table, inputs) = fixture(4);
        let split = split_queries(&table, &SplitSpec::default()).unwrap();
        let cfg = config(30, 2);
        let net = IntegrationNetwork::init(&small_shape(), 1);
        let (run, best) = train_decade(&split, &inputs, net.clone(), &cfg).unwrap();
        assert_eq!(run.loss_trace.len(), 30);
        assert!(
            run.loss_trace.last().unwrap() < &run.loss_trace[0],
            "{:?}",
            run.loss_trace
        );
        assert_eq!(run.validation_trace[run.best_epoch - 1], run.best_score);
        assert!(run.validation_trace.iter().all(|&v| v <= run.best_score));
        let (again, best2) = train_decade(&split, &inputs, net, &cfg).unwrap();
        assert_eq!(run.loss_trace, again.loss_trace);
        assert_eq!(best, best2);
    }

    #[test]
    fn one_update_per_epoch_with_large_batches() {
        let (table, inputs) = fixture(5);
        let split = split_queries(&table, &SplitSpec::default()).unwrap();
        let (run, _) = train_decade(
            &split,
            &inputs,
            IntegrationNetwork::init(&small_shape(), 1),
            &config(1, 64),
        )
        .unwrap();
        assert_eq!(run.steps, 1);
    }

    #[test]
    fn training_never_reads_test_queries() {
        let (table, inputs) = fixture(6);
        let split = split_queries(&table, &SplitSpec::default()).unwrap();
        let audit = AuditedLookup::new(&inputs);
        train_decade(
            &split,
            &audit,
            IntegrationNetwork::init(&small_shape(), 1),
            &config(3, 2),
        )
        .unwrap();
        let reads = audit.reads();
        assert!(!split.test_nouns.is_empty());
        assert!(reads.is_disjoint(&split.test_nouns));
        assert!(split.train_nouns.is_subset(&reads));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let net = IntegrationNetwork::<f64>::init(&small_shape(), 77);
        let meta = CheckpointMeta {
            shape: small_shape(),
            seed: 77,
            decade: 1920,
            kind: ModelKind::Exemplar,
            mask: ModalityMask::ALL.without(Modality::Perceptual),
            warm_start: true,
            best_epoch: 4,
            scalar: "f64".into(),
        };
        let mut buf = Vec::new();
        save_checkpoint(&mut buf, &net, &meta).unwrap();
        let (back, m) = load_checkpoint::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(m, meta);
        for (a, b) in net.layers().iter().zip(back.layers()) {
            assert!(a
                .weights
                .iter()
                .zip(b.weights.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
            assert!(a
                .bias
                .iter()
                .zip(b.bias.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let text = String::from_utf8(buf).unwrap();
        let wrong = text.replace("dims=5,4,3", "dims=5,4,2");
        match load_checkpoint::<f64, _>(wrong.as_bytes()) {
            Err(TrainError::Checkpoint { .. }) => {}
            other => panic!("expected checkpoint error, got {other:?}"),
        }
        assert!(load_checkpoint::<f32, _>(text.as_bytes()).is_err());
        let truncated: String = text.lines().take(14).collect::<Vec<_>>().join("\n");
        assert!(load_checkpoint::<f64, _>(truncated.as_bytes()).is_err());
    }

    #[test]
    fn zero_fill_for_nouns_without_vectors() {
        let mut ling = EmbeddingStore::new(Modality::Linguistic, 2);
        ling.insert("a", crate::knowledge::DecadeKey::At(1900), vec![3.0, 3.0])
            .unwrap();
        let stores = ModalityStores {
            linguistic: Some(ling),
            ..Default::default()
        };
        let inputs = DecadeInputs::build(["a", "b"], 1900, ModalityMask::ALL, &stores, 2).unwrap();
        assert_eq!(inputs.input("a").unwrap(), &[1.0, 1.0]);
        assert_eq!(inputs.input("b").unwrap(), &[0.0, 0.0]);
        assert!(inputs.zero_filled.contains("b"));
    }

    #[test]
    fn manifest_round_trip_and_hash() {
        let mut m = RunManifest::default();
        m.set("seed", 4).set("mask", ModalityMask::ALL);
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        assert_eq!(RunManifest::read(buf.as_slice()).unwrap(), m);
        assert_eq!(
            sha256_hex(&b"abc"[..]).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
