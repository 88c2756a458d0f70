//! The subcommands, each reading and writing files under the output directory.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use sfem::chaining::{ChainingModel, ModelKind};
use sfem::corpus::{
    dataset_stats, filter_vocabulary, parse_frequencies, parse_triples, restrict_triples,
    select_relations, write_triples, CooccurrenceIndex, DatasetStats, Decade, Frame, FrameTable,
    SyntacticTriple, TokenFrequencyIndex,
};
use sfem::eval::{
    ablation_drops, baseline_frequency, baseline_random, modality_breakdown, pca_export,
    predict_model, report_rows, score_predictions, write_ablation, write_pca, write_report,
    ReportRow, ScoredModel, ScorerLabel, TestSet, BREAKDOWN_ORDER,
};
use sfem::knowledge::{
    concept_store, parse_graph, parse_image_vectors, perceptual_store, ppmi, ConceptGraph,
    EmbeddingStore, Modality, ModalityMask, ProjectionMatrix,
};
use sfem::neuralnet::IntegrationNetwork;
use sfem::rng::{decade_stream, derive_seed};
use sfem::scalar::Scalar;
use sfem::synth::{generate, SynthConfig, SynthFiles};
use sfem::training::{
    load_checkpoint_file, represent, save_checkpoint_file, sha256_file, split_queries,
    store_unchanged, train_decade, AuditedLookup, CheckpointMeta, DecadeInputs, ModalityStores,
    QuerySplit, RunManifest, TrainRun,
};

use crate::config::RunConfig;
use crate::CliError;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn with_path<E: Into<CliError>>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| match e.into() {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn gen_synthetic(config: &SynthConfig, out: &Path) -> Result<SynthFiles, CliError> {
    let data = generate(config)?;
    let files = data.write_dir(out)?;
    info!(
        "wrote {} triples, {} graph edges, {} manifest rows to {}",
        data.triples.len(),
        data.graph.len(),
        data.manifest.len(),
        out.display()
    );
    Ok(files)
}

fn read_triples(path: &Path) -> Result<Vec<SyntacticTriple>, CliError> {
    parse_triples(open(path)?).map_err(with_path(path))
}

fn read_frequencies(path: &Path) -> Result<TokenFrequencyIndex, CliError> {
    parse_frequencies(open(path)?).map_err(with_path(path))
}

fn read_graph(path: &Path) -> Result<ConceptGraph<f64>, CliError> {
    parse_graph(open(path)?).map_err(with_path(path))
}

/// Image rows per token, counted without parsing the vectors.
fn count_images(path: &Path) -> Result<HashMap<String, u64>, CliError> {
    let mut counts = HashMap::new();
    for line in open(path)?.lines() {
        let line = line.map_err(with_path(path))?;
        if let Some(tok) = line
            .split_whitespace()
            .next()
            .filter(|t| !t.starts_with('#'))
        {
            *counts.entry(tok.to_lowercase()).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

pub fn table_path(cfg: &RunConfig, t: Decade) -> PathBuf {
    cfg.dataset_dir().join(format!("table-{t}.tsv"))
}

fn filtered_triples_path(cfg: &RunConfig) -> PathBuf {
    cfg.dataset_dir().join("triples.tsv")
}

/// Result of `build-dataset`.
#[derive(Debug, Clone)]
pub struct DatasetOutcome {
    pub tables: Vec<PathBuf>,
    pub stats: DatasetStats,
}

/// Filters the vocabulary and relations, then writes one frame table per
/// prediction decade plus the filtered triples.
pub fn build_dataset(cfg: &RunConfig) -> Result<DatasetOutcome, CliError> {
    let triples = read_triples(cfg.input("triples")?)?;
    let freq = read_frequencies(cfg.input("frequencies")?)?;
    let graph = read_graph(cfg.input("graph")?)?;
    let images = count_images(cfg.input("images")?)?;

    let vocab = filter_vocabulary(
        &triples,
        &cfg.filter,
        &images,
        &graph.edge_counts(),
        &freq.totals(),
    );
    let relations = select_relations(&triples, cfg.filter.top_relations);
    let kept = restrict_triples(&triples, &relations.relations, &vocab);
    info!(
        "kept {} of {} triples ({} nouns, {} verbs, {} relations)",
        kept.len(),
        triples.len(),
        vocab.nouns.len(),
        vocab.verbs.len(),
        relations.relations.len()
    );
    let index = CooccurrenceIndex::new(&kept);
    let decades = if cfg.decades.is_empty() {
        match index.range() {
            Some((lo, hi)) => (lo..=hi).step_by(10).collect(),
            None => Vec::new(),
        }
    } else {
        cfg.decades.clone()
    };

    let mut tables = Vec::new();
    let mut paths = Vec::new();
    for t in decades {
        let build = index.frame_table(t, cfg.table)?;
        if let Some(w) = build.warning {
            warn!("{w}");
        }
        if cfg.decades.is_empty() && build.table.is_empty() {
            continue;
        }
        let path = table_path(cfg, t);
        write_file(&path, |w| build.table.write_tsv(w))?;
        paths.push(path);
        tables.push(build.table);
    }
    write_file(&filtered_triples_path(cfg), |w| write_triples(w, &kept))?;
    let stats = dataset_stats(&tables);
    Ok(DatasetOutcome {
        tables: paths,
        stats,
    })
}

/// Decades with a table in the dataset directory, or the configured ones.
pub fn dataset_decades(cfg: &RunConfig) -> Result<Vec<Decade>, CliError> {
    if !cfg.decades.is_empty() {
        return Ok(cfg.decades.clone());
    }
    let dir = cfg.dataset_dir();
    let entries = std::fs::read_dir(&dir)
        .map_err(|e| CliError::Io(format!("{}: {e} (run build-dataset first)", dir.display())))?;
    let mut out = Vec::new();
    for e in entries {
        let name = e?.file_name();
        let name = name.to_string_lossy();
        if let Some(t) = name
            .strip_prefix("table-")
            .and_then(|s| s.strip_suffix(".tsv"))
        {
            if let Ok(t) = t.parse() {
                out.push(t);
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_table(cfg: &RunConfig, t: Decade) -> Result<FrameTable, CliError> {
    let path = table_path(cfg, t);
    FrameTable::read_tsv(open(&path)?).map_err(with_path(&path))
}

fn conceptual_path(cfg: &RunConfig) -> PathBuf {
    cfg.concepts_dir().join("conceptual.txt")
}

fn perceptual_path(cfg: &RunConfig) -> PathBuf {
    cfg.concepts_dir().join("perceptual.txt")
}

/// Result of `build-concepts`.
#[derive(Debug, Clone, Default)]
pub struct ConceptsOutcome {
    pub decades: Vec<Decade>,
    pub skipped: Vec<Decade>,
    pub perceptual_nouns: usize,
}

/// Conceptual vectors per decade from the truncated graph, and projected
/// perceptual vectors.
pub fn build_concepts(cfg: &RunConfig) -> Result<ConceptsOutcome, CliError> {
    let freq = read_frequencies(cfg.input("frequencies")?)?;
    let graph = read_graph(cfg.input("graph")?)?;
    let mut outcome = ConceptsOutcome::default();
    let mut store = EmbeddingStore::<f64>::new(Modality::Conceptual, cfg.dim);
    for t in dataset_decades(cfg)? {
        let g = graph.truncate(&freq, t, cfg.concept_min_count);
        if g.is_empty() {
            warn!("decade {t}: truncated concept graph is empty; skipped");
            outcome.skipped.push(t);
            continue;
        }
        let m = ppmi(&g)?;
        let opts = sfem::linalg::RandomizedSvdOptions {
            seed: derive_seed(cfg.svd_options().seed, decade_stream(t)),
            ..cfg.svd_options()
        };
        store.extend(concept_store(&m, cfg.dim, opts, t)?)?;
        info!(
            "decade {t}: {} concepts, {} edges",
            m.concepts.len(),
            g.edges().len()
        );
        outcome.decades.push(t);
    }
    write_file(&conceptual_path(cfg), |w| store.write(w))?;

    if let Some(path) = cfg.images.as_deref() {
        let path = cfg.input("images").map(|_| path)?;
        let images =
            parse_image_vectors::<f64, _>(open(path)?, cfg.image_dim).map_err(with_path(path))?;
        let projection = ProjectionMatrix::seeded(cfg.dim, cfg.image_dim, cfg.projection_seed());
        let perceptual = perceptual_store(&images, &projection)?;
        outcome.perceptual_nouns = perceptual.len();
        write_file(&perceptual_path(cfg), |w| perceptual.write(w))?;
    }
    Ok(outcome)
}

fn read_store<T: Scalar>(
    path: &Path,
    modality: Modality,
    dim: usize,
) -> Result<EmbeddingStore<T>, CliError> {
    EmbeddingStore::read(open(path)?, modality, dim).map_err(with_path(path))
}

/// The stores selected by the configured mask, with the files they came from.
pub fn load_stores<T: Scalar>(
    cfg: &RunConfig,
    mask: ModalityMask,
) -> Result<(ModalityStores<T>, Vec<PathBuf>), CliError> {
    let mut stores = ModalityStores::default();
    let mut files = Vec::new();
    if mask.contains(Modality::Perceptual) {
        let p = perceptual_path(cfg);
        stores.perceptual = Some(read_store(&p, Modality::Perceptual, cfg.dim)?);
        files.push(p);
    }
    if mask.contains(Modality::Conceptual) {
        let p = conceptual_path(cfg);
        stores.conceptual = Some(read_store(&p, Modality::Conceptual, cfg.dim)?);
        files.push(p);
    }
    if mask.contains(Modality::Linguistic) {
        let p = cfg.input("linguistic")?.to_path_buf();
        stores.linguistic = Some(read_store(&p, Modality::Linguistic, cfg.dim)?);
        files.push(p);
    }
    Ok((stores, files))
}

fn snapshot<T: Scalar>(stores: &ModalityStores<T>) -> Vec<(Modality, Vec<u8>)> {
    Modality::SOURCES
        .iter()
        .filter_map(|&m| {
            stores.get(m).map(|s| {
                let mut buf = Vec::new();
                s.write(&mut buf).expect("writing to memory");
                (m, buf)
            })
        })
        .collect()
}

pub fn checkpoint_path(cfg: &RunConfig, kind: ModelKind, mask: ModalityMask, t: Decade) -> PathBuf {
    cfg.model_dir(kind, mask)
        .join(format!("checkpoint-{t}.txt"))
}

/// One decade of `train`.
#[derive(Debug, Clone)]
pub struct DecadeTraining {
    pub run: TrainRun,
    /// Test query nouns read during training; always empty on success.
    pub test_reads: BTreeSet<String>,
    pub nouns_read: usize,
    pub zero_filled: usize,
}

fn write_split(path: &Path, split: &QuerySplit) -> Result<(), CliError> {
    write_file(path, |w| {
        writeln!(w, "noun\tpartition")?;
        let mut rows: Vec<(&String, &str)> = Vec::new();
        rows.extend(split.train_nouns.iter().map(|n| (n, "train")));
        rows.extend(split.validation_nouns.iter().map(|n| (n, "validation")));
        rows.extend(split.test_nouns.iter().map(|n| (n, "test")));
        rows.sort();
        for (n, p) in rows {
            writeln!(w, "{n}\t{p}")?;
        }
        Ok(())
    })
}

/// Trains one network per decade in chronological order under the
/// configured kind and mask, writing checkpoints, splits, loss traces and
/// run manifests.
pub fn train<T: Scalar>(cfg: &RunConfig) -> Result<Vec<DecadeTraining>, CliError> {
    let decades = dataset_decades(cfg)?;
    if decades.is_empty() {
        return Err(CliError::Input("no frame tables to train on".into()));
    }
    let (stores, store_files) = load_stores::<T>(cfg, cfg.mask)?;
    let before = snapshot(&stores);
    let tc = cfg.train_config();
    let shape = cfg.shape();
    let dir = cfg.model_dir(cfg.kind, cfg.mask);
    let mut prev: Option<IntegrationNetwork<T>> = None;
    let mut out = Vec::new();
    for t in decades {
        let table = load_table(cfg, t)?;
        if table.is_empty() {
            warn!("decade {t}: empty frame table; skipped");
            continue;
        }
        let split = split_queries(&table, &tc.split)?;
        let supports = table.support_nouns();
        let mut allowed = supports.clone();
        allowed.extend(split.train_nouns.iter().cloned());
        allowed.extend(split.validation_nouns.iter().cloned());
        let inputs = DecadeInputs::build(
            allowed.iter().map(String::as_str),
            t,
            cfg.mask,
            &stores,
            cfg.dim,
        )?;
        if !inputs.zero_filled.is_empty() {
            warn!(
                "decade {t}: {} nouns have no input in any selected modality; using zeros",
                inputs.zero_filled.len()
            );
        }
        let audited = AuditedLookup::new(&inputs);
        let start = match prev.take() {
            Some(net) if tc.warm_start => net,
            _ if tc.warm_start => IntegrationNetwork::init(&shape, cfg.init_seed()),
            _ => IntegrationNetwork::init(&shape, derive_seed(cfg.init_seed(), decade_stream(t))),
        };
        let (mut run, net) = train_decade(&split, &audited, start, &tc)?;
        let reads = audited.reads();
        let test_reads: BTreeSet<String> = reads
            .iter()
            .filter(|n| split.test_nouns.contains(*n) && !supports.contains(*n))
            .cloned()
            .collect();
        if !test_reads.is_empty() {
            return Err(CliError::Invariant(format!(
                "decade {t}: training read test query inputs {test_reads:?}"
            )));
        }
        info!(
            "decade {t}: best epoch {} of {}, score {:.4}, final loss {:.4}",
            run.best_epoch,
            run.loss_trace.len(),
            run.best_score,
            run.loss_trace.last().copied().unwrap_or(f64::NAN)
        );

        let ckpt = checkpoint_path(cfg, cfg.kind, cfg.mask, t);
        let meta = CheckpointMeta::for_run(&run, &net, tc.warm_start);
        std::fs::create_dir_all(&dir)?;
        save_checkpoint_file(&ckpt, &net, &meta).map_err(with_path(&ckpt))?;
        run.checkpoint_path = Some(ckpt.clone());
        write_split(&dir.join(format!("split-{t}.tsv")), &split)?;
        write_file(&dir.join(format!("losses-{t}.tsv")), |w| {
            writeln!(w, "epoch\tloss\tvalidation")?;
            for (i, (l, v)) in run.loss_trace.iter().zip(&run.validation_trace).enumerate() {
                writeln!(w, "{}\t{l:.9e}\t{v:.9e}", i + 1)?;
            }
            Ok(())
        })?;

        let mut manifest = RunManifest::default();
        for (k, v) in cfg.provenance() {
            manifest.set(format!("config.{k}"), v);
        }
        manifest
            .set("decade", t)
            .set("best_epoch", run.best_epoch)
            .set("best_score", format!("{:.9e}", run.best_score))
            .set("steps", run.steps)
            .set(
                "final_loss",
                format!("{:.9e}", run.loss_trace.last().copied().unwrap_or(f64::NAN)),
            )
            .set("train_nouns", split.train_nouns.len())
            .set("validation_nouns", split.validation_nouns.len())
            .set("test_nouns", split.test_nouns.len())
            .set("nouns_read", reads.len())
            .set("test_reads", test_reads.len())
            .set("zero_filled", inputs.zero_filled.len())
            .set("warnings", run.warnings.len())
            .set("seed.split", tc.split.seed)
            .set("seed.sgd", tc.sgd.seed)
            .set("seed.init", net.seed());
        manifest.add_file_hash("table", &table_path(cfg, t))?;
        for f in &store_files {
            let name = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            manifest.add_file_hash(&name, f)?;
        }
        manifest.add_file_hash("checkpoint", &ckpt)?;
        write_file(&dir.join(format!("manifest-{t}.txt")), |w| {
            manifest.write(w)
        })?;

        out.push(DecadeTraining {
            run,
            test_reads,
            nouns_read: reads.len(),
            zero_filled: inputs.zero_filled.len(),
        });
        prev = Some(net);
    }
    for (m, bytes) in before {
        if !store_unchanged(stores.get(m).expect("snapshotted store"), &bytes) {
            return Err(CliError::Invariant(format!(
                "{m} store changed during training"
            )));
        }
    }
    Ok(out)
}

/// A decade's data as seen at evaluation time.
struct EvalDecade {
    table: FrameTable,
    test: TestSet,
}

fn eval_decade(cfg: &RunConfig, t: Decade) -> Result<EvalDecade, CliError> {
    let table = load_table(cfg, t)?;
    let split = split_queries(&table, &cfg.split())?;
    let test = TestSet::from_table(&split.test);
    Ok(EvalDecade { table, test })
}

fn load_model<T: Scalar>(
    cfg: &RunConfig,
    kind: ModelKind,
    mask: ModalityMask,
    t: Decade,
) -> Result<IntegrationNetwork<T>, CliError> {
    let path = checkpoint_path(cfg, kind, mask, t);
    if !path.is_file() {
        return Err(CliError::Io(format!(
            "{} does not exist (train kind={kind} mask={mask} first)",
            path.display()
        )));
    }
    let (net, meta) =
        load_checkpoint_file::<T>(&path).map_err(|e| with_path(&path)(CliError::from(e)))?;
    if meta.kind != kind || meta.mask != mask || meta.decade != t {
        return Err(CliError::Input(format!(
            "{}: header says kind={} mask={} decade={}",
            path.display(),
            meta.kind,
            meta.mask,
            meta.decade
        )));
    }
    Ok(net)
}

/// Representations and categories of a trained model at one decade, over
/// every noun the decade's evaluation needs.
fn scored_model<T: Scalar>(
    cfg: &RunConfig,
    kind: ModelKind,
    mask: ModalityMask,
    d: &EvalDecade,
    stores: &ModalityStores<T>,
) -> Result<ScoredModel<T>, CliError> {
    let t = d.table.decade;
    let net = load_model::<T>(cfg, kind, mask, t)?;
    let mut nouns = d.test.nouns_needed(&d.table);
    nouns.extend(d.table.query_nouns());
    let inputs = DecadeInputs::build(nouns.iter().map(String::as_str), t, mask, stores, cfg.dim)?;
    let names: Vec<&str> = nouns.iter().map(String::as_str).collect();
    let reps = represent(&net, &inputs, &names)?;
    let model = ChainingModel::from_table(kind, cfg.distance, &d.table, &reps)?;
    Ok(ScoredModel { mask, model, reps })
}

pub fn report_path(cfg: &RunConfig, kind: ModelKind, mask: ModalityMask) -> PathBuf {
    cfg.reports_dir()
        .join(format!("report-{}-{}.tsv", kind.short_name(), mask))
}

fn filtered_index(cfg: &RunConfig) -> Result<CooccurrenceIndex, CliError> {
    let path = filtered_triples_path(cfg);
    Ok(CooccurrenceIndex::new(&read_triples(&path)?))
}

/// Scores the configured model and both baselines on every decade's test
/// queries and writes the report TSV.
pub fn evaluate<T: Scalar>(cfg: &RunConfig) -> Result<(PathBuf, Vec<ReportRow>), CliError> {
    let freq = read_frequencies(cfg.input("frequencies")?)?;
    let index = filtered_index(cfg)?;
    let (stores, _) = load_stores::<T>(cfg, cfg.mask)?;
    let label = ScorerLabel::Model {
        kind: cfg.kind.short_name().into(),
        mask: cfg.mask,
    };
    let mut model_scores = Vec::new();
    let mut freq_scores = Vec::new();
    let mut random_scores = Vec::new();
    for t in dataset_decades(cfg)? {
        let d = eval_decade(cfg, t)?;
        if d.table.is_empty() {
            continue;
        }
        let scored = scored_model::<T>(cfg, cfg.kind, cfg.mask, &d, &stores)?;
        let preds = predict_model(
            &scored.model,
            &scored.reps,
            &d.table,
            &d.test,
            label.clone(),
        )?;
        model_scores.push((t, score_predictions(&preds, &freq)));
        let fb = baseline_frequency(&d.table, &index, &d.test)?;
        freq_scores.push((t, score_predictions(&fb, &freq)));
        let rb = baseline_random(&d.table, &d.test, cfg.random_baseline_seed())?;
        random_scores.push((t, score_predictions(&rb, &freq)));
    }
    let mut rows = report_rows(&label, &model_scores);
    rows.extend(report_rows(&ScorerLabel::Frequency, &freq_scores));
    rows.extend(report_rows(&ScorerLabel::Random, &random_scores));
    let path = report_path(cfg, cfg.kind, cfg.mask);
    write_file(&path, |w| write_report(w, &rows))?;
    Ok((path, rows))
}

/// Largest joint-probability drops on test pairs when `removed` is taken out
/// of the configured mask; one TSV per decade.
pub fn ablate<T: Scalar>(cfg: &RunConfig, removed: Modality) -> Result<Vec<PathBuf>, CliError> {
    let freq = read_frequencies(cfg.input("frequencies")?)?;
    let ablated_mask = cfg.mask.without(removed);
    if !cfg.mask.contains(removed) || ablated_mask.is_empty() {
        return Err(CliError::Config(format!(
            "cannot remove {removed} from mask {}",
            cfg.mask
        )));
    }
    let (stores, _) = load_stores::<T>(cfg, cfg.mask)?;
    let mut out = Vec::new();
    for t in dataset_decades(cfg)? {
        let d = eval_decade(cfg, t)?;
        if d.table.is_empty() {
            continue;
        }
        let full = scored_model::<T>(cfg, cfg.kind, cfg.mask, &d, &stores)?;
        let ablated = scored_model::<T>(cfg, cfg.kind, ablated_mask, &d, &stores)?;
        let drops = ablation_drops(
            &full,
            &ablated,
            removed,
            &d.test.pairs(),
            &freq,
            t,
            cfg.ablation_top_k,
        )?;
        let path = cfg.reports_dir().join(format!(
            "ablation-{}-{}-minus-{removed}-{t}.tsv",
            cfg.kind.short_name(),
            cfg.mask
        ));
        write_file(&path, |w| write_ablation(w, removed, &drops))?;
        out.push(path);
    }
    Ok(out)
}

/// Share of test pairs best explained by each unimodal model.
pub fn breakdown<T: Scalar>(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let (stores, _) = load_stores::<T>(cfg, ModalityMask::ALL)?;
    let mut rows: BTreeMap<Decade, Vec<(Modality, f64, usize)>> = BTreeMap::new();
    for t in dataset_decades(cfg)? {
        let d = eval_decade(cfg, t)?;
        if d.table.is_empty() {
            continue;
        }
        let models = BREAKDOWN_ORDER
            .iter()
            .map(|&m| scored_model::<T>(cfg, cfg.kind, ModalityMask::only(m), &d, &stores))
            .collect::<Result<Vec<_>, _>>()?;
        let pairs = d.test.pairs();
        let shares = modality_breakdown(&models, &pairs)?;
        rows.insert(
            t,
            shares
                .into_iter()
                .map(|(m, s)| (m, s, pairs.len()))
                .collect(),
        );
    }
    let path = cfg
        .reports_dir()
        .join(format!("breakdown-{}.tsv", cfg.kind.short_name()));
    write_file(&path, |w| {
        writeln!(w, "decade\tmodality\tpercent\tnPairs")?;
        for (t, ms) in &rows {
            for (m, s, n) in ms {
                writeln!(w, "{t}\t{m}\t{s:.6}\t{n}")?;
            }
        }
        Ok(())
    })?;
    Ok(path)
}

/// Two-dimensional projection of the representations of a few frames'
/// supports and queries.
pub fn export_pca<T: Scalar>(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let decades = dataset_decades(cfg)?;
    let t = match cfg.pca_decade {
        Some(t) => t,
        None => *decades
            .first()
            .ok_or_else(|| CliError::Input("no frame tables".into()))?,
    };
    let d = eval_decade(cfg, t)?;
    let frames: Vec<Frame> = if cfg.pca_frames.is_empty() {
        d.table.frames().take(2).cloned().collect()
    } else {
        cfg.pca_frames
            .iter()
            .map(|s| s.parse().map_err(CliError::Config))
            .collect::<Result<_, _>>()?
    };
    let (stores, _) = load_stores::<T>(cfg, cfg.mask)?;
    let scored = scored_model::<T>(cfg, cfg.kind, cfg.mask, &d, &stores)?;
    let rows = pca_export(&scored.reps, &d.table, &frames)?;
    let path = cfg.reports_dir().join(format!(
        "pca-{}-{}-{t}.tsv",
        cfg.kind.short_name(),
        cfg.mask
    ));
    write_file(&path, |w| write_pca(w, &rows))?;
    Ok(path)
}

/// Hex digest of a file, for callers comparing runs.
pub fn file_digest(path: &Path) -> Result<String, CliError> {
    sha256_file(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
