//! Ranking evaluation: precision curves, cohorts, baselines, ablations,
//! modality attribution and PCA export.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::chaining::{ChainingError, ChainingModel, Representations};
use crate::corpus::{CooccurrenceIndex, Decade, Frame, FrameTable, TokenFrequencyIndex};
use crate::knowledge::{Modality, ModalityMask};
use crate::linalg::{jacobi_svd, LinalgError};
use crate::rng::{derive_seed, seeded};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Chaining(#[from] ChainingError),
    #[error("frame {0} is not in the decade table")]
    UnknownFrame(Frame),
    #[error("no representation for noun {0:?}")]
    MissingRepresentation(String),
    #[error("ablated model mask {ablated} is not {full} without {removed}")]
    MaskMismatch {
        full: ModalityMask,
        ablated: ModalityMask,
        removed: Modality,
    },
    #[error("breakdown needs one unimodal model per modality, got {0}")]
    BreakdownModels(String),
    #[error("non-finite score for candidate {0:?}")]
    NonFiniteScore(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Candidates ordered by descending score, ties by candidate key.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    pub query: String,
    pub candidates: Vec<String>,
    pub scores: Vec<f64>,
    pub positives: BTreeSet<String>,
}

impl RankedPrediction {
    /// Sorts `scored`; positives not among the candidates are dropped.
    pub fn new(
        query: impl Into<String>,
        mut scored: Vec<(String, f64)>,
        positives: &BTreeSet<String>,
    ) -> Result<Self, EvalError> {
        if let Some((c, _)) = scored.iter().find(|(_, s)| s.is_nan()) {
            return Err(EvalError::NonFiniteScore(c.clone()));
        }
        scored.sort_by(|(ka, sa), (kb, sb)| {
            sb.partial_cmp(sa)
                .unwrap_or(Ordering::Equal)
                .then_with(|| ka.cmp(kb))
        });
        let keys: BTreeSet<&str> = scored.iter().map(|(k, _)| k.as_str()).collect();
        let positives = positives
            .iter()
            .filter(|p| keys.contains(p.as_str()))
            .cloned()
            .collect();
        let (candidates, scores) = scored.into_iter().unzip();
        Ok(Self {
            query: query.into(),
            candidates,
            scores,
            positives,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// 1-based rank of `key`.
    pub fn rank_of(&self, key: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c == key).map(|i| i + 1)
    }
}

/// Precision at every cutoff and its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionCurve {
    pub curve: Vec<f64>,
    pub auc: f64,
}

/// `curve[m-1] = |top-m ∩ positives| / m`; `None` without positives.
pub fn precision_curve(pred: &RankedPrediction) -> Option<PrecisionCurve> {
    if pred.positives.is_empty() || pred.candidates.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let curve: Vec<f64> = pred
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if pred.positives.contains(c) {
                hits += 1;
            }
            hits as f64 / (i + 1) as f64
        })
        .collect();
    let auc = curve.iter().sum::<f64>() / curve.len() as f64;
    Some(PrecisionCurve { curve, auc })
}

/// Frames ranked for `noun` by posterior. Frames the noun already supports
/// are not candidates; positives are frames listing it as a query.
pub fn rank_frames<T: Scalar>(
    noun: &str,
    h: &[T],
    model: &ChainingModel<T>,
    table: &FrameTable,
) -> Result<RankedPrediction, EvalError> {
    let post = model.posterior(h)?;
    let scored = post
        .frames
        .iter()
        .zip(&post.log_probs)
        .filter(|(f, _)| table.entry(f).is_none_or(|e| !e.supports.contains(noun)))
        .map(|(f, lp)| (f.to_string(), lp.as_f64()))
        .collect();
    let positives = table
        .frames_with_query(noun)
        .into_iter()
        .map(Frame::to_string)
        .collect();
    RankedPrediction::new(noun, scored, &positives)
}

/// Candidates for `frame`'s noun-argument ranking: vocabulary nouns that are
/// not its supports and not its queries outside `keep_queries`.
pub fn noun_candidates(
    table: &FrameTable,
    frame: &Frame,
    keep_queries: &BTreeSet<String>,
) -> Result<BTreeSet<String>, EvalError> {
    let entry = table
        .entry(frame)
        .ok_or_else(|| EvalError::UnknownFrame(frame.clone()))?;
    Ok(table
        .vocabulary()
        .into_iter()
        .filter(|n| !entry.supports.contains(n))
        .filter(|n| !entry.queries.contains(n) || keep_queries.contains(n))
        .collect())
}

/// Nouns ranked for `frame` by that frame's likelihood component.
pub fn rank_nouns<T: Scalar>(
    frame: &Frame,
    model: &ChainingModel<T>,
    reps: &Representations<T>,
    candidates: &BTreeSet<String>,
    positives: &BTreeSet<String>,
) -> Result<RankedPrediction, EvalError> {
    let fi = model
        .frame_index(frame)
        .ok_or_else(|| EvalError::UnknownFrame(frame.clone()))?;
    let scored = candidates
        .iter()
        .map(|n| {
            let h = reps
                .get(n)
                .ok_or_else(|| EvalError::MissingRepresentation(n.clone()))?;
            Ok((n.clone(), model.likelihood(h)?.log_probs[fi].as_f64()))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    RankedPrediction::new(frame.to_string(), scored, positives)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    VerbSyntax,
    NounArgument,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::VerbSyntax, Task::NounArgument];
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::VerbSyntax => "verb-syntax",
            Task::NounArgument => "noun-argument",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verb-syntax" => Ok(Task::VerbSyntax),
            "noun-argument" => Ok(Task::NounArgument),
            _ => Err(format!("unknown task {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cohort {
    Novel,
    Existing,
    Combined,
}

impl Cohort {
    pub const ALL: [Cohort; 3] = [Cohort::Novel, Cohort::Existing, Cohort::Combined];
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cohort::Novel => "novel",
            Cohort::Existing => "existing",
            Cohort::Combined => "combined",
        })
    }
}

/// A noun is novel at `t` when its corpus frequency before `t` is zero.
pub fn is_novel(freq: &TokenFrequencyIndex, noun: &str, t: Decade) -> bool {
    freq.before(noun, t) == 0
}

/// Splits verb-syntax predictions (keyed by query noun) into novel and
/// existing.
pub fn cohort_split(
    preds: &[RankedPrediction],
    freq: &TokenFrequencyIndex,
    t: Decade,
) -> (Vec<RankedPrediction>, Vec<RankedPrediction>) {
    preds
        .iter()
        .cloned()
        .partition(|p| is_novel(freq, &p.query, t))
}

/// Restricts a noun-argument prediction to the positives of one cohort; the
/// other cohort's positives are removed from the candidates.
pub fn restrict_positives(
    pred: &RankedPrediction,
    keep: impl Fn(&str) -> bool,
) -> RankedPrediction {
    let (positives, dropped): (BTreeSet<String>, BTreeSet<String>) =
        pred.positives.iter().cloned().partition(|p| keep(p));
    let (candidates, scores) = pred
        .candidates
        .iter()
        .zip(&pred.scores)
        .filter(|(c, _)| !dropped.contains(*c))
        .map(|(c, s)| (c.clone(), *s))
        .unzip();
    RankedPrediction {
        query: pred.query.clone(),
        candidates,
        scores,
        positives,
    }
}

/// What produced the rankings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScorerLabel {
    Model { kind: String, mask: ModalityMask },
    Frequency,
    Random,
}

impl ScorerLabel {
    pub fn kind(&self) -> String {
        match self {
            ScorerLabel::Model { kind, .. } => kind.clone(),
            ScorerLabel::Frequency => "baseline-frequency".into(),
            ScorerLabel::Random => "baseline-random".into(),
        }
    }

    pub fn mask(&self) -> String {
        match self {
            ScorerLabel::Model { mask, .. } => mask.to_string(),
            _ => "-".into(),
        }
    }
}

/// The test examples of one decade.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub decade: Decade,
    /// Query noun to its true frames.
    pub verb_syntax: BTreeMap<String, BTreeSet<Frame>>,
    /// Frame to its test query nouns.
    pub noun_argument: BTreeMap<Frame, BTreeSet<String>>,
}

impl TestSet {
    /// Test examples from a table whose queries are exactly the test queries.
    pub fn from_table(test: &FrameTable) -> Self {
        let mut verb_syntax: BTreeMap<String, BTreeSet<Frame>> = BTreeMap::new();
        let mut noun_argument = BTreeMap::new();
        for (f, e) in &test.entries {
            for n in &e.queries {
                verb_syntax.entry(n.clone()).or_default().insert(f.clone());
            }
            if !e.queries.is_empty() {
                noun_argument.insert(f.clone(), e.queries.clone());
            }
        }
        Self {
            decade: test.decade,
            verb_syntax,
            noun_argument,
        }
    }

    pub fn pairs(&self) -> Vec<(Frame, String)> {
        self.noun_argument
            .iter()
            .flat_map(|(f, ns)| ns.iter().map(move |n| (f.clone(), n.clone())))
            .collect()
    }

    /// Nouns whose representations the evaluation needs, given the full table.
    pub fn nouns_needed(&self, table: &FrameTable) -> BTreeSet<String> {
        let mut out = table.support_nouns();
        out.extend(self.verb_syntax.keys().cloned());
        for f in self.noun_argument.keys() {
            if let Ok(c) = noun_candidates(table, f, &self.noun_argument[f]) {
                out.extend(c);
            }
        }
        out
    }
}

/// Rankings for every test example of one decade.
#[derive(Debug, Clone, PartialEq)]
pub struct DecadePredictions {
    pub decade: Decade,
    pub label: ScorerLabel,
    pub verb_syntax: Vec<RankedPrediction>,
    pub noun_argument: Vec<RankedPrediction>,
}

/// Ranks every test example with a trained model. `table` is the full
/// decade table; `reps` must cover [`TestSet::nouns_needed`].
pub fn predict_model<T: Scalar>(
    model: &ChainingModel<T>,
    reps: &Representations<T>,
    table: &FrameTable,
    test: &TestSet,
    label: ScorerLabel,
) -> Result<DecadePredictions, EvalError> {
    let vs: Vec<(&String, &BTreeSet<Frame>)> = test.verb_syntax.iter().collect();
    let verb_syntax = vs
        .par_iter()
        .map(|(noun, _)| {
            let h = reps
                .get(*noun)
                .ok_or_else(|| EvalError::MissingRepresentation((*noun).clone()))?;
            rank_frames(noun, h, model, table)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let na: Vec<(&Frame, &BTreeSet<String>)> = test.noun_argument.iter().collect();
    let noun_argument = na
        .par_iter()
        .map(|(f, positives)| {
            let cands = noun_candidates(table, f, positives)?;
            rank_nouns(f, model, reps, &cands, positives)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DecadePredictions {
        decade: test.decade,
        label,
        verb_syntax,
        noun_argument,
    })
}

/// Ranks with a per-candidate score function over the model's candidate sets.
fn predict_with(
    table: &FrameTable,
    test: &TestSet,
    label: ScorerLabel,
    frame_score: impl Fn(&str, &Frame) -> f64,
    noun_score: impl Fn(&Frame, &str) -> f64,
) -> Result<DecadePredictions, EvalError> {
    let mut verb_syntax = Vec::new();
    for noun in test.verb_syntax.keys() {
        let scored = table
            .entries
            .iter()
            .filter(|(_, e)| !e.supports.contains(noun))
            .map(|(f, _)| (f.to_string(), frame_score(noun, f)))
            .collect();
        let positives = table
            .frames_with_query(noun)
            .into_iter()
            .map(Frame::to_string)
            .collect();
        verb_syntax.push(RankedPrediction::new(noun.clone(), scored, &positives)?);
    }
    let mut noun_argument = Vec::new();
    for (f, positives) in &test.noun_argument {
        let scored = noun_candidates(table, f, positives)?
            .into_iter()
            .map(|n| {
                let s = noun_score(f, &n);
                (n, s)
            })
            .collect();
        noun_argument.push(RankedPrediction::new(f.to_string(), scored, positives)?);
    }
    Ok(DecadePredictions {
        decade: test.decade,
        label,
        verb_syntax,
        noun_argument,
    })
}

/// Frames by total co-occurrence count before `t`, nouns by their total
/// count before `t`.
pub fn baseline_frequency(
    table: &FrameTable,
    index: &CooccurrenceIndex,
    test: &TestSet,
) -> Result<DecadePredictions, EvalError> {
    let t = table.decade;
    predict_with(
        table,
        test,
        ScorerLabel::Frequency,
        |_, f| index.frame_total_before(f, t) as f64,
        |_, n| index.noun_total_before(n, t) as f64,
    )
}

/// Uniformly random ranking of each example's candidates.
pub fn baseline_random(
    table: &FrameTable,
    test: &TestSet,
    seed: u64,
) -> Result<DecadePredictions, EvalError> {
    let base = predict_with(table, test, ScorerLabel::Random, |_, _| 0.0, |_, _| 0.0)?;
    let mut stream = 0u64;
    let mut shuffle = |p: RankedPrediction| {
        stream += 1;
        random_ranking(
            p,
            derive_seed(seed, derive_seed(test.decade as i64 as u64, stream)),
        )
    };
    Ok(DecadePredictions {
        verb_syntax: base.verb_syntax.into_iter().map(&mut shuffle).collect(),
        noun_argument: base.noun_argument.into_iter().map(&mut shuffle).collect(),
        ..base
    })
}

/// Replaces the order of `pred` by a seeded permutation of its candidates
/// (taken in sorted order so the result depends only on the seed).
pub fn random_ranking(pred: RankedPrediction, seed: u64) -> RankedPrediction {
    let mut cands = pred.candidates;
    cands.sort();
    cands.shuffle(&mut seeded(seed));
    let n = cands.len();
    RankedPrediction {
        query: pred.query,
        scores: (0..n).map(|i| (n - i) as f64).collect(),
        candidates: cands,
        positives: pred.positives,
    }
}

/// One row of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// A decade, or `all` for examples pooled across decades.
    pub decade: String,
    pub task: Task,
    pub cohort: Cohort,
    pub model_kind: String,
    pub modality_mask: String,
    pub n_examples: usize,
    pub auc: f64,
    /// Examples without positives, left out of `auc`.
    pub skipped: usize,
}

/// Example-level AUCs of one cohort.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CohortScores {
    pub aucs: Vec<f64>,
    pub skipped: usize,
}

impl CohortScores {
    fn push(&mut self, pred: &RankedPrediction) {
        match precision_curve(pred) {
            Some(c) => self.aucs.push(c.auc),
            None => self.skipped += 1,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.aucs.is_empty() {
            f64::NAN
        } else {
            self.aucs.iter().sum::<f64>() / self.aucs.len() as f64
        }
    }
}

/// Per-example AUCs by task and cohort. Verb-syntax examples are assigned
/// to a cohort by their query noun; noun-argument examples are split into a
/// novel-positive and an existing-positive ranking.
pub fn score_predictions(
    preds: &DecadePredictions,
    freq: &TokenFrequencyIndex,
) -> BTreeMap<(Task, Cohort), CohortScores> {
    let t = preds.decade;
    let mut out: BTreeMap<(Task, Cohort), CohortScores> = BTreeMap::new();
    for task in Task::ALL {
        for cohort in Cohort::ALL {
            out.insert((task, cohort), CohortScores::default());
        }
    }
    for p in &preds.verb_syntax {
        let cohort = if is_novel(freq, &p.query, t) {
            Cohort::Novel
        } else {
            Cohort::Existing
        };
        out.get_mut(&(Task::VerbSyntax, cohort)).unwrap().push(p);
        out.get_mut(&(Task::VerbSyntax, Cohort::Combined))
            .unwrap()
            .push(p);
    }
    for p in &preds.noun_argument {
        let novel = restrict_positives(p, |n| is_novel(freq, n, t));
        let existing = restrict_positives(p, |n| !is_novel(freq, n, t));
        out.get_mut(&(Task::NounArgument, Cohort::Novel))
            .unwrap()
            .push(&novel);
        out.get_mut(&(Task::NounArgument, Cohort::Existing))
            .unwrap()
            .push(&existing);
        out.get_mut(&(Task::NounArgument, Cohort::Combined))
            .unwrap()
            .push(p);
    }
    out
}

/// Report rows for each decade plus rows pooling all decades' examples.
pub fn report_rows(
    label: &ScorerLabel,
    per_decade: &[(Decade, BTreeMap<(Task, Cohort), CohortScores>)],
) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    let mut pooled: BTreeMap<(Task, Cohort), CohortScores> = BTreeMap::new();
    let row = |decade: String, (task, cohort): (Task, Cohort), s: &CohortScores| ReportRow {
        decade,
        task,
        cohort,
        model_kind: label.kind(),
        modality_mask: label.mask(),
        n_examples: s.aucs.len(),
        auc: s.mean(),
        skipped: s.skipped,
    };
    for (decade, scores) in per_decade {
        for (key, s) in scores {
            rows.push(row(decade.to_string(), *key, s));
            let p = pooled.entry(*key).or_default();
            p.aucs.extend(&s.aucs);
            p.skipped += s.skipped;
        }
    }
    if per_decade.len() > 1 {
        for (key, s) in &pooled {
            rows.push(row("all".into(), *key, s));
        }
    }
    rows
}

pub const REPORT_HEADER: &str = "decade\ttask\tcohort\tmodelKind\tmodalityMask\tnExamples\tauc";

/// Writes the report TSV. Comment lines state the metric and candidate sets;
/// a cohort without scored examples has `auc` `NA`.
pub fn write_report<W: Write>(mut w: W, rows: &[ReportRow]) -> std::io::Result<()> {
    writeln!(w, "# metric=mean-precision-AUC")?;
    writeln!(
        w,
        "# verb-syntax candidates: decade frames the query noun does not support"
    )?;
    writeln!(w, "# noun-argument candidates: decade nouns that are not supports or non-test queries of the frame")?;
    let skipped: usize = rows
        .iter()
        .filter(|r| r.cohort == Cohort::Combined && r.decade != "all")
        .map(|r| r.skipped)
        .sum();
    writeln!(w, "# skipped_without_positives={skipped}")?;
    writeln!(w, "{REPORT_HEADER}")?;
    for r in rows {
        let auc = if r.auc.is_nan() {
            "NA".to_string()
        } else {
            format!("{:.6}", r.auc)
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.decade, r.task, r.cohort, r.model_kind, r.modality_mask, r.n_examples, auc
        )?;
    }
    Ok(())
}

/// Parses the data rows of a report written by [`write_report`].
pub fn read_report(text: &str) -> Result<Vec<ReportRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line == REPORT_HEADER || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(format!("line {}: expected 7 fields", i + 1));
        }
        let bad = |what: &str| format!("line {}: bad {what}", i + 1);
        rows.push(ReportRow {
            decade: f[0].to_string(),
            task: f[1].parse().map_err(|_| bad("task"))?,
            cohort: match f[2] {
                "novel" => Cohort::Novel,
                "existing" => Cohort::Existing,
                "combined" => Cohort::Combined,
                _ => return Err(bad("cohort")),
            },
            model_kind: f[3].to_string(),
            modality_mask: f[4].to_string(),
            n_examples: f[5].parse().map_err(|_| bad("nExamples"))?,
            auc: if f[6] == "NA" {
                f64::NAN
            } else {
                f[6].parse().map_err(|_| bad("auc"))?
            },
            skipped: 0,
        });
    }
    Ok(rows)
}

/// A trained model's categorization state and noun representations.
#[derive(Debug, Clone)]
pub struct ScoredModel<T> {
    pub mask: ModalityMask,
    pub model: ChainingModel<T>,
    pub reps: Representations<T>,
}

impl<T: Scalar> ScoredModel<T> {
    pub fn log_joint(&self, frame: &Frame, noun: &str) -> Result<T, EvalError> {
        let fi = self
            .model
            .frame_index(frame)
            .ok_or_else(|| EvalError::UnknownFrame(frame.clone()))?;
        let h = self
            .reps
            .get(noun)
            .ok_or_else(|| EvalError::MissingRepresentation(noun.to_string()))?;
        Ok(self.model.joint(h)?.log_joint[fi])
    }
}

/// A ground-truth pair's loss of joint probability when a modality is removed.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationDrop {
    pub frame: Frame,
    pub noun: String,
    /// `log p_full(n, f) - log p_ablated(n, f)`.
    pub delta: f64,
    pub novel: bool,
}

/// The `k` pairs with the largest drop, ties by frame then noun.
pub fn ablation_drops<T: Scalar>(
    full: &ScoredModel<T>,
    ablated: &ScoredModel<T>,
    removed: Modality,
    pairs: &[(Frame, String)],
    freq: &TokenFrequencyIndex,
    t: Decade,
    k: usize,
) -> Result<Vec<AblationDrop>, EvalError> {
    if ablated.mask != full.mask.without(removed) || !full.mask.contains(removed) {
        return Err(EvalError::MaskMismatch {
            full: full.mask,
            ablated: ablated.mask,
            removed,
        });
    }
    let mut drops = pairs
        .iter()
        .map(|(f, n)| {
            Ok(AblationDrop {
                frame: f.clone(),
                noun: n.clone(),
                delta: (full.log_joint(f, n)? - ablated.log_joint(f, n)?).as_f64(),
                novel: is_novel(freq, n, t),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    drops.sort_by(|a, b| {
        b.delta
            .partial_cmp(&a.delta)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.frame.cmp(&b.frame))
            .then_with(|| a.noun.cmp(&b.noun))
    });
    drops.truncate(k);
    Ok(drops)
}

pub fn write_ablation<W: Write>(
    mut w: W,
    removed: Modality,
    drops: &[AblationDrop],
) -> std::io::Result<()> {
    writeln!(w, "# removed={removed}")?;
    writeln!(w, "frame\tnoun\tdelta\tnovel")?;
    for d in drops {
        writeln!(w, "{}\t{}\t{:.6}\t{}", d.frame, d.noun, d.delta, d.novel)?;
    }
    Ok(())
}

/// Tie order for modality attribution.
pub const BREAKDOWN_ORDER: [Modality; 3] = [
    Modality::Conceptual,
    Modality::Perceptual,
    Modality::Linguistic,
];

/// Percentage of pairs for which each unimodal model gives the true pair
/// the highest log joint probability. Ties go to the earlier modality in
/// [`BREAKDOWN_ORDER`].
pub fn modality_breakdown<T: Scalar>(
    unimodal: &[ScoredModel<T>],
    pairs: &[(Frame, String)],
) -> Result<Vec<(Modality, f64)>, EvalError> {
    let models = BREAKDOWN_ORDER
        .iter()
        .map(|&m| {
            unimodal
                .iter()
                .find(|s| s.mask == ModalityMask::only(m))
                .ok_or_else(|| EvalError::BreakdownModels(format!("missing {m}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut wins = [0usize; 3];
    for (f, n) in pairs {
        let mut best = 0;
        let mut best_score = models[0].log_joint(f, n)?;
        for (i, m) in models.iter().enumerate().skip(1) {
            let s = m.log_joint(f, n)?;
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        wins[best] += 1;
    }
    let total = pairs.len().max(1) as f64;
    Ok(BREAKDOWN_ORDER
        .iter()
        .zip(wins)
        .map(|(&m, w)| (m, 100.0 * w as f64 / total))
        .collect())
}

/// Two-dimensional principal component projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca2<T> {
    pub coords: Vec<[T; 2]>,
    /// Principal axes as columns (`dim x 2`).
    pub components: Array2<T>,
    /// Variance along each axis (divisor `n - 1`).
    pub explained_variance: [T; 2],
}

/// Centers the points and projects them on the top two principal axes, each
/// axis signed so that its largest-magnitude loading is positive.
pub fn pca_2d<T: Scalar>(points: &[Vec<T>]) -> Result<Pca2<T>, EvalError> {
    let n = points.len();
    let dim = points.first().map_or(0, Vec::len);
    let mut x = Array2::zeros((n, dim));
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(EvalError::Chaining(ChainingError::Dimension {
                expected: dim,
                found: p.len(),
            }));
        }
        x.row_mut(i)
            .assign(&ndarray::ArrayView1::from(p.as_slice()));
    }
    let mut components = Array2::zeros((dim, 2));
    let mut explained_variance = [T::zero(); 2];
    if n > 0 && dim > 0 {
        let mean = x.mean_axis(ndarray::Axis(0)).expect("non-empty");
        x -= &mean;
        let svd = jacobi_svd(x.view())?;
        let denom = T::lit((n.max(2) - 1) as f64);
        for k in 0..svd.s.len().min(2) {
            let mut axis = svd.v.column(k).to_owned();
            let lead = axis
                .iter()
                .fold(T::zero(), |m, &v| if v.abs() > m.abs() { v } else { m });
            if lead < T::zero() {
                axis.mapv_inplace(|v| -v);
            }
            components.column_mut(k).assign(&axis);
            explained_variance[k] = svd.s[k] * svd.s[k] / denom;
        }
    }
    let proj = x.dot(&components);
    Ok(Pca2 {
        coords: proj.rows().into_iter().map(|r| [r[0], r[1]]).collect(),
        components,
        explained_variance,
    })
}

/// A projected point for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaRow {
    pub token: String,
    pub x: f64,
    pub y: f64,
    pub role: &'static str,
    pub frame: Frame,
}

/// Projects the supports and queries of `frames` (one row per noun and
/// frame) onto their top two principal components.
pub fn pca_export<T: Scalar>(
    reps: &Representations<T>,
    table: &FrameTable,
    frames: &[Frame],
) -> Result<Vec<PcaRow>, EvalError> {
    let mut items: Vec<(String, &'static str, Frame)> = Vec::new();
    for f in frames {
        let e = table
            .entry(f)
            .ok_or_else(|| EvalError::UnknownFrame(f.clone()))?;
        items.extend(e.supports.iter().map(|n| (n.clone(), "support", f.clone())));
        items.extend(e.queries.iter().map(|n| (n.clone(), "query", f.clone())));
    }
    let points = items
        .iter()
        .map(|(n, _, _)| {
            reps.get(n)
                .cloned()
                .ok_or_else(|| EvalError::MissingRepresentation(n.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pca = pca_2d(&points)?;
    Ok(items
        .into_iter()
        .zip(pca.coords)
        .map(|((token, role, frame), [x, y])| PcaRow {
            token,
            x: x.as_f64(),
            y: y.as_f64(),
            role,
            frame,
        })
        .collect())
}

pub fn write_pca<W: Write>(mut w: W, rows: &[PcaRow]) -> std::io::Result<()> {
    writeln!(w, "token\tx\ty\trole\tframe")?;
    for r in rows {
        writeln!(
            w,
            "{}\t{:.9}\t{:.9}\t{}\t{}",
            r.token, r.x, r.y, r.role, r.frame
        )?;
    }
    Ok(())
}
