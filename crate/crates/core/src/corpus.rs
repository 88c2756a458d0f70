//! Triple corpora, vocabulary filters and per-decade support/query tables.
//!
//! A triple `(decade, verb, relation, noun, count)` records how often a noun
//! filled `relation` of `verb` during a decade. Counts are binned by decade
//! and accumulated: "before `t`" sums every decade `< t`, "through `t`" also
//! includes decade `t`.
//!
//! For a prediction decade `t`, a noun is a *support* of frame `f` when its
//! count with `f` before `t` exceeds `theta_s`, and a *query* when its count
//! before `t` is below `theta_q` but its count through `t` reaches `theta_q`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

pub type Decade = i32;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: negative count {count}")]
    NegativeCount { line: usize, count: i64 },
    #[error("{0} is not a decade boundary")]
    NotDecade(Decade),
    #[error("thresholds invalid: {0}")]
    InvalidThresholds(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        line,
        message: message.into(),
    }
}

/// Floors a year to the start of its decade (`1987 -> 1980`, `-5 -> -10`).
pub fn decade_of(year: i32) -> Decade {
    year.div_euclid(10) * 10
}

fn token(raw: &str, line: usize, what: &str) -> Result<String, CorpusError> {
    let t = raw.trim().to_lowercase();
    if t.is_empty() {
        return Err(parse_err(line, format!("empty {what}")));
    }
    if t.chars().any(char::is_whitespace) {
        return Err(parse_err(line, format!("{what} {t:?} contains whitespace")));
    }
    Ok(t)
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| match l {
            Ok(s) => {
                let t = s.trim();
                !t.is_empty() && !t.starts_with('#')
            }
            Err(_) => true,
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SyntacticTriple {
    pub decade: Decade,
    pub verb: String,
    pub relation: String,
    pub noun: String,
    pub count: u64,
}

impl SyntacticTriple {
    pub fn frame(&self) -> Frame {
        Frame::new(&self.verb, &self.relation)
    }
}

/// Reads a tab-separated triple file: `decade verb relation noun count`.
pub fn parse_triples<R: BufRead>(reader: R) -> Result<Vec<SyntacticTriple>, CorpusError> {
    let mut out = Vec::new();
    for (line, text) in content_lines(reader) {
        let text = text?;
        let cols: Vec<&str> = text.trim_end_matches(['\r', '\n']).split('\t').collect();
        if cols.len() != 5 {
            return Err(parse_err(
                line,
                format!("expected 5 tab-separated columns, found {}", cols.len()),
            ));
        }
        let year: i32 = cols[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("decade {:?} is not an integer", cols[0])))?;
        let count: i64 = cols[4]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("count {:?} is not an integer", cols[4])))?;
        if count < 0 {
            return Err(CorpusError::NegativeCount { line, count });
        }
        out.push(SyntacticTriple {
            decade: decade_of(year),
            verb: token(cols[1], line, "verb")?,
            relation: token(cols[2], line, "relation")?,
            noun: token(cols[3], line, "noun")?,
            count: count as u64,
        });
    }
    Ok(out)
}

pub fn write_triples<W: Write>(mut w: W, triples: &[SyntacticTriple]) -> std::io::Result<()> {
    for t in triples {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            t.decade, t.verb, t.relation, t.noun, t.count
        )?;
    }
    Ok(())
}

/// A verb paired with a syntactic relation, e.g. `drive-dobj`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frame {
    pub verb: String,
    pub relation: String,
}

impl Frame {
    pub fn new(verb: impl Into<String>, relation: impl Into<String>) -> Self {
        Self {
            verb: verb.into(),
            relation: relation.into(),
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.verb, self.relation)
    }
}

impl FromStr for Frame {
    type Err = String;

    /// Splits at the last `-`; relation labels never contain one.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.rsplit_once('-') {
            Some((v, r)) if !v.is_empty() && !r.is_empty() => Ok(Frame::new(v, r)),
            _ => Err(format!("frame {s:?} is not of the form verb-relation")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSelection {
    pub relations: Vec<String>,
    /// Set when fewer than the requested number of relations exist.
    pub short: bool,
}

/// The `k` relations with the largest total count; ties go to the
/// lexicographically smaller label.
pub fn select_relations(triples: &[SyntacticTriple], k: usize) -> RelationSelection {
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for t in triples {
        *totals.entry(t.relation.as_str()).or_default() += t.count;
    }
    let mut ranked: Vec<(&str, u64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let short = ranked.len() < k;
    if short {
        log::warn!("only {} distinct relations, {} requested", ranked.len(), k);
    }
    RelationSelection {
        relations: ranked
            .into_iter()
            .take(k)
            .map(|(r, _)| r.to_string())
            .collect(),
        short,
    }
}

/// Minimum-count thresholds for nouns and verbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabularyFilter {
    pub min_images: u64,
    pub min_concept_edges: u64,
    pub min_noun_count: u64,
    pub min_verb_count: u64,
    pub top_relations: usize,
}

impl Default for VocabularyFilter {
    fn default() -> Self {
        Self {
            min_images: 64,
            min_concept_edges: 10,
            min_noun_count: 15_000,
            min_verb_count: 15_000,
            top_relations: 20,
        }
    }
}

impl VocabularyFilter {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_images == 0
            || self.min_concept_edges == 0
            || self.min_noun_count == 0
            || self.min_verb_count == 0
            || self.top_relations == 0
        {
            return Err(CorpusError::InvalidThresholds(
                "vocabulary thresholds must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub nouns: BTreeSet<String>,
    pub verbs: BTreeSet<String>,
}

/// Keeps nouns meeting all three noun thresholds and verbs meeting the
/// verb threshold. Tokens absent from a map count as zero.
pub fn filter_vocabulary(
    triples: &[SyntacticTriple],
    filter: &VocabularyFilter,
    image_counts: &HashMap<String, u64>,
    edge_counts: &HashMap<String, u64>,
    corpus_counts: &HashMap<String, u64>,
) -> Vocabulary {
    let get = |m: &HashMap<String, u64>, k: &str| m.get(k).copied().unwrap_or(0);
    let mut vocab = Vocabulary::default();
    for t in triples {
        if !vocab.nouns.contains(&t.noun)
            && get(image_counts, &t.noun) >= filter.min_images
            && get(edge_counts, &t.noun) >= filter.min_concept_edges
            && get(corpus_counts, &t.noun) >= filter.min_noun_count
        {
            vocab.nouns.insert(t.noun.clone());
        }
        if !vocab.verbs.contains(&t.verb) && get(corpus_counts, &t.verb) >= filter.min_verb_count {
            vocab.verbs.insert(t.verb.clone());
        }
    }
    vocab
}

/// Drops triples whose relation, verb or noun did not survive filtering.
pub fn restrict_triples(
    triples: &[SyntacticTriple],
    relations: &[String],
    vocab: &Vocabulary,
) -> Vec<SyntacticTriple> {
    let rels: BTreeSet<&str> = relations.iter().map(String::as_str).collect();
    triples
        .iter()
        .filter(|t| {
            rels.contains(t.relation.as_str())
                && vocab.verbs.contains(&t.verb)
                && vocab.nouns.contains(&t.noun)
        })
        .cloned()
        .collect()
}

/// Thresholds used to carve supports and queries out of the counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableParams {
    pub delta: i32,
    pub theta_q: u64,
    pub theta_s: u64,
    pub min_support: usize,
    pub min_query: usize,
}

impl Default for TableParams {
    fn default() -> Self {
        Self {
            delta: 10,
            theta_q: 10,
            theta_s: 100,
            min_support: 4,
            min_query: 1,
        }
    }
}

impl TableParams {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.delta <= 0 || self.delta % 10 != 0 {
            return Err(CorpusError::InvalidThresholds(format!(
                "decade width {} must be a positive multiple of 10",
                self.delta
            )));
        }
        if self.theta_q == 0 || self.theta_s == 0 {
            return Err(CorpusError::InvalidThresholds(
                "theta_q and theta_s must be positive".into(),
            ));
        }
        if self.theta_s < self.theta_q {
            return Err(CorpusError::InvalidThresholds(format!(
                "theta_s ({}) below theta_q ({}) would let a noun be support and query at once",
                self.theta_s, self.theta_q
            )));
        }
        Ok(())
    }
}

/// Per-(frame, noun) counts by decade.
#[derive(Debug, Clone, Default)]
pub struct CooccurrenceIndex {
    counts: BTreeMap<Frame, BTreeMap<String, BTreeMap<Decade, u64>>>,
    range: Option<(Decade, Decade)>,
}

impl CooccurrenceIndex {
    pub fn new(triples: &[SyntacticTriple]) -> Self {
        let mut idx = Self::default();
        for t in triples {
            *idx.counts
                .entry(t.frame())
                .or_default()
                .entry(t.noun.clone())
                .or_default()
                .entry(t.decade)
                .or_default() += t.count;
            idx.range = Some(match idx.range {
                None => (t.decade, t.decade),
                Some((lo, hi)) => (lo.min(t.decade), hi.max(t.decade)),
            });
        }
        idx
    }

    /// First and last decade with any observation.
    pub fn range(&self) -> Option<(Decade, Decade)> {
        self.range
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.counts.keys()
    }

    pub fn count_before(&self, frame: &Frame, noun: &str, t: Decade) -> u64 {
        self.sum(frame, noun, |d| d < t)
    }

    pub fn count_through(&self, frame: &Frame, noun: &str, t: Decade) -> u64 {
        self.sum(frame, noun, |d| d <= t)
    }

    fn sum(&self, frame: &Frame, noun: &str, keep: impl Fn(Decade) -> bool) -> u64 {
        self.counts
            .get(frame)
            .and_then(|m| m.get(noun))
            .map(|by| by.iter().filter(|(&d, _)| keep(d)).map(|(_, &c)| c).sum())
            .unwrap_or(0)
    }

    /// Total count of a frame over all nouns before `t`.
    pub fn frame_total_before(&self, frame: &Frame, t: Decade) -> u64 {
        self.counts
            .get(frame)
            .map(|m| {
                m.values()
                    .flat_map(|by| by.iter())
                    .filter(|(&d, _)| d < t)
                    .map(|(_, &c)| c)
                    .sum()
            })
            .unwrap_or(0)
    }

    /// Total count of a noun over all frames before `t`.
    pub fn noun_total_before(&self, noun: &str, t: Decade) -> u64 {
        self.counts
            .values()
            .filter_map(|m| m.get(noun))
            .flat_map(|by| by.iter())
            .filter(|(&d, _)| d < t)
            .map(|(_, &c)| c)
            .sum()
    }

    /// Builds the support/query table for prediction decade `t`.
    pub fn frame_table(&self, t: Decade, params: TableParams) -> Result<TableBuild, CorpusError> {
        if t.rem_euclid(10) != 0 {
            return Err(CorpusError::NotDecade(t));
        }
        params.validate()?;
        let mut table = FrameTable::new(t, params);
        let warning = match self.range {
            None => Some(TableWarning::NoData),
            Some((lo, hi)) if t < lo || t > hi => Some(TableWarning::OutOfRange {
                decade: t,
                first: lo,
                last: hi,
            }),
            _ => None,
        };
        if let Some(w) = &warning {
            log::warn!("{w}");
            return Ok(TableBuild { table, warning });
        }
        for (frame, nouns) in &self.counts {
            let mut entry = FrameEntry::default();
            for (noun, by) in nouns {
                let (mut before, mut through) = (0u64, 0u64);
                for (&d, &c) in by {
                    if d < t {
                        before += c;
                    }
                    if d < t + params.delta {
                        through += c;
                    }
                }
                if before > params.theta_s {
                    entry.supports.insert(noun.clone());
                } else if before < params.theta_q && through >= params.theta_q {
                    entry.queries.insert(noun.clone());
                }
            }
            if entry.supports.len() >= params.min_support && entry.queries.len() >= params.min_query
            {
                table.entries.insert(frame.clone(), entry);
            }
        }
        Ok(TableBuild {
            table,
            warning: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableWarning {
    NoData,
    OutOfRange {
        decade: Decade,
        first: Decade,
        last: Decade,
    },
}

impl fmt::Display for TableWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableWarning::NoData => write!(f, "no triples; frame table is empty"),
            TableWarning::OutOfRange {
                decade,
                first,
                last,
            } => {
                write!(
                    f,
                    "decade {decade} outside data range {first}..={last}; frame table is empty"
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableBuild {
    pub table: FrameTable,
    pub warning: Option<TableWarning>,
}

/// Convenience wrapper indexing `triples` and building one table.
pub fn build_frame_table(
    triples: &[SyntacticTriple],
    t: Decade,
    params: TableParams,
) -> Result<TableBuild, CorpusError> {
    CooccurrenceIndex::new(triples).frame_table(t, params)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameEntry {
    pub supports: BTreeSet<String>,
    pub queries: BTreeSet<String>,
}

/// Supports and queries of every retained frame at one decade. Iteration
/// order is the frame ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTable {
    pub decade: Decade,
    pub params: TableParams,
    pub entries: BTreeMap<Frame, FrameEntry>,
}

impl FrameTable {
    pub fn new(decade: Decade, params: TableParams) -> Self {
        Self {
            decade,
            params,
            entries: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.entries.keys()
    }

    pub fn entry(&self, frame: &Frame) -> Option<&FrameEntry> {
        self.entries.get(frame)
    }

    /// Every distinct query noun, sorted.
    pub fn query_nouns(&self) -> BTreeSet<String> {
        self.entries
            .values()
            .flat_map(|e| e.queries.iter().cloned())
            .collect()
    }

    pub fn support_nouns(&self) -> BTreeSet<String> {
        self.entries
            .values()
            .flat_map(|e| e.supports.iter().cloned())
            .collect()
    }

    /// Every noun appearing as a support or query of any frame.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut v = self.support_nouns();
        v.extend(self.query_nouns());
        v
    }

    /// Frames whose query set contains `noun`.
    pub fn frames_with_query(&self, noun: &str) -> Vec<&Frame> {
        self.entries
            .iter()
            .filter(|(_, e)| e.queries.contains(noun))
            .map(|(f, _)| f)
            .collect()
    }

    /// Copy keeping only queries accepted by `keep`; supports unchanged and
    /// frames are retained even if left without queries.
    pub fn with_queries(&self, keep: impl Fn(&Frame, &str) -> bool) -> FrameTable {
        let mut out = FrameTable::new(self.decade, self.params);
        for (f, e) in &self.entries {
            let queries = e.queries.iter().filter(|n| keep(f, n)).cloned().collect();
            out.entries.insert(
                f.clone(),
                FrameEntry {
                    supports: e.supports.clone(),
                    queries,
                },
            );
        }
        out
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let p = &self.params;
        writeln!(
            w,
            "# decade={} delta={} theta_q={} theta_s={} min_support={} min_query={}",
            self.decade, p.delta, p.theta_q, p.theta_s, p.min_support, p.min_query
        )?;
        for (f, e) in &self.entries {
            for n in &e.supports {
                writeln!(w, "{}\t{}\t{}\tS\t{}", self.decade, f.verb, f.relation, n)?;
            }
            for n in &e.queries {
                writeln!(w, "{}\t{}\t{}\tQ\t{}", self.decade, f.verb, f.relation, n)?;
            }
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<FrameTable, CorpusError> {
        let mut decade: Option<Decade> = None;
        let mut params = TableParams::default();
        let mut entries: BTreeMap<Frame, FrameEntry> = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('#') {
                for kv in header.split_whitespace() {
                    let Some((k, v)) = kv.split_once('=') else {
                        continue;
                    };
                    let bad = || parse_err(lineno, format!("bad header value {kv:?}"));
                    match k {
                        "decade" => decade = Some(v.parse().map_err(|_| bad())?),
                        "delta" => params.delta = v.parse().map_err(|_| bad())?,
                        "theta_q" => params.theta_q = v.parse().map_err(|_| bad())?,
                        "theta_s" => params.theta_s = v.parse().map_err(|_| bad())?,
                        "min_support" => params.min_support = v.parse().map_err(|_| bad())?,
                        "min_query" => params.min_query = v.parse().map_err(|_| bad())?,
                        _ => {}
                    }
                }
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(parse_err(
                    lineno,
                    format!("expected 5 columns, found {}", cols.len()),
                ));
            }
            let d: Decade = cols[0].parse().map_err(|_| {
                parse_err(lineno, format!("decade {:?} is not an integer", cols[0]))
            })?;
            match decade {
                None => decade = Some(d),
                Some(prev) if prev != d => {
                    return Err(parse_err(
                        lineno,
                        format!("decade {d} differs from table decade {prev}"),
                    ))
                }
                _ => {}
            }
            let frame = Frame::new(
                token(cols[1], lineno, "verb")?,
                token(cols[2], lineno, "relation")?,
            );
            let noun = token(cols[4], lineno, "noun")?;
            let entry = entries.entry(frame).or_default();
            match cols[3] {
                "S" => entry.supports.insert(noun),
                "Q" => entry.queries.insert(noun),
                other => {
                    return Err(parse_err(
                        lineno,
                        format!("role {other:?} is neither S nor Q"),
                    ))
                }
            };
        }
        let decade = decade.ok_or_else(|| parse_err(0, "table has neither header nor rows"))?;
        Ok(FrameTable {
            decade,
            params,
            entries,
        })
    }
}

/// Cumulative counts of tokens in a reference corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenFrequencyIndex {
    cumulative: BTreeMap<String, BTreeMap<Decade, u64>>,
}

impl TokenFrequencyIndex {
    /// Builds from per-decade increments.
    pub fn from_increments(rows: impl IntoIterator<Item = (String, Decade, u64)>) -> Self {
        let mut inc: BTreeMap<String, BTreeMap<Decade, u64>> = BTreeMap::new();
        for (tok, d, c) in rows {
            *inc.entry(tok).or_default().entry(decade_of(d)).or_default() += c;
        }
        let cumulative = inc
            .into_iter()
            .map(|(tok, by)| {
                let mut run = 0u64;
                let acc = by
                    .into_iter()
                    .map(|(d, c)| {
                        run += c;
                        (d, run)
                    })
                    .collect();
                (tok, acc)
            })
            .collect();
        Self { cumulative }
    }

    /// Count up to and including decade `t`.
    pub fn through(&self, token: &str, t: Decade) -> u64 {
        self.cumulative
            .get(token)
            .and_then(|m| m.range(..=t).next_back())
            .map(|(_, &c)| c)
            .unwrap_or(0)
    }

    /// Count over decades strictly before `t`.
    pub fn before(&self, token: &str, t: Decade) -> u64 {
        self.cumulative
            .get(token)
            .and_then(|m| m.range(..t).next_back())
            .map(|(_, &c)| c)
            .unwrap_or(0)
    }

    pub fn total(&self, token: &str) -> u64 {
        self.cumulative
            .get(token)
            .and_then(|m| m.values().next_back())
            .copied()
            .unwrap_or(0)
    }

    pub fn totals(&self) -> HashMap<String, u64> {
        self.cumulative
            .iter()
            .map(|(k, m)| (k.clone(), m.values().next_back().copied().unwrap_or(0)))
            .collect()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.cumulative.keys().map(String::as_str)
    }
}

/// Reads `token decade count` rows (whitespace separated, per-decade
/// increments).
pub fn parse_frequencies<R: BufRead>(reader: R) -> Result<TokenFrequencyIndex, CorpusError> {
    let mut rows = Vec::new();
    for (line, text) in content_lines(reader) {
        let text = text?;
        let cols: Vec<&str> = text.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected 3 columns, found {}", cols.len()),
            ));
        }
        let d: i32 = cols[1]
            .parse()
            .map_err(|_| parse_err(line, format!("decade {:?} is not an integer", cols[1])))?;
        let c: i64 = cols[2]
            .parse()
            .map_err(|_| parse_err(line, format!("count {:?} is not an integer", cols[2])))?;
        if c < 0 {
            return Err(CorpusError::NegativeCount { line, count: c });
        }
        rows.push((token(cols[0], line, "token")?, d, c as u64));
    }
    Ok(TokenFrequencyIndex::from_increments(rows))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecadeStats {
    pub decade: Decade,
    pub frames: usize,
    pub query_pairs: usize,
    pub support_pairs: usize,
    pub query_nouns: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetStats {
    /// Distinct frames over all decades.
    pub frames: usize,
    pub decades: usize,
    pub per_decade: Vec<DecadeStats>,
}

pub fn dataset_stats(tables: &[FrameTable]) -> DatasetStats {
    let mut frames: BTreeSet<&Frame> = BTreeSet::new();
    let mut per_decade = Vec::with_capacity(tables.len());
    for t in tables {
        frames.extend(t.frames());
        per_decade.push(DecadeStats {
            decade: t.decade,
            frames: t.len(),
            query_pairs: t.entries.values().map(|e| e.queries.len()).sum(),
            support_pairs: t.entries.values().map(|e| e.supports.len()).sum(),
            query_nouns: t.query_nouns().len(),
        });
    }
    DatasetStats {
        frames: frames.len(),
        decades: tables.len(),
        per_decade,
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "frames\t{}", self.frames)?;
        writeln!(f, "decades\t{}", self.decades)?;
        writeln!(f, "decade\tframes\tquery_pairs\tsupport_pairs\tquery_nouns")?;
        for d in &self.per_decade {
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}",
                d.decade, d.frames, d.query_pairs, d.support_pairs, d.query_nouns
            )?;
        }
        Ok(())
    }
}
