//! Seeded synthetic corpora with planted frame structure.
//!
//! Frames come in groups that share the same noun clusters; a query noun is
//! drawn from one cluster of a group and emerges in every frame of that
//! group. A cluster center is the sum of two random "atom" directions.
//! Bimodal groups are generated in blocks of up to three over four atoms
//! `a, b, c, d`, with clusters at `a+b, c+d`, `a+c, b+d` and `a+d, b+c`.
//! Every group in a block has the same support centroid, so only the
//! individual clusters tell them apart.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::corpus::{write_triples, Decade, SyntacticTriple};
use crate::knowledge::{DecadeKey, EmbeddingStore, Modality};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which modalities carry a group's cluster structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalLayout {
    /// Every modality encodes every group's clusters.
    #[default]
    Shared,
    /// Each group is encoded in one modality (round robin over linguistic,
    /// perceptual, conceptual); the others carry only noise for its nouns.
    Split,
}

impl fmt::Display for SignalLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalLayout::Shared => "shared",
            SignalLayout::Split => "split",
        })
    }
}

impl FromStr for SignalLayout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shared" => Ok(SignalLayout::Shared),
            "split" => Ok(SignalLayout::Split),
            _ => Err(format!(
                "unknown signal layout {s:?} (expected shared or split)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub frames: usize,
    /// Support nouns per frame, divided evenly over the frame's clusters.
    pub nouns_per_frame: usize,
    /// Frames sharing one cluster profile.
    pub frames_per_group: usize,
    /// Query nouns drawn from each cluster of each group, per decade.
    pub queries_per_cluster: usize,
    /// Prediction decades.
    pub decades: usize,
    pub first_decade: Decade,
    /// Distance between the closest distinct cluster centers, in units of
    /// `cluster_sd`.
    pub cluster_separation: f64,
    /// Expected norm of a noun's deviation from its cluster center.
    pub cluster_sd: f64,
    pub bimodal_fraction: f64,
    /// Share of query nouns with no corpus history before their decade.
    pub novel_fraction: f64,
    pub signal: SignalLayout,
    pub dim: usize,
    pub image_dim: usize,
    pub images_per_noun: usize,
    pub hubs_per_atom: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 30,
            nouns_per_frame: 8,
            frames_per_group: 5,
            queries_per_cluster: 10,
            decades: 1,
            first_decade: 1900,
            cluster_separation: 10.0,
            cluster_sd: 0.1,
            bimodal_fraction: 1.0,
            novel_fraction: 0.25,
            signal: SignalLayout::Shared,
            dim: 300,
            image_dim: 1000,
            images_per_noun: 2,
            hubs_per_atom: 6,
            seed: 0,
        }
    }
}

/// Thresholds the generated counts are built around.
pub const THETA_Q: u64 = 10;
pub const THETA_S: u64 = 100;
pub const MIN_CONCEPT_EDGES: u64 = 10;
pub const MIN_CORPUS_COUNT: u64 = 15000;
pub const CONCEPT_MIN_COUNT: u64 = 10;

const NOISE_CONCEPTS: usize = 60;
const SIGNAL_EDGES_PER_ATOM: usize = 5;
const NOISE_EDGES: usize = 3;
const RELATIONS: [&str; 3] = ["dobj", "nsubj", "pobj_prep.in"];

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.to_string()));
        if self.frames == 0
            || self.frames_per_group == 0
            || self.queries_per_cluster == 0
            || self.decades == 0
        {
            return bad("counts must be at least 1");
        }
        if self.nouns_per_frame < 4 {
            return bad("frames need at least 4 support nouns");
        }
        if !(self.cluster_separation > 0.0) || !(self.cluster_sd > 0.0) {
            return bad("separation and spread must be positive");
        }
        if !(0.0..=1.0).contains(&self.bimodal_fraction)
            || !(0.0..=1.0).contains(&self.novel_fraction)
        {
            return bad("fractions must lie in [0, 1]");
        }
        if self.dim == 0 || self.image_dim == 0 || self.images_per_noun == 0 {
            return bad("dimensions must be positive");
        }
        if self.hubs_per_atom < SIGNAL_EDGES_PER_ATOM {
            return bad("hubs_per_atom is below the edges drawn per atom");
        }
        Ok(())
    }

    pub fn prediction_decades(&self) -> Vec<Decade> {
        (0..self.decades)
            .map(|k| self.first_decade + 10 * k as Decade)
            .collect()
    }

    /// Decade holding the support history.
    pub fn history_decade(&self) -> Decade {
        self.first_decade - 20
    }

    fn groups(&self) -> usize {
        self.frames.div_ceil(self.frames_per_group)
    }

    fn bimodal_groups(&self) -> usize {
        (self.bimodal_fraction * self.groups() as f64).round() as usize
    }
}

/// Noun role in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NounRole {
    Support,
    Query,
}

impl fmt::Display for NounRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NounRole::Support => "support",
            NounRole::Query => "query",
        })
    }
}

/// One planted (noun, frame) relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ManifestRow {
    pub decade: Decade,
    pub role: NounRole,
    pub noun: String,
    pub frame: String,
    pub group: usize,
    pub cluster: usize,
    pub novel: bool,
    pub signal: &'static str,
}

/// Everything the generator produces, in memory.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub config: SynthConfig,
    pub triples: Vec<SyntacticTriple>,
    /// `(relation, start, end, weight)`.
    pub graph: Vec<(String, String, String, f64)>,
    pub linguistic: EmbeddingStore<f64>,
    pub images: BTreeMap<String, Vec<Vec<f64>>>,
    /// Per-decade increments `(token, decade, count)`.
    pub frequencies: Vec<(String, Decade, u64)>,
    pub manifest: Vec<ManifestRow>,
}

struct Cluster {
    atoms: [usize; 2],
}

struct Group {
    frames: Vec<(String, String)>,
    clusters: Vec<Cluster>,
    signal: Option<Modality>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, norm: f64) -> Vec<f64> {
    let scale = norm / (dim as f64).sqrt();
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

struct Atoms {
    linguistic: Vec<Vec<f64>>,
    perceptual: Vec<Vec<f64>>,
    hubs: Vec<Vec<String>>,
}

pub fn generate(config: &SynthConfig) -> Result<SynthData, SynthError> {
    config.validate()?;
    let mut rng = seeded(derive_seed(config.seed, 0x5e17));
    let sd = config.cluster_sd;
    // closest distinct centers differ in one atom: |x - y| = atom_norm * sqrt(2)
    let atom_norm = config.cluster_separation * sd / 2f64.sqrt();
    // the fixed perceptual projection shrinks norms by about sqrt(dim / (3 image_dim))
    let image_gain = (3.0 * config.image_dim as f64 / config.dim as f64).sqrt();

    let n_groups = config.groups();
    let n_bimodal = config.bimodal_groups();
    let mut groups: Vec<Group> = Vec::with_capacity(n_groups);
    let mut n_atoms = 0;
    let mut fresh = |k: usize| {
        let start = n_atoms;
        n_atoms += k;
        start
    };
    let mut g = 0;
    while g < n_groups {
        let clusters_pair: Vec<Vec<Cluster>> = if g < n_bimodal {
            let a = fresh(4);
            let (x, y, z, w) = (a, a + 1, a + 2, a + 3);
            // up to three groups pairing the same four atoms differently;
            // their cluster centroids all coincide
            let pairings = [[[x, y], [z, w]], [[x, z], [y, w]], [[x, w], [y, z]]];
            pairings
                .iter()
                .take((n_bimodal - g).min(3))
                .map(|p| p.iter().map(|&atoms| Cluster { atoms }).collect())
                .collect()
        } else {
            let a = fresh(2);
            vec![vec![Cluster { atoms: [a, a + 1] }]]
        };
        for clusters in clusters_pair {
            groups.push(Group {
                frames: Vec::new(),
                clusters,
                signal: None,
            });
            g += 1;
        }
    }
    let order = [
        Modality::Linguistic,
        Modality::Perceptual,
        Modality::Conceptual,
    ];
    for (gi, group) in groups.iter_mut().enumerate() {
        if config.signal == SignalLayout::Split {
            group.signal = Some(order[gi % 3]);
        }
    }
    for f in 0..config.frames {
        let verb = format!("v{f:03}");
        let relation = RELATIONS[f % RELATIONS.len()].to_string();
        groups[f / config.frames_per_group]
            .frames
            .push((verb, relation));
    }

    let atoms = Atoms {
        linguistic: (0..n_atoms)
            .map(|_| gaussian(&mut rng, config.dim, atom_norm))
            .collect(),
        perceptual: (0..n_atoms)
            .map(|_| gaussian(&mut rng, config.image_dim, atom_norm * image_gain))
            .collect(),
        hubs: (0..n_atoms)
            .map(|a| {
                (0..config.hubs_per_atom)
                    .map(|h| format!("h{a:03}x{h}"))
                    .collect()
            })
            .collect(),
    };
    let noise_concepts: Vec<String> = (0..NOISE_CONCEPTS).map(|i| format!("z{i:03}")).collect();

    let history = config.history_decade();
    let decades = config.prediction_decades();
    let mut data = SynthData {
        config: config.clone(),
        triples: Vec::new(),
        graph: Vec::new(),
        linguistic: EmbeddingStore::new(Modality::Linguistic, config.dim),
        images: BTreeMap::new(),
        frequencies: Vec::new(),
        manifest: Vec::new(),
    };
    let informative = |group: &Group, m: Modality| group.signal.is_none_or(|s| s == m);
    let emit_noun = |data: &mut SynthData,
                     rng: &mut ChaCha8Rng,
                     noun: &str,
                     group: &Group,
                     cluster: &Cluster,
                     known_from: Option<Decade>| {
        let (a0, a1) = (cluster.atoms[0], cluster.atoms[1]);
        let center_l = if informative(group, Modality::Linguistic) {
            add(&atoms.linguistic[a0], &atoms.linguistic[a1])
        } else {
            vec![0.0; config.dim]
        };
        let center_p = if informative(group, Modality::Perceptual) {
            add(&atoms.perceptual[a0], &atoms.perceptual[a1])
        } else {
            vec![0.0; config.image_dim]
        };
        let l = add(&center_l, &gaussian(rng, config.dim, sd));
        for &d in &decades {
            data.linguistic
                .insert(noun, DecadeKey::At(d), l.clone())
                .expect("finite vector of the configured width");
        }
        // image noise is scaled so the per-noun mean has spread `sd` after projection
        let image_sd = sd * image_gain * (config.images_per_noun as f64).sqrt();
        let images = (0..config.images_per_noun)
            .map(|_| add(&center_p, &gaussian(rng, config.image_dim, image_sd)))
            .collect();
        data.images.insert(noun.to_string(), images);

        let mut ends: Vec<String> = Vec::new();
        if informative(group, Modality::Conceptual) {
            for &a in &cluster.atoms {
                ends.extend(
                    atoms.hubs[a]
                        .choose_multiple(rng, SIGNAL_EDGES_PER_ATOM)
                        .cloned(),
                );
            }
            ends.extend(noise_concepts.choose_multiple(rng, NOISE_EDGES).cloned());
        } else {
            ends.extend(
                noise_concepts
                    .choose_multiple(rng, 2 * SIGNAL_EDGES_PER_ATOM + NOISE_EDGES)
                    .cloned(),
            );
        }
        for e in ends {
            data.graph
                .push(("RelatedTo".into(), noun.to_string(), e, 1.0));
        }
        // reference-corpus history: none before `known_from`
        if let Some(d) = known_from {
            data.frequencies.push((noun.to_string(), d, 50));
        }
    };

    let mut support_id = 0;
    for (gi, group) in groups.iter().enumerate() {
        for (verb, relation) in &group.frames {
            let frame = format!("{verb}-{relation}");
            for k in 0..config.nouns_per_frame {
                let ci = k % group.clusters.len();
                let noun = format!("s{support_id:04}");
                support_id += 1;
                emit_noun(&mut data, &mut rng, &noun, group, &group.clusters[ci], None);
                data.frequencies
                    .push((noun.clone(), history, MIN_CORPUS_COUNT + 5000));
                data.triples.push(SyntacticTriple {
                    decade: history,
                    verb: verb.clone(),
                    relation: relation.clone(),
                    noun: noun.clone(),
                    count: THETA_S + 1 + rng.random_range(0..100),
                });
                data.manifest.push(ManifestRow {
                    decade: history,
                    role: NounRole::Support,
                    noun,
                    frame: frame.clone(),
                    group: gi,
                    cluster: ci,
                    novel: false,
                    signal: group.signal.map_or("all", Modality::name),
                });
            }
        }
    }

    let mut query_id = 0;
    for &t in &decades {
        for (gi, group) in groups.iter().enumerate() {
            for (ci, cluster) in group.clusters.iter().enumerate() {
                for _ in 0..config.queries_per_cluster {
                    let noun = format!("q{query_id:04}");
                    query_id += 1;
                    let novel = rng.random_bool(config.novel_fraction);
                    emit_noun(
                        &mut data,
                        &mut rng,
                        &noun,
                        group,
                        cluster,
                        (!novel).then_some(t - 10),
                    );
                    data.frequencies
                        .push((noun.clone(), t, MIN_CORPUS_COUNT + 5000));
                    for (verb, relation) in &group.frames {
                        if !novel {
                            data.triples.push(SyntacticTriple {
                                decade: t - 10,
                                verb: verb.clone(),
                                relation: relation.clone(),
                                noun: noun.clone(),
                                count: THETA_Q / 2,
                            });
                        }
                        data.triples.push(SyntacticTriple {
                            decade: t,
                            verb: verb.clone(),
                            relation: relation.clone(),
                            noun: noun.clone(),
                            count: 2 * THETA_Q,
                        });
                        data.manifest.push(ManifestRow {
                            decade: t,
                            role: NounRole::Query,
                            noun: noun.clone(),
                            frame: format!("{verb}-{relation}"),
                            group: gi,
                            cluster: ci,
                            novel,
                            signal: group.signal.map_or("all", Modality::name),
                        });
                    }
                }
            }
        }
    }

    for group in &groups {
        for (verb, _) in &group.frames {
            data.frequencies
                .push((verb.clone(), history, MIN_CORPUS_COUNT + 5000));
        }
    }
    let mut concepts: BTreeSet<&String> = atoms.hubs.iter().flatten().collect();
    concepts.extend(&noise_concepts);
    for c in concepts {
        data.frequencies.push((c.clone(), history, 1000));
    }
    // hubs are linked to each other within an atom so the graph stays connected
    for hubs in &atoms.hubs {
        for w in hubs.windows(2) {
            data.graph
                .push(("RelatedTo".into(), w[0].clone(), w[1].clone(), 1.0));
        }
    }
    data.triples.sort_by(|a, b| {
        (a.decade, &a.verb, &a.relation, &a.noun).cmp(&(b.decade, &b.verb, &b.relation, &b.noun))
    });
    data.frequencies.sort();
    data.manifest.sort();
    data.graph.shuffle(&mut rng);
    Ok(data)
}

/// Paths written by [`SynthData::write_dir`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFiles {
    pub triples: PathBuf,
    pub graph: PathBuf,
    pub linguistic: PathBuf,
    pub images: PathBuf,
    pub frequencies: PathBuf,
    pub manifest: PathBuf,
    pub config: PathBuf,
}

impl SynthData {
    pub fn write_dir(&self, dir: &Path) -> Result<SynthFiles, SynthError> {
        std::fs::create_dir_all(dir)?;
        let files = SynthFiles {
            triples: dir.join("triples.tsv"),
            graph: dir.join("graph.tsv"),
            linguistic: dir.join("linguistic.txt"),
            images: dir.join("images.txt"),
            frequencies: dir.join("frequencies.tsv"),
            manifest: dir.join("manifest.tsv"),
            config: dir.join("sfem.conf"),
        };
        let create = |p: &Path| -> io::Result<io::BufWriter<std::fs::File>> {
            Ok(io::BufWriter::new(std::fs::File::create(p)?))
        };

        let mut w = create(&files.triples)?;
        write_triples(&mut w, &self.triples)?;
        w.flush()?;

        let mut w = create(&files.graph)?;
        for (r, s, e, wt) in &self.graph {
            writeln!(w, "{r}\t{s}\t{e}\t{wt}")?;
        }
        w.flush()?;

        let mut w = create(&files.linguistic)?;
        self.linguistic.write(&mut w)?;
        w.flush()?;

        let mut w = create(&files.images)?;
        for (noun, images) in &self.images {
            for (i, v) in images.iter().enumerate() {
                write!(w, "{noun}\t{i}")?;
                for x in v {
                    write!(w, "\t{x:.6e}")?;
                }
                writeln!(w)?;
            }
        }
        w.flush()?;

        let mut w = create(&files.frequencies)?;
        for (tok, d, c) in &self.frequencies {
            writeln!(w, "{tok}\t{d}\t{c}")?;
        }
        w.flush()?;

        let mut w = create(&files.manifest)?;
        writeln!(
            w,
            "decade\trole\tnoun\tframe\tgroup\tcluster\tnovel\tsignal"
        )?;
        for r in &self.manifest {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.decade, r.role, r.noun, r.frame, r.group, r.cluster, r.novel, r.signal
            )?;
        }
        w.flush()?;

        let mut w = create(&files.config)?;
        self.write_config(&mut w)?;
        w.flush()?;
        Ok(files)
    }

    /// Pipeline configuration matching the generated files.
    pub fn write_config<W: Write>(&self, mut w: W) -> io::Result<()> {
        let c = &self.config;
        let decades: Vec<String> = c
            .prediction_decades()
            .iter()
            .map(|d| d.to_string())
            .collect();
        writeln!(w, "# generated by gen-synthetic")?;
        writeln!(w, "triples = triples.tsv")?;
        writeln!(w, "graph = graph.tsv")?;
        writeln!(w, "linguistic = linguistic.txt")?;
        writeln!(w, "images = images.txt")?;
        writeln!(w, "frequencies = frequencies.tsv")?;
        writeln!(w, "image_dim = {}", c.image_dim)?;
        writeln!(w, "dim = {}", c.dim)?;
        writeln!(w, "decades = {}", decades.join(","))?;
        writeln!(w, "min_images = {}", c.images_per_noun)?;
        writeln!(w, "min_concept_edges = {MIN_CONCEPT_EDGES}")?;
        writeln!(w, "min_noun_count = {MIN_CORPUS_COUNT}")?;
        writeln!(w, "min_verb_count = {MIN_CORPUS_COUNT}")?;
        writeln!(w, "top_relations = {}", RELATIONS.len())?;
        writeln!(w, "theta_q = {THETA_Q}")?;
        writeln!(w, "theta_s = {THETA_S}")?;
        writeln!(w, "concept_min_count = {CONCEPT_MIN_COUNT}")?;
        writeln!(w, "seed = {}", c.seed)?;
        writeln!(
            w,
            "# every frame fits in one batch here, so each epoch is a single step"
        )?;
        writeln!(w, "learning_rate = 0.01")?;
        Ok(())
    }
}

/// Reads `manifest.tsv` back as `(decade, role, noun, frame)` tuples.
pub fn read_manifest(text: &str) -> Result<Vec<(Decade, NounRole, String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 4 {
            return Err(format!("manifest line {}: too few fields", i + 1));
        }
        let role = match f[1] {
            "support" => NounRole::Support,
            "query" => NounRole::Query,
            other => return Err(format!("manifest line {}: unknown role {other:?}", i + 1)),
        };
        let decade = f[0]
            .parse()
            .map_err(|_| format!("manifest line {}: bad decade", i + 1))?;
        out.push((decade, role, f[2].to_string(), f[3].to_string()));
    }
    Ok(out)
}
