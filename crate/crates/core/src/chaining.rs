//! Chaining as probabilistic categorization.
//!
//! Each frame is a category whose members are its support nouns. A query
//! representation `h` is scored against every frame either through the
//! frame's centroid (prototype model) or through all of its members
//! (exemplar model), with a softmax over negative distances normalized
//! across frames. The prior of a frame is its share of distinct support
//! nouns. All probabilities are kept as logs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use thiserror::Error;

use crate::corpus::{Frame, FrameTable};
use crate::scalar::{euclidean, log_sum_exp, squared_euclidean, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum ChainingError {
    #[error("frame {0} has no support embeddings")]
    EmptyCategory(Frame),
    #[error("no frames to score")]
    NoFrames,
    #[error("every frame has an empty support set")]
    NoSupports,
    #[error("no embedding for noun {0:?}")]
    MissingEmbedding(String),
    #[error("frame sets differ between the two distributions")]
    FrameMismatch,
    #[error("frame {0} is not in the model")]
    UnknownFrame(Frame),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite embedding")]
    NonFinite,
}

/// Which categorization model turns distances into frame likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    /// Distance to the mean of the support representations.
    Prototype,
    /// Summed similarity to every support representation.
    Exemplar,
}

impl ModelKind {
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::Prototype => "dpm",
            ModelKind::Exemplar => "dem",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "dpm" | "prototype" => Ok(ModelKind::Prototype),
            "dem" | "exemplar" => Ok(ModelKind::Exemplar),
            other => Err(format!(
                "unknown model kind {other:?} (expected dem or dpm)"
            )),
        }
    }
}

/// Distance between representations. Unsquared Euclidean is the model's
/// definition; the squared form exists for sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distance {
    #[default]
    Euclidean,
    SquaredEuclidean,
}

impl Distance {
    pub fn eval<T: Scalar>(self, a: &[T], b: &[T]) -> T {
        match self {
            Distance::Euclidean => euclidean(a, b),
            Distance::SquaredEuclidean => squared_euclidean(a, b),
        }
    }

    /// Adds `scale * d(a, b)/da` to `out`. At `a == b` the unsquared
    /// distance has no gradient and contributes nothing.
    fn accumulate_grad<T: Scalar>(self, a: &[T], b: &[T], d: T, scale: T, out: &mut [T]) {
        let k = match self {
            Distance::Euclidean => {
                if d == T::zero() {
                    return;
                }
                scale / d
            }
            Distance::SquaredEuclidean => scale * T::lit(2.0),
        };
        for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
            *o += k * (x - y);
        }
    }
}

/// A frame with the representations of its support nouns.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCategory<T> {
    pub frame: Frame,
    supports: Vec<Vec<T>>,
    prototype: Option<Vec<T>>,
}

impl<T: Scalar> FrameCategory<T> {
    pub fn new(frame: Frame, supports: Vec<Vec<T>>) -> Result<Self, ChainingError> {
        let Some(first) = supports.first() else {
            return Err(ChainingError::EmptyCategory(frame));
        };
        let dim = first.len();
        for s in &supports {
            if s.len() != dim {
                return Err(ChainingError::Dimension {
                    expected: dim,
                    found: s.len(),
                });
            }
        }
        Ok(Self {
            frame,
            supports,
            prototype: None,
        })
    }

    /// Same as `new`, caching the centroid.
    pub fn with_prototype(frame: Frame, supports: Vec<Vec<T>>) -> Result<Self, ChainingError> {
        let mut c = Self::new(frame, supports)?;
        c.prototype = Some(mean(&c.supports));
        Ok(c)
    }

    pub fn supports(&self) -> &[Vec<T>] {
        &self.supports
    }

    pub fn dim(&self) -> usize {
        self.supports[0].len()
    }

    pub fn prototype(&self) -> Vec<T> {
        self.prototype
            .clone()
            .unwrap_or_else(|| mean(&self.supports))
    }

    fn prototype_ref(&self) -> std::borrow::Cow<'_, [T]> {
        match &self.prototype {
            Some(p) => std::borrow::Cow::Borrowed(p.as_slice()),
            None => std::borrow::Cow::Owned(mean(&self.supports)),
        }
    }
}

fn mean<T: Scalar>(vs: &[Vec<T>]) -> Vec<T> {
    let mut acc = vec![T::zero(); vs[0].len()];
    for v in vs {
        for (a, &x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let n = T::lit(vs.len() as f64);
    acc.into_iter().map(|a| a / n).collect()
}

/// Arithmetic mean of a category's support representations.
pub fn prototype<T: Scalar>(category: &FrameCategory<T>) -> Vec<T> {
    category.prototype()
}

/// Log-probabilities over an ordered frame list.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDistribution<T> {
    pub frames: Vec<Frame>,
    pub log_probs: Vec<T>,
}

impl<T: Scalar> FrameDistribution<T> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn probs(&self) -> Vec<T> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn log_prob(&self, frame: &Frame) -> Option<T> {
        self.frames
            .iter()
            .position(|f| f == frame)
            .map(|i| self.log_probs[i])
    }

    /// `log(sum(p))`, zero for a normalized distribution.
    pub fn log_mass(&self) -> T {
        log_sum_exp(self.log_probs.iter().copied())
    }
}

/// Unnormalized log joint scores `log p(n, f)` over frames.
#[derive(Debug, Clone, PartialEq)]
pub struct JointScores<T> {
    pub frames: Vec<Frame>,
    pub log_joint: Vec<T>,
}

/// Share of distinct support nouns, in table frame order.
pub fn prior<T: Scalar>(table: &FrameTable) -> Result<FrameDistribution<T>, ChainingError> {
    let (frames, sizes): (Vec<Frame>, Vec<usize>) = table
        .entries
        .iter()
        .map(|(f, e)| (f.clone(), e.supports.len()))
        .unzip();
    prior_from_sizes(frames, &sizes)
}

pub fn prior_from_sizes<T: Scalar>(
    frames: Vec<Frame>,
    sizes: &[usize],
) -> Result<FrameDistribution<T>, ChainingError> {
    if frames.is_empty() {
        return Err(ChainingError::NoFrames);
    }
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(ChainingError::NoSupports);
    }
    let log_total = T::lit(total as f64).ln();
    let log_probs = sizes
        .iter()
        .map(|&s| {
            if s == 0 {
                T::neg_infinity()
            } else {
                T::lit(s as f64).ln() - log_total
            }
        })
        .collect();
    Ok(FrameDistribution { frames, log_probs })
}

/// Per-frame log scores before normalization across frames.
fn frame_scores<T: Scalar>(
    kind: ModelKind,
    distance: Distance,
    hq: &[T],
    categories: &[FrameCategory<T>],
) -> Vec<T> {
    categories
        .iter()
        .map(|c| match kind {
            ModelKind::Prototype => -distance.eval(hq, &c.prototype_ref()),
            ModelKind::Exemplar => log_sum_exp(
                c.supports
                    .iter()
                    .map(|s| -distance.eval(hq, s))
                    .collect::<Vec<_>>(),
            ),
        })
        .collect()
}

fn check_query<T: Scalar>(hq: &[T], categories: &[FrameCategory<T>]) -> Result<(), ChainingError> {
    let first = categories.first().ok_or(ChainingError::NoFrames)?;
    if hq.len() != first.dim() {
        return Err(ChainingError::Dimension {
            expected: first.dim(),
            found: hq.len(),
        });
    }
    if !crate::scalar::all_finite(hq) {
        return Err(ChainingError::NonFinite);
    }
    Ok(())
}

/// `log p(n | S(f))` for every frame, normalized over frames.
///
/// Prototype: `-d(h, c_f) - logsumexp_f'(-d(h, c_f'))`.
/// Exemplar: `logsumexp_{s in S(f)}(-d(h, h_s)) - logsumexp over every
/// support of every frame`.
pub fn likelihood<T: Scalar>(
    kind: ModelKind,
    hq: &[T],
    categories: &[FrameCategory<T>],
    distance: Distance,
) -> Result<FrameDistribution<T>, ChainingError> {
    check_query(hq, categories)?;
    let scores = frame_scores(kind, distance, hq, categories);
    // the exemplar denominator over all supports equals the logsumexp of
    // the per-frame exemplar scores, so both models normalize the same way
    let norm = log_sum_exp(scores.iter().copied());
    Ok(FrameDistribution {
        frames: categories.iter().map(|c| c.frame.clone()).collect(),
        log_probs: scores.into_iter().map(|s| s - norm).collect(),
    })
}

/// `log p(n, f) = log p(n | S(f)) + log p(f)`, not normalized.
pub fn joint<T: Scalar>(
    likelihood: &FrameDistribution<T>,
    prior: &FrameDistribution<T>,
) -> Result<JointScores<T>, ChainingError> {
    if likelihood.frames != prior.frames {
        return Err(ChainingError::FrameMismatch);
    }
    Ok(JointScores {
        frames: likelihood.frames.clone(),
        log_joint: likelihood
            .log_probs
            .iter()
            .zip(&prior.log_probs)
            .map(|(&l, &p)| l + p)
            .collect(),
    })
}

/// `p(f | n)`: the joint renormalized over frames.
pub fn posterior_frames<T: Scalar>(joint: &JointScores<T>) -> FrameDistribution<T> {
    let norm = log_sum_exp(joint.log_joint.iter().copied());
    FrameDistribution {
        frames: joint.frames.clone(),
        log_probs: joint.log_joint.iter().map(|&j| j - norm).collect(),
    }
}

/// Noun representations `h`, keyed by noun.
pub type Representations<T> = BTreeMap<String, Vec<T>>;

/// Categories, prior and scoring rule for one decade.
#[derive(Debug, Clone)]
pub struct ChainingModel<T> {
    pub kind: ModelKind,
    pub distance: Distance,
    categories: Vec<FrameCategory<T>>,
    prior: FrameDistribution<T>,
}

impl<T: Scalar> ChainingModel<T> {
    /// Builds categories from the supports of every frame in `table`.
    pub fn from_table(
        kind: ModelKind,
        distance: Distance,
        table: &FrameTable,
        reps: &Representations<T>,
    ) -> Result<Self, ChainingError> {
        let mut categories = Vec::with_capacity(table.len());
        for (frame, entry) in &table.entries {
            let supports = entry
                .supports
                .iter()
                .map(|n| {
                    reps.get(n)
                        .cloned()
                        .ok_or_else(|| ChainingError::MissingEmbedding(n.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            categories.push(FrameCategory::with_prototype(frame.clone(), supports)?);
        }
        let prior = prior(table)?;
        Ok(Self {
            kind,
            distance,
            categories,
            prior,
        })
    }

    pub fn new(
        kind: ModelKind,
        distance: Distance,
        categories: Vec<FrameCategory<T>>,
        prior: FrameDistribution<T>,
    ) -> Result<Self, ChainingError> {
        let frames: Vec<Frame> = categories.iter().map(|c| c.frame.clone()).collect();
        if frames != prior.frames {
            return Err(ChainingError::FrameMismatch);
        }
        if frames.is_empty() {
            return Err(ChainingError::NoFrames);
        }
        Ok(Self {
            kind,
            distance,
            categories,
            prior,
        })
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.categories.iter().map(|c| &c.frame)
    }

    pub fn categories(&self) -> &[FrameCategory<T>] {
        &self.categories
    }

    pub fn prior(&self) -> &FrameDistribution<T> {
        &self.prior
    }

    pub fn frame_index(&self, frame: &Frame) -> Option<usize> {
        self.categories.iter().position(|c| &c.frame == frame)
    }

    pub fn likelihood(&self, hq: &[T]) -> Result<FrameDistribution<T>, ChainingError> {
        likelihood(self.kind, hq, &self.categories, self.distance)
    }

    pub fn joint(&self, hq: &[T]) -> Result<JointScores<T>, ChainingError> {
        joint(&self.likelihood(hq)?, &self.prior)
    }

    pub fn posterior(&self, hq: &[T]) -> Result<FrameDistribution<T>, ChainingError> {
        Ok(posterior_frames(&self.joint(hq)?))
    }
}

/// Per-example terms of the training objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerm<T> {
    pub frame: Frame,
    pub noun: String,
    /// `-log p(n, f)`.
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown<T> {
    pub total: T,
    pub terms: Vec<LossTerm<T>>,
}

/// `J = -sum_f sum_{n in Q(f)} log p(n, f)` over every query of `table`.
pub fn nll_loss<T: Scalar>(
    kind: ModelKind,
    distance: Distance,
    table: &FrameTable,
    reps: &Representations<T>,
) -> Result<LossBreakdown<T>, ChainingError> {
    let model = ChainingModel::from_table(kind, distance, table, reps)?;
    let mut terms = Vec::new();
    for (fi, (frame, entry)) in table.entries.iter().enumerate() {
        for noun in &entry.queries {
            let h = reps
                .get(noun)
                .ok_or_else(|| ChainingError::MissingEmbedding(noun.clone()))?;
            let j = model.joint(h)?;
            terms.push(LossTerm {
                frame: frame.clone(),
                noun: noun.clone(),
                value: -j.log_joint[fi],
            });
        }
    }
    let total = terms.iter().map(|t| t.value).sum();
    Ok(LossBreakdown { total, terms })
}

/// Categories given as row indices into a representation matrix, the
/// layout the trainer uses to route gradients back to rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedCategories {
    pub support_rows: Vec<Vec<usize>>,
}

/// `-log p(n | S(target))` for the query in row `query`, adding its
/// gradient with respect to every row of `h` into `grad` (scaled by
/// `weight`). The prior is constant in `h` and not included.
pub fn query_loss_grad<T: Scalar>(
    kind: ModelKind,
    distance: Distance,
    h: &Array2<T>,
    cats: &IndexedCategories,
    query: usize,
    target: usize,
    weight: T,
    grad: &mut Array2<T>,
) -> T {
    let h = h.as_standard_layout();
    let row = |i: usize| h.row(i).to_slice().expect("standard layout");
    let hq = row(query);
    let dim = hq.len();
    let mut gq = vec![T::zero(); dim];
    let loss = match kind {
        ModelKind::Prototype => {
            let protos: Vec<Vec<T>> = cats
                .support_rows
                .iter()
                .map(|rows| {
                    let mut c = vec![T::zero(); dim];
                    for &r in rows {
                        for (a, &x) in c.iter_mut().zip(row(r)) {
                            *a += x;
                        }
                    }
                    let n = T::lit(rows.len() as f64);
                    c.iter_mut().for_each(|a| *a = *a / n);
                    c
                })
                .collect();
            let d: Vec<T> = protos.iter().map(|c| distance.eval(hq, c)).collect();
            let norm = log_sum_exp(d.iter().map(|&x| -x).collect::<Vec<_>>());
            for (f, c) in protos.iter().enumerate() {
                let p = (-d[f] - norm).exp();
                let coeff = if f == target { T::one() - p } else { -p };
                if coeff == T::zero() {
                    continue;
                }
                distance.accumulate_grad(hq, c, d[f], weight * coeff, &mut gq);
                // d(dist)/d(centroid) is the negative; spread over members
                let mut gc = vec![T::zero(); dim];
                distance.accumulate_grad(c, hq, d[f], weight * coeff, &mut gc);
                let share = T::one() / T::lit(cats.support_rows[f].len() as f64);
                for &r in &cats.support_rows[f] {
                    let mut gr = grad.row_mut(r);
                    for (g, &x) in gr.iter_mut().zip(&gc) {
                        *g += x * share;
                    }
                }
            }
            d[target] + norm
        }
        ModelKind::Exemplar => {
            let d: Vec<Vec<T>> = cats
                .support_rows
                .iter()
                .map(|rows| rows.iter().map(|&r| distance.eval(hq, row(r))).collect())
                .collect();
            let all = log_sum_exp(d.iter().flatten().map(|&x| -x).collect::<Vec<_>>());
            let own = log_sum_exp(d[target].iter().map(|&x| -x).collect::<Vec<_>>());
            let mut gs = vec![T::zero(); dim];
            for (f, rows) in cats.support_rows.iter().enumerate() {
                for (k, &r) in rows.iter().enumerate() {
                    let dist = d[f][k];
                    let mut coeff = -(-dist - all).exp();
                    if f == target {
                        coeff += (-dist - own).exp();
                    }
                    if coeff == T::zero() {
                        continue;
                    }
                    let hs = row(r);
                    distance.accumulate_grad(hq, hs, dist, weight * coeff, &mut gq);
                    gs.fill(T::zero());
                    distance.accumulate_grad(hs, hq, dist, weight * coeff, &mut gs);
                    let mut gr = grad.row_mut(r);
                    for (g, &x) in gr.iter_mut().zip(&gs) {
                        *g += x;
                    }
                }
            }
            all - own
        }
    };
    let mut gr = grad.row_mut(query);
    for (g, &x) in gr.iter_mut().zip(&gq) {
        *g += x;
    }
    loss * weight
}
