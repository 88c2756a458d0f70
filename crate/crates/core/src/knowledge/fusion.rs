use std::fmt;
use std::str::FromStr;

use super::KnowledgeError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Perceptual,
    Conceptual,
    Linguistic,
    Fused,
}

impl Modality {
    pub const SOURCES: [Modality; 3] = [
        Modality::Perceptual,
        Modality::Conceptual,
        Modality::Linguistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Perceptual => "perceptual",
            Modality::Conceptual => "conceptual",
            Modality::Linguistic => "linguistic",
            Modality::Fused => "fused",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "perceptual" | "percept" | "p" => Ok(Modality::Perceptual),
            "conceptual" | "concept" | "c" => Ok(Modality::Conceptual),
            "linguistic" | "linguistics" | "language" | "l" => Ok(Modality::Linguistic),
            "fused" => Ok(Modality::Fused),
            other => Err(format!("unknown modality {other:?}")),
        }
    }
}

/// Subset of the three source modalities fused into a model's input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ModalityMask {
    pub perceptual: bool,
    pub conceptual: bool,
    pub linguistic: bool,
}

impl ModalityMask {
    pub const ALL: ModalityMask = ModalityMask {
        perceptual: true,
        conceptual: true,
        linguistic: true,
    };

    pub fn only(m: Modality) -> Self {
        Self::default().with(m)
    }

    pub fn with(mut self, m: Modality) -> Self {
        self.set(m, true);
        self
    }

    pub fn without(mut self, m: Modality) -> Self {
        self.set(m, false);
        self
    }

    fn set(&mut self, m: Modality, on: bool) {
        match m {
            Modality::Perceptual => self.perceptual = on,
            Modality::Conceptual => self.conceptual = on,
            Modality::Linguistic => self.linguistic = on,
            Modality::Fused => {}
        }
    }

    pub fn contains(&self, m: Modality) -> bool {
        match m {
            Modality::Perceptual => self.perceptual,
            Modality::Conceptual => self.conceptual,
            Modality::Linguistic => self.linguistic,
            Modality::Fused => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.perceptual || self.conceptual || self.linguistic)
    }

    pub fn modalities(&self) -> impl Iterator<Item = Modality> + '_ {
        Modality::SOURCES.into_iter().filter(|m| self.contains(*m))
    }

    /// The seven non-empty masks, unimodal first.
    pub fn all_nonempty() -> Vec<ModalityMask> {
        let mut v: Vec<ModalityMask> = (1u8..8)
            .map(|bits| ModalityMask {
                perceptual: bits & 1 != 0,
                conceptual: bits & 2 != 0,
                linguistic: bits & 4 != 0,
            })
            .collect();
        v.sort_by_key(|m| m.modalities().count());
        v
    }
}

impl fmt::Display for ModalityMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let names: Vec<&str> = self.modalities().map(Modality::name).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for ModalityMask {
    type Err = String;

    /// Accepts `all` or `+`/`,`-joined modality names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::ALL);
        }
        let mut mask = ModalityMask::default();
        for part in s.split(['+', ',']).filter(|p| !p.trim().is_empty()) {
            let m: Modality = part.parse()?;
            if m == Modality::Fused {
                return Err("a mask selects source modalities, not fused".into());
            }
            mask = mask.with(m);
        }
        if mask.is_empty() {
            return Err(format!("mask {s:?} selects no modality"));
        }
        Ok(mask)
    }
}

/// Mean of the three unimodal vectors. A modality that is missing or
/// outside `mask` contributes a zero vector; the divisor is always 3.
pub fn fuse<T: Scalar>(
    perceptual: Option<&[T]>,
    conceptual: Option<&[T]>,
    linguistic: Option<&[T]>,
    mask: ModalityMask,
) -> Result<Vec<T>, KnowledgeError> {
    if mask.is_empty() {
        return Err(KnowledgeError::EmptyMask);
    }
    let selected: Vec<&[T]> = [
        (Modality::Perceptual, perceptual),
        (Modality::Conceptual, conceptual),
        (Modality::Linguistic, linguistic),
    ]
    .into_iter()
    .filter(|(m, _)| mask.contains(*m))
    .filter_map(|(_, v)| v)
    .collect();
    let dim = selected.first().ok_or(KnowledgeError::AllMissing)?.len();
    let mut out = vec![T::zero(); dim];
    for v in &selected {
        if v.len() != dim {
            return Err(KnowledgeError::DimensionMismatch {
                token: "<fusion input>".into(),
                expected: dim,
                found: v.len(),
            });
        }
        for (o, &x) in out.iter_mut().zip(v.iter()) {
            *o = *o + x;
        }
    }
    let three = T::lit(3.0);
    Ok(out.into_iter().map(|x| x / three).collect())
}
