use std::collections::BTreeMap;
use std::io::BufRead;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{parse_err, DecadeKey, EmbeddingStore, KnowledgeError, Modality};
use crate::scalar::Scalar;

/// Per-image vectors grouped by noun, in file order.
pub type ImageVectors<T> = BTreeMap<String, Vec<Vec<T>>>;

/// Reads `token imageIndex f1 .. fd` rows.
pub fn parse_image_vectors<T: Scalar, R: BufRead>(
    reader: R,
    expected_dim: usize,
) -> Result<ImageVectors<T>, KnowledgeError> {
    let mut out: ImageVectors<T> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut cols = line.split_whitespace();
        let Some(tok) = cols.next() else { continue };
        if tok.starts_with('#') {
            continue;
        }
        let tok = tok.to_lowercase();
        cols.next()
            .and_then(|c| c.parse::<u64>().ok())
            .ok_or_else(|| parse_err(i + 1, "missing or non-integer image index"))?;
        let v = cols
            .map(|c| {
                c.parse::<T>()
                    .map_err(|_| parse_err(i + 1, format!("{c:?} is not a number")))
            })
            .collect::<Result<Vec<T>, _>>()?;
        if v.len() != expected_dim {
            return Err(KnowledgeError::DimensionMismatch {
                token: tok,
                expected: expected_dim,
                found: v.len(),
            });
        }
        if !crate::scalar::all_finite(&v) {
            return Err(KnowledgeError::NonFinite { token: tok });
        }
        out.entry(tok).or_default().push(v);
    }
    Ok(out)
}

/// Element-wise mean of a noun's image vectors.
pub fn aggregate_perceptual<T: Scalar>(images: &[Vec<T>]) -> Result<Vec<T>, KnowledgeError> {
    let first = images.first().ok_or(KnowledgeError::EmptyAggregate)?;
    let dim = first.len();
    let mut acc = vec![T::zero(); dim];
    for v in images {
        if v.len() != dim {
            return Err(KnowledgeError::DimensionMismatch {
                token: "<image>".into(),
                expected: dim,
                found: v.len(),
            });
        }
        for (a, &x) in acc.iter_mut().zip(v) {
            *a = *a + x;
        }
    }
    let n = T::lit(images.len() as f64);
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Fixed linear map from image space into the shared input space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix<T> {
    matrix: Array2<T>,
    seed: Option<u64>,
}

impl<T: Scalar> ProjectionMatrix<T> {
    /// Entries i.i.d. uniform on `[-1, 1]`, scaled by `1/sqrt(input_dim)`.
    pub fn seeded(output_dim: usize, input_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (input_dim as f64).sqrt();
        let matrix = Array2::from_shape_simple_fn((output_dim, input_dim), || {
            T::lit(rng.random_range(-1.0..=1.0) * scale)
        });
        Self {
            matrix,
            seed: Some(seed),
        }
    }

    pub fn from_matrix(matrix: Array2<T>) -> Self {
        Self { matrix, seed: None }
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn project(&self, x: &[T]) -> Result<Vec<T>, KnowledgeError> {
        if x.len() != self.input_dim() {
            return Err(KnowledgeError::DimensionMismatch {
                token: "<projection input>".into(),
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(self.matrix.dot(&Array1::from(x.to_vec())).to_vec())
    }
}

/// Averages each noun's images, projects the mean, and stores it as a
/// time-invariant perceptual vector.
pub fn perceptual_store<T: Scalar>(
    images: &ImageVectors<T>,
    projection: &ProjectionMatrix<T>,
) -> Result<EmbeddingStore<T>, KnowledgeError> {
    let mut store = EmbeddingStore::new(Modality::Perceptual, projection.output_dim());
    for (tok, vs) in images {
        let mean = aggregate_perceptual(vs)?;
        store.insert(tok, DecadeKey::All, projection.project(&mean)?)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn mean_of_images() {
        let m = aggregate_perceptual(&[vec![1.0f64, 4.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(m, vec![2.0, 2.0]);
        assert_eq!(
            aggregate_perceptual(&[vec![5.0f64, -1.0]]).unwrap(),
            vec![5.0, -1.0]
        );
        assert!(matches!(
            aggregate_perceptual::<f64>(&[]),
            Err(KnowledgeError::EmptyAggregate)
        ));
    }

    #[test]
    fn projection_is_linear_and_checked() {
        let p = ProjectionMatrix::<f64>::seeded(300, 1000, 7);
        assert!(p
            .project(&vec![0.0; 1000])
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        let mut e1 = vec![0.0; 1000];
        e1[0] = 1.0;
        let col: Vec<f64> = p.matrix().column(0).to_vec();
        assert_eq!(p.project(&e1).unwrap(), col);
        assert!(p.project(&[1.0, 2.0]).is_err());
        let bound = 1.0 / 1000f64.sqrt();
        assert!(p.matrix().iter().all(|x| x.abs() <= bound));
    }

    #[test]
    fn selector_projection_picks_coordinates() {
        let p = ProjectionMatrix::from_matrix(array![[0.0f64, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        assert_eq!(p.project(&[4.0, 5.0, 6.0]).unwrap(), vec![6.0, 4.0]);
    }

    #[test]
    fn seeded_projection_is_bit_identical() {
        let a = ProjectionMatrix::<f64>::seeded(30, 100, 11);
        let b = ProjectionMatrix::<f64>::seeded(30, 100, 11);
        assert!(a
            .matrix()
            .iter()
            .zip(b.matrix().iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, ProjectionMatrix::<f64>::seeded(30, 100, 12));
    }

    #[test]
    fn image_file_groups_by_token() {
        let imgs: ImageVectors<f64> =
            parse_image_vectors("car 0 1 2\ncar 1 3 4\nhorse 0 0 0\n".as_bytes(), 2).unwrap();
        assert_eq!(imgs["car"].len(), 2);
        let p = ProjectionMatrix::from_matrix(array![[1.0f64, 0.0]]);
        let store = perceptual_store(&imgs, &p).unwrap();
        assert_eq!(store.get("car", 1900), Some(&[2.0][..]));
        assert!(parse_image_vectors::<f64, _>("car 0 1\n".as_bytes(), 2).is_err());
    }
}
