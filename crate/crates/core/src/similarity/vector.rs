use crate::corpus::{Article, IdfTable, TokenId};

/// Sparse IDF-weighted binary term vector.
///
/// Entries are sorted by token id and every stored weight is strictly
/// positive; tokens that are out of vocabulary or carry zero idf are absent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedVector {
    entries: Vec<(TokenId, f64)>,
    norm: f64,
}

impl WeightedVector {
    /// Builds a vector from arbitrary `(token id, weight)` pairs. Non-positive
    /// weights are dropped; duplicate ids keep the first weight.
    pub fn from_weights(weights: impl IntoIterator<Item = (TokenId, f64)>) -> Self {
        let mut entries: Vec<(TokenId, f64)> =
            weights.into_iter().filter(|&(_, w)| w > 0.0).collect();
        entries.sort_by_key(|&(id, _)| id);
        entries.dedup_by_key(|&mut (id, _)| id);
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        WeightedVector { entries, norm }
    }

    pub fn entries(&self) -> &[(TokenId, f64)] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        WeightedVector::from_weights(self.entries.iter().map(|&(id, w)| (id, w * factor)))
    }
}

/// Maps a token set onto its IDF-weighted vector. Term counts are ignored:
/// a token contributes its idf once if present.
pub fn vectorize_tokens<S: AsRef<str>>(tokens: &[S], idf: &IdfTable) -> WeightedVector {
    WeightedVector::from_weights(tokens.iter().filter_map(|t| {
        let id = idf.token_id(t.as_ref())?;
        Some((id, idf.idf_by_id(id)))
    }))
}

pub fn vectorize(article: &Article, idf: &IdfTable) -> WeightedVector {
    vectorize_tokens(article.tokens(), idf)
}

/// Products of matching weights, summed in increasing token-id order.
pub(crate) fn dot(a: &WeightedVector, b: &WeightedVector) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (x, y) = (&a.entries, &b.entries);
    let mut sum = 0.0;
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += x[i].1 * y[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

pub(crate) fn cosine_from_dot(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    (dot / (norm_a * norm_b)).clamp(0.0, 1.0)
}

/// Cosine similarity in `[0, 1]`; zero when either vector is empty.
///
/// ```
/// use newspulse_core::similarity::{cosine, WeightedVector};
///
/// let a = WeightedVector::from_weights([(0, 1.0), (1, 1.0)]);
/// let b = WeightedVector::from_weights([(0, 1.0), (2, 1.0)]);
/// assert!((cosine(&a, &b) - 0.5).abs() < 1e-12);
/// assert_eq!(cosine(&a, &WeightedVector::default()), 0.0);
/// ```
pub fn cosine(a: &WeightedVector, b: &WeightedVector) -> f64 {
    cosine_from_dot(dot(a, b), a.norm, b.norm)
}
