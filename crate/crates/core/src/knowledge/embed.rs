/// Embedding dimension of the built-in hashed bag-of-words model.
pub const EMBEDDING_DIM: usize = 256;

/// Fixed-length embedding. L2-normalized unless the text had no tokens, in
/// which case it is the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        cosine(&self.values, &other.values)
    }
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Deterministic embedder: lowercase, split on non-alphanumerics, FNV-1a
/// hash each token into one of [`EMBEDDING_DIM`] buckets, count, then
/// L2-normalize. Identical text always yields the identical vector.
pub fn embed_text(text: &str) -> EmbeddingVector {
    let mut counts = vec![0.0_f64; EMBEDDING_DIM];
    let mut any = false;
    for token in text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        let bucket = (fnv1a64(token.as_bytes()) % EMBEDDING_DIM as u64) as usize;
        counts[bucket] += 1.0;
        any = true;
    }
    if any {
        let norm = counts.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut counts {
            *v /= norm;
        }
    }
    EmbeddingVector { values: counts }
}

/// FNV-1a, 64-bit. Stable across platforms and releases, unlike the std
/// hasher.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_embeds_to_zero_vector() {
        let v = embed_text("");
        assert_eq!(v.dim(), EMBEDDING_DIM);
        assert!(v.is_zero());
        assert!(embed_text("  \t\n ..!").is_zero());
    }

    #[test]
    fn repeated_single_token_normalizes_to_same_vector() {
        assert_eq!(embed_text("lane lane"), embed_text("lane"));
    }

    #[test]
    fn embedding_is_deterministic() {
        assert_eq!(embed_text("lane width"), embed_text("lane width"));
    }

    #[test]
    fn tokenization_is_case_and_punctuation_insensitive() {
        assert_eq!(embed_text("Lane-Width!"), embed_text("lane width"));
    }

    #[test]
    fn nonempty_embedding_is_unit_length() {
        let v = embed_text("the minimum lane width is twelve feet");
        let norm: f64 = v.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_of_identical_vectors_is_one() {
        let v = embed_text("shoulder width");
        assert!((v.cosine(&v) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cosine_with_zero_vector_is_zero() {
        let z = embed_text("");
        let v = embed_text("lane");
        assert_eq!(v.cosine(&z), 0.0);
    }
}
