use super::embed::{embed_text, EmbeddingVector};
use super::Chunk;

pub const DEFAULT_TOP_K: usize = 4;

/// In-memory vector store: one embedding per chunk. Immutable after build
/// and safe to share across threads.
#[derive(Debug, Clone, Default)]
pub struct VectorStore {
    entries: Vec<(Chunk, EmbeddingVector)>,
}

impl VectorStore {
    pub fn build(chunks: Vec<Chunk>) -> Self {
        let entries = chunks
            .into_iter()
            .map(|c| {
                let embedding = embed_text(&c.text);
                (c, embedding)
            })
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Chunk, EmbeddingVector)] {
        &self.entries
    }
}

/// Returns the `min(k, store size)` chunks most similar to the query by
/// cosine similarity, best first; ties break toward the lower chunk index.
/// A zero-norm query embedding falls back to the first `k` chunks by index
/// with score 0.
pub fn retrieve_top_k<'s>(
    store: &'s VectorStore,
    query: &str,
    k: usize,
) -> Vec<(&'s Chunk, f64)> {
    let query_embedding = embed_text(query);
    let mut scored: Vec<(&Chunk, f64)> = store
        .entries
        .iter()
        .map(|(chunk, embedding)| (chunk, query_embedding.cosine(embedding)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("cosine similarity is finite")
            .then(a.0.index.cmp(&b.0.index))
    });
    scored.truncate(k);
    scored
}
