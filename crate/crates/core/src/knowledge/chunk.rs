use super::KnowledgeError;

pub const DEFAULT_CHUNK_SIZE: usize = 1000;
pub const DEFAULT_OVERLAP: usize = 200;

/// A contiguous slice of the source document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub index: usize,
    pub text: String,
    /// Character span (start, end) into the source document.
    pub char_span: (usize, usize),
}

/// Splits `text` into chunks of at most `chunk_size` characters where
/// consecutive chunks share exactly `overlap` characters (the final chunk
/// just runs to the end of the document). Spans are character offsets, so
/// multi-byte text never splits inside a code point.
pub fn chunk_document(
    text: &str,
    chunk_size: usize,
    overlap: usize,
) -> Result<Vec<Chunk>, KnowledgeError> {
    if chunk_size == 0 || overlap >= chunk_size {
        return Err(KnowledgeError::InvalidChunking {
            chunk_size,
            overlap,
        });
    }
    if text.is_empty() {
        return Ok(Vec::new());
    }

    let chars: Vec<char> = text.chars().collect();
    let stride = chunk_size - overlap;
    let mut chunks = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + chunk_size).min(chars.len());
        chunks.push(Chunk {
            index: chunks.len(),
            text: chars[start..end].iter().collect(),
            char_span: (start, end),
        });
        if end == chars.len() {
            break;
        }
        start += stride;
    }
    Ok(chunks)
}
