use super::{
    build_prompt, parse_spec_response, BackendKind, Chunk, ExtractedFields, ExtractionBackend,
    ExtractionQuery, KnowledgeError, PromptTemplate, TargetField, EXTRACTION_RETRIES,
};
use serde::{Deserialize, Serialize};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

/// Environment variable holding the bearer token for the remote endpoint.
pub const API_KEY_ENV: &str = "SDPP_LLM_API_KEY";

#[derive(Debug, Clone)]
pub struct RemoteBackendConfig {
    /// Endpoint base, e.g. `https://api.example.com/v1`. The client POSTs to
    /// `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Bearer token; usually read from [`API_KEY_ENV`]. Optional so local
    /// servers work without one.
    pub api_key: Option<String>,
    pub template: PromptTemplate,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

/// Chat-completion backend speaking the de-facto completion schema.
pub struct RemoteBackend {
    config: RemoteBackendConfig,
    client: reqwest::blocking::Client,
    gate: Semaphore,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

impl RemoteBackend {
    pub fn new(config: RemoteBackendConfig) -> Result<Self, KnowledgeError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| KnowledgeError::Backend(e.to_string()))?;
        let gate = Semaphore::new(config.max_in_flight.max(1));
        Ok(Self {
            config,
            client,
            gate,
        })
    }

    fn complete(&self, prompt: &str) -> Result<String, KnowledgeError> {
        let _permit = self.gate.acquire();
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = ChatRequest {
            model: &self.config.model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: 0.0,
        };
        let mut request = self.client.post(&url).json(&body);
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| KnowledgeError::Backend(format!("transport failure: {e}")))?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            return Err(KnowledgeError::Backend(format!(
                "endpoint returned {status}: {}",
                text.chars().take(200).collect::<String>()
            )));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| KnowledgeError::Backend(format!("malformed completion body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| KnowledgeError::Backend("completion had no choices".to_string()))
    }

    fn target_satisfied(fields: &ExtractedFields, target: TargetField) -> bool {
        match target {
            // All: the two fields a spec cannot do without.
            TargetField::All => fields.lane_width.is_some() && fields.total_width.is_some(),
            TargetField::Single(f) => fields.get(f).is_some(),
        }
    }
}

impl ExtractionBackend for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn extract(
        &self,
        query: &ExtractionQuery,
        retrieved: &[&Chunk],
    ) -> Result<ExtractedFields, KnowledgeError> {
        let prompt = build_prompt(query, retrieved, &self.config.template);
        let mut last_err = KnowledgeError::ExtractionFailure;
        for _attempt in 0..=EXTRACTION_RETRIES {
            match self.complete(&prompt) {
                Err(e) => last_err = e,
                Ok(content) => match parse_spec_response(&content) {
                    Ok(fields) if Self::target_satisfied(&fields, query.target_field) => {
                        return Ok(fields)
                    }
                    Ok(_) | Err(KnowledgeError::ExtractionFailure) => {
                        last_err = KnowledgeError::ExtractionFailure;
                    }
                    // Out-of-range values are deterministic garbage; retrying
                    // the same prompt will not fix them.
                    Err(e) => return Err(e),
                },
            }
        }
        Err(last_err)
    }
}

/// Counting semaphore bounding concurrent requests.
struct Semaphore {
    available: Mutex<usize>,
    signal: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(count: usize) -> Self {
        Self {
            available: Mutex::new(count),
            signal: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().unwrap();
        while *available == 0 {
            available = self.signal.wait(available).unwrap();
        }
        *available -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut available = self.0.available.lock().unwrap();
        *available += 1;
        self.0.signal.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::tests::segment;
    use crate::knowledge::SpecField;
    use crate::osm::HighwayClass;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Minimal HTTP server that answers every POST with the canned bodies in
    /// order (the last one repeats).
    fn spawn_server(bodies: Vec<String>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let hits_clone = hits.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut buf = vec![0u8; 65536];
                let mut read_total = 0;
                // Read until the blank line, then the declared body length.
                let body_start = loop {
                    let n = stream.read(&mut buf[read_total..]).unwrap_or(0);
                    if n == 0 {
                        break None;
                    }
                    read_total += n;
                    if let Some(pos) = find_header_end(&buf[..read_total]) {
                        break Some(pos);
                    }
                };
                let Some(body_start) = body_start else { continue };
                let header = String::from_utf8_lossy(&buf[..body_start]).to_string();
                let content_length = header
                    .lines()
                    .find_map(|l| {
                        let (k, v) = l.split_once(':')?;
                        k.eq_ignore_ascii_case("content-length")
                            .then(|| v.trim().parse::<usize>().ok())?
                    })
                    .unwrap_or(0);
                while read_total < body_start + content_length {
                    let n = stream.read(&mut buf[read_total..]).unwrap_or(0);
                    if n == 0 {
                        break;
                    }
                    read_total += n;
                }
                let i = hits_clone.fetch_add(1, Ordering::SeqCst);
                let body = bodies.get(i).unwrap_or(bodies.last().unwrap());
                let response = format!(
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        (format!("http://{addr}"), hits)
    }

    fn find_header_end(buf: &[u8]) -> Option<usize> {
        buf.windows(4).position(|w| w == b"\r\n\r\n").map(|p| p + 4)
    }

    fn completion_body(content: &str) -> String {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        })
        .to_string()
    }

    fn backend(base_url: &str) -> RemoteBackend {
        RemoteBackend::new(RemoteBackendConfig {
            base_url: base_url.to_string(),
            model: "test-model".to_string(),
            api_key: Some("test-key".to_string()),
            template: PromptTemplate {
                name: "p1".to_string(),
                preamble: "Extract the widths.".to_string(),
            },
            max_in_flight: 2,
            timeout_secs: 5,
        })
        .unwrap()
    }

    fn query_all() -> ExtractionQuery {
        ExtractionQuery::new(segment(HighwayClass::Residential, 2, true), TargetField::All)
    }

    #[test]
    fn remote_backend_parses_feet_responses() {
        let (url, _) = spawn_server(vec![completion_body(
            "lane_width: 11 ft\ntotal_width: 30 ft\nbike_lane_width: 5 ft\nshoulder_width: 2 ft",
        )]);
        let fields = backend(&url).extract(&query_all(), &[]).unwrap();
        assert_eq!(fields.lane_width, Some(11.0 * 0.3048));
        assert!((fields.lane_width.unwrap() - 3.3528).abs() < 1e-12);
        assert_eq!(fields.total_width, Some(30.0 * 0.3048));
    }

    #[test]
    fn retries_after_unparseable_response_then_succeeds() {
        let (url, hits) = spawn_server(vec![
            completion_body("sorry, I cannot help with that"),
            completion_body("lane_width: 3.6 m\ntotal_width: 12 m"),
        ]);
        let fields = backend(&url).extract(&query_all(), &[]).unwrap();
        assert_eq!(fields.lane_width, Some(3.6));
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn gives_up_after_retry_budget() {
        let (url, hits) = spawn_server(vec![completion_body("no numbers here")]);
        let err = backend(&url).extract(&query_all(), &[]).unwrap_err();
        assert!(matches!(err, KnowledgeError::ExtractionFailure));
        assert_eq!(hits.load(Ordering::SeqCst), 1 + EXTRACTION_RETRIES);
    }

    #[test]
    fn range_errors_abort_without_retry() {
        let (url, hits) = spawn_server(vec![completion_body("lane_width: 500 m")]);
        let err = backend(&url).extract(&query_all(), &[]).unwrap_err();
        assert!(matches!(err, KnowledgeError::ValueOutOfRange { .. }));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn transport_failure_surfaces_as_backend_error() {
        // Nothing listens on this port.
        let b = backend("http://127.0.0.1:1");
        let err = b.extract(&query_all(), &[]).unwrap_err();
        assert!(matches!(err, KnowledgeError::Backend(_)));
    }

    #[test]
    fn single_field_queries_require_that_field() {
        let (url, _) = spawn_server(vec![
            completion_body("lane_width: 3.6 m"),
            completion_body("shoulder_width: 1.2 m"),
        ]);
        let mut q = query_all();
        q.target_field = TargetField::Single(SpecField::ShoulderWidth);
        let fields = backend(&url).extract(&q, &[]).unwrap();
        assert_eq!(fields.shoulder_width, Some(1.2));
    }
}
