//! Road-manual knowledge: ingestion, retrieval, and structured width
//! extraction.
//!
//! A manual is chunked, embedded with a deterministic hashed bag-of-words
//! model, and stored in an in-memory [`VectorStore`]. Width extraction goes
//! through an [`ExtractionBackend`]: either the bundled deterministic rule
//! table (reproducible, offline) or a remote chat-completion endpoint.

mod backend;
mod chunk;
mod embed;
mod prompt;
mod remote;
mod response;
mod store;

pub use backend::{BackendKind, DeterministicBackend, ExtractionBackend, RuleRow, RuleTable};
pub use chunk::{chunk_document, Chunk, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
pub use embed::{embed_text, EmbeddingVector, EMBEDDING_DIM};
pub use prompt::{build_prompt, PromptLibrary, PromptTemplate};
pub use remote::{RemoteBackend, RemoteBackendConfig, API_KEY_ENV};
pub use response::{parse_spec_response, render_spec_fields};
pub use store::{retrieve_top_k, VectorStore, DEFAULT_TOP_K};

use crate::osm::RoadSegment;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Retries after an extraction (parse) failure before giving up.
pub const EXTRACTION_RETRIES: usize = 2;

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("invalid chunking parameters: chunk_size {chunk_size}, overlap {overlap} (need 0 <= overlap < chunk_size)")]
    InvalidChunking { chunk_size: usize, overlap: usize },
    #[error("unknown prompt template \"{0}\"")]
    UnknownTemplate(String),
    #[error("prompt file defines no [name] sections")]
    EmptyPromptFile,
    #[error("no recognizable spec fields in response")]
    ExtractionFailure,
    #[error("{field} value {value} m is outside [0, 30] m")]
    ValueOutOfRange { field: SpecField, value: f64 },
    #[error("rule table has no entry for highway class \"{0}\"")]
    MissingClass(String),
    #[error("backend returned no {field} for way {way_id}")]
    MissingField { way_id: i64, field: SpecField },
    #[error("spec invariant violated for way {way_id}: {reason}")]
    SpecInvariant { way_id: i64, reason: String },
    #[error("remote backend: {0}")]
    Backend(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The four width fields extracted from a road manual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecField {
    LaneWidth,
    BikeLaneWidth,
    ShoulderWidth,
    TotalWidth,
}

impl SpecField {
    /// Extraction order used by the iterative schedules.
    pub const ALL: [SpecField; 4] = [
        SpecField::LaneWidth,
        SpecField::BikeLaneWidth,
        SpecField::ShoulderWidth,
        SpecField::TotalWidth,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            SpecField::LaneWidth => "lane_width",
            SpecField::BikeLaneWidth => "bike_lane_width",
            SpecField::ShoulderWidth => "shoulder_width",
            SpecField::TotalWidth => "total_width",
        }
    }

    /// Human phrasing for retrieval queries.
    fn phrase(&self) -> &'static str {
        match self {
            SpecField::LaneWidth => "lane width",
            SpecField::BikeLaneWidth => "bike lane width",
            SpecField::ShoulderWidth => "shoulder width",
            SpecField::TotalWidth => "total road width",
        }
    }
}

impl std::fmt::Display for SpecField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// What a single extraction call asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetField {
    All,
    Single(SpecField),
}

/// One extraction request: the segment being specified, the target field,
/// and (for the context-carrying schedule only) values already extracted.
#[derive(Debug, Clone)]
pub struct ExtractionQuery {
    pub segment: RoadSegment,
    pub target_field: TargetField,
    pub prior_context: Vec<(SpecField, f64)>,
}

impl ExtractionQuery {
    pub fn new(segment: RoadSegment, target_field: TargetField) -> Self {
        Self {
            segment,
            target_field,
            prior_context: Vec::new(),
        }
    }
}

/// Partial set of extracted width values, meters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExtractedFields {
    pub lane_width: Option<f64>,
    pub bike_lane_width: Option<f64>,
    pub shoulder_width: Option<f64>,
    pub total_width: Option<f64>,
}

impl ExtractedFields {
    pub fn get(&self, field: SpecField) -> Option<f64> {
        match field {
            SpecField::LaneWidth => self.lane_width,
            SpecField::BikeLaneWidth => self.bike_lane_width,
            SpecField::ShoulderWidth => self.shoulder_width,
            SpecField::TotalWidth => self.total_width,
        }
    }

    pub fn set(&mut self, field: SpecField, value: f64) {
        match field {
            SpecField::LaneWidth => self.lane_width = Some(value),
            SpecField::BikeLaneWidth => self.bike_lane_width = Some(value),
            SpecField::ShoulderWidth => self.shoulder_width = Some(value),
            SpecField::TotalWidth => self.total_width = Some(value),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lane_width.is_none()
            && self.bike_lane_width.is_none()
            && self.shoulder_width.is_none()
            && self.total_width.is_none()
    }
}

/// Per-segment design parameters with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSpec {
    pub way_id: i64,
    pub lane_width: f64,
    /// 0 when the segment has no bike lane.
    pub bike_lane_width: f64,
    /// 0 when none; extracted for audit but not rendered geometrically.
    pub shoulder_width: f64,
    pub total_width: f64,
    /// Indices of the chunks retrieved for this extraction.
    pub provenance: Vec<usize>,
    pub backend: BackendKind,
}

impl RoadSpec {
    /// Builds a spec from extracted fields, zeroing the bike width on
    /// segments without a bike lane and enforcing the width invariants.
    pub fn assemble(
        segment: &RoadSegment,
        fields: &ExtractedFields,
        provenance: Vec<usize>,
        backend: BackendKind,
    ) -> Result<Self, KnowledgeError> {
        let require = |field: SpecField| {
            fields.get(field).ok_or(KnowledgeError::MissingField {
                way_id: segment.way_id,
                field,
            })
        };
        let spec = RoadSpec {
            way_id: segment.way_id,
            lane_width: require(SpecField::LaneWidth)?,
            bike_lane_width: if segment.has_bike_lane {
                fields.bike_lane_width.unwrap_or(0.0)
            } else {
                0.0
            },
            shoulder_width: fields.shoulder_width.unwrap_or(0.0),
            total_width: require(SpecField::TotalWidth)?,
            provenance,
            backend,
        };
        spec.check(segment)?;
        Ok(spec)
    }

    /// Width invariants, checked against the owning segment.
    pub fn check(&self, segment: &RoadSegment) -> Result<(), KnowledgeError> {
        let fail = |reason: String| KnowledgeError::SpecInvariant {
            way_id: self.way_id,
            reason,
        };
        for (name, v) in [
            ("lane_width", self.lane_width),
            ("bike_lane_width", self.bike_lane_width),
            ("shoulder_width", self.shoulder_width),
            ("total_width", self.total_width),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(fail(format!("{name} = {v} is not a finite non-negative width")));
            }
        }
        if !(2.0..=6.0).contains(&self.lane_width) {
            return Err(fail(format!(
                "lane_width {} m outside [2.0, 6.0] m",
                self.lane_width
            )));
        }
        let min_total = segment.lane_count as f64 * self.lane_width - 1e-6;
        if self.total_width < min_total {
            return Err(fail(format!(
                "total_width {} m below {} lanes x {} m",
                self.total_width, segment.lane_count, self.lane_width
            )));
        }
        Ok(())
    }
}

/// Runs retrieval (when a store is present) and one backend call for the
/// query, returning the extracted values and the retrieved chunk indices.
pub fn extract_road_spec(
    query: &ExtractionQuery,
    backend: &dyn ExtractionBackend,
    store: Option<&VectorStore>,
    top_k: usize,
) -> Result<(ExtractedFields, Vec<usize>), KnowledgeError> {
    let retrieved_entries = match store {
        Some(s) if !s.is_empty() => retrieve_top_k(s, &retrieval_query(query), top_k),
        _ => Vec::new(),
    };
    let retrieved: Vec<&Chunk> = retrieved_entries.iter().map(|(c, _)| *c).collect();
    let provenance: Vec<usize> = retrieved.iter().map(|c| c.index).collect();
    let fields = backend.extract(query, &retrieved)?;
    Ok((fields, provenance))
}

fn retrieval_query(query: &ExtractionQuery) -> String {
    let class = query.segment.highway_class;
    match query.target_field {
        TargetField::All => format!(
            "lane width, bike lane width, shoulder width, and total road width for a {class} road"
        ),
        TargetField::Single(field) => format!("{} for a {class} road", field.phrase()),
    }
}
