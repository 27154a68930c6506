use super::{Chunk, ExtractedFields, ExtractionQuery, KnowledgeError, SpecField, TargetField};
use crate::osm::HighwayClass;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Which kind of backend produced a spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Deterministic,
    Remote,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::Deterministic => "deterministic",
            BackendKind::Remote => "remote",
        })
    }
}

/// Extraction backends answer one query at a time. `retrieved` carries the
/// RAG context; the deterministic backend ignores it by design.
pub trait ExtractionBackend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn extract(
        &self,
        query: &ExtractionQuery,
        retrieved: &[&Chunk],
    ) -> Result<ExtractedFields, KnowledgeError>;
}

/// One rule-table row: the four width fields, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleRow {
    pub lane_width: f64,
    pub bike_lane_width: f64,
    pub shoulder_width: f64,
    pub total_width: f64,
}

/// Width table keyed by highway-class tag string. Lookups try the exact
/// class first, then its non-link base, so a 9-row table covers the links.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleTable {
    rows: BTreeMap<String, RuleRow>,
}

impl RuleTable {
    pub fn from_json_str(json: &str) -> Result<Self, KnowledgeError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: &Path) -> Result<Self, KnowledgeError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn row(&self, class: HighwayClass) -> Result<&RuleRow, KnowledgeError> {
        self.rows
            .get(class.as_str())
            .or_else(|| self.rows.get(class.base().as_str()))
            .ok_or_else(|| KnowledgeError::MissingClass(class.as_str().to_string()))
    }
}

/// Pure table-lookup backend: a function of (highway class, target field)
/// only. Exists so the whole pipeline runs reproducibly offline; the table
/// is a fixture, not manual ground truth.
pub struct DeterministicBackend {
    table: RuleTable,
}

impl DeterministicBackend {
    pub fn new(table: RuleTable) -> Self {
        Self { table }
    }
}

impl ExtractionBackend for DeterministicBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Deterministic
    }

    fn extract(
        &self,
        query: &ExtractionQuery,
        _retrieved: &[&Chunk],
    ) -> Result<ExtractedFields, KnowledgeError> {
        let row = self.table.row(query.segment.highway_class)?;
        let mut fields = ExtractedFields::default();
        match query.target_field {
            TargetField::All => {
                fields.lane_width = Some(row.lane_width);
                fields.bike_lane_width = Some(row.bike_lane_width);
                fields.shoulder_width = Some(row.shoulder_width);
                fields.total_width = Some(row.total_width);
            }
            TargetField::Single(field) => {
                let value = match field {
                    SpecField::LaneWidth => row.lane_width,
                    SpecField::BikeLaneWidth => row.bike_lane_width,
                    SpecField::ShoulderWidth => row.shoulder_width,
                    SpecField::TotalWidth => row.total_width,
                };
                fields.set(field, value);
            }
        }
        Ok(fields)
    }
}
