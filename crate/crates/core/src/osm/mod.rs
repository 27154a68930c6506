//! OSM XML parsing, road filtering, and per-way normalization.
//!
//! Input is an OSM v0.6 XML extract. `node` and `way` elements are captured;
//! `relation` elements are parsed and discarded (lane-level enhancement never
//! consumes them). Only XML is accepted — desk-scale extracts don't need PBF.

mod parse;
mod write;

pub use parse::parse_osm;
pub use write::write_osm_xml;

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OsmError {
    #[error("malformed XML at byte offset {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("element <{element}> is missing required attribute '{attribute}'")]
    MissingAttribute {
        element: &'static str,
        attribute: &'static str,
    },
    #[error("element <{element}> has unparseable attribute {attribute}=\"{value}\"")]
    InvalidAttribute {
        element: &'static str,
        attribute: &'static str,
        value: String,
    },
    #[error("node {node_id} has out-of-range coordinates ({lat}, {lon})")]
    InvalidCoordinate { node_id: i64, lat: f64, lon: f64 },
    #[error("duplicate node id {0}")]
    DuplicateNode(i64),
    #[error("duplicate way id {0}")]
    DuplicateWay(i64),
    #[error("way {way_id} references fewer than 2 nodes")]
    DegenerateWay { way_id: i64 },
    #[error("way {way_id} references missing node {node_id}")]
    DanglingNodeRef { way_id: i64, node_id: i64 },
    #[error("way {way_id} is not a road (highway tag {highway:?}); normalize expects filtered input")]
    NotARoad { way_id: i64, highway: Option<String> },
}

/// A geographical point with a unique identifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsmNode {
    pub id: i64,
    pub lat: f64,
    pub lon: f64,
}

/// An ordered node sequence with free-form tags. Roads, but also building
/// footprints and the like.
#[derive(Debug, Clone, PartialEq)]
pub struct OsmWay {
    pub id: i64,
    pub node_refs: Vec<i64>,
    pub tags: BTreeMap<String, String>,
}

/// Parsed extract with referential integrity: every way ref resolves.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OsmDocument {
    pub nodes: BTreeMap<i64, OsmNode>,
    pub ways: BTreeMap<i64, OsmWay>,
}

impl OsmDocument {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn way_count(&self) -> usize {
        self.ways.len()
    }
}

/// Drivable road classes accepted by the filter, plus their `_link` ramps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighwayClass {
    Motorway,
    MotorwayLink,
    Trunk,
    TrunkLink,
    Primary,
    PrimaryLink,
    Secondary,
    SecondaryLink,
    Tertiary,
    TertiaryLink,
    Residential,
    ResidentialLink,
    Unclassified,
    UnclassifiedLink,
    Service,
    ServiceLink,
    LivingStreet,
    LivingStreetLink,
}

impl HighwayClass {
    pub fn from_tag(value: &str) -> Option<Self> {
        use HighwayClass::*;
        Some(match value {
            "motorway" => Motorway,
            "motorway_link" => MotorwayLink,
            "trunk" => Trunk,
            "trunk_link" => TrunkLink,
            "primary" => Primary,
            "primary_link" => PrimaryLink,
            "secondary" => Secondary,
            "secondary_link" => SecondaryLink,
            "tertiary" => Tertiary,
            "tertiary_link" => TertiaryLink,
            "residential" => Residential,
            "residential_link" => ResidentialLink,
            "unclassified" => Unclassified,
            "unclassified_link" => UnclassifiedLink,
            "service" => Service,
            "service_link" => ServiceLink,
            "living_street" => LivingStreet,
            "living_street_link" => LivingStreetLink,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        use HighwayClass::*;
        match self {
            Motorway => "motorway",
            MotorwayLink => "motorway_link",
            Trunk => "trunk",
            TrunkLink => "trunk_link",
            Primary => "primary",
            PrimaryLink => "primary_link",
            Secondary => "secondary",
            SecondaryLink => "secondary_link",
            Tertiary => "tertiary",
            TertiaryLink => "tertiary_link",
            Residential => "residential",
            ResidentialLink => "residential_link",
            Unclassified => "unclassified",
            UnclassifiedLink => "unclassified_link",
            Service => "service",
            ServiceLink => "service_link",
            LivingStreet => "living_street",
            LivingStreetLink => "living_street_link",
        }
    }

    pub fn is_link(&self) -> bool {
        self.as_str().ends_with("_link")
    }

    /// The non-link class this one belongs to (identity for non-links).
    pub fn base(&self) -> Self {
        use HighwayClass::*;
        match self {
            MotorwayLink => Motorway,
            TrunkLink => Trunk,
            PrimaryLink => Primary,
            SecondaryLink => Secondary,
            TertiaryLink => Tertiary,
            ResidentialLink => Residential,
            UnclassifiedLink => Unclassified,
            ServiceLink => Service,
            LivingStreetLink => LivingStreet,
            other => *other,
        }
    }
}

impl std::fmt::Display for HighwayClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normalized per-way road record: the attributes the downstream pipeline
/// queries, with the resolved centerline geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub way_id: i64,
    pub highway_class: HighwayClass,
    pub name: Option<String>,
    pub lane_count: u32,
    pub oneway: bool,
    pub has_bike_lane: bool,
    /// (lat, lon) pairs in degrees, exactly the source way's node
    /// coordinates in `node_refs` order.
    pub centerline: Vec<(f64, f64)>,
}

/// On-disk form of the normalized road file: `{"segments": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentFile {
    pub segments: Vec<RoadSegment>,
}

/// Result of [`normalize_roads`]: segments plus non-fatal warnings (for
/// example unparseable `lanes` tags that fell back to the default).
#[derive(Debug, Clone, Default)]
pub struct NormalizedRoads {
    pub segments: Vec<RoadSegment>,
    pub warnings: Vec<String>,
}

/// Keeps exactly the ways whose `highway` tag is a [`HighwayClass`] plus the
/// nodes they reference; everything else is dropped.
pub fn filter_roads(doc: &OsmDocument) -> OsmDocument {
    let ways: BTreeMap<i64, OsmWay> = doc
        .ways
        .iter()
        .filter(|(_, way)| {
            way.tags
                .get("highway")
                .is_some_and(|v| HighwayClass::from_tag(v).is_some())
        })
        .map(|(id, way)| (*id, way.clone()))
        .collect();
    let referenced: BTreeSet<i64> = ways
        .values()
        .flat_map(|w| w.node_refs.iter().copied())
        .collect();
    let nodes = doc
        .nodes
        .iter()
        .filter(|(id, _)| referenced.contains(id))
        .map(|(id, node)| (*id, *node))
        .collect();
    OsmDocument { nodes, ways }
}

/// Default lane count when the `lanes` tag is absent or unparseable.
/// Motorways default to 2 regardless of direction; everything else gets 1
/// when oneway and 2 when two-way.
pub fn default_lane_count(class: HighwayClass, oneway: bool) -> u32 {
    if class.base() == HighwayClass::Motorway {
        2
    } else if oneway {
        1
    } else {
        2
    }
}

/// Turns a filtered document into one [`RoadSegment`] per way. Geometry is
/// copied bit-exactly; attribute fallbacks are recorded as warnings.
pub fn normalize_roads(doc: &OsmDocument) -> Result<NormalizedRoads, OsmError> {
    let mut out = NormalizedRoads::default();
    for way in doc.ways.values() {
        let highway = way.tags.get("highway");
        let class = highway
            .and_then(|v| HighwayClass::from_tag(v))
            .ok_or_else(|| OsmError::NotARoad {
                way_id: way.id,
                highway: highway.cloned(),
            })?;

        let oneway = way
            .tags
            .get("oneway")
            .is_some_and(|v| matches!(v.as_str(), "yes" | "true" | "1"));

        let lane_count = match way.tags.get("lanes") {
            None => default_lane_count(class, oneway),
            Some(raw) => match raw.trim().parse::<u32>() {
                Ok(n) if n >= 1 => n,
                _ => {
                    let fallback = default_lane_count(class, oneway);
                    out.warnings.push(format!(
                        "way {}: unparseable lanes tag \"{}\", defaulting to {}",
                        way.id, raw, fallback
                    ));
                    fallback
                }
            },
        };

        let has_bike_lane = way
            .tags
            .iter()
            .any(|(k, v)| (k == "cycleway" || k.starts_with("cycleway:")) && v != "no");

        let mut centerline = Vec::with_capacity(way.node_refs.len());
        for node_id in &way.node_refs {
            let node = doc
                .nodes
                .get(node_id)
                .ok_or(OsmError::DanglingNodeRef {
                    way_id: way.id,
                    node_id: *node_id,
                })?;
            centerline.push((node.lat, node.lon));
        }

        out.segments.push(RoadSegment {
            way_id: way.id,
            highway_class: class,
            name: way.tags.get("name").cloned(),
            lane_count,
            oneway,
            has_bike_lane,
            centerline,
        });
    }
    Ok(out)
}
