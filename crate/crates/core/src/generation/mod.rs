//! Lane-level map generation: combines road segments with extracted specs
//! into drive-lane, bike-lane, and boundary polylines.
//!
//! The layout keeps every OSM node untouched: lanes are vertex offsets of
//! the centerline, symmetric about it, so each lane has exactly one vertex
//! per source node and the zero-offset lane reproduces the source
//! coordinates bit-exactly.

mod geojson;

pub use geojson::{to_geojson, GeoJsonFeatureCollection};

use crate::geo::{offset_polyline, GeoError};
use crate::knowledge::{
    extract_road_spec, BackendKind, ExtractedFields, ExtractionBackend, ExtractionQuery,
    KnowledgeError, RoadSpec, SpecField, TargetField, VectorStore,
};
use crate::osm::RoadSegment;
use crate::{LocalFrame, Polyline2D};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("way {way_id}: {source}")]
    Geometry {
        way_id: i64,
        #[source]
        source: GeoError,
    },
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
}

/// Extraction schedule variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// One extraction call per segment covering all fields.
    Osg,
    /// One call per field per segment, independent.
    Ig,
    /// One call per field per segment, sequential, each call carrying the
    /// values already extracted for this segment.
    IgContext,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Osg => "osg",
            Variant::Ig => "ig",
            Variant::IgContext => "ig-context",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneKind {
    Drive,
    Bike,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneDirection {
    Forward,
    Backward,
}

/// One generated polyline. `lane_index` is a per-kind ordinal in ascending
/// offset order (matching the drive-lane layout formula).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneGeometry {
    pub way_id: i64,
    pub lane_index: u32,
    pub kind: LaneKind,
    pub direction: LaneDirection,
    /// (lat, lon) pairs in degrees, one vertex per source node.
    pub polyline: Vec<(f64, f64)>,
    /// Meters; 0 for boundaries.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetadata {
    pub backend: BackendKind,
    pub template: Option<String>,
    pub generated_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSegment {
    pub segment: RoadSegment,
    pub spec: RoadSpec,
    pub lanes: Vec<LaneGeometry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFailure {
    pub way_id: i64,
    pub reason: String,
}

/// The enhanced map: per-segment lanes plus the failures that were isolated
/// along the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedMap {
    pub variant: Variant,
    pub generation_metadata: GenerationMetadata,
    pub segments: Vec<GeneratedSegment>,
    pub failures: Vec<SegmentFailure>,
}

impl EnhancedMap {
    pub fn from_json_str(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// Drive lanes grouped by way id, in lane-index order.
    pub fn drive_lanes(&self) -> BTreeMap<i64, Vec<&LaneGeometry>> {
        let mut out: BTreeMap<i64, Vec<&LaneGeometry>> = BTreeMap::new();
        for seg in &self.segments {
            let lanes = out.entry(seg.segment.way_id).or_default();
            lanes.extend(seg.lanes.iter().filter(|l| l.kind == LaneKind::Drive));
        }
        out
    }
}

/// Structural validity of one generated map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub total_maps: usize,
    pub valid_maps: usize,
    pub failures: Vec<String>,
}

impl ValidityReport {
    pub fn percent_valid(&self) -> f64 {
        if self.total_maps == 0 {
            100.0
        } else {
            self.valid_maps as f64 / self.total_maps as f64 * 100.0
        }
    }
}

/// Everything an extraction schedule needs besides the segments.
pub struct ExtractionSetup<'a> {
    pub backend: &'a dyn ExtractionBackend,
    pub store: Option<&'a VectorStore>,
    pub top_k: usize,
    /// Recorded in metadata; the remote backend also uses it when building
    /// prompts (it owns its template).
    pub template: Option<String>,
}

/// Specs extracted for a set of segments, with per-segment failures kept
/// aside instead of aborting the run.
#[derive(Debug, Clone, Default)]
pub struct SpecExtraction {
    pub specs: Vec<RoadSpec>,
    pub failures: Vec<SegmentFailure>,
}

/// A local frame centered on the bounding box of the segments' centerlines.
/// Falls back to (0, 0) for an empty input, where no geometry is generated
/// anyway.
pub fn auto_frame(segments: &[RoadSegment]) -> LocalFrame {
    let mut lat_range: Option<(f64, f64)> = None;
    let mut lon_range: Option<(f64, f64)> = None;
    for seg in segments {
        for &(lat, lon) in &seg.centerline {
            lat_range = Some(match lat_range {
                None => (lat, lat),
                Some((lo, hi)) => (lo.min(lat), hi.max(lat)),
            });
            lon_range = Some(match lon_range {
                None => (lon, lon),
                Some((lo, hi)) => (lo.min(lon), hi.max(lon)),
            });
        }
    }
    match (lat_range, lon_range) {
        (Some((lat_lo, lat_hi)), Some((lon_lo, lon_hi))) => {
            LocalFrame::new((lat_lo + lat_hi) / 2.0, (lon_lo + lon_hi) / 2.0)
                .expect("segment coordinates are valid degrees")
        }
        _ => LocalFrame::new(0.0, 0.0).expect("origin frame"),
    }
}

/// Runs the extraction schedule for one segment.
fn extract_spec_for_segment(
    variant: Variant,
    segment: &RoadSegment,
    setup: &ExtractionSetup<'_>,
) -> Result<RoadSpec, KnowledgeError> {
    match variant {
        Variant::Osg => {
            let query = ExtractionQuery::new(segment.clone(), TargetField::All);
            let (fields, provenance) =
                extract_road_spec(&query, setup.backend, setup.store, setup.top_k)?;
            RoadSpec::assemble(segment, &fields, provenance, setup.backend.kind())
        }
        Variant::Ig | Variant::IgContext => {
            let mut fields = ExtractedFields::default();
            let mut provenance = Vec::new();
            let mut prior: Vec<(SpecField, f64)> = Vec::new();
            for field in SpecField::ALL {
                let mut query =
                    ExtractionQuery::new(segment.clone(), TargetField::Single(field));
                if variant == Variant::IgContext {
                    query.prior_context = prior.clone();
                }
                let (got, chunk_indices) =
                    extract_road_spec(&query, setup.backend, setup.store, setup.top_k)?;
                let value = got.get(field).ok_or(KnowledgeError::MissingField {
                    way_id: segment.way_id,
                    field,
                })?;
                fields.set(field, value);
                provenance.extend(chunk_indices);
                if variant == Variant::IgContext {
                    prior.push((field, value));
                }
            }
            provenance.sort_unstable();
            provenance.dedup();
            RoadSpec::assemble(segment, &fields, provenance, setup.backend.kind())
        }
    }
}

/// Extracts specs for every segment under the given schedule. Segments may
/// run in parallel; the per-field loop of the context-carrying schedule is
/// sequential within a segment by construction.
pub fn extract_specs(
    variant: Variant,
    segments: &[RoadSegment],
    setup: &ExtractionSetup<'_>,
) -> SpecExtraction {
    let results: Vec<Result<RoadSpec, SegmentFailure>> = segments
        .par_iter()
        .map(|seg| {
            extract_spec_for_segment(variant, seg, setup).map_err(|e| SegmentFailure {
                way_id: seg.way_id,
                reason: e.to_string(),
            })
        })
        .collect();
    let mut out = SpecExtraction::default();
    for result in results {
        match result {
            Ok(spec) => out.specs.push(spec),
            Err(failure) => out.failures.push(failure),
        }
    }
    out
}

/// Lays out all lanes for one segment.
///
/// Drive lane `i` (of `n`) sits at offset `(i - (n-1)/2) * lane_width`;
/// bike lanes (when the segment has one) at `±(n*lane_width + bike)/2`,
/// right side only for oneways; boundaries at `±total_width/2`. On two-way
/// roads negative offsets run backward; oneways are all forward.
pub fn generate_lanes_for_segment(
    segment: &RoadSegment,
    spec: &RoadSpec,
    frame: &LocalFrame,
) -> Result<Vec<LaneGeometry>, GenerationError> {
    let geometry_err = |source: GeoError| GenerationError::Geometry {
        way_id: segment.way_id,
        source,
    };

    let mut projected = Vec::with_capacity(segment.centerline.len());
    for &(lat, lon) in &segment.centerline {
        projected.push(frame.project(lat, lon).map_err(geometry_err)?);
    }
    let centerline = Polyline2D::new(projected).map_err(geometry_err)?;

    let direction_for = |offset: f64| {
        if segment.oneway || offset >= 0.0 {
            LaneDirection::Forward
        } else {
            LaneDirection::Backward
        }
    };

    // (kind, per-kind index, width, offset), ascending offset within a kind.
    let mut plan: Vec<(LaneKind, u32, f64, f64)> = Vec::new();
    let n = segment.lane_count;
    let w = spec.lane_width;
    for i in 0..n {
        let d = (i as f64 - (n as f64 - 1.0) / 2.0) * w;
        plan.push((LaneKind::Drive, i, w, d));
    }
    if segment.has_bike_lane && spec.bike_lane_width > 0.0 {
        let magnitude = (n as f64 * w + spec.bike_lane_width) / 2.0;
        if segment.oneway {
            // Right of travel only.
            plan.push((LaneKind::Bike, 0, spec.bike_lane_width, -magnitude));
        } else {
            plan.push((LaneKind::Bike, 0, spec.bike_lane_width, -magnitude));
            plan.push((LaneKind::Bike, 1, spec.bike_lane_width, magnitude));
        }
    }
    let half_total = spec.total_width / 2.0;
    plan.push((LaneKind::Boundary, 0, 0.0, -half_total));
    plan.push((LaneKind::Boundary, 1, 0.0, half_total));

    let mut lanes = Vec::with_capacity(plan.len());
    for (kind, lane_index, width, offset) in plan {
        let polyline = if offset == 0.0 {
            // Zero offset is the centerline itself: reuse the source
            // coordinates so the original nodes survive bit-exactly.
            segment.centerline.clone()
        } else {
            let shifted = offset_polyline(&centerline, offset).map_err(geometry_err)?;
            shifted
                .points()
                .iter()
                .map(|&(x, y)| frame.unproject(x, y))
                .collect()
        };
        lanes.push(LaneGeometry {
            way_id: segment.way_id,
            lane_index,
            kind,
            direction: direction_for(offset),
            polyline,
            width,
        });
    }
    Ok(lanes)
}

/// Builds the enhanced map from segments and already-extracted specs.
/// Geometry failures join `prior_failures`; a failing segment never aborts
/// the map.
pub fn build_map(
    variant: Variant,
    backend: BackendKind,
    template: Option<String>,
    segments: &[RoadSegment],
    specs: &[RoadSpec],
    prior_failures: Vec<SegmentFailure>,
    frame: &LocalFrame,
) -> EnhancedMap {
    let by_way: BTreeMap<i64, &RoadSpec> = specs.iter().map(|s| (s.way_id, s)).collect();
    let already_failed: std::collections::BTreeSet<i64> =
        prior_failures.iter().map(|f| f.way_id).collect();

    let results: Vec<Result<GeneratedSegment, SegmentFailure>> = segments
        .par_iter()
        .filter(|seg| !already_failed.contains(&seg.way_id))
        .map(|seg| match by_way.get(&seg.way_id) {
            None => Err(SegmentFailure {
                way_id: seg.way_id,
                reason: "no spec extracted".to_string(),
            }),
            Some(spec) => generate_lanes_for_segment(seg, spec, frame)
                .map(|lanes| GeneratedSegment {
                    segment: seg.clone(),
                    spec: (*spec).clone(),
                    lanes,
                })
                .map_err(|e| SegmentFailure {
                    way_id: seg.way_id,
                    reason: e.to_string(),
                }),
        })
        .collect();

    let mut map = EnhancedMap {
        variant,
        generation_metadata: GenerationMetadata {
            backend,
            template,
            generated_at: chrono::Utc::now().to_rfc3339(),
        },
        segments: Vec::new(),
        failures: prior_failures,
    };
    for result in results {
        match result {
            Ok(seg) => map.segments.push(seg),
            Err(failure) => map.failures.push(failure),
        }
    }
    map
}

fn generate_map(
    variant: Variant,
    segments: &[RoadSegment],
    setup: &ExtractionSetup<'_>,
    frame: &LocalFrame,
) -> EnhancedMap {
    let extraction = extract_specs(variant, segments, setup);
    build_map(
        variant,
        setup.backend.kind(),
        setup.template.clone(),
        segments,
        &extraction.specs,
        extraction.failures,
        frame,
    )
}

/// One-shot schedule: a single all-fields extraction per segment.
pub fn generate_map_osg(
    segments: &[RoadSegment],
    setup: &ExtractionSetup<'_>,
    frame: &LocalFrame,
) -> EnhancedMap {
    generate_map(Variant::Osg, segments, setup, frame)
}

/// Iterative schedule: each field queried separately.
pub fn generate_map_ig(
    segments: &[RoadSegment],
    setup: &ExtractionSetup<'_>,
    frame: &LocalFrame,
) -> EnhancedMap {
    generate_map(Variant::Ig, segments, setup, frame)
}

/// Iterative schedule with accumulated context: per-field queries carry the
/// values already extracted for the segment.
pub fn generate_map_ig_context(
    segments: &[RoadSegment],
    setup: &ExtractionSetup<'_>,
    frame: &LocalFrame,
) -> EnhancedMap {
    generate_map(Variant::IgContext, segments, setup, frame)
}

/// Checks a generated map against its input segments:
/// (a) every input segment present exactly once, (b) drive-lane counts match
/// `lane_count`, (c) finite coordinates, (d) widths within sanity bounds,
/// (e) every lane polyline keeps the source vertex count.
pub fn validate_map(map: &EnhancedMap, input_segments: &[RoadSegment]) -> ValidityReport {
    let mut reasons: Vec<String> = Vec::new();

    for failure in &map.failures {
        reasons.push(format!(
            "way {}: recorded failure: {}",
            failure.way_id, failure.reason
        ));
    }

    let mut seen: BTreeMap<i64, usize> = BTreeMap::new();
    for seg in &map.segments {
        *seen.entry(seg.segment.way_id).or_default() += 1;
    }
    for seg in input_segments {
        match seen.get(&seg.way_id) {
            None => reasons.push(format!("way {}: missing from output", seg.way_id)),
            Some(1) => {}
            Some(n) => reasons.push(format!("way {}: appears {} times", seg.way_id, n)),
        }
    }

    for seg in &map.segments {
        let way_id = seg.segment.way_id;
        let n = seg.segment.lane_count;
        let drive_count = seg
            .lanes
            .iter()
            .filter(|l| l.kind == LaneKind::Drive)
            .count();
        if drive_count != n as usize {
            reasons.push(format!(
                "way {way_id}: lane count mismatch (expected {n}, got {drive_count})"
            ));
        }
        if !(2.0..=6.0).contains(&seg.spec.lane_width) {
            reasons.push(format!(
                "way {way_id}: lane_width {} m outside [2.0, 6.0] m",
                seg.spec.lane_width
            ));
        }
        let min_total = n as f64 * 2.0;
        if !(min_total..=60.0).contains(&seg.spec.total_width) {
            reasons.push(format!(
                "way {way_id}: total_width {} m outside [{min_total}, 60] m",
                seg.spec.total_width
            ));
        }
        let expected_vertices = seg.segment.centerline.len();
        for lane in &seg.lanes {
            if lane.polyline.len() != expected_vertices {
                reasons.push(format!(
                    "way {way_id}: {:?} lane {} has {} vertices, expected {expected_vertices}",
                    lane.kind,
                    lane.lane_index,
                    lane.polyline.len()
                ));
            }
            if lane
                .polyline
                .iter()
                .any(|&(lat, lon)| !lat.is_finite() || !lon.is_finite())
            {
                reasons.push(format!(
                    "way {way_id}: {:?} lane {} has non-finite coordinates",
                    lane.kind, lane.lane_index
                ));
            }
        }
    }

    ValidityReport {
        total_maps: 1,
        valid_maps: usize::from(reasons.is_empty()),
        failures: reasons,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{DeterministicBackend, RuleTable};
    use crate::osm::HighwayClass;

    fn table() -> RuleTable {
        RuleTable::from_json_str(
            r#"{
                "residential": {"lane_width": 3.0, "bike_lane_width": 1.5, "shoulder_width": 0.5, "total_width": 9.0},
                "primary": {"lane_width": 3.6, "bike_lane_width": 1.8, "shoulder_width": 2.4, "total_width": 20.0},
                "service": {"lane_width": 2.7, "bike_lane_width": 0.0, "shoulder_width": 0.0, "total_width": 5.4}
            }"#,
        )
        .unwrap()
    }

    fn backend() -> DeterministicBackend {
        DeterministicBackend::new(table())
    }

    fn setup(backend: &DeterministicBackend) -> ExtractionSetup<'_> {
        ExtractionSetup {
            backend,
            store: None,
            top_k: 4,
            template: None,
        }
    }

    /// Straight east-west segment at the equator: 1 m north = K degrees lat.
    fn east_west_segment(way_id: i64, lane_count: u32, oneway: bool, bike: bool) -> RoadSegment {
        RoadSegment {
            way_id,
            highway_class: HighwayClass::Residential,
            name: None,
            lane_count,
            oneway,
            has_bike_lane: bike,
            centerline: (0..5).map(|i| (0.0, 0.00025 * i as f64)).collect(),
        }
    }

    fn spec_for(seg: &RoadSegment, lane: f64, bike: f64, total: f64) -> RoadSpec {
        RoadSpec {
            way_id: seg.way_id,
            lane_width: lane,
            bike_lane_width: bike,
            shoulder_width: 0.0,
            total_width: total,
            provenance: vec![],
            backend: BackendKind::Deterministic,
        }
    }

    fn frame() -> LocalFrame {
        LocalFrame::new(0.0, 0.0).unwrap()
    }

    /// Northing in meters of a generated vertex.
    fn northing(lat: f64) -> f64 {
        crate::geo::EARTH_RADIUS_M * lat * std::f64::consts::PI / 180.0
    }

    fn offsets_of(lanes: &[LaneGeometry], kind: LaneKind) -> Vec<f64> {
        lanes
            .iter()
            .filter(|l| l.kind == kind)
            .map(|l| northing(l.polyline[0].0))
            .collect()
    }

    #[test]
    fn single_oneway_lane_sits_on_the_centerline() {
        let seg = east_west_segment(7, 1, true, false);
        let spec = spec_for(&seg, 3.0, 0.0, 3.0);
        let lanes = generate_lanes_for_segment(&seg, &spec, &frame()).unwrap();
        let drives: Vec<&LaneGeometry> =
            lanes.iter().filter(|l| l.kind == LaneKind::Drive).collect();
        assert_eq!(drives.len(), 1);
        // Zero offset reproduces the source nodes bit-exactly.
        assert_eq!(drives[0].polyline, seg.centerline);
        assert_eq!(drives[0].direction, LaneDirection::Forward);
        let boundaries = offsets_of(&lanes, LaneKind::Boundary);
        assert!((boundaries[0] + 1.5).abs() < 1e-9);
        assert!((boundaries[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn two_way_lanes_split_symmetrically_about_the_centerline() {
        let seg = east_west_segment(7, 2, false, false);
        let spec = spec_for(&seg, 3.0, 0.0, 9.0);
        let lanes = generate_lanes_for_segment(&seg, &spec, &frame()).unwrap();
        let drives: Vec<&LaneGeometry> =
            lanes.iter().filter(|l| l.kind == LaneKind::Drive).collect();
        assert_eq!(drives.len(), 2);
        assert!((northing(drives[0].polyline[0].0) + 1.5).abs() < 1e-9);
        assert!((northing(drives[1].polyline[0].0) - 1.5).abs() < 1e-9);
        assert_eq!(drives[0].direction, LaneDirection::Backward);
        assert_eq!(drives[1].direction, LaneDirection::Forward);
    }

    #[test]
    fn hundred_meter_residential_layout_matches_hand_offsets() {
        // n=2, w=3.0, bike both sides at 1.5, total 9.0:
        // drives at -1.5/+1.5, bikes at -(6+1.5)/2 = -3.75 and +3.75,
        // boundaries at -4.5/+4.5.
        let seg = east_west_segment(7, 2, false, true);
        let spec = spec_for(&seg, 3.0, 1.5, 9.0);
        let lanes = generate_lanes_for_segment(&seg, &spec, &frame()).unwrap();
        for (kind, expected) in [
            (LaneKind::Drive, vec![-1.5, 1.5]),
            (LaneKind::Bike, vec![-3.75, 3.75]),
            (LaneKind::Boundary, vec![-4.5, 4.5]),
        ] {
            let got = offsets_of(&lanes, kind);
            assert_eq!(got.len(), expected.len(), "{kind:?}");
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).abs() < 1e-9, "{kind:?}: got {g}, expected {e}");
            }
            // Every vertex of every lane sits at the same northing.
            for lane in lanes.iter().filter(|l| l.kind == kind) {
                let first = northing(lane.polyline[0].0);
                for &(lat, _) in &lane.polyline {
                    assert!((northing(lat) - first).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn oneway_bike_lane_goes_right_of_travel_only() {
        let seg = east_west_segment(7, 2, true, true);
        let spec = spec_for(&seg, 3.0, 1.5, 9.0);
        let lanes = generate_lanes_for_segment(&seg, &spec, &frame()).unwrap();
        let bikes = offsets_of(&lanes, LaneKind::Bike);
        assert_eq!(bikes.len(), 1);
        assert!((bikes[0] + 3.75).abs() < 1e-9);
        assert!(lanes
            .iter()
            .all(|l| l.direction == LaneDirection::Forward));
    }

    #[test]
    fn vertex_counts_match_the_source_everywhere() {
        let seg = east_west_segment(7, 3, false, true);
        let spec = spec_for(&seg, 3.0, 1.5, 12.0);
        let lanes = generate_lanes_for_segment(&seg, &spec, &frame()).unwrap();
        for lane in &lanes {
            assert_eq!(lane.polyline.len(), seg.centerline.len());
        }
        // Odd lane count: the middle drive lane is the untouched centerline.
        let middle = lanes
            .iter()
            .find(|l| l.kind == LaneKind::Drive && l.lane_index == 1)
            .unwrap();
        assert_eq!(middle.polyline, seg.centerline);
    }

    #[test]
    fn two_way_geometry_is_left_right_symmetric() {
        let seg = east_west_segment(7, 2, false, true);
        let spec = spec_for(&seg, 3.0, 1.5, 9.0);
        let lanes = generate_lanes_for_segment(&seg, &spec, &frame()).unwrap();
        for kind in [LaneKind::Drive, LaneKind::Bike, LaneKind::Boundary] {
            let of_kind: Vec<&LaneGeometry> =
                lanes.iter().filter(|l| l.kind == kind).collect();
            assert_eq!(of_kind.len(), 2);
            let (neg, pos) = (of_kind[0], of_kind[1]);
            for (a, b) in neg.polyline.iter().zip(&pos.polyline) {
                assert!((northing(a.0) + northing(b.0)).abs() < 1e-9);
                assert!((a.1 - b.1).abs() < 1e-12);
            }
            if kind != LaneKind::Boundary {
                assert_eq!(neg.direction, LaneDirection::Backward);
                assert_eq!(pos.direction, LaneDirection::Forward);
            }
        }
    }

    #[test]
    fn degenerate_centerline_reports_the_way_id() {
        let mut seg = east_west_segment(55, 1, true, false);
        seg.centerline = vec![(0.0, 0.0), (0.0, 0.0)];
        let spec = spec_for(&seg, 3.0, 0.0, 3.0);
        match generate_lanes_for_segment(&seg, &spec, &frame()) {
            Err(GenerationError::Geometry { way_id, .. }) => assert_eq!(way_id, 55),
            other => panic!("expected geometry error, got {other:?}"),
        }
    }

    #[test]
    fn schedules_agree_under_a_pure_backend() {
        let segments = vec![
            east_west_segment(7, 2, false, true),
            east_west_segment(8, 1, true, false),
        ];
        let b = backend();
        let f = frame();
        let osg = generate_map_osg(&segments, &setup(&b), &f);
        let ig = generate_map_ig(&segments, &setup(&b), &f);
        let ctx = generate_map_ig_context(&segments, &setup(&b), &f);
        assert_eq!(osg.variant, Variant::Osg);
        assert_eq!(ig.variant, Variant::Ig);
        assert_eq!(ctx.variant, Variant::IgContext);
        let value = |m: &EnhancedMap| serde_json::to_value(&m.segments).unwrap();
        assert_eq!(value(&osg), value(&ig));
        assert_eq!(value(&osg), value(&ctx));
        assert!(osg.failures.is_empty());
    }

    #[test]
    fn empty_input_yields_an_empty_valid_map() {
        let b = backend();
        let map = generate_map_osg(&[], &setup(&b), &frame());
        assert!(map.segments.is_empty());
        assert!(map.failures.is_empty());
        let validity = validate_map(&map, &[]);
        assert_eq!(validity.valid_maps, 1);
        assert_eq!(validity.percent_valid(), 100.0);
    }

    #[test]
    fn failing_segment_is_isolated_not_fatal() {
        let mut bad = east_west_segment(9, 2, false, false);
        bad.highway_class = HighwayClass::Motorway; // not in the test table
        let segments = vec![east_west_segment(7, 2, false, false), bad];
        let b = backend();
        let map = generate_map_osg(&segments, &setup(&b), &frame());
        assert_eq!(map.segments.len(), 1);
        assert_eq!(map.failures.len(), 1);
        assert_eq!(map.failures[0].way_id, 9);
        assert!(map.failures[0].reason.contains("motorway"));
        let validity = validate_map(&map, &segments);
        assert_eq!(validity.valid_maps, 0);
        assert!(validity
            .failures
            .iter()
            .any(|r| r.contains("way 9") && r.contains("missing")));
    }

    #[test]
    fn validate_flags_lane_count_mismatch() {
        let segments = vec![east_west_segment(7, 2, false, false)];
        let b = backend();
        let mut map = generate_map_osg(&segments, &setup(&b), &frame());
        assert_eq!(validate_map(&map, &segments).valid_maps, 1);
        // Drop one drive lane.
        let lanes = &mut map.segments[0].lanes;
        let drive_pos = lanes.iter().position(|l| l.kind == LaneKind::Drive).unwrap();
        lanes.remove(drive_pos);
        let validity = validate_map(&map, &segments);
        assert_eq!(validity.valid_maps, 0);
        assert!(validity
            .failures
            .iter()
            .any(|r| r.contains("lane count mismatch")));
    }

    #[test]
    fn validate_flags_non_finite_coordinates() {
        let segments = vec![east_west_segment(7, 1, true, false)];
        let b = backend();
        let mut map = generate_map_osg(&segments, &setup(&b), &frame());
        map.segments[0].lanes[0].polyline[0].0 = f64::NAN;
        let validity = validate_map(&map, &segments);
        assert_eq!(validity.valid_maps, 0);
        assert!(validity.failures.iter().any(|r| r.contains("non-finite")));
    }

    #[test]
    fn missing_spec_becomes_a_recorded_failure() {
        let segments = vec![east_west_segment(7, 2, false, false)];
        let map = build_map(
            Variant::Osg,
            BackendKind::Deterministic,
            None,
            &segments,
            &[],
            vec![],
            &frame(),
        );
        assert!(map.segments.is_empty());
        assert_eq!(map.failures.len(), 1);
        assert!(map.failures[0].reason.contains("no spec"));
    }

    #[test]
    fn auto_frame_centers_on_the_bounding_box() {
        let segments = vec![east_west_segment(7, 2, false, false)];
        let f = auto_frame(&segments);
        let (lat, lon) = f.origin();
        assert_eq!(lat, 0.0);
        assert!((lon - 0.0005).abs() < 1e-12);
        // Empty input still yields a usable frame.
        let _ = auto_frame(&[]);
    }
}
