use super::{EnhancedMap, LaneDirection, LaneKind};
use serde::Serialize;

/// GeoJSON export of an enhanced map: one LineString feature per lane.
#[derive(Debug, Serialize)]
pub struct GeoJsonFeatureCollection {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub features: Vec<GeoJsonFeature>,
}

#[derive(Debug, Serialize)]
pub struct GeoJsonFeature {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub geometry: GeoJsonLineString,
    pub properties: LaneProperties,
}

#[derive(Debug, Serialize)]
pub struct GeoJsonLineString {
    #[serde(rename = "type")]
    pub kind: &'static str,
    /// GeoJSON positions are (lon, lat).
    pub coordinates: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct LaneProperties {
    pub way_id: i64,
    pub lane_index: u32,
    pub kind: LaneKind,
    pub direction: LaneDirection,
    pub width: f64,
}

pub fn to_geojson(map: &EnhancedMap) -> GeoJsonFeatureCollection {
    let features = map
        .segments
        .iter()
        .flat_map(|seg| seg.lanes.iter())
        .map(|lane| GeoJsonFeature {
            kind: "Feature",
            geometry: GeoJsonLineString {
                kind: "LineString",
                coordinates: lane
                    .polyline
                    .iter()
                    .map(|&(lat, lon)| (lon, lat))
                    .collect(),
            },
            properties: LaneProperties {
                way_id: lane.way_id,
                lane_index: lane.lane_index,
                kind: lane.kind,
                direction: lane.direction,
                width: lane.width,
            },
        })
        .collect();
    GeoJsonFeatureCollection {
        kind: "FeatureCollection",
        features,
    }
}
