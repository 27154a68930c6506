//! Enhances standard-definition road maps (OpenStreetMap extracts) into
//! lane-level vector maps.
//!
//! The pipeline has five stages, each its own module:
//!
//! - [`osm`] — parse OSM XML, filter to drivable roads, normalize each way
//!   into a self-contained [`osm::RoadSegment`].
//! - [`geo`] — the planar geometry kernel: local projection, polyline
//!   resampling/offsetting, Chamfer distances.
//! - [`knowledge`] — road-manual ingestion (chunk / embed / retrieve) and
//!   structured width extraction through a pluggable backend.
//! - [`generation`] — lays out drive lanes, bike lanes, and boundaries
//!   around each road centerline and validates the result.
//! - [`eval`] — matches generated lanes against a ground-truth lane map and
//!   reports Chamfer/recall metrics.

pub mod eval;
pub mod generation;
pub mod geo;
pub mod knowledge;
pub mod osm;

/// Scalar used by the pipeline. OSM coordinates and every JSON artifact are
/// double precision end to end; the geometry kernel itself is generic.
pub type Scalar = f64;

/// Local tangent frame over the pipeline scalar.
pub type LocalFrame = geo::LocalFrame<Scalar>;

/// Planar polyline over the pipeline scalar.
pub type Polyline2D = geo::Polyline2D<Scalar>;
