//! Planar geometry kernel shared by generation and evaluation.
//!
//! Everything here is generic over the float width (`f32`/`f64` via
//! `num-traits`); the rest of the pipeline uses the `f64` aliases exported
//! from the crate root. All distances are meters inside a [`LocalFrame`].

mod chamfer;
mod offset;

pub use chamfer::{chamfer_directed, chamfer_symmetric, resample_polyline};
pub use offset::offset_polyline;

use num_traits::float::FloatConst;
use num_traits::Float;
use thiserror::Error;

/// Scalar bound for the geometry kernel.
pub trait GeoFloat: Float + FloatConst {}
impl<T: Float + FloatConst> GeoFloat for T {}

/// Earth radius used by the projection, meters (WGS84 semi-major axis).
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Consecutive polyline vertices closer than this are degenerate, meters.
pub const MIN_VERTEX_SPACING_M: f64 = 1e-9;

/// Cap on the miter scale factor at offset joins. Beyond the cap the factor
/// saturates instead of beveling, so vertex counts are always preserved.
pub const MITER_CAP: f64 = 2.0;

/// Half-extent of the projection domain around the frame origin, degrees.
pub const FRAME_DOMAIN_DEG: f64 = 1.0;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("invalid frame origin ({lat}, {lon}): latitude must be in [-90, 90] and longitude in [-180, 180]")]
    InvalidOrigin { lat: f64, lon: f64 },
    #[error("coordinate ({lat}, {lon}) outside the local frame domain (origin ({origin_lat}, {origin_lon}), half-extent {FRAME_DOMAIN_DEG} deg)")]
    OutOfDomain {
        lat: f64,
        lon: f64,
        origin_lat: f64,
        origin_lon: f64,
    },
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate geometry: points {first} and {second} are closer than {MIN_VERTEX_SPACING_M} m")]
    DegenerateGeometry { first: usize, second: usize },
    #[error("offset distance {0} m out of range (|d| must be < 100 m)")]
    OffsetOutOfRange(f64),
    #[error("resample step must be positive, got {0}")]
    NonPositiveStep(f64),
}

fn to_f64<F: GeoFloat>(v: F) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Local equirectangular tangent frame.
///
/// Maps WGS84 degrees to planar meters around a fixed origin:
/// `x = R * (lon - lon0) * (pi/180) * cos(lat0 * pi/180)`,
/// `y = R * (lat - lat0) * (pi/180)`. Sub-centimeter error at the few-km
/// extents this pipeline works with, and trivially invertible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame<F> {
    origin_lat: F,
    origin_lon: F,
    earth_radius: F,
}

impl<F: GeoFloat> LocalFrame<F> {
    pub fn new(origin_lat: F, origin_lon: F) -> Result<Self, GeoError> {
        let ninety = F::from(90.0).unwrap();
        let one_eighty = F::from(180.0).unwrap();
        if !origin_lat.is_finite()
            || !origin_lon.is_finite()
            || origin_lat.abs() > ninety
            || origin_lon.abs() > one_eighty
        {
            return Err(GeoError::InvalidOrigin {
                lat: to_f64(origin_lat),
                lon: to_f64(origin_lon),
            });
        }
        Ok(Self {
            origin_lat,
            origin_lon,
            earth_radius: F::from(EARTH_RADIUS_M).unwrap(),
        })
    }

    pub fn origin(&self) -> (F, F) {
        (self.origin_lat, self.origin_lon)
    }

    pub fn earth_radius(&self) -> F {
        self.earth_radius
    }

    fn rad_per_deg() -> F {
        F::PI() / F::from(180.0).unwrap()
    }

    /// Projects degrees to local meters, rejecting coordinates more than
    /// [`FRAME_DOMAIN_DEG`] from the origin where the flat-earth assumption
    /// breaks down.
    pub fn project(&self, lat: F, lon: F) -> Result<(F, F), GeoError> {
        let extent = F::from(FRAME_DOMAIN_DEG).unwrap();
        if !lat.is_finite()
            || !lon.is_finite()
            || (lat - self.origin_lat).abs() >= extent
            || (lon - self.origin_lon).abs() >= extent
        {
            return Err(GeoError::OutOfDomain {
                lat: to_f64(lat),
                lon: to_f64(lon),
                origin_lat: to_f64(self.origin_lat),
                origin_lon: to_f64(self.origin_lon),
            });
        }
        Ok(self.project_unchecked(lat, lon))
    }

    /// Same mapping without the domain guard. Evaluation uses this so that
    /// out-of-area ground truth degrades to large distances instead of
    /// erroring.
    pub fn project_unchecked(&self, lat: F, lon: F) -> (F, F) {
        let k = Self::rad_per_deg();
        let x = self.earth_radius * (lon - self.origin_lon) * k * (self.origin_lat * k).cos();
        let y = self.earth_radius * (lat - self.origin_lat) * k;
        (x, y)
    }

    /// Inverse of [`project`](Self::project): local meters back to degrees.
    pub fn unproject(&self, x: F, y: F) -> (F, F) {
        let k = Self::rad_per_deg();
        let lat = self.origin_lat + y / (self.earth_radius * k);
        let lon = self.origin_lon + x / (self.earth_radius * k * (self.origin_lat * k).cos());
        (lat, lon)
    }
}

/// Planar polyline in frame meters. At least two points, consecutive points
/// never coincident.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline2D<F> {
    points: Vec<(F, F)>,
}

impl<F: GeoFloat> Polyline2D<F> {
    pub fn new(points: Vec<(F, F)>) -> Result<Self, GeoError> {
        if points.len() < 2 {
            return Err(GeoError::TooFewPoints(points.len()));
        }
        let min = F::from(MIN_VERTEX_SPACING_M).unwrap();
        for i in 1..points.len() {
            if dist(points[i - 1], points[i]) <= min {
                return Err(GeoError::DegenerateGeometry {
                    first: i - 1,
                    second: i,
                });
            }
        }
        Ok(Self { points })
    }

    /// Constructor that skips the spacing check. Offset and resample output
    /// can legitimately contain near-coincident points for self-overlapping
    /// inputs; vertex count preservation wins there.
    pub(crate) fn from_points_unchecked(points: Vec<(F, F)>) -> Self {
        debug_assert!(points.len() >= 2);
        Self { points }
    }

    pub fn points(&self) -> &[(F, F)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> (F, F) {
        self.points[0]
    }

    pub fn last(&self) -> (F, F) {
        *self.points.last().unwrap()
    }

    pub fn arc_length(&self) -> F {
        self.points
            .windows(2)
            .fold(F::zero(), |acc, w| acc + dist(w[0], w[1]))
    }
}

pub(crate) fn dist<F: GeoFloat>(a: (F, F), b: (F, F)) -> F {
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    (dx * dx + dy * dy).sqrt()
}
