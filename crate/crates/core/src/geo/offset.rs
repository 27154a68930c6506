use super::{GeoError, GeoFloat, Polyline2D, MIN_VERTEX_SPACING_M, MITER_CAP};

/// Offsets every vertex of `p` along the local left normal by signed
/// distance `d` (positive = left of the travel direction).
///
/// Endpoints move along the adjacent segment normal. Interior vertices move
/// along the normalized bisector of the two adjacent segment normals, scaled
/// by the miter factor `1/cos(theta/2)` (theta = turn angle) capped at
/// [`MITER_CAP`]. The output always has exactly the same vertex count as the
/// input, which is what lets lane generation keep a one-to-one vertex
/// correspondence with the source way.
pub fn offset_polyline<F: GeoFloat>(p: &Polyline2D<F>, d: F) -> Result<Polyline2D<F>, GeoError> {
    let limit = F::from(100.0).unwrap();
    if d.is_nan() || d.abs() >= limit {
        return Err(GeoError::OffsetOutOfRange(super::to_f64(d)));
    }
    if d == F::zero() {
        return Ok(p.clone());
    }

    let pts = p.points();
    let min = F::from(MIN_VERTEX_SPACING_M).unwrap();
    let mut normals = Vec::with_capacity(pts.len() - 1);
    for (i, w) in pts.windows(2).enumerate() {
        let dx = w[1].0 - w[0].0;
        let dy = w[1].1 - w[0].1;
        let len = (dx * dx + dy * dy).sqrt();
        if len <= min {
            return Err(GeoError::DegenerateGeometry {
                first: i,
                second: i + 1,
            });
        }
        // Unit left normal of the segment direction.
        normals.push((-dy / len, dx / len));
    }

    let cap = F::from(MITER_CAP).unwrap();
    let two = F::from(2.0).unwrap();
    let tiny = F::from(1e-12).unwrap();
    let last = pts.len() - 1;
    let mut out = Vec::with_capacity(pts.len());
    for (i, &(px, py)) in pts.iter().enumerate() {
        let (nx, ny, scale) = if i == 0 {
            (normals[0].0, normals[0].1, F::one())
        } else if i == last {
            (normals[last - 1].0, normals[last - 1].1, F::one())
        } else {
            let (ax, ay) = normals[i - 1];
            let (bx, by) = normals[i];
            let sx = ax + bx;
            let sy = ay + by;
            let slen = (sx * sx + sy * sy).sqrt();
            if slen < tiny {
                // Exact 180-degree reversal: the bisector is undefined, so
                // saturate along the incoming normal.
                (ax, ay, cap)
            } else {
                // |n1 + n2| = 2 cos(theta/2), so the miter factor
                // 1/cos(theta/2) is 2/|n1 + n2|.
                let scale = (two / slen).min(cap);
                (sx / slen, sy / slen, scale)
            }
        };
        out.push((px + d * scale * nx, py + d * scale * ny));
    }
    Ok(Polyline2D::from_points_unchecked(out))
}
