use super::{dist, GeoError, GeoFloat, Polyline2D};

/// Resamples `p` at arc-length multiples of `step`, always keeping the exact
/// original endpoints. Sample positions are recomputed as `k * step` rather
/// than accumulated, so long polylines do not drift.
pub fn resample_polyline<F: GeoFloat>(
    p: &Polyline2D<F>,
    step: F,
) -> Result<Polyline2D<F>, GeoError> {
    if step.is_nan() || step <= F::zero() {
        return Err(GeoError::NonPositiveStep(super::to_f64(step)));
    }
    let pts = p.points();
    // Cumulative arc length at each vertex.
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(F::zero());
    for w in pts.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + dist(w[0], w[1]));
    }
    let total = *cum.last().unwrap();
    let eps = F::from(1e-9).unwrap();

    let mut out = Vec::new();
    let mut seg = 0usize;
    let mut k = 0u64;
    loop {
        let s = step * F::from(k).unwrap();
        if s >= total - eps {
            break;
        }
        while seg + 2 < pts.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let seg_len = cum[seg + 1] - cum[seg];
        let t = (s - cum[seg]) / seg_len;
        let a = pts[seg];
        let b = pts[seg + 1];
        out.push((a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t));
        k += 1;
    }
    out.push(*pts.last().unwrap());
    if out.len() < 2 {
        // Step swallowed everything but the endpoint; keep the start too.
        out.insert(0, pts[0]);
    }
    Ok(Polyline2D::from_points_unchecked(out))
}

/// Mean distance from the resampled points of `a` to their nearest resampled
/// point of `b`.
pub fn chamfer_directed<F: GeoFloat>(
    a: &Polyline2D<F>,
    b: &Polyline2D<F>,
    step: F,
) -> Result<F, GeoError> {
    let sa = resample_polyline(a, step)?;
    let sb = resample_polyline(b, step)?;
    Ok(mean_nearest(sa.points(), sb.points()))
}

/// Symmetric Chamfer distance: the mean of both directed means.
pub fn chamfer_symmetric<F: GeoFloat>(
    a: &Polyline2D<F>,
    b: &Polyline2D<F>,
    step: F,
) -> Result<F, GeoError> {
    let ab = chamfer_directed(a, b, step)?;
    let ba = chamfer_directed(b, a, step)?;
    Ok((ab + ba) / F::from(2.0).unwrap())
}

fn mean_nearest<F: GeoFloat>(from: &[(F, F)], to: &[(F, F)]) -> F {
    // Sort the target set by x so each query can prune by |dx|.
    let mut sorted = to.to_vec();
    sorted.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite coordinates"));
    let mut sum = F::zero();
    for &p in from {
        sum = sum + nearest_distance(&sorted, p);
    }
    sum / F::from(from.len()).unwrap()
}

fn nearest_distance<F: GeoFloat>(sorted: &[(F, F)], p: (F, F)) -> F {
    let start = sorted.partition_point(|q| q.0 < p.0);
    let mut best = F::infinity();
    // Scan right, then left, stopping as soon as the x gap alone rules the
    // rest of that side out.
    let mut i = start;
    while i < sorted.len() {
        let dx = sorted[i].0 - p.0;
        if dx * dx >= best {
            break;
        }
        let dy = sorted[i].1 - p.1;
        let d2 = dx * dx + dy * dy;
        if d2 < best {
            best = d2;
        }
        i += 1;
    }
    let mut i = start;
    while i > 0 {
        i -= 1;
        let dx = sorted[i].0 - p.0;
        if dx * dx >= best {
            break;
        }
        let dy = sorted[i].1 - p.1;
        let d2 = dx * dx + dy * dy;
        if d2 < best {
            best = d2;
        }
    }
    best.sqrt()
}
