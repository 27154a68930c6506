//! Evaluation against a ground-truth lane map: per-way lane matching by
//! symmetric Chamfer distance, then recall and Chamfer statistics.

use crate::generation::{EnhancedMap, ValidityReport};
use crate::geo::chamfer_symmetric;
use crate::{LocalFrame, Polyline2D};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Lane correspondence is many-to-one: each ground-truth lane independently
/// picks its nearest predicted lane, so one prediction may serve several.
pub const MATCHING_MODE: &str = "many-to-one";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground truth contains no lanes; recall is undefined")]
    NoGroundTruthLanes,
    #[error("ground-truth way ids must be positive, got {0}")]
    InvalidWayId(i64),
    #[error("ground-truth lane {lane} of way {way_id} has fewer than 2 distinct points")]
    DegenerateLane { way_id: i64, lane: usize },
    #[error("ground-truth lane {lane} of way {way_id} has non-finite coordinates")]
    NonFiniteLane { way_id: i64, lane: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Ground-truth lane polylines keyed by OSM way id.
///
/// File format: `{"<way_id>": [[[lat, lon], ...], ...], ...}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthMap {
    pub entries: BTreeMap<i64, Vec<Vec<(f64, f64)>>>,
}

impl GroundTruthMap {
    pub fn from_json_str(json: &str) -> Result<Self, EvalError> {
        let raw: BTreeMap<String, Vec<Vec<(f64, f64)>>> = serde_json::from_str(json)?;
        let mut entries = BTreeMap::new();
        for (key, lanes) in raw {
            let way_id: i64 = key
                .parse()
                .map_err(|_| EvalError::InvalidWayId(i64::MIN))?;
            if way_id <= 0 {
                return Err(EvalError::InvalidWayId(way_id));
            }
            entries.insert(way_id, lanes);
        }
        let map = Self { entries };
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let raw: BTreeMap<String, &Vec<Vec<(f64, f64)>>> = self
            .entries
            .iter()
            .map(|(id, lanes)| (id.to_string(), lanes))
            .collect();
        let mut out = serde_json::to_string_pretty(&raw).expect("plain data serializes");
        out.push('\n');
        out
    }

    /// Ground truth derived from a map's own drive lanes; self-evaluation
    /// against it must come out perfect.
    pub fn from_drive_lanes(map: &EnhancedMap) -> Self {
        let mut entries: BTreeMap<i64, Vec<Vec<(f64, f64)>>> = BTreeMap::new();
        for (way_id, lanes) in map.drive_lanes() {
            entries.insert(way_id, lanes.iter().map(|l| l.polyline.clone()).collect());
        }
        Self { entries }
    }

    pub fn total_lanes(&self) -> usize {
        self.entries.values().map(|lanes| lanes.len()).sum()
    }

    fn validate(&self) -> Result<(), EvalError> {
        for (&way_id, lanes) in &self.entries {
            for (lane, polyline) in lanes.iter().enumerate() {
                if polyline
                    .iter()
                    .any(|&(lat, lon)| !lat.is_finite() || !lon.is_finite())
                {
                    return Err(EvalError::NonFiniteLane { way_id, lane });
                }
                if polyline.len() < 2 {
                    return Err(EvalError::DegenerateLane { way_id, lane });
                }
            }
        }
        Ok(())
    }
}

/// One ground-truth lane's match outcome. `correct` is finalized by
/// [`compute_metrics`], which knows the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneMatch {
    pub way_id: i64,
    pub gt_lane_index: usize,
    /// Absent when the predicted map has no drive lanes for this way.
    pub pred_lane_index: Option<u32>,
    /// Symmetric Chamfer distance to the matched prediction, meters.
    pub chamfer: Option<f64>,
    pub correct: bool,
}

/// The reported metrics. Chamfer statistics cover matches with a present
/// prediction; recall counts every ground-truth lane in its denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub chamfer_avg: Option<f64>,
    pub chamfer_std: Option<f64>,
    pub chamfer_min: Option<f64>,
    pub recall: f64,
    pub valid_map_pct: f64,
    pub matching: String,
    pub threshold: f64,
    pub step: f64,
    pub matches: Vec<LaneMatch>,
}

impl EvalReport {
    /// Aligned table with the standard column set.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.2}"),
            None => "n/a".to_string(),
        };
        let chamfer_avg = match (self.chamfer_avg, self.chamfer_std) {
            (Some(avg), Some(std)) => format!("{avg:.2} \u{00b1} {std:.2}"),
            _ => "n/a".to_string(),
        };
        let headers = [
            "% of Valid Maps",
            "Chamfer_avg (m)",
            "Chamfer_min (m)",
            "Recall",
        ];
        let values = [
            format!("{:.2}", self.valid_map_pct),
            chamfer_avg,
            fmt(self.chamfer_min),
            format!("{:.2}", self.recall),
        ];
        let widths: Vec<usize> = headers
            .iter()
            .zip(&values)
            .map(|(h, v)| h.len().max(v.len()))
            .collect();
        let mut out = String::new();
        out.push('|');
        for (h, w) in headers.iter().zip(&widths) {
            out.push_str(&format!(" {h:>w$} |", w = w));
        }
        out.push('\n');
        out.push('|');
        for w in &widths {
            out.push_str(&format!("{}|", "-".repeat(w + 2)));
        }
        out.push('\n');
        out.push('|');
        for (v, w) in values.iter().zip(&widths) {
            out.push_str(&format!(" {v:>w$} |", w = w));
        }
        out.push('\n');
        out
    }

    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

/// Projects a lat/lon polyline into the frame, dropping exact consecutive
/// duplicates. Returns `None` when fewer than two distinct points remain.
fn project_lane(polyline: &[(f64, f64)], frame: &LocalFrame) -> Option<Polyline2D> {
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(polyline.len());
    for &(lat, lon) in polyline {
        let p = frame.project_unchecked(lat, lon);
        if points.last() != Some(&p) {
            points.push(p);
        }
    }
    if points.len() < 2 {
        return None;
    }
    // Tiny but nonzero spacing can still trip the strict constructor; those
    // vertices carry no information for point sampling, so drop them too.
    let mut cleaned: Vec<(f64, f64)> = vec![points[0]];
    for p in points.into_iter().skip(1) {
        let last = *cleaned.last().unwrap();
        let dx = p.0 - last.0;
        let dy = p.1 - last.1;
        if (dx * dx + dy * dy).sqrt() > crate::geo::MIN_VERTEX_SPACING_M {
            cleaned.push(p);
        }
    }
    if cleaned.len() < 2 {
        return None;
    }
    Some(Polyline2D::new(cleaned).expect("cleaned polyline is valid"))
}

/// A frame centered on the combined extent of prediction and ground truth.
pub fn eval_frame(pred: &EnhancedMap, gt: &GroundTruthMap) -> LocalFrame {
    let mut lat = (f64::INFINITY, f64::NEG_INFINITY);
    let mut lon = (f64::INFINITY, f64::NEG_INFINITY);
    let mut absorb = |points: &[(f64, f64)]| {
        for &(la, lo) in points {
            lat = (lat.0.min(la), lat.1.max(la));
            lon = (lon.0.min(lo), lon.1.max(lo));
        }
    };
    for seg in &pred.segments {
        for lane in &seg.lanes {
            absorb(&lane.polyline);
        }
    }
    for lanes in gt.entries.values() {
        for lane in lanes {
            absorb(lane);
        }
    }
    if lat.0.is_finite() && lon.0.is_finite() {
        LocalFrame::new((lat.0 + lat.1) / 2.0, (lon.0 + lon.1) / 2.0)
            .unwrap_or_else(|_| LocalFrame::new(0.0, 0.0).expect("origin frame"))
    } else {
        LocalFrame::new(0.0, 0.0).expect("origin frame")
    }
}

/// Pairs every ground-truth lane with the predicted drive lane (same way id)
/// minimizing the symmetric Chamfer distance; ties break toward the lower
/// predicted lane index. Ways absent from the prediction yield matches with
/// no prediction.
pub fn match_lanes(
    pred: &EnhancedMap,
    gt: &GroundTruthMap,
    frame: &LocalFrame,
    step: f64,
) -> Vec<LaneMatch> {
    assert!(step > 0.0, "resampling step must be positive");
    let drive = pred.drive_lanes();
    // Projected candidates per way, skipping degenerate geometry.
    let mut candidates: BTreeMap<i64, Vec<(u32, Polyline2D)>> = BTreeMap::new();
    for (way_id, lanes) in &drive {
        let projected: Vec<(u32, Polyline2D)> = lanes
            .iter()
            .filter_map(|l| project_lane(&l.polyline, frame).map(|p| (l.lane_index, p)))
            .collect();
        if !projected.is_empty() {
            candidates.insert(*way_id, projected);
        }
    }

    let mut matches = Vec::new();
    for (&way_id, gt_lanes) in &gt.entries {
        let cands = candidates.get(&way_id);
        for (gt_lane_index, gt_lane) in gt_lanes.iter().enumerate() {
            let projected_gt = project_lane(gt_lane, frame);
            let best = match (cands, &projected_gt) {
                (Some(cands), Some(gt_poly)) => {
                    let mut best: Option<(u32, f64)> = None;
                    for (lane_index, cand) in cands {
                        let d = chamfer_symmetric(gt_poly, cand, step)
                            .expect("validated polylines resample");
                        let better = match best {
                            None => true,
                            Some((_, best_d)) => d < best_d,
                        };
                        if better {
                            best = Some((*lane_index, d));
                        }
                    }
                    best
                }
                _ => None,
            };
            match best {
                Some((pred_lane_index, chamfer)) => matches.push(LaneMatch {
                    way_id,
                    gt_lane_index,
                    pred_lane_index: Some(pred_lane_index),
                    chamfer: Some(chamfer),
                    correct: false,
                }),
                None => matches.push(LaneMatch {
                    way_id,
                    gt_lane_index,
                    pred_lane_index: None,
                    chamfer: None,
                    correct: false,
                }),
            }
        }
    }
    matches
}

/// Finalizes the report: a match is correct when a prediction exists and its
/// Chamfer distance is strictly below the threshold. Chamfer statistics use
/// the population standard deviation over matched pairs only.
pub fn compute_metrics(
    matches: &[LaneMatch],
    validity: &ValidityReport,
    threshold: f64,
    step: f64,
) -> Result<EvalReport, EvalError> {
    if matches.is_empty() {
        return Err(EvalError::NoGroundTruthLanes);
    }
    let mut finalized: Vec<LaneMatch> = matches.to_vec();
    for m in &mut finalized {
        m.correct = match (m.pred_lane_index, m.chamfer) {
            (Some(_), Some(d)) => d < threshold,
            _ => false,
        };
    }

    let present: Vec<f64> = finalized.iter().filter_map(|m| m.chamfer).collect();
    let (chamfer_avg, chamfer_std, chamfer_min) = if present.is_empty() {
        (None, None, None)
    } else {
        let n = present.len() as f64;
        let mean = present.iter().sum::<f64>() / n;
        let variance = present.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        let min = present.iter().cloned().fold(f64::INFINITY, f64::min);
        (Some(mean), Some(variance.sqrt()), Some(min))
    };

    let correct = finalized.iter().filter(|m| m.correct).count();
    let recall = correct as f64 / finalized.len() as f64;

    Ok(EvalReport {
        chamfer_avg,
        chamfer_std,
        chamfer_min,
        recall,
        valid_map_pct: validity.percent_valid(),
        matching: MATCHING_MODE.to_string(),
        threshold,
        step,
        matches: finalized,
    })
}
