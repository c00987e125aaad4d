//! Point-wise and view-wise actioness scores over a scene cloud.
//!
//! For an anchor with `V` views of `L` poses each, a pose passes when its
//! quality exceeds `T` and it is collision-free. A scene point inherits the
//! pass counts of the nearest same-part anchor within [`TRANSFER_RADIUS`]:
//! `s^V_j = passes_j / L` and `s^P = Σ_j passes_j / (V·L)`, both zeroed when
//! the point is not on an actionable part.

use serde::{Deserialize, Serialize};

use crate::asset::ArticulatedAsset;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::par;
use crate::sampling::PoseCandidate;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Largest scene-point-to-anchor distance for score transfer.
pub const TRANSFER_RADIUS: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionessConfig {
    pub threshold: f64,
    pub views: usize,
    /// Poses per view (angles × depths).
    pub per_view: usize,
}

impl ActionessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=crate::antipodal::MAX_QUALITY).contains(&self.threshold) {
            return Err(Error::invalid("actioness threshold must lie in [0, 1.2]"));
        }
        if self.views == 0 || self.per_view == 0 {
            return Err(Error::invalid("actioness needs at least one view and pose per view"));
        }
        Ok(())
    }

    pub fn block(&self) -> usize {
        self.views * self.per_view
    }
}

/// Candidates of one part, anchor-major in blocks of `V·L`, with the world
/// positions of their anchors.
#[derive(Clone, Copy, Debug)]
pub struct PartBlocks<'a> {
    pub part: usize,
    pub anchors: &'a [Vec3],
    pub candidates: &'a [PoseCandidate],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionessLabels {
    pub actionable: Vec<u8>,
    pub point_scores: Vec<f64>,
    /// Row-major `n × views`.
    pub view_scores: Vec<f64>,
    pub views: usize,
}

impl ActionessLabels {
    pub fn len(&self) -> usize {
        self.point_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_scores.is_empty()
    }

    pub fn view_row(&self, i: usize) -> &[f64] {
        &self.view_scores[i * self.views..(i + 1) * self.views]
    }
}

/// 1 for points on actionable parts; background and non-actionable parts get 0.
pub fn assign_actionable_labels(point_labels: &[i32], asset: &ArticulatedAsset) -> Vec<u8> {
    point_labels
        .iter()
        .map(|&l| {
            let on = l >= 0 && asset.parts.get(l as usize).is_some_and(|p| p.actionable);
            on as u8
        })
        .collect()
}

/// Whether a pose counts toward actioness.
#[inline]
pub fn passes(c: &PoseCandidate, threshold: f64) -> bool {
    c.quality > threshold && c.collision_free
}

pub fn compute_actioness(
    actionable: &[u8],
    points: &[Vec3],
    point_labels: &[i32],
    parts: &[PartBlocks],
    config: &ActionessConfig,
) -> Result<ActionessLabels> {
    config.validate()?;
    if actionable.len() != points.len() || point_labels.len() != points.len() {
        return Err(Error::invalid("actioness inputs disagree on the point count"));
    }
    let (v, l) = (config.views, config.per_view);
    // Per part: pass counts per anchor and view.
    let mut counts: Vec<(usize, &[Vec3], Vec<u32>)> = Vec::with_capacity(parts.len());
    for p in parts {
        if p.candidates.len() != p.anchors.len() * config.block() {
            return Err(Error::invalid(format!(
                "part {}: {} candidates do not form {} blocks of {}",
                p.part,
                p.candidates.len(),
                p.anchors.len(),
                config.block()
            )));
        }
        let per_view: Vec<u32> = p
            .candidates
            .chunks(l)
            .map(|view| view.iter().filter(|c| passes(c, config.threshold)).count() as u32)
            .collect();
        counts.push((p.part, p.anchors, per_view));
    }
    let r2 = TRANSFER_RADIUS * TRANSFER_RADIUS;
    let rows: Vec<(f64, Vec<f64>)> = par::map_range(points.len(), |i| {
        let mut row = vec![0.0; v];
        if actionable[i] == 0 || point_labels[i] < 0 {
            return (0.0, row);
        }
        let label = point_labels[i] as usize;
        let mut best: Option<(f64, &[u32])> = None;
        for (part, anchors, per_view) in &counts {
            if *part != label {
                continue;
            }
            for (a, anchor) in anchors.iter().enumerate() {
                let d2 = (anchor - points[i]).norm_squared();
                if d2 <= r2 && best.map_or(true, |(b, _)| d2 < b) {
                    best = Some((d2, &per_view[a * v..(a + 1) * v]));
                }
            }
        }
        let Some((_, views)) = best else {
            return (0.0, row);
        };
        let mut total = 0u64;
        for (j, &n) in views.iter().enumerate() {
            row[j] = n as f64 / l as f64;
            total += n as u64;
        }
        (total as f64 / (v * l) as f64, row)
    });
    let mut point_scores = Vec::with_capacity(points.len());
    let mut view_scores = Vec::with_capacity(points.len() * v);
    for (s, row) in rows {
        point_scores.push(s);
        view_scores.extend(row);
    }
    Ok(ActionessLabels {
        actionable: actionable.to_vec(),
        point_scores,
        view_scores,
        views: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;

    fn pose(q: f64, free: bool) -> PoseCandidate {
        PoseCandidate {
            point_index: 0,
            view_index: 0,
            depth_index: 0,
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
            width: 0.08,
            quality: q,
            reasonable: true,
            collision_free: free,
        }
    }

    fn cfg(v: usize, l: usize) -> ActionessConfig {
        ActionessConfig {
            threshold: 0.5,
            views: v,
            per_view: l,
        }
    }

    #[test]
    fn non_actionable_point_scores_zero() {
        let anchors = [Vec3::zeros()];
        let cands = vec![pose(1.2, true); 6];
        let blocks = [PartBlocks { part: 0, anchors: &anchors, candidates: &cands }];
        let s = compute_actioness(&[0], &[Vec3::zeros()], &[0], &blocks, &cfg(2, 3)).unwrap();
        assert_eq!(s.point_scores, vec![0.0]);
        assert_eq!(s.view_scores, vec![0.0, 0.0]);
    }

    #[test]
    fn saturated_block_scores_one() {
        let anchors = [Vec3::zeros()];
        let cands = vec![pose(1.2, true); 6];
        let blocks = [PartBlocks { part: 0, anchors: &anchors, candidates: &cands }];
        let s = compute_actioness(&[1], &[Vec3::zeros()], &[0], &blocks, &cfg(2, 3)).unwrap();
        assert_eq!(s.point_scores, vec![1.0]);
        assert_eq!(s.view_scores, vec![1.0, 1.0]);
    }

    #[test]
    fn hand_worked_two_views() {
        let anchors = [Vec3::zeros()];
        let mut cands = vec![pose(1.2, true); 3];
        cands.extend(vec![pose(0.2, true), pose(1.0, false), pose(0.5, true)]);
        let blocks = [PartBlocks { part: 0, anchors: &anchors, candidates: &cands }];
        let s = compute_actioness(&[1], &[Vec3::zeros()], &[0], &blocks, &cfg(2, 3)).unwrap();
        assert_eq!(s.view_scores, vec![1.0, 0.0]);
        assert_eq!(s.point_scores, vec![0.5]);
    }

    #[test]
    fn far_point_and_other_part_get_nothing() {
        let anchors = [Vec3::zeros()];
        let cands = vec![pose(1.2, true); 6];
        let blocks = [PartBlocks { part: 0, anchors: &anchors, candidates: &cands }];
        let pts = [Vec3::new(0.02, 0.0, 0.0), Vec3::new(0.005, 0.0, 0.0), Vec3::zeros()];
        let s = compute_actioness(&[1, 1, 1], &pts, &[0, 0, 1], &blocks, &cfg(2, 3)).unwrap();
        assert_eq!(s.point_scores, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn block_mismatch_is_an_error() {
        let anchors = [Vec3::zeros()];
        let cands = vec![pose(1.2, true); 5];
        let blocks = [PartBlocks { part: 0, anchors: &anchors, candidates: &cands }];
        assert!(compute_actioness(&[1], &[Vec3::zeros()], &[0], &blocks, &cfg(2, 3)).is_err());
    }

    #[test]
    fn zero_parts_means_zero_labels() {
        let asset = crate::asset::asset_from_json(
            r#"{"links": [{"name": "base"}]}"#,
            &std::collections::HashMap::new(),
        )
        .unwrap();
        assert_eq!(assign_actionable_labels(&[-1, 0, 3], &asset), vec![0, 0, 0]);
    }

    #[test]
    fn actionable_flag_follows_part() {
        let mut asset = crate::bench::cabinet_asset();
        asset.parts[0].actionable = false;
        assert_eq!(assign_actionable_labels(&[-1, 0, 1], &asset), vec![0, 0, 1]);
    }
}
