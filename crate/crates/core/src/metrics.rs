//! Depth-estimation metrics and friction-dependent grasp precision.

use serde::{Deserialize, Serialize};

use crate::antipodal::{find_contacts, is_antipodal, ContactTarget, FrictionGrid};
use crate::error::{Error, Result};
use crate::sampling::{GripperModel, PoseCandidate};

/// Estimated and ground-truth depth maps (meters); pixels with a
/// non-positive truth are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthPair {
    pub estimate: Vec<f64>,
    pub truth: Vec<f64>,
    /// Estimated and true disparity (pixels), when available.
    pub disparity: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epe: Option<f64>,
    pub rmse: f64,
    pub mae: f64,
    pub rel: f64,
    pub delta_105: f64,
    pub delta_110: f64,
    pub delta_125: f64,
    pub valid_pixels: usize,
}

pub fn depth_metrics(pair: &DepthPair) -> Result<DepthMetrics> {
    let n = pair.truth.len();
    if pair.estimate.len() != n {
        return Err(Error::invalid("estimated and ground-truth depth differ in size"));
    }
    if let Some((e, t)) = &pair.disparity {
        if e.len() != n || t.len() != n {
            return Err(Error::invalid("disparity maps differ in size from depth"));
        }
    }
    let valid: Vec<usize> = (0..n).filter(|&i| pair.truth[i] > 0.0 && pair.truth[i].is_finite()).collect();
    if valid.is_empty() {
        return Err(Error::invalid("no valid ground-truth pixels"));
    }
    let m = valid.len() as f64;
    let (mut se, mut ae, mut rel) = (0.0, 0.0, 0.0);
    let mut within = [0usize; 3];
    for &i in &valid {
        let (d, g) = (pair.estimate[i], pair.truth[i]);
        let err = d - g;
        se += err * err;
        ae += err.abs();
        rel += err.abs() / g;
        let ratio = if d > 0.0 { (d / g).max(g / d) } else { f64::INFINITY };
        for (k, t) in [1.05, 1.10, 1.25].into_iter().enumerate() {
            if ratio < t {
                within[k] += 1;
            }
        }
    }
    let epe = pair
        .disparity
        .as_ref()
        .map(|(e, t)| valid.iter().map(|&i| (e[i] - t[i]).abs()).sum::<f64>() / m);
    Ok(DepthMetrics {
        epe,
        rmse: (se / m).sqrt(),
        mae: ae / m,
        rel: rel / m,
        delta_105: 100.0 * within[0] as f64 / m,
        delta_110: 100.0 * within[1] as f64 / m,
        delta_125: 100.0 * within[2] as f64 / m,
        valid_pixels: valid.len(),
    })
}

/// Stereo disparity `f·B/d` in pixels (0 where depth is invalid).
pub fn depth_to_disparity(depth: &[f64], focal: f64, baseline: f64) -> Vec<f64> {
    depth
        .iter()
        .map(|&d| if d > 0.0 { focal * baseline / d } else { 0.0 })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuPrecision {
    pub mu: f64,
    pub successes: usize,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub n_grasp: usize,
    pub per_mu: Vec<MuPrecision>,
    /// Mean precision over the grid.
    pub mean: f64,
}

/// Grid of friction coefficients used for evaluation: 0.2, 0.4, …, 1.2.
pub fn evaluation_grid() -> FrictionGrid {
    FrictionGrid {
        mu_values: (1..=6).map(|i| i as f64 * 0.2).collect(),
    }
}

/// Precision per friction coefficient from per-pose success flags
/// (`successes[k][mu]`).
pub fn precision_from_flags(flags: &[Vec<bool>], grid: &FrictionGrid) -> Result<PrecisionReport> {
    if flags.is_empty() {
        return Err(Error::invalid("precision needs at least one pose"));
    }
    let n = flags.len();
    let per_mu: Vec<MuPrecision> = grid
        .mu_values
        .iter()
        .enumerate()
        .map(|(m, &mu)| {
            let successes = flags.iter().filter(|f| f[m]).count();
            MuPrecision {
                mu,
                successes,
                precision: successes as f64 / n as f64,
            }
        })
        .collect();
    let mean = per_mu.iter().map(|p| p.precision).sum::<f64>() / per_mu.len() as f64;
    Ok(PrecisionReport {
        n_grasp: n,
        per_mu,
        mean,
    })
}

/// A pose succeeds at `μ` when it is collision-free and its contacts on the
/// part mesh are antipodal at `μ`. Poses are in the part frame.
pub fn precision_at_mu(
    poses: &[PoseCandidate],
    depth_values: &[f64],
    target: &ContactTarget,
    gripper: &GripperModel,
    grid: &FrictionGrid,
) -> Result<PrecisionReport> {
    let flags: Vec<Vec<bool>> = crate::par::map_range(poses.len(), |k| {
        let p = &poses[k];
        let depth = depth_values[p.depth_index as usize];
        let contact = if p.collision_free {
            find_contacts(p, depth, target, gripper)
        } else {
            None
        };
        grid.mu_values
            .iter()
            .map(|&mu| contact.as_ref().is_some_and(|c| is_antipodal(&c.pair, mu)))
            .collect()
    });
    precision_from_flags(&flags, grid)
}
