//! Candidate points (farthest point sampling) and the view × angle × depth
//! grid of parallel-jaw gripper poses anchored at each point.
//!
//! Gripper frame: +X is the approach direction, +Y the closing direction,
//! +Z spans the finger height. The frame origin sits at the fingertip
//! center, `depth` past the anchor point along the approach.

use std::f64::consts::PI;

use nalgebra::UnitQuaternion;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{any_orthogonal, pose_from_axes, Vec3};
use crate::mesh::TriMesh;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Candidate points per part.
    pub n: usize,
    /// Approach views per point.
    pub views: usize,
    /// In-plane rotations per view, uniform over [0, π).
    pub angles: usize,
    /// Gripper depths (meters), strictly increasing.
    pub depth_values: Vec<f64>,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n: 512,
            views: 64,
            angles: 12,
            depth_values: vec![0.01, 0.02, 0.03, 0.04],
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn depths(&self) -> usize {
        self.depth_values.len()
    }

    /// Poses per view (angles × depths).
    pub fn per_view(&self) -> usize {
        self.angles * self.depths()
    }

    pub fn per_point(&self) -> usize {
        self.views * self.per_view()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.views == 0 || self.angles == 0 || self.depth_values.is_empty() {
            return Err(Error::invalid("n, views, angles and depths must all be at least 1"));
        }
        if self.depth_values.len() > u8::MAX as usize + 1 {
            return Err(Error::invalid("at most 256 depth values"));
        }
        if self.depth_values.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::invalid("depth values must be positive"));
        }
        if self.depth_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("depth values must be strictly increasing"));
        }
        Ok(())
    }
}

/// Parallel-jaw gripper dimensions (meters).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GripperModel {
    pub max_width: f64,
    pub finger_length: f64,
    pub finger_thickness: f64,
    pub finger_height: f64,
    pub palm_depth: f64,
}

impl Default for GripperModel {
    fn default() -> Self {
        GripperModel {
            max_width: 0.08,
            finger_length: 0.04,
            finger_thickness: 0.01,
            finger_height: 0.02,
            palm_depth: 0.02,
        }
    }
}

impl GripperModel {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.max_width,
            self.finger_length,
            self.finger_thickness,
            self.finger_height,
            self.palm_depth,
        ];
        if dims.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::invalid("gripper dimensions must be positive"));
        }
        if self.max_width <= 2.0 * self.finger_thickness {
            return Err(Error::invalid("gripper max_width must exceed twice the finger thickness"));
        }
        Ok(())
    }

    /// Length of the clearance region behind the palm.
    pub fn approach_clearance(&self) -> f64 {
        self.finger_length
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoseCandidate {
    pub point_index: u32,
    pub view_index: u32,
    pub depth_index: u8,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
    pub width: f64,
    /// Antipodal quality in [0, 1.2].
    pub quality: f64,
    pub reasonable: bool,
    pub collision_free: bool,
}

impl PoseCandidate {
    pub fn approach(&self) -> Vec3 {
        self.rotation * Vec3::x()
    }

    pub fn closing(&self) -> Vec3 {
        self.rotation * Vec3::y()
    }

    pub fn pose(&self) -> crate::geom::Pose {
        crate::geom::Pose::from_parts(self.translation.into(), self.rotation)
    }

    /// The surface point the candidate was generated at.
    pub fn anchor(&self, depth: f64) -> Vec3 {
        self.translation - self.approach() * depth
    }
}

/// A sampled surface point with its outward normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    pub normal: Vec3,
}

/// Greedy farthest point sampling over `points` starting at `start`.
///
/// Exact distance ties go to the lexicographically smallest point, which keeps
/// the result independent of input order.
pub fn fps_indices(points: &[Vec3], n: usize, start: usize) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::invalid("farthest point sampling on an empty point set"));
    }
    if n > points.len() {
        return Err(Error::invalid(format!(
            "cannot select {n} points from a set of {}",
            points.len()
        )));
    }
    if start >= points.len() {
        return Err(Error::invalid("start index out of range"));
    }
    let mut chosen = Vec::with_capacity(n);
    if n == 0 {
        return Ok(chosen);
    }
    let mut dist = vec![f64::INFINITY; points.len()];
    let mut current = start;
    chosen.push(current);
    while chosen.len() < n {
        let c = points[current];
        let mut best = usize::MAX;
        let mut best_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let d = (p - c).norm_squared();
            if d < dist[i] {
                dist[i] = d;
            }
            let di = dist[i];
            if di > best_d || (di == best_d && lex_less(p, &points[best])) {
                best_d = di;
                best = i;
            }
        }
        current = best;
        chosen.push(current);
    }
    Ok(chosen)
}

fn lex_less(a: &Vec3, b: &Vec3) -> bool {
    (a.x, a.y, a.z) < (b.x, b.y, b.z)
}

/// Picks `n` well-spread surface points of `mesh`.
///
/// Runs over the mesh vertices when there are at least `n` distinct ones,
/// otherwise over a dense area-weighted surface sampling of `16 n` points.
pub fn farthest_point_sample(mesh: &TriMesh, n: usize, seed: u64) -> Result<Vec<SurfacePoint>> {
    if mesh.is_empty() {
        return Err(Error::invalid("farthest point sampling on an empty mesh"));
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = seed::rng(seed);
    let distinct = distinct_vertex_count(mesh);
    let pool: Vec<SurfacePoint> = if distinct >= n {
        mesh.vertices
            .iter()
            .zip(&mesh.normals)
            .map(|(&position, &normal)| SurfacePoint { position, normal })
            .collect()
    } else {
        mesh.sample_surface(16 * n, &mut rng)
            .into_iter()
            .map(|(position, normal)| SurfacePoint { position, normal })
            .collect()
    };
    let positions: Vec<Vec3> = pool.iter().map(|p| p.position).collect();
    let start = rng.gen_range(0..positions.len());
    Ok(fps_indices(&positions, n, start)?
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

fn distinct_vertex_count(mesh: &TriMesh) -> usize {
    let mut v: Vec<(u64, u64, u64)> = mesh
        .vertices
        .iter()
        .map(|p| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits()))
        .collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Fibonacci-sphere directions. A single view is `+Z`.
pub fn sample_view_directions(v: usize) -> Vec<Vec3> {
    if v == 1 {
        return vec![Vec3::z()];
    }
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..v)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / v as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = i as f64 * golden_angle;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Precomputed rotations of the view × angle grid, shared by all points.
#[derive(Clone, Debug)]
pub struct PoseGrid {
    pub views: Vec<Vec3>,
    /// `rotations[view * angles + angle]`
    rotations: Vec<UnitQuaternion<f64>>,
    angles: usize,
    depth_values: Vec<f64>,
    max_width: f64,
}

impl PoseGrid {
    pub fn new(config: &SamplingConfig, gripper: &GripperModel) -> PoseGrid {
        let views = sample_view_directions(config.views);
        let mut rotations = Vec::with_capacity(config.views * config.angles);
        for a in &views {
            let base = any_orthogonal(a);
            let side = a.cross(&base);
            for k in 0..config.angles {
                let theta = PI * k as f64 / config.angles as f64;
                let closing = base * theta.cos() + side * theta.sin();
                let height = a.cross(&closing);
                rotations.push(pose_from_axes(*a, closing, height, Vec3::zeros()).rotation);
            }
        }
        PoseGrid {
            views,
            rotations,
            angles: config.angles,
            depth_values: config.depth_values.clone(),
            max_width: gripper.max_width,
        }
    }

    pub fn per_point(&self) -> usize {
        self.rotations.len() * self.depth_values.len()
    }

    /// Appends the candidates of one anchor point, ordered view-major, then
    /// angle, then depth.
    pub fn extend_candidates(&self, point_index: u32, point: &Vec3, out: &mut Vec<PoseCandidate>) {
        for (r, rot) in self.rotations.iter().enumerate() {
            let view_index = (r / self.angles) as u32;
            let approach = self.views[view_index as usize];
            for (d, depth) in self.depth_values.iter().enumerate() {
                out.push(PoseCandidate {
                    point_index,
                    view_index,
                    depth_index: d as u8,
                    rotation: *rot,
                    translation: point + approach * *depth,
                    width: self.max_width,
                    quality: 0.0,
                    reasonable: false,
                    collision_free: false,
                });
            }
        }
    }
}

/// Full grid of `V · A · D` candidates at one point.
pub fn generate_pose_grid(
    point_index: u32,
    point: &Vec3,
    config: &SamplingConfig,
    gripper: &GripperModel,
) -> Vec<PoseCandidate> {
    let grid = PoseGrid::new(config, gripper);
    let mut out = Vec::with_capacity(grid.per_point());
    grid.extend_candidates(point_index, point, &mut out);
    out
}

/// Candidates for every sampled point, point-major.
pub fn candidates_for_points(
    points: &[SurfacePoint],
    config: &SamplingConfig,
    gripper: &GripperModel,
) -> Vec<PoseCandidate> {
    let grid = PoseGrid::new(config, gripper);
    let mut out = Vec::with_capacity(points.len() * grid.per_point());
    for (i, p) in points.iter().enumerate() {
        grid.extend_candidates(i as u32, &p.position, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;
    use std::collections::HashSet;

    fn cube_corners() -> Vec<Vec3> {
        (0..8)
            .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect()
    }

    #[test]
    fn fps_single_point_is_start() {
        let pts = cube_corners();
        assert_eq!(fps_indices(&pts, 1, 5).unwrap(), vec![5]);
    }

    #[test]
    fn fps_second_point_is_opposite_corner() {
        let pts = cube_corners();
        let idx = fps_indices(&pts, 2, 0).unwrap();
        assert_eq!(pts[idx[1]], Vec3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn fps_eight_selects_all_corners() {
        let pts = cube_corners();
        for start in 0..8 {
            let mut idx = fps_indices(&pts, 8, start).unwrap();
            idx.sort();
            assert_eq!(idx, (0..8).collect::<Vec<_>>());
        }
    }

    #[test]
    fn fps_empty_is_error() {
        assert!(fps_indices(&[], 1, 0).is_err());
        assert!(farthest_point_sample(&TriMesh::empty(), 4, 0).is_err());
    }

    #[test]
    fn thin_mesh_still_yields_n_points() {
        let m = box_mesh(Vec3::zeros(), Vec3::new(0.1, 0.02, 0.01));
        let pts = farthest_point_sample(&m, 64, 9).unwrap();
        assert_eq!(pts.len(), 64);
        let b = m.bounds();
        for p in &pts {
            assert!((p.position - b.min).min() >= -1e-12 && (b.max - p.position).min() >= -1e-12);
        }
    }

    #[test]
    fn views_conventions() {
        assert_eq!(sample_view_directions(1), vec![Vec3::z()]);
        let two = sample_view_directions(2);
        assert!(two[0].z > 0.0 && two[1].z < 0.0);
    }

    #[test]
    fn sixty_four_views_are_spread() {
        let v = sample_view_directions(64);
        let mut min_angle = f64::INFINITY;
        for i in 0..v.len() {
            assert!((v[i].norm() - 1.0).abs() < 1e-12);
            for j in i + 1..v.len() {
                min_angle = min_angle.min(v[i].dot(&v[j]).clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        assert!(min_angle >= 18.0, "{min_angle}");
    }

    #[test]
    fn default_grid_sizes() {
        let cfg = SamplingConfig::default();
        let g = generate_pose_grid(0, &Vec3::zeros(), &cfg, &GripperModel::default());
        assert_eq!(g.len(), 3072);
        assert_eq!(cfg.per_point() * cfg.n, 1_572_864);
    }

    #[test]
    fn single_cell_grid_approaches_along_view() {
        let cfg = SamplingConfig {
            n: 1,
            views: 1,
            angles: 1,
            depth_values: vec![0.02],
            seed: 0,
        };
        let g = generate_pose_grid(0, &Vec3::zeros(), &cfg, &GripperModel::default());
        assert_eq!(g.len(), 1);
        assert!((g[0].approach() - Vec3::z()).norm() < 1e-9);
        assert!((g[0].translation - Vec3::new(0.0, 0.0, 0.02)).norm() < 1e-15);
    }

    #[test]
    fn grid_is_injective_and_aligned() {
        let cfg = SamplingConfig {
            n: 1,
            views: 7,
            angles: 5,
            depth_values: vec![0.01, 0.03, 0.05],
            seed: 0,
        };
        let gripper = GripperModel::default();
        let views = sample_view_directions(cfg.views);
        let g = generate_pose_grid(3, &Vec3::new(0.1, 0.2, 0.3), &cfg, &gripper);
        let mut keys = HashSet::new();
        for c in &g {
            let a = c.approach();
            assert!((a - views[c.view_index as usize]).norm() < 1e-9);
            assert!((c.rotation.norm() - 1.0).abs() < 1e-6);
            // angle bin from the closing axis relative to the view's base axis
            let base = any_orthogonal(&a);
            let side = a.cross(&base);
            let cl = c.closing();
            let theta = cl.dot(&side).atan2(cl.dot(&base)).rem_euclid(PI);
            let bin = (theta / (PI / cfg.angles as f64)).round() as usize % cfg.angles;
            assert!(keys.insert((c.view_index, bin, c.depth_index)));
            assert_eq!(c.width, gripper.max_width);
        }
        assert_eq!(keys.len(), 7 * 5 * 3);
    }

    #[test]
    fn config_validation() {
        let mut c = SamplingConfig::default();
        assert!(c.validate().is_ok());
        c.depth_values = vec![0.02, 0.01];
        assert!(c.validate().is_err());
        c.depth_values = vec![];
        assert!(c.validate().is_err());
        let mut g = GripperModel::default();
        g.max_width = 0.015;
        assert!(g.validate().is_err());
    }
}
