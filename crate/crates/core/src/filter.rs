//! Scene-level pose filtering: projection into the scene, alignment with the
//! partial point cloud, and gripper-vs-cloud collision tests.
//!
//! Collisions are point-in-box tests of scene points against the gripper
//! volume plus an analytic ground plane. A uniform voxel grid restricts each
//! candidate to the points near it; the per-point predicate is shared with
//! [`filter_reference`], so both paths yield identical flags.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, Mat3, Pose, Vec3};
use crate::par;
use crate::sampling::{GripperModel, PoseCandidate};
use crate::scene::SceneSample;

/// Default alignment tolerance between a candidate anchor and the cloud.
pub const DEFAULT_TAU: f64 = 0.005;
/// Slack used when culling voxels; far above rounding error, far below any
/// geometric scale, and only ever makes culling more conservative.
const CULL_MARGIN: f64 = 1e-6;
const MAX_CELLS: usize = 1 << 24;

/// Gripper collision volume in the gripper frame: two fingers, palm and
/// approach clearance as solid boxes, and the closing region between the
/// fingers where only points of the target part are allowed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GripperVolume {
    pub fingers: [Aabb; 2],
    pub palm: Aabb,
    pub clearance: Aabb,
    pub closing: Aabb,
    outer: Aabb,
}

impl GripperVolume {
    pub fn new(gripper: &GripperModel, width: f64) -> Self {
        let hw = 0.5 * width;
        let t = gripper.finger_thickness;
        let h = 0.5 * gripper.finger_height;
        let l = gripper.finger_length;
        let p = gripper.palm_depth;
        let c = gripper.approach_clearance();
        let bx = |x0: f64, y0: f64, x1: f64, y1: f64| Aabb {
            min: Vec3::new(x0, y0, -h),
            max: Vec3::new(x1, y1, h),
        };
        let fingers = [bx(-l, hw, 0.0, hw + t), bx(-l, -hw - t, 0.0, -hw)];
        let palm = bx(-l - p, -hw - t, -l, hw + t);
        let clearance = bx(-l - p - c, -hw - t, -l - p, hw + t);
        let closing = bx(-l, -hw, 0.0, hw);
        let outer = fingers[0]
            .union(&fingers[1])
            .union(&palm)
            .union(&clearance)
            .union(&closing);
        GripperVolume {
            fingers,
            palm,
            clearance,
            closing,
            outer,
        }
    }

    pub fn outer(&self) -> &Aabb {
        &self.outer
    }

    /// Whether a gripper-frame point hits the volume; `exempt` marks points
    /// of the target part, which may sit between the fingers.
    #[inline]
    pub fn collides(&self, p: &Vec3, exempt: bool) -> bool {
        if !contains(&self.outer, p) {
            return false;
        }
        if contains(&self.fingers[0], p)
            || contains(&self.fingers[1], p)
            || contains(&self.palm, p)
            || contains(&self.clearance, p)
        {
            return true;
        }
        !exempt && contains(&self.closing, p)
    }

    /// Whether the posed volume dips below the ground plane.
    pub fn below_ground(&self, pose: &Pose, ground_z: f64) -> bool {
        self.outer
            .corners()
            .iter()
            .any(|c| pose.transform_point(&(*c).into()).z < ground_z)
    }
}

#[inline]
fn contains(b: &Aabb, p: &Vec3) -> bool {
    p.x >= b.min.x && p.x <= b.max.x && p.y >= b.min.y && p.y <= b.max.y && p.z >= b.min.z && p.z <= b.max.z
}

/// World-to-gripper mapping of one candidate.
#[derive(Clone, Copy, Debug)]
pub struct LocalFrame {
    rt: Mat3,
    t: Vec3,
}

impl LocalFrame {
    pub fn of(c: &PoseCandidate) -> Self {
        LocalFrame {
            rt: c.rotation.to_rotation_matrix().matrix().transpose(),
            t: c.translation,
        }
    }

    #[inline]
    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.rt * (p - self.t)
    }
}

/// Scene data the filters run against, all in the world frame.
#[derive(Clone, Debug)]
pub struct FilterScene {
    pub points: Vec<Vec3>,
    pub labels: Vec<i32>,
    pub camera: Vec3,
    pub ground_z: f64,
    /// Label of the part whose candidates are being filtered.
    pub target: i32,
}

impl FilterScene {
    pub fn from_sample(sample: &SceneSample, target: usize) -> Self {
        FilterScene {
            points: sample.world_cloud(),
            labels: sample.point_labels.clone(),
            camera: sample.camera.position,
            ground_z: sample.ground_z,
            target: target as i32,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterConfig {
    pub tau: f64,
    /// Voxel edge; `None` picks a quarter of the gripper's largest extent.
    pub cell_edge: Option<f64>,
    /// Worker threads (0 = library default).
    pub threads: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            tau: DEFAULT_TAU,
            cell_edge: None,
            threads: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub input: usize,
    pub unreasonable: usize,
    pub unreachable: usize,
    pub survivors: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub project: f64,
    pub unreasonable: f64,
    pub collision: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub counts: FilterCounts,
    pub stage_ms: StageTimes,
    pub threads: usize,
}

impl FilterCounts {
    /// Tallies flags; poses failing both tests count as unreasonable.
    pub fn tally(candidates: &[PoseCandidate]) -> Self {
        let mut c = FilterCounts {
            input: candidates.len(),
            ..Default::default()
        };
        for p in candidates {
            if !p.reasonable {
                c.unreasonable += 1;
            } else if !p.collision_free {
                c.unreachable += 1;
            } else {
                c.survivors += 1;
            }
        }
        c
    }
}

/// Composes part-frame candidates with the part's world pose.
pub fn project_poses(candidates: &[PoseCandidate], part_pose: &Pose) -> Vec<PoseCandidate> {
    candidates
        .iter()
        .map(|c| PoseCandidate {
            rotation: part_pose.rotation * c.rotation,
            translation: part_pose.transform_point(&c.translation.into()).coords,
            ..c.clone()
        })
        .collect()
}

/// Point buckets on a uniform grid (compressed rows: `starts[c]..starts[c+1]`).
#[derive(Clone, Debug)]
pub struct VoxelGrid {
    origin: Vec3,
    edge: f64,
    dims: [usize; 3],
    starts: Vec<u32>,
    points: Vec<Vec3>,
    labels: Vec<i32>,
}

impl VoxelGrid {
    pub fn build(points: &[Vec3], labels: &[i32], edge: f64) -> VoxelGrid {
        let bounds = Aabb::from_points(points);
        let (origin, mut edge, mut dims) = if bounds.is_empty() {
            (Vec3::zeros(), edge, [1, 1, 1])
        } else {
            (bounds.min, edge, [1, 1, 1])
        };
        if !bounds.is_empty() {
            loop {
                let ext = bounds.extent();
                for a in 0..3 {
                    dims[a] = (ext[a] / edge).floor() as usize + 1;
                }
                if dims.iter().product::<usize>() <= MAX_CELLS {
                    break;
                }
                edge *= 2.0;
            }
        }
        let mut grid = VoxelGrid {
            origin,
            edge,
            dims,
            starts: Vec::new(),
            points: Vec::new(),
            labels: Vec::new(),
        };
        let cells: Vec<usize> = points.iter().map(|p| grid.cell_of(p)).collect();
        let n_cells = dims.iter().product::<usize>();
        let mut starts = vec![0u32; n_cells + 1];
        for &c in &cells {
            starts[c + 1] += 1;
        }
        for i in 0..n_cells {
            starts[i + 1] += starts[i];
        }
        let mut cursor = starts.clone();
        let mut sorted = vec![Vec3::zeros(); points.len()];
        let mut sorted_labels = vec![0; points.len()];
        for (i, &c) in cells.iter().enumerate() {
            let slot = cursor[c] as usize;
            sorted[slot] = points[i];
            sorted_labels[slot] = labels[i];
            cursor[c] += 1;
        }
        grid.starts = starts;
        grid.points = sorted;
        grid.labels = sorted_labels;
        grid
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn axis_cell(&self, v: f64, a: usize) -> isize {
        ((v - self.origin[a]) / self.edge).floor() as isize
    }

    fn cell_of(&self, p: &Vec3) -> usize {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            idx[a] = self.axis_cell(p[a], a).clamp(0, self.dims[a] as isize - 1) as usize;
        }
        self.flat(idx)
    }

    #[inline]
    fn flat(&self, [x, y, z]: [usize; 3]) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    /// Inclusive cell range covering `[lo, hi]`, or `None` if disjoint.
    fn range(&self, lo: &Vec3, hi: &Vec3) -> Option<([usize; 3], [usize; 3])> {
        if self.points.is_empty() {
            return None;
        }
        let mut a0 = [0usize; 3];
        let mut a1 = [0usize; 3];
        for a in 0..3 {
            let l = self.axis_cell(lo[a], a);
            let h = self.axis_cell(hi[a], a);
            let top = self.dims[a] as isize - 1;
            if h < 0 || l > top {
                return None;
            }
            a0[a] = l.max(0) as usize;
            a1[a] = h.min(top) as usize;
        }
        Some((a0, a1))
    }

    fn cell(&self, c: usize) -> std::ops::Range<usize> {
        self.starts[c] as usize..self.starts[c + 1] as usize
    }

    fn any_within(&self, center: &Vec3, radius: f64) -> bool {
        let m = Vec3::repeat(radius + CULL_MARGIN);
        let Some((a0, a1)) = self.range(&(center - m), &(center + m)) else {
            return false;
        };
        let r2 = radius * radius;
        for z in a0[2]..=a1[2] {
            for y in a0[1]..=a1[1] {
                for x in a0[0]..=a1[0] {
                    let c = self.flat([x, y, z]);
                    if self.points[self.cell(c)].iter().any(|p| (p - center).norm_squared() <= r2) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Whether any bucketed point collides with the candidate's volume.
    fn collides(&self, frame: &LocalFrame, vol: &GripperVolume, world: &Aabb, target: i32) -> bool {
        let m = Vec3::repeat(CULL_MARGIN);
        let Some((a0, a1)) = self.range(&(world.min - m), &(world.max + m)) else {
            return false;
        };
        // Half-extent of a voxel along each gripper axis.
        let abs = frame.rt.abs();
        let cell_half = abs * Vec3::repeat(0.5 * self.edge);
        let oc = vol.outer.center();
        let reach = 0.5 * vol.outer.extent() + cell_half + m;
        let step = [
            frame.rt.column(0) * self.edge,
            frame.rt.column(1) * self.edge,
            frame.rt.column(2) * self.edge,
        ];
        let first = self.origin
            + Vec3::new(
                (a0[0] as f64 + 0.5) * self.edge,
                (a0[1] as f64 + 0.5) * self.edge,
                (a0[2] as f64 + 0.5) * self.edge,
            );
        let q0 = frame.to_local(&first) - oc;
        for z in a0[2]..=a1[2] {
            let qz = q0 + step[2] * (z - a0[2]) as f64;
            for y in a0[1]..=a1[1] {
                let qy = qz + step[1] * (y - a0[1]) as f64;
                let row = self.flat([0, y, z]);
                for x in a0[0]..=a1[0] {
                    let c = row + x;
                    if self.starts[c] == self.starts[c + 1] {
                        continue;
                    }
                    let q = qy + step[0] * (x - a0[0]) as f64;
                    if q.x.abs() > reach.x || q.y.abs() > reach.y || q.z.abs() > reach.z {
                        continue;
                    }
                    for i in self.cell(c) {
                        let lp = frame.to_local(&self.points[i]);
                        if vol.collides(&lp, self.labels[i] == target) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

fn front_facing(c: &PoseCandidate, anchor: &Vec3, camera: &Vec3) -> bool {
    c.approach().dot(&(anchor - camera)) > 0.0
}

/// Alignment flag: an anchor is reasonable when the cloud has a point within
/// `tau` of it (vacuous for an empty cloud) and the approach faces away from
/// the camera.
fn reasonable_with(
    c: &PoseCandidate,
    depth_values: &[f64],
    scene: &FilterScene,
    near: impl Fn(&Vec3) -> bool,
) -> bool {
    let anchor = c.anchor(depth_values[c.depth_index as usize]);
    front_facing(c, &anchor, &scene.camera) && (scene.points.is_empty() || near(&anchor))
}

/// Box holding every point any candidate could touch or align with.
fn candidate_reach(candidates: &[PoseCandidate], depth_values: &[f64], gripper: &GripperModel, tau: f64) -> Aabb {
    let mut b = Aabb::empty();
    for c in candidates {
        let pose = c.pose();
        b = b.union(&GripperVolume::new(gripper, c.width).outer.transformed(&pose));
        let a = c.anchor(depth_values[c.depth_index as usize]);
        b.grow(&(a - Vec3::repeat(tau)));
        b.grow(&(a + Vec3::repeat(tau)));
    }
    let m = Vec3::repeat(CULL_MARGIN);
    Aabb {
        min: b.min - m,
        max: b.max + m,
    }
}

fn cell_edge(config: &FilterConfig, gripper: &GripperModel) -> f64 {
    config.cell_edge.unwrap_or_else(|| {
        let vol = GripperVolume::new(gripper, gripper.max_width);
        vol.outer.extent().max() / 4.0
    })
}

/// Sets `reasonable` and `collision_free` on every candidate.
pub fn filter_batch(
    candidates: &mut [PoseCandidate],
    depth_values: &[f64],
    scene: &FilterScene,
    gripper: &GripperModel,
    config: &FilterConfig,
) -> FilterReport {
    par::with_threads(config.threads, || {
        let threads = par::current_threads();
        let tau = config.tau;
        let reach = candidate_reach(candidates, depth_values, gripper, tau);
        let (points, labels): (Vec<Vec3>, Vec<i32>) = scene
            .points
            .iter()
            .zip(&scene.labels)
            .filter(|(p, _)| contains(&reach, p))
            .map(|(p, l)| (*p, *l))
            .unzip();
        let grid = VoxelGrid::build(&points, &labels, cell_edge(config, gripper));

        let start = Instant::now();
        par::for_each_chunk_mut(candidates, 4096, |chunk| {
            for c in chunk {
                c.reasonable =
                    reasonable_with(c, depth_values, scene, |a| grid.any_within(a, tau));
            }
        });
        let unreasonable_ms = start.elapsed().as_secs_f64() * 1e3;

        let start = Instant::now();
        par::for_each_chunk_mut(candidates, 256, |chunk| {
            for c in chunk {
                let vol = GripperVolume::new(gripper, c.width);
                let pose = c.pose();
                c.collision_free = !vol.below_ground(&pose, scene.ground_z) && {
                    let world = vol.outer.transformed(&pose);
                    !grid.collides(&LocalFrame::of(c), &vol, &world, scene.target)
                };
            }
        });
        let collision_ms = start.elapsed().as_secs_f64() * 1e3;

        FilterReport {
            counts: FilterCounts::tally(candidates),
            stage_ms: StageTimes {
                project: 0.0,
                unreasonable: unreasonable_ms,
                collision: collision_ms,
            },
            threads,
        }
    })
}

/// Single-threaded exhaustive loop over every scene point per candidate.
pub fn filter_reference(
    candidates: &mut [PoseCandidate],
    depth_values: &[f64],
    scene: &FilterScene,
    gripper: &GripperModel,
    tau: f64,
) -> FilterCounts {
    let tau2 = tau * tau;
    for c in candidates.iter_mut() {
        c.reasonable = reasonable_with(c, depth_values, scene, |a| {
            scene.points.iter().any(|p| (p - a).norm_squared() <= tau2)
        });
        let vol = GripperVolume::new(gripper, c.width);
        let frame = LocalFrame::of(c);
        c.collision_free = !vol.below_ground(&c.pose(), scene.ground_z)
            && !scene
                .points
                .iter()
                .zip(&scene.labels)
                .any(|(p, &l)| vol.collides(&frame.to_local(p), l == scene.target));
    }
    FilterCounts::tally(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::pose_from_axes;
    use nalgebra::UnitQuaternion;
    use rand::Rng;

    fn candidate(t: Vec3, approach: Vec3, closing: Vec3) -> PoseCandidate {
        let pose = pose_from_axes(approach, closing, approach.cross(&closing), t);
        PoseCandidate {
            point_index: 0,
            view_index: 0,
            depth_index: 0,
            rotation: pose.rotation,
            translation: t,
            width: 0.08,
            quality: 1.0,
            reasonable: false,
            collision_free: false,
        }
    }

    fn scene(points: Vec<Vec3>, labels: Vec<i32>) -> FilterScene {
        FilterScene {
            points,
            labels,
            camera: Vec3::new(-1.0, 0.0, 0.0),
            ground_z: -10.0,
            target: 0,
        }
    }

    #[test]
    fn identity_projection_is_noop() {
        let c = vec![candidate(Vec3::new(0.1, 0.2, 0.3), Vec3::x(), Vec3::y())];
        assert_eq!(project_poses(&c, &Pose::identity()), c);
    }

    #[test]
    fn translation_projection_shifts() {
        let c = vec![candidate(Vec3::new(0.1, 0.2, 0.3), Vec3::x(), Vec3::y())];
        let t = Vec3::new(1.0, -2.0, 0.5);
        let out = project_poses(&c, &Pose::translation(t.x, t.y, t.z));
        assert!((out[0].translation - c[0].translation - t).norm() < 1e-15);
        assert_eq!(out[0].rotation, c[0].rotation);
    }

    #[test]
    fn rotation_round_trip() {
        let c = vec![candidate(Vec3::new(0.1, 0.2, 0.3), Vec3::x(), Vec3::y())];
        let r = Pose::from_parts(
            Vec3::zeros().into(),
            UnitQuaternion::from_axis_angle(&Vec3::z_axis(), std::f64::consts::PI),
        );
        let back = project_poses(&project_poses(&c, &r), &r.inverse());
        assert!((back[0].translation - c[0].translation).norm() < 1e-12);
        assert!(back[0].rotation.angle_to(&c[0].rotation) < 1e-12);
        assert_eq!(back[0].quality, c[0].quality);
    }

    #[test]
    fn anchor_on_point_is_reasonable_and_back_is_not() {
        let depth = [0.02];
        let s = scene(vec![Vec3::zeros()], vec![0]);
        // Fingertip 2 cm past the anchor at the origin, approaching away from the camera.
        let mut cs = vec![
            candidate(Vec3::new(0.02, 0.0, 0.0), Vec3::x(), Vec3::y()),
            candidate(Vec3::new(0.52, 0.0, 0.0), Vec3::x(), Vec3::y()),
            candidate(Vec3::new(-0.02, 0.0, 0.0), -Vec3::x(), Vec3::y()),
        ];
        filter_batch(&mut cs, &depth, &s, &GripperModel::default(), &FilterConfig::default());
        assert!(cs[0].reasonable);
        assert!(!cs[1].reasonable, "no cloud point near the anchor");
        assert!(!cs[2].reasonable, "approach faces the camera");
    }

    #[test]
    fn zero_tau_needs_exact_coincidence() {
        let s = scene(vec![Vec3::new(0.0, 0.0, 0.0)], vec![0]);
        let cfg = FilterConfig {
            tau: 0.0,
            ..Default::default()
        };
        let mut cs = vec![
            candidate(Vec3::new(0.02, 0.0, 0.0), Vec3::x(), Vec3::y()),
            candidate(Vec3::new(0.02, 1e-9, 0.0), Vec3::x(), Vec3::y()),
        ];
        filter_batch(&mut cs, &[0.02], &s, &GripperModel::default(), &cfg);
        assert!(cs[0].reasonable);
        assert!(!cs[1].reasonable);
    }

    #[test]
    fn empty_space_is_collision_free() {
        let s = scene(vec![Vec3::new(5.0, 5.0, 5.0)], vec![-1]);
        let mut cs = vec![candidate(Vec3::zeros(), Vec3::x(), Vec3::y())];
        filter_batch(&mut cs, &[0.02], &s, &GripperModel::default(), &FilterConfig::default());
        assert!(cs[0].collision_free);
    }

    #[test]
    fn point_in_finger_collides_even_on_target() {
        let g = GripperModel::default();
        // Finger center in the gripper frame: x = -L/2, y = w/2 + t/2.
        let p = Vec3::new(-0.02, 0.045, 0.0);
        let s = scene(vec![p], vec![0]);
        let mut cs = vec![candidate(Vec3::zeros(), Vec3::x(), Vec3::y())];
        filter_batch(&mut cs, &[0.02], &s, &g, &FilterConfig::default());
        assert!(!cs[0].collision_free);
    }

    #[test]
    fn closing_region_exempts_only_target() {
        let g = GripperModel::default();
        let p = Vec3::new(-0.02, 0.0, 0.0);
        let mut cs = vec![candidate(Vec3::zeros(), Vec3::x(), Vec3::y())];
        filter_batch(&mut cs, &[0.02], &scene(vec![p], vec![0]), &g, &FilterConfig::default());
        assert!(cs[0].collision_free);
        filter_batch(&mut cs, &[0.02], &scene(vec![p], vec![3]), &g, &FilterConfig::default());
        assert!(!cs[0].collision_free);
    }

    #[test]
    fn ground_plane_collides() {
        let mut s = scene(vec![], vec![]);
        s.ground_z = 0.0;
        let mut cs = vec![
            candidate(Vec3::new(0.0, 0.0, 0.005), Vec3::x(), Vec3::y()),
            candidate(Vec3::new(0.0, 0.0, 0.5), Vec3::x(), Vec3::y()),
        ];
        filter_batch(&mut cs, &[0.02], &s, &GripperModel::default(), &FilterConfig::default());
        assert!(!cs[0].collision_free);
        assert!(cs[1].collision_free);
    }

    #[test]
    fn empty_cloud_keeps_front_facing_and_free() {
        let s = scene(vec![], vec![]);
        let mut cs: Vec<_> = (0..10)
            .map(|i| candidate(Vec3::new(i as f64 * 0.1, 0.0, 0.0), Vec3::x(), Vec3::y()))
            .collect();
        let r = filter_batch(&mut cs, &[0.02], &s, &GripperModel::default(), &FilterConfig::default());
        assert!(cs.iter().all(|c| c.reasonable && c.collision_free));
        assert_eq!(r.counts.survivors, 10);
    }

    fn random_problem(seed: u64) -> (Vec<PoseCandidate>, FilterScene) {
        let mut rng = crate::seed::rng(seed);
        let points: Vec<Vec3> = (0..2000)
            .map(|_| Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(0.0..0.1)))
            .collect();
        let labels = (0..2000).map(|_| rng.gen_range(-1..3)).collect();
        let cands = (0..500)
            .map(|_| {
                let q = UnitQuaternion::from_euler_angles(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                );
                let mut c = candidate(Vec3::zeros(), Vec3::x(), Vec3::y());
                c.rotation = q;
                c.translation = Vec3::new(rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15), rng.gen_range(0.0..0.15));
                c.width = rng.gen_range(0.01..0.08);
                c
            })
            .collect();
        let mut s = scene(points, labels);
        s.ground_z = 0.0;
        s.target = 1;
        (cands, s)
    }

    #[test]
    fn batch_matches_reference() {
        for seed in 0..3 {
            let (cands, s) = random_problem(seed);
            let g = GripperModel::default();
            let mut fast = cands.clone();
            let mut slow = cands;
            let r = filter_batch(&mut fast, &[0.01, 0.02], &s, &g, &FilterConfig { tau: 0.01, ..Default::default() });
            let counts = filter_reference(&mut slow, &[0.01, 0.02], &s, &g, 0.01);
            assert_eq!(fast, slow);
            assert_eq!(r.counts, counts);
            assert!(counts.unreachable + counts.unreasonable > 0 && counts.input == 500);
        }
    }

    #[test]
    fn cell_size_does_not_change_flags() {
        let (cands, s) = random_problem(9);
        let g = GripperModel::default();
        let mut a = cands.clone();
        let mut b = cands;
        filter_batch(&mut a, &[0.02], &s, &g, &FilterConfig { cell_edge: Some(0.003), ..Default::default() });
        filter_batch(&mut b, &[0.02], &s, &g, &FilterConfig { cell_edge: Some(0.5), ..Default::default() });
        assert_eq!(a, b);
    }

    #[test]
    fn counts_reconcile() {
        let (mut cands, s) = random_problem(4);
        let r = filter_batch(&mut cands, &[0.02], &s, &GripperModel::default(), &FilterConfig::default());
        let c = r.counts;
        assert_eq!(c.input, c.unreasonable + c.unreachable + c.survivors);
        assert_eq!(c.survivors, cands.iter().filter(|c| c.reasonable && c.collision_free).count());
    }
}
