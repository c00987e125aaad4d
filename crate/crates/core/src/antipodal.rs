//! Antipodal quality of parallel-jaw candidates against a part mesh.
//!
//! A grasp is antipodal at friction `μ` when each contact's inward normal lies
//! within `atan(μ)` of the closing line (measured on its own side). The
//! quality is `1.3 − μ_min` for the smallest grid value that achieves this,
//! and 0 when none does, so the default grid `{0.1, …, 1.2}` yields scores in
//! `[0, 1.2]`.

use serde::{Deserialize, Serialize};

use crate::bvh::Bvh;
use crate::geom::Vec3;
use crate::mesh::TriMesh;
use crate::par;
use crate::sampling::{GripperModel, PoseCandidate};

/// Upper end of the quality range.
pub const MAX_QUALITY: f64 = 1.2;
/// Angular slack (radians) on the friction-cone boundary.
pub const CONE_TOLERANCE: f64 = 1e-9;
/// Clearance added to the contact separation when tightening the width.
pub const WIDTH_CLEARANCE: f64 = 0.001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrictionGrid {
    pub mu_values: Vec<f64>,
}

impl Default for FrictionGrid {
    fn default() -> Self {
        FrictionGrid {
            mu_values: (1..=12).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl FrictionGrid {
    pub fn new(mu_values: Vec<f64>) -> crate::Result<Self> {
        if mu_values.is_empty() {
            return Err(crate::Error::invalid("friction grid is empty"));
        }
        if mu_values.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(crate::Error::invalid("friction coefficients must be positive"));
        }
        if mu_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(crate::Error::invalid("friction grid must be strictly increasing"));
        }
        Ok(FrictionGrid { mu_values })
    }
}

/// Two opposing contacts found along a closing line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactPair {
    pub points: [Vec3; 2],
    /// Inward surface normals (unit).
    pub normals: [Vec3; 2],
    /// Unit closing direction, from `points[0]` toward `points[1]`.
    pub direction: Vec3,
}

impl ContactPair {
    /// Angle (radians) between each inward normal and the force it receives.
    pub fn deviations(&self) -> [f64; 2] {
        [
            angle_between(&self.normals[0], &self.direction),
            angle_between(&self.normals[1], &-self.direction),
        ]
    }

    pub fn max_deviation(&self) -> f64 {
        let [a, b] = self.deviations();
        a.max(b)
    }
}

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Friction-cone test for one coefficient.
pub fn is_antipodal(pair: &ContactPair, mu: f64) -> bool {
    pair.max_deviation() <= mu.atan() + CONE_TOLERANCE
}

pub fn antipodal_quality(pair: &ContactPair, grid: &FrictionGrid) -> f64 {
    let dev = pair.max_deviation();
    grid.mu_values
        .iter()
        .find(|&&mu| dev <= mu.atan() + CONE_TOLERANCE)
        .map_or(0.0, |mu| (1.3 - mu).clamp(0.0, MAX_QUALITY))
}

/// A part mesh prepared for contact queries.
#[derive(Clone, Debug)]
pub struct ContactTarget {
    bvh: Bvh,
}

impl ContactTarget {
    pub fn new(mesh: &TriMesh) -> Self {
        ContactTarget {
            bvh: Bvh::from_mesh(mesh),
        }
    }
}

/// Contacts of one candidate plus the tightened opening width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    pub pair: ContactPair,
    pub width: f64,
}

enum Probe {
    Miss,
    Pair(ContactPair, f64),
    Invalid,
}

/// Pad sample offsets in the gripper frame: center plus four corners of the
/// part of the finger pad that lies past the anchor surface.
fn pad_offsets(depth: f64, gripper: &GripperModel) -> [(f64, f64); 5] {
    let x = -0.5 * depth;
    let dx = 0.25 * depth;
    let dz = 0.25 * gripper.finger_height;
    [
        (x, 0.0),
        (x - dx, -dz),
        (x - dx, dz),
        (x + dx, -dz),
        (x + dx, dz),
    ]
}

fn probe(target: &ContactTarget, origin: &Vec3, closing: &Vec3, half_width: f64) -> Probe {
    let reach = 2.0 * half_width;
    let start_a = origin + closing * half_width;
    let start_b = origin - closing * half_width;
    let hit_a = target.bvh.intersect(&start_a, &-closing, 0.0, reach);
    let hit_b = target.bvh.intersect(&start_b, closing, 0.0, reach);
    match (hit_a, hit_b) {
        (None, None) => Probe::Miss,
        (Some(a), Some(b)) => {
            let na = a.normal.normalize();
            let nb = b.normal.normalize();
            // Each finger must meet a surface facing it; otherwise it started inside.
            if na.dot(closing) <= 0.0 || nb.dot(closing) >= 0.0 {
                return Probe::Invalid;
            }
            let ya = half_width - a.t;
            let yb = b.t - half_width;
            if ya < yb {
                return Probe::Invalid;
            }
            let pair = ContactPair {
                points: [start_a - closing * a.t, start_b + closing * b.t],
                normals: [-na, -nb],
                direction: -closing,
            };
            Probe::Pair(pair, ya - yb)
        }
        _ => Probe::Invalid,
    }
}

/// Finds the worst opposing contact pair across the finger pad, or `None`
/// when the pad touches nothing or only one side.
pub fn find_contacts(
    candidate: &PoseCandidate,
    depth: f64,
    target: &ContactTarget,
    gripper: &GripperModel,
) -> Option<Contact> {
    let rot = candidate.rotation.to_rotation_matrix();
    let approach = rot * Vec3::x();
    let closing = rot * Vec3::y();
    let height = rot * Vec3::z();
    let half_width = 0.5 * candidate.width;
    let mut worst: Option<(ContactPair, f64)> = None;
    let mut separation: f64 = 0.0;
    for (x, z) in pad_offsets(depth, gripper) {
        let origin = candidate.translation + approach * x + height * z;
        match probe(target, &origin, &closing, half_width) {
            Probe::Miss => {}
            Probe::Invalid => return None,
            Probe::Pair(pair, sep) => {
                separation = separation.max(sep);
                let dev = pair.max_deviation();
                if worst.map_or(true, |(_, d)| dev > d) {
                    worst = Some((pair, dev));
                }
            }
        }
    }
    worst.map(|(pair, _)| Contact {
        pair,
        width: (separation + WIDTH_CLEARANCE).min(gripper.max_width),
    })
}

/// Scores one candidate in place: sets quality and tightens the width.
pub fn score_candidate(
    candidate: &mut PoseCandidate,
    depth_values: &[f64],
    target: &ContactTarget,
    gripper: &GripperModel,
    grid: &FrictionGrid,
) {
    let depth = depth_values[candidate.depth_index as usize];
    match find_contacts(candidate, depth, target, gripper) {
        Some(contact) => {
            candidate.quality = antipodal_quality(&contact.pair, grid);
            candidate.width = contact.width;
        }
        None => candidate.quality = 0.0,
    }
}

/// Scores every candidate (order preserved), in parallel when enabled.
pub fn score_candidates(
    candidates: &mut [PoseCandidate],
    depth_values: &[f64],
    target: &ContactTarget,
    gripper: &GripperModel,
    grid: &FrictionGrid,
) {
    par::for_each_chunk_mut(candidates, 1024, |chunk| {
        for c in chunk {
            score_candidate(c, depth_values, target, gripper, grid);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::pose_from_axes;
    use crate::mesh::{box_mesh, hexahedron, uv_sphere};
    use crate::sampling::{generate_pose_grid, SamplingConfig};

    fn pair_with_deviation(deg: f64) -> ContactPair {
        let t = deg.to_radians();
        ContactPair {
            points: [Vec3::new(0.0, 0.02, 0.0), Vec3::new(0.0, -0.02, 0.0)],
            normals: [
                Vec3::new(t.sin(), -t.cos(), 0.0),
                Vec3::new(t.sin(), t.cos(), 0.0),
            ],
            direction: -Vec3::y(),
        }
    }

    /// Candidate at the origin approaching along +X, closing along +Y.
    pub(crate) fn straight_candidate(depth: f64, width: f64) -> PoseCandidate {
        let pose = pose_from_axes(Vec3::x(), Vec3::y(), Vec3::z(), Vec3::new(depth, 0.0, 0.0));
        PoseCandidate {
            point_index: 0,
            view_index: 0,
            depth_index: 0,
            rotation: pose.rotation,
            translation: pose.translation.vector,
            width,
            quality: 0.0,
            reasonable: false,
            collision_free: false,
        }
    }

    /// Two 5 mm plates whose outer faces sit at y = ±0.02, spanning x ∈ [0, 0.05].
    fn plates() -> TriMesh {
        let a = box_mesh(Vec3::new(0.0, 0.015, -0.03), Vec3::new(0.05, 0.02, 0.03));
        let b = box_mesh(Vec3::new(0.0, -0.02, -0.03), Vec3::new(0.05, -0.015, 0.03));
        TriMesh::concat([&a, &b])
    }

    #[test]
    fn zero_deviation_scores_max() {
        assert_eq!(antipodal_quality(&pair_with_deviation(0.0), &FrictionGrid::default()), 1.2);
    }

    #[test]
    fn thirty_degrees_needs_mu_point_six() {
        let q = antipodal_quality(&pair_with_deviation(30.0), &FrictionGrid::default());
        assert!((q - 0.7).abs() < 1e-12, "{q}");
    }

    #[test]
    fn sixty_degrees_fails_everywhere() {
        assert_eq!(antipodal_quality(&pair_with_deviation(60.0), &FrictionGrid::default()), 0.0);
    }

    #[test]
    fn parallel_plates_contacts_and_width() {
        let target = ContactTarget::new(&plates());
        let gripper = GripperModel::default();
        let c = straight_candidate(0.02, gripper.max_width);
        let contact = find_contacts(&c, 0.02, &target, &gripper).unwrap();
        assert!((contact.width - 0.041).abs() < 1e-12);
        assert!((contact.pair.points[0].y - 0.02).abs() < 1e-12);
        assert!((contact.pair.points[1].y + 0.02).abs() < 1e-12);
        assert_eq!(antipodal_quality(&contact.pair, &FrictionGrid::default()), 1.2);
    }

    #[test]
    fn empty_closing_region_has_no_contacts() {
        let target = ContactTarget::new(&plates());
        let gripper = GripperModel::default();
        let mut c = straight_candidate(0.02, gripper.max_width);
        c.translation += Vec3::new(0.0, 0.0, 1.0);
        assert!(find_contacts(&c, 0.02, &target, &gripper).is_none());
    }

    #[test]
    fn sphere_through_center_is_antiparallel() {
        let sphere = uv_sphere(Vec3::zeros(), 1.0, 64, 96);
        let target = ContactTarget::new(&sphere);
        let gripper = GripperModel {
            max_width: 2.5,
            finger_height: 0.02,
            ..GripperModel::default()
        };
        // Fingertip placed so the pad center crosses the sphere center.
        let c = straight_candidate(0.01, gripper.max_width);
        let mut c = c;
        c.translation = Vec3::new(0.01, 0.0, 0.0);
        let contact = find_contacts(&c, 0.02, &target, &gripper).unwrap();
        let [n0, n1] = contact.pair.normals;
        // Faceting: each face normal strays by up to about one facet diagonal.
        assert!(contact.pair.max_deviation() < 3.5f64.to_radians());
        assert!(n0.dot(&n1) < -6f64.to_radians().cos());
        // Closed form: contacts near y = ±1 on the unit sphere.
        assert!((contact.pair.points[0].norm() - 1.0).abs() < 1e-3);
        assert!((contact.pair.points[1].norm() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn one_sided_geometry_is_rejected() {
        // A single slab only reachable by the +Y finger.
        let m = box_mesh(Vec3::new(0.0, 0.01, -0.03), Vec3::new(0.05, 0.05, 0.03));
        let target = ContactTarget::new(&m);
        let gripper = GripperModel::default();
        let c = straight_candidate(0.02, gripper.max_width);
        assert!(find_contacts(&c, 0.02, &target, &gripper).is_none());
    }

    /// Solid whose ±Y faces lean `deg` degrees away from the closing axis.
    pub(crate) fn wedge(deg: f64) -> TriMesh {
        let t = deg.to_radians().tan();
        let (x0, x1, h, w0) = (0.0, 0.03, 0.03, 0.01);
        let half = |x: f64| w0 + (x - x0) * t;
        let mut corners = [Vec3::zeros(); 8];
        for (i, c) in corners.iter_mut().enumerate() {
            let x = if i & 1 == 0 { x0 } else { x1 };
            let y = if i & 2 == 0 { -half(x) } else { half(x) };
            let z = if i & 4 == 0 { -h } else { h };
            *c = Vec3::new(x, y, z);
        }
        hexahedron(corners)
    }

    #[test]
    fn wedge_scores_follow_the_grid() {
        let gripper = GripperModel {
            max_width: 0.2,
            ..GripperModel::default()
        };
        for (deg, want) in [(0.0, 1.2), (15.0, 1.0), (30.0, 0.7), (45.0, 0.3), (60.0, 0.0)] {
            let target = ContactTarget::new(&wedge(deg));
            let c = straight_candidate(0.02, gripper.max_width);
            let contact = find_contacts(&c, 0.02, &target, &gripper).unwrap();
            let q = antipodal_quality(&contact.pair, &FrictionGrid::default());
            assert!((q - want).abs() < 1e-9, "{deg}: {q}");
        }
    }

    #[test]
    fn batch_equals_single_on_plate_grid() {
        let mesh = plates();
        let target = ContactTarget::new(&mesh);
        let gripper = GripperModel::default();
        let cfg = SamplingConfig::default();
        let point = Vec3::new(0.0, 0.0175, 0.0);
        let mut batch = generate_pose_grid(0, &point, &cfg, &gripper);
        assert_eq!(batch.len(), 3072);
        let mut single = batch.clone();
        let grid = FrictionGrid::default();
        score_candidates(&mut batch, &cfg.depth_values, &target, &gripper, &grid);
        for c in &mut single {
            score_candidate(c, &cfg.depth_values, &target, &gripper, &grid);
        }
        assert_eq!(batch, single);
        assert!(batch.iter().any(|c| c.quality > 0.0));
        assert!(batch.iter().all(|c| (0.0..=MAX_QUALITY).contains(&c.quality)));
    }

    #[test]
    fn empty_list_scores_to_empty() {
        let target = ContactTarget::new(&plates());
        let mut none: Vec<PoseCandidate> = Vec::new();
        score_candidates(
            &mut none,
            &[0.01],
            &target,
            &GripperModel::default(),
            &FrictionGrid::default(),
        );
        assert!(none.is_empty());
    }

    #[test]
    fn grid_validation() {
        assert!(FrictionGrid::new(vec![]).is_err());
        assert!(FrictionGrid::new(vec![0.2, 0.1]).is_err());
        assert!(FrictionGrid::new(vec![-0.1]).is_err());
    }
}
