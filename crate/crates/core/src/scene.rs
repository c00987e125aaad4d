//! Randomized scene instantiation and single-view depth rendering.
//!
//! Cameras follow the pinhole convention with +X right, +Y down and +Z
//! forward. Depth is the camera-frame Z of the first surface hit; 0 marks a
//! pixel that saw nothing.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asset::{part_geometry, ArticulatedAsset, JointConfig, Kinematics};
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::geom::{pose_from_axes, Aabb, Pose, Vec3};
use crate::par;
use crate::ply;
use crate::seed;

/// Label of pixels/points that belong to no GAPart (links, ground).
pub const BACKGROUND: i32 = -1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        CameraIntrinsics {
            width: 1280,
            height: 720,
            fx: 920.0,
            fy: 920.0,
            cx: 639.5,
            cy: 359.5,
        }
    }
}

impl CameraIntrinsics {
    /// Same field of view at a reduced resolution.
    pub fn scaled(&self, factor: f64) -> CameraIntrinsics {
        let width = ((self.width as f64 * factor).round() as u32).max(1);
        let height = ((self.height as f64 * factor).round() as u32).max(1);
        CameraIntrinsics {
            width,
            height,
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: (width as f64 - 1.0) * 0.5,
            cy: (height as f64 - 1.0) * 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || !(self.fx > 0.0) || !(self.fy > 0.0) {
            return Err(Error::invalid("intrinsics need positive size and focal lengths"));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(Error::invalid("principal point outside the image"));
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    /// Half of the narrower field-of-view angle.
    pub fn min_half_fov(&self) -> f64 {
        let h = (0.5 * self.width as f64 / self.fx).atan();
        let v = (0.5 * self.height as f64 / self.fy).atan();
        h.min(v)
    }

    pub fn backproject(&self, u: u32, v: u32, depth: f64) -> Vec3 {
        Vec3::new(
            (u as f64 - self.cx) * depth / self.fx,
            (v as f64 - self.cy) * depth / self.fy,
            depth,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    pub target: Vec3,
    pub up: Vec3,
}

impl CameraPose {
    pub fn look_at(position: Vec3, target: Vec3, up: Vec3) -> Result<CameraPose> {
        if (target - position).norm() <= 0.0 {
            return Err(Error::invalid("camera position coincides with its target"));
        }
        Ok(CameraPose {
            position,
            target,
            up,
        })
    }

    /// Camera-to-world transform.
    pub fn pose(&self) -> Pose {
        let forward = (self.target - self.position).normalize();
        let mut right = forward.cross(&self.up);
        if right.norm() < 1e-9 {
            // up hint parallel to the view direction
            right = forward.cross(&crate::geom::any_orthogonal(&forward));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        pose_from_axes(right, down, forward, self.position)
    }
}

/// How a view was placed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ViewKind {
    ObjectCentric,
    PartCentric { part: usize },
    Manual,
}

/// Spherical camera placement around a center, angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub radius: f64,
}

pub const OBJECT_LATITUDE: (f64, f64) = (10.0, 60.0);
pub const OBJECT_LONGITUDE: (f64, f64) = (-60.0, 60.0);
pub const PART_LATITUDE: (f64, f64) = (0.0, 60.0);
pub const PART_LONGITUDE: (f64, f64) = (-75.0, 75.0);
/// Minimum share of the image diagonal covered by the target part.
pub const PART_COVERAGE: f64 = 0.4;

/// Camera on a sphere around `center`; longitude 0 / latitude 0 lies on the
/// frame's +X (front) axis and latitude rises toward its +Z.
pub fn camera_from_spherical(frame: &Pose, center: Vec3, p: &Placement) -> CameraPose {
    let (lat, lon) = (p.latitude_deg.to_radians(), p.longitude_deg.to_radians());
    let local = Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin());
    let dir = frame.rotation * local;
    CameraPose {
        position: center + dir * p.radius,
        target: center,
        up: frame.rotation * Vec3::z(),
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Independent uniform draws within each joint's limits.
pub fn randomize_joints(asset: &ArticulatedAsset, seed: u64) -> JointConfig {
    let mut rng = seed::rng(seed);
    JointConfig(
        asset
            .joints
            .iter()
            .map(|j| {
                let (lo, hi) = j.range();
                let u: f64 = rng.gen();
                (lo + (hi - lo) * u).clamp(lo, hi)
            })
            .collect(),
    )
}

/// Object-centric view: the whole object fits the image.
pub fn sample_camera_object_centric(
    frame: &Pose,
    bounds: &Aabb,
    intrinsics: &CameraIntrinsics,
    seed: u64,
) -> (CameraPose, Placement) {
    let mut rng = seed::rng(seed);
    let latitude_deg = uniform(&mut rng, OBJECT_LATITUDE);
    let longitude_deg = uniform(&mut rng, OBJECT_LONGITUDE);
    let fit = bounds.bounding_radius().max(1e-3) / intrinsics.min_half_fov().sin();
    let radius = fit * uniform(&mut rng, (1.0, 1.5));
    let p = Placement {
        latitude_deg,
        longitude_deg,
        radius,
    };
    (camera_from_spherical(frame, bounds.center(), &p), p)
}

/// Part-centric view aimed at the part center; the part's bounding sphere
/// spans at least [`PART_COVERAGE`] of the image diagonal.
pub fn sample_camera_part_centric(
    part_pose: &Pose,
    part_bounds: &Aabb,
    intrinsics: &CameraIntrinsics,
    seed: u64,
) -> (CameraPose, Placement) {
    let mut rng = seed::rng(seed);
    let latitude_deg = uniform(&mut rng, PART_LATITUDE);
    let longitude_deg = uniform(&mut rng, PART_LONGITUDE);
    let rho = part_bounds.bounding_radius().max(1e-3);
    let r_max = part_radius_limit(rho, intrinsics);
    let radius = (r_max * uniform(&mut rng, (0.6, 1.0))).max(1.2 * rho).min(r_max);
    let p = Placement {
        latitude_deg,
        longitude_deg,
        radius,
    };
    let center = part_pose.transform_point(&part_bounds.center().into()).coords;
    (camera_from_spherical(part_pose, center, &p), p)
}

/// Largest distance at which a sphere of radius `rho` still projects to a
/// diameter of at least `PART_COVERAGE` of the image diagonal.
pub fn part_radius_limit(rho: f64, intrinsics: &CameraIntrinsics) -> f64 {
    let f = intrinsics.fx.min(intrinsics.fy);
    2.0 * f * rho / (PART_COVERAGE * intrinsics.diagonal())
}

/// Posed triangles of one joint configuration, shared by all views of it.
#[derive(Clone, Debug)]
pub struct SceneGeometry {
    pub bvh: Bvh,
    /// Part index per triangle, or [`BACKGROUND`].
    pub labels: Vec<i32>,
    pub ground_z: f64,
    pub kinematics: Kinematics,
}

impl SceneGeometry {
    /// Poses every link and part mesh; the ground plane sits at the lowest
    /// point of the posed geometry (0 for an empty asset).
    pub fn build(asset: &ArticulatedAsset, config: &JointConfig) -> Result<SceneGeometry> {
        let kin = asset.forward_kinematics(config)?;
        let mut tris = Vec::new();
        let mut labels = Vec::new();
        for (li, l) in asset.links.iter().enumerate() {
            for m in &l.meshes {
                let posed = m.transformed(&kin.links[li]);
                for f in 0..posed.faces.len() {
                    tris.push(posed.triangle(f));
                    labels.push(BACKGROUND);
                }
            }
        }
        for (pi, p) in asset.parts.iter().enumerate() {
            for m in part_geometry(p) {
                let posed = m.transformed(&kin.parts[pi]);
                for f in 0..posed.faces.len() {
                    tris.push(posed.triangle(f));
                    labels.push(pi as i32);
                }
            }
        }
        let ground_z = tris
            .iter()
            .flat_map(|t| t.iter().map(|v| v.z))
            .fold(f64::INFINITY, f64::min);
        let ground_z = if ground_z.is_finite() { ground_z } else { 0.0 };
        Ok(SceneGeometry {
            bvh: Bvh::build(&tris),
            labels,
            ground_z,
            kinematics: kin,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSample {
    pub asset_id: String,
    pub joint_config: JointConfig,
    pub camera: CameraPose,
    pub view: ViewKind,
    pub intrinsics: CameraIntrinsics,
    /// Row-major depth in meters, 0 where nothing was hit.
    pub depth: Vec<f64>,
    /// Row-major per-pixel part label.
    pub pixel_labels: Vec<i32>,
    /// Camera-frame points of every finite depth pixel, row-major order.
    pub cloud: Vec<Vec3>,
    pub point_labels: Vec<i32>,
    pub point_pixels: Vec<u32>,
    pub ground_z: f64,
}

impl SceneSample {
    pub fn world_cloud(&self) -> Vec<Vec3> {
        let pose = self.camera.pose();
        self.cloud
            .iter()
            .map(|p| pose.transform_point(&(*p).into()).coords)
            .collect()
    }

    pub fn check_consistency(&self) -> Result<()> {
        let n = self.intrinsics.pixels();
        if self.depth.len() != n || self.pixel_labels.len() != n {
            return Err(Error::invalid("depth/label map size mismatch"));
        }
        let hits = self.depth.iter().filter(|d| **d > 0.0).count();
        if hits != self.cloud.len()
            || self.cloud.len() != self.point_labels.len()
            || self.cloud.len() != self.point_pixels.len()
        {
            return Err(Error::invalid("cloud does not match depth hits"));
        }
        Ok(())
    }
}

/// Back-projects every positive depth pixel (row-major).
pub fn backproject_depth(depth: &[f64], intrinsics: &CameraIntrinsics) -> (Vec<Vec3>, Vec<u32>) {
    let mut points = Vec::new();
    let mut pixels = Vec::new();
    for (i, &d) in depth.iter().enumerate() {
        if d > 0.0 && d.is_finite() {
            let (u, v) = (i as u32 % intrinsics.width, i as u32 / intrinsics.width);
            points.push(intrinsics.backproject(u, v, d));
            pixels.push(i as u32);
        }
    }
    (points, pixels)
}

/// Renders depth and part labels by casting one ray per pixel against the
/// posed meshes and the ground plane.
pub fn raycast_depth(
    asset: &ArticulatedAsset,
    config: &JointConfig,
    camera: &CameraPose,
    intrinsics: &CameraIntrinsics,
) -> Result<SceneSample> {
    let geometry = SceneGeometry::build(asset, config)?;
    Ok(render(&geometry, asset, config, camera, ViewKind::Manual, intrinsics))
}

pub fn render(
    geometry: &SceneGeometry,
    asset: &ArticulatedAsset,
    config: &JointConfig,
    camera: &CameraPose,
    view: ViewKind,
    intrinsics: &CameraIntrinsics,
) -> SceneSample {
    let pose = camera.pose();
    let rot = pose.rotation.to_rotation_matrix();
    let origin = camera.position;
    let w = intrinsics.width as usize;
    let rows: Vec<Vec<(f64, i32)>> = par::map_range(intrinsics.height as usize, |v| {
        (0..w)
            .map(|u| {
                let dir_cam = Vec3::new(
                    (u as f64 - intrinsics.cx) / intrinsics.fx,
                    (v as f64 - intrinsics.cy) / intrinsics.fy,
                    1.0,
                );
                // With a unit-Z camera ray the hit parameter equals the depth.
                let dir = rot * dir_cam;
                let mut best = (f64::INFINITY, BACKGROUND);
                if dir.z < 0.0 {
                    let t = (geometry.ground_z - origin.z) / dir.z;
                    if t > 0.0 {
                        best = (t, BACKGROUND);
                    }
                }
                if let Some(hit) = geometry.bvh.intersect(&origin, &dir, 0.0, best.0) {
                    if hit.t < best.0 {
                        best = (hit.t, geometry.labels[hit.triangle as usize]);
                    }
                }
                if best.0.is_finite() {
                    best
                } else {
                    (0.0, BACKGROUND)
                }
            })
            .collect()
    });
    let mut depth = Vec::with_capacity(intrinsics.pixels());
    let mut pixel_labels = Vec::with_capacity(intrinsics.pixels());
    for row in rows {
        for (d, l) in row {
            depth.push(d);
            pixel_labels.push(l);
        }
    }
    let (cloud, point_pixels) = backproject_depth(&depth, intrinsics);
    let point_labels = point_pixels.iter().map(|&i| pixel_labels[i as usize]).collect();
    SceneSample {
        asset_id: asset.id.clone(),
        joint_config: config.clone(),
        camera: *camera,
        view,
        intrinsics: *intrinsics,
        depth,
        pixel_labels,
        cloud,
        point_labels,
        point_pixels,
        ground_z: geometry.ground_z,
    }
}

/// Camera placements of one scene: `object_views` object-centric views, then
/// `part_views` part-centric views cycling over the parts.
pub fn plan_views(
    asset: &ArticulatedAsset,
    geometry: &SceneGeometry,
    intrinsics: &CameraIntrinsics,
    object_views: usize,
    part_views: usize,
    root_seed: u64,
    scene_index: u64,
) -> Vec<(CameraPose, ViewKind, Placement)> {
    let mut out = Vec::new();
    let mut bounds = asset.world_bounds(&geometry.kinematics);
    if bounds.is_empty() {
        bounds = Aabb {
            min: Vec3::zeros(),
            max: Vec3::zeros(),
        };
    }
    for k in 0..object_views {
        let s = seed::derive(root_seed, seed::Stage::ObjectCamera, scene_index * 1024 + k as u64);
        let (cam, p) = sample_camera_object_centric(&asset.base, &bounds, intrinsics, s);
        out.push((cam, ViewKind::ObjectCentric, p));
    }
    if !asset.parts.is_empty() {
        for k in 0..part_views {
            let part = k % asset.parts.len();
            let s = seed::derive(root_seed, seed::Stage::PartCamera, scene_index * 1024 + k as u64);
            let local = part_geometry(&asset.parts[part])
                .iter()
                .fold(Aabb::empty(), |b, m| b.union(&m.bounds()));
            let (cam, p) =
                sample_camera_part_centric(&geometry.kinematics.parts[part], &local, intrinsics, s);
            out.push((cam, ViewKind::PartCentric { part }, p));
        }
    }
    out
}

/// Depth in millimeters as a 16-bit grayscale PNG (0 = invalid).
pub fn encode_depth_png(depth: &[f64], width: u32, height: u32) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, width, height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut writer = enc.write_header().expect("png header");
        let data: Vec<u8> = depth
            .iter()
            .flat_map(|&d| depth_to_mm(d).to_be_bytes())
            .collect();
        writer.write_image_data(&data).expect("png body");
    }
    buf
}

pub fn depth_to_mm(d: f64) -> u16 {
    if d > 0.0 && d.is_finite() {
        (d * 1000.0).round().clamp(1.0, 65535.0) as u16
    } else {
        0
    }
}

pub fn write_depth_png(path: &Path, depth: &[f64], width: u32, height: u32) -> Result<()> {
    std::fs::write(path, encode_depth_png(depth, width, height)).map_err(|e| Error::io(path, e))
}

/// Reads a 16-bit millimeter depth PNG into meters.
pub fn read_depth_png(path: &Path) -> Result<(Vec<f64>, u32, u32)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(std::io::BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| Error::parse(path, e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::parse(path, "expected a 16-bit grayscale depth image"));
    }
    let depth = buf[..info.buffer_size()]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 1000.0)
        .collect();
    Ok((depth, info.width, info.height))
}

/// Sidecar metadata stored next to each depth image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub intrinsics: CameraIntrinsics,
    pub camera: CameraPose,
    /// Camera-to-world transform, row-major 4x4.
    pub extrinsics: Vec<f64>,
    pub ground_z: f64,
    pub depth_unit: String,
}

impl DepthSidecar {
    pub fn of(sample: &SceneSample) -> Self {
        DepthSidecar {
            intrinsics: sample.intrinsics,
            camera: sample.camera,
            extrinsics: crate::geom::pose_to_row_major(&sample.camera.pose()).to_vec(),
            ground_z: sample.ground_z,
            depth_unit: "millimeter".into(),
        }
    }
}

pub fn write_cloud_ply(path: &Path, sample: &SceneSample) -> Result<()> {
    ply::write_ply(path, &sample.cloud, &[], Some(&sample.point_labels))
}

/// Latitude/longitude (degrees) of `position` as seen from `center` in `frame`.
pub fn spherical_angles(frame: &Pose, center: &Vec3, position: &Vec3) -> (f64, f64) {
    let local = frame.rotation.inverse() * (position - center);
    let r = local.norm();
    let lat = (local.z / r).clamp(-1.0, 1.0).asin();
    let lon = local.y.atan2(local.x);
    (lat * 180.0 / PI, lon * 180.0 / PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::asset_from_json;
    use crate::mesh::box_mesh;
    use std::collections::HashMap;

    fn empty_asset() -> ArticulatedAsset {
        asset_from_json(r#"{"links": [{"name": "base"}]}"#, &HashMap::new()).unwrap()
    }

    fn cube_asset() -> ArticulatedAsset {
        let meshes = HashMap::from([(
            "cube.obj".to_string(),
            box_mesh(Vec3::new(-0.5, -0.5, 1.5), Vec3::new(0.5, 0.5, 2.5)),
        )]);
        asset_from_json(r#"{"links": [{"name": "base", "meshes": ["cube.obj"]}]}"#, &meshes).unwrap()
    }

    fn small() -> CameraIntrinsics {
        CameraIntrinsics::default().scaled(0.125)
    }

    #[test]
    fn ground_only_looking_down() {
        let a = empty_asset();
        let cam = CameraPose::look_at(Vec3::new(0.0, 0.0, 1.0), Vec3::zeros(), Vec3::x()).unwrap();
        let intr = small();
        let s = raycast_depth(&a, &JointConfig(vec![]), &cam, &intr).unwrap();
        let center = (intr.height / 2 * intr.width + intr.width / 2) as usize;
        assert!((s.depth[center] - 1.0).abs() < 1e-12);
        s.check_consistency().unwrap();
    }

    #[test]
    fn cube_front_face_depth() {
        // Cube occupying z ∈ [1.5, 2.5] lies 2 m ahead of a camera at the origin looking up +Z.
        let a = cube_asset();
        let cam = CameraPose::look_at(Vec3::zeros(), Vec3::new(0.0, 0.0, 2.0), Vec3::x()).unwrap();
        let intr = small();
        let mut s = raycast_depth(&a, &JointConfig(vec![]), &cam, &intr).unwrap();
        let center = (intr.height / 2 * intr.width + intr.width / 2) as usize;
        assert!((s.depth[center] - 1.5).abs() < 1e-12);
        // Ground sits at the cube's lowest point; rays below it never reach it here.
        s.ground_z = 1.5;
        s.check_consistency().unwrap();
    }

    #[test]
    fn cloud_matches_backprojection() {
        let a = cube_asset();
        let cam = CameraPose::look_at(Vec3::new(-1.0, 0.3, 0.5), Vec3::new(0.0, 0.0, 2.0), Vec3::z())
            .unwrap();
        let intr = small();
        let s = raycast_depth(&a, &JointConfig(vec![]), &cam, &intr).unwrap();
        let (pts, pix) = backproject_depth(&s.depth, &intr);
        assert_eq!(pix, s.point_pixels);
        for (a, b) in pts.iter().zip(&s.cloud) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn joint_draws_degenerate_and_deterministic() {
        let json = r#"{"links": [{"name": "a"}, {"name": "b"}, {"name": "c"}],
            "joints": [{"name": "p", "parent": "a", "child": "b", "kind": "prismatic",
                        "axis": [1, 0, 0], "limits": [0.5, 0.5]},
                       {"name": "r", "parent": "b", "child": "c", "kind": "revolute",
                        "axis": [0, 0, 1], "limits": [0, 1]}]}"#;
        let a = asset_from_json(json, &HashMap::new()).unwrap();
        let c = randomize_joints(&a, 5);
        assert_eq!(c.0[0], 0.5);
        assert_eq!(c, randomize_joints(&a, 5));
        a.check_config(&c).unwrap();
    }

    #[test]
    fn part_camera_front_axis() {
        let p = Placement {
            latitude_deg: 0.0,
            longitude_deg: 0.0,
            radius: 2.0,
        };
        let cam = camera_from_spherical(&Pose::identity(), Vec3::zeros(), &p);
        assert!((cam.position - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn camera_rotation_is_orthonormal() {
        let b = Aabb {
            min: Vec3::repeat(-0.2),
            max: Vec3::repeat(0.2),
        };
        for s in 0..50 {
            let (cam, _) = sample_camera_object_centric(&Pose::identity(), &b, &small(), s);
            let r = cam.pose().rotation.to_rotation_matrix();
            let m = r.matrix();
            assert!((m.transpose() * m - crate::geom::Mat3::identity()).abs().max() < 1e-9);
            // camera looks at the target
            let fwd = m.column(2).into_owned();
            assert!((fwd - (cam.target - cam.position).normalize()).norm() < 1e-9);
        }
    }

    #[test]
    fn part_centric_coverage() {
        let b = Aabb {
            min: Vec3::new(-0.05, -0.01, -0.02),
            max: Vec3::new(0.05, 0.01, 0.02),
        };
        let intr = CameraIntrinsics::default();
        for s in 0..100 {
            let (_, p) = sample_camera_part_centric(&Pose::identity(), &b, &intr, s);
            let projected = 2.0 * intr.fx * b.bounding_radius() / p.radius;
            assert!(projected >= PART_COVERAGE * intr.diagonal() - 1e-9);
        }
    }

    #[test]
    fn depth_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        let depth = vec![0.0, 1.234, 0.5, 65.6];
        write_depth_png(&p, &depth, 2, 2).unwrap();
        let (back, w, h) = read_depth_png(&p).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(back, vec![0.0, 1.234, 0.5, 65.535]);
    }

    #[test]
    fn row_depth_is_monotone_across_slanted_face() {
        // A face slanted away from the camera: depth grows along each row.
        let a = cube_asset();
        let cam = CameraPose::look_at(Vec3::new(-0.3, 0.0, 0.0), Vec3::new(0.0, 0.0, 2.0), Vec3::x())
            .unwrap();
        let intr = small();
        let s = raycast_depth(&a, &JointConfig(vec![]), &cam, &intr).unwrap();
        let w = intr.width as usize;
        let row = intr.height as usize / 2;
        let vals: Vec<f64> = s.depth[row * w..(row + 1) * w]
            .iter()
            .copied()
            .zip(&s.pixel_labels[row * w..(row + 1) * w])
            .filter(|(d, _)| *d > 0.0 && *d < 1.5 + 0.6)
            .map(|(d, _)| d)
            .collect();
        assert!(vals.len() > 3);
        let inc = vals.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let dec = vals.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        assert!(inc || dec);
    }
}
