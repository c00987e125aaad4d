//! Browser bindings: antipodal quality on a wedge, farthest point sampling on
//! a part mesh, and a depth render of the demo cabinet.

use partpose::antipodal::{antipodal_quality, find_contacts, ContactTarget, FrictionGrid};
use partpose::asset::JointConfig;
use partpose::bench::cabinet_asset;
use partpose::geom::{pose_from_axes, Vec3};
use partpose::mesh::{hexahedron, uv_sphere, TriMesh};
use partpose::sampling::{farthest_point_sample, GripperModel, PoseCandidate};
use partpose::scene::{camera_from_spherical, render, CameraIntrinsics, Placement, SceneGeometry, ViewKind};
use wasm_bindgen::prelude::*;

fn wedge(deg: f64) -> TriMesh {
    let t = deg.to_radians().tan();
    let mut corners = [Vec3::zeros(); 8];
    for (i, c) in corners.iter_mut().enumerate() {
        let x = if i & 1 == 0 { 0.0 } else { 0.03 };
        let half = 0.01 + x * t;
        let y = if i & 2 == 0 { -half } else { half };
        let z = if i & 4 == 0 { -0.03 } else { 0.03 };
        *c = Vec3::new(x, y, z);
    }
    hexahedron(corners)
}

/// Quality of a straight grasp across a wedge whose faces lean `deg`
/// degrees, followed by the measured contact deviation in degrees
/// (`[q, deviation]`; deviation is NaN when no contacts are found).
#[wasm_bindgen]
pub fn wedge_quality(deg: f64, depth: f64) -> Vec<f64> {
    let deg = deg.clamp(0.0, 80.0);
    let gripper = GripperModel {
        max_width: 0.4,
        ..GripperModel::default()
    };
    let depth = depth.clamp(0.005, 0.035);
    let pose = pose_from_axes(Vec3::x(), Vec3::y(), Vec3::z(), Vec3::new(depth, 0.0, 0.0));
    let c = PoseCandidate {
        point_index: 0,
        view_index: 0,
        depth_index: 0,
        rotation: pose.rotation,
        translation: pose.translation.vector,
        width: gripper.max_width,
        quality: 0.0,
        reasonable: true,
        collision_free: true,
    };
    match find_contacts(&c, depth, &ContactTarget::new(&wedge(deg)), &gripper) {
        Some(contact) => vec![
            antipodal_quality(&contact.pair, &FrictionGrid::default()),
            contact.pair.max_deviation().to_degrees(),
        ],
        None => vec![0.0, f64::NAN],
    }
}

fn sample_mesh(which: &str) -> TriMesh {
    match which {
        "sphere" => uv_sphere(Vec3::zeros(), 0.05, 16, 24),
        "door" | "handle" => {
            let asset = cabinet_asset();
            let idx = asset.part_index(which).expect("cabinet part");
            asset.parts[idx].mesh().expect("fused").clone()
        }
        _ => wedge(30.0),
    }
}

/// Farthest point samples on a demo mesh ("sphere", "handle", "door" or
/// "wedge") as flat `[x, y, z, nx, ny, nz, …]`.
#[wasm_bindgen]
pub fn fps_points(mesh: &str, n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let points = farthest_point_sample(&sample_mesh(mesh), n.max(1), seed).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(points
        .iter()
        .flat_map(|p| [p.position.x, p.position.y, p.position.z, p.normal.x, p.normal.y, p.normal.z])
        .collect())
}

/// Mesh vertices as flat `[x, y, z, …]`, for drawing the FPS backdrop.
#[wasm_bindgen]
pub fn mesh_vertices(mesh: &str) -> Vec<f64> {
    sample_mesh(mesh).vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
}

/// Depth image of the cabinet with the door at `joint` radians, seen from
/// the given latitude/longitude (degrees) and distance. Returns
/// `[depth…, label…]`, each `width × height` long; depth 0 and label −1 mark
/// empty pixels.
#[wasm_bindgen]
pub fn render_cabinet(joint: f64, lat: f64, lon: f64, radius: f64, width: u32, height: u32) -> Result<Vec<f32>, JsError> {
    let err = |e: partpose::Error| JsError::new(&e.to_string());
    let asset = cabinet_asset();
    let config = JointConfig(vec![joint.clamp(0.0, 1.5)]);
    let geometry = SceneGeometry::build(&asset, &config).map_err(err)?;
    let bounds = asset.world_bounds(&geometry.kinematics);
    let (width, height) = (width.clamp(16, 640), height.clamp(16, 480));
    let f = CameraIntrinsics::default().fx * width as f64 / 1280.0;
    let intr = CameraIntrinsics {
        width,
        height,
        fx: f,
        fy: f,
        cx: (width as f64 - 1.0) * 0.5,
        cy: (height as f64 - 1.0) * 0.5,
    };
    let placement = Placement {
        latitude_deg: lat,
        longitude_deg: lon,
        radius: radius.max(0.3),
    };
    let camera = camera_from_spherical(&asset.base, bounds.center(), &placement);
    let sample = render(&geometry, &asset, &config, &camera, ViewKind::Manual, &intr);
    let mut out: Vec<f32> = sample.depth.iter().map(|&d| d as f32).collect();
    let mut labels = vec![-1.0f32; sample.depth.len()];
    for (px, label) in sample.point_pixels.iter().zip(&sample.point_labels) {
        labels[*px as usize] = *label as f32;
    }
    out.extend(labels);
    Ok(out)
}
