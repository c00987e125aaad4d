//! Synthetic cabinet asset and the filter benchmark built on it.

use std::collections::HashMap;

use rand::seq::index;

use crate::asset::{asset_from_json, fuse_part_meshes, ArticulatedAsset, JointConfig};
use crate::error::Result;
use crate::filter::{project_poses, FilterScene};
use crate::geom::Vec3;
use crate::mesh::{box_mesh, TriMesh};
use crate::sampling::{candidates_for_points, farthest_point_sample, GripperModel, PoseCandidate, SamplingConfig};
use crate::scene::{render, sample_camera_object_centric, CameraIntrinsics, SceneGeometry, ViewKind};
use crate::seed::{self, Stage};

const CABINET: &str = r#"{
    "id": "cabinet_demo",
    "links": [{"name": "body", "meshes": ["body.obj"]}, {"name": "door"}],
    "joints": [{"name": "hinge", "parent": "body", "child": "door", "kind": "revolute",
                "axis": [0, 0, -1], "origin": [1,0,0,0, 0,1,0,-0.25, 0,0,1,0, 0,0,0,1],
                "limits": [0.0, 1.5]}],
    "parts": [{"part_id": "door", "semantic_class": "hinge-door", "owning_link": "door",
               "meshes": ["door.obj"]},
              {"part_id": "handle", "semantic_class": "line-fixed-handle", "owning_link": "door",
               "meshes": ["bar.obj", "post_lo.obj", "post_hi.obj"]}]
}"#;

/// Cabinet body (0.3 × 0.5 × 0.7 m) whose front faces +X, with a hinged
/// door and a vertical bar handle standing 35 mm proud of the door.
pub fn cabinet_asset() -> ArticulatedAsset {
    let v = Vec3::new;
    let meshes: HashMap<String, TriMesh> = [
        ("body.obj", box_mesh(v(-0.3, -0.25, 0.0), v(0.0, 0.25, 0.7))),
        // door frame sits on the hinge at the body's front-left edge
        ("door.obj", box_mesh(v(0.0, 0.005, 0.01), v(0.02, 0.495, 0.69))),
        ("bar.obj", box_mesh(v(0.043, 0.434, 0.22), v(0.055, 0.446, 0.46))),
        ("post_lo.obj", box_mesh(v(0.02, 0.435, 0.25), v(0.043, 0.445, 0.26))),
        ("post_hi.obj", box_mesh(v(0.02, 0.435, 0.42), v(0.043, 0.445, 0.43))),
    ]
    .into_iter()
    .map(|(k, m)| (k.to_string(), m))
    .collect();
    let asset = asset_from_json(CABINET, &meshes).expect("built-in asset is valid");
    fuse_part_meshes(asset).expect("built-in parts are non-empty")
}

/// A filtering workload: world-frame candidates and the scene they face.
pub struct BenchProblem {
    pub candidates: Vec<PoseCandidate>,
    pub depth_values: Vec<f64>,
    pub scene: FilterScene,
    pub gripper: GripperModel,
}

/// Full candidate grid on the cabinet handle against a rendered cloud of
/// exactly `cloud_points` points (fewer if the view sees fewer).
pub fn bench_problem(root_seed: u64, sampling: &SamplingConfig, cloud_points: usize) -> Result<BenchProblem> {
    let asset = cabinet_asset();
    let handle = asset.part_index("handle").expect("handle part");
    let gripper = GripperModel::default();
    let config = JointConfig(vec![0.2]);
    let geometry = SceneGeometry::build(&asset, &config)?;
    let intr = CameraIntrinsics::default();
    let bounds = asset.world_bounds(&geometry.kinematics);
    let (camera, _) = sample_camera_object_centric(
        &asset.base,
        &bounds,
        &intr,
        seed::derive(root_seed, Stage::BenchScene, 0),
    );
    let sample = render(&geometry, &asset, &config, &camera, ViewKind::ObjectCentric, &intr);
    let mut scene = FilterScene::from_sample(&sample, handle);
    if scene.points.len() > cloud_points {
        let mut rng = seed::stage_rng(root_seed, Stage::BenchScene, 1);
        let mut keep = index::sample(&mut rng, scene.points.len(), cloud_points).into_vec();
        keep.sort_unstable();
        scene.points = keep.iter().map(|&i| scene.points[i]).collect();
        scene.labels = keep.iter().map(|&i| scene.labels[i]).collect();
    }
    let mesh = asset.parts[handle].mesh()?;
    let points = farthest_point_sample(mesh, sampling.n, sampling.seed)?;
    let local = candidates_for_points(&points, sampling, &gripper);
    let candidates = project_poses(&local, &geometry.kinematics.parts[handle]);
    Ok(BenchProblem {
        candidates,
        depth_values: sampling.depth_values.clone(),
        scene,
        gripper,
    })
}

/// Every `stride`-th candidate, for scaled-down comparisons.
pub fn subsample(candidates: &[PoseCandidate], stride: usize) -> Vec<PoseCandidate> {
    candidates.iter().step_by(stride.max(1)).cloned().collect()
}
