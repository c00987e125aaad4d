//! End-to-end annotation: part-level pose grids, randomized scenes, scene
//! filtering and actioness, assembled into an archive.

use std::collections::BTreeMap;

use crate::actioness::{assign_actionable_labels, compute_actioness, ActionessConfig, ActionessLabels, PartBlocks};
use crate::antipodal::{score_candidates, ContactTarget, FrictionGrid};
use crate::archive::{
    flag_byte, ActionessArrays, AnnotationArchive, Manifest, PartEntry, PartTable, PoseRecord, SceneData,
    SceneEntry, SceneSettings, FORMAT_VERSION,
};
use crate::asset::ArticulatedAsset;
use crate::error::{Error, Result};
use crate::filter::{filter_batch, project_poses, FilterConfig, FilterReport, FilterScene};
use crate::geom::Vec3;
use crate::par;
use crate::sampling::{candidates_for_points, farthest_point_sample, GripperModel, PoseCandidate, SamplingConfig, SurfacePoint};
use crate::scene::{depth_to_mm, plan_views, randomize_joints, render, DepthSidecar, SceneGeometry, SceneSample};
use crate::seed::{self, Stage};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub root_seed: u64,
    pub sampling: SamplingConfig,
    pub gripper: GripperModel,
    pub grid: FrictionGrid,
    pub scenes: Option<SceneSettings>,
    /// Worker threads (0 = library default); never affects results.
    pub threads: usize,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        self.gripper.validate()?;
        if let Some(s) = &self.scenes {
            s.intrinsics.validate()?;
            if !(s.tau >= 0.0) {
                return Err(Error::invalid("tau must be non-negative"));
            }
            self.actioness_config(s.threshold).validate()?;
        }
        Ok(())
    }

    fn actioness_config(&self, threshold: f64) -> ActionessConfig {
        ActionessConfig {
            threshold,
            views: self.sampling.views,
            per_view: self.sampling.per_view(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartAnnotation {
    pub part: usize,
    pub points: Vec<SurfacePoint>,
    /// Part-frame candidates, anchor-major, with antipodal quality.
    pub candidates: Vec<PoseCandidate>,
}

/// Samples, generates and scores the full pose grid of one part.
pub fn annotate_part(asset: &ArticulatedAsset, part: usize, cfg: &PipelineConfig) -> Result<PartAnnotation> {
    cfg.sampling.validate()?;
    cfg.gripper.validate()?;
    let p = asset
        .parts
        .get(part)
        .ok_or_else(|| Error::invalid(format!("asset has no part #{part}")))?;
    let mesh = p.mesh()?;
    let seed = seed::derive(cfg.root_seed, Stage::PointSampling, part as u64);
    let points = farthest_point_sample(mesh, cfg.sampling.n, seed)?;
    let mut candidates = candidates_for_points(&points, &cfg.sampling, &cfg.gripper);
    let target = ContactTarget::new(mesh);
    score_candidates(&mut candidates, &cfg.sampling.depth_values, &target, &cfg.gripper, &cfg.grid);
    for c in &mut candidates {
        c.reasonable = true;
        c.collision_free = true;
    }
    Ok(PartAnnotation {
        part,
        points,
        candidates,
    })
}

/// One rendered view with its filter flags and actioness labels.
#[derive(Clone, Debug)]
pub struct SceneAnnotation {
    pub scene: usize,
    pub sample: SceneSample,
    /// Flag bytes per annotated part, in candidate order.
    pub flags: Vec<(usize, Vec<u8>)>,
    pub actioness: ActionessLabels,
    pub reports: Vec<FilterReport>,
}

/// Renders every view of scene `scene_index` and labels it.
pub fn annotate_scene(
    asset: &ArticulatedAsset,
    parts: &[PartAnnotation],
    cfg: &PipelineConfig,
    scene_index: usize,
) -> Result<Vec<SceneAnnotation>> {
    let settings = cfg
        .scenes
        .as_ref()
        .ok_or_else(|| Error::invalid("scene settings missing"))?;
    let joints = randomize_joints(asset, seed::derive(cfg.root_seed, Stage::JointConfig, scene_index as u64));
    let geometry = SceneGeometry::build(asset, &joints)?;
    let views = plan_views(
        asset,
        &geometry,
        &settings.intrinsics,
        settings.object_views,
        settings.part_views,
        cfg.root_seed,
        scene_index as u64,
    );
    let act_cfg = cfg.actioness_config(settings.threshold);
    let filter_cfg = FilterConfig {
        tau: settings.tau,
        cell_edge: None,
        threads: 0,
    };
    let mut out = Vec::with_capacity(views.len());
    for (camera, kind, _) in views {
        let sample = render(&geometry, asset, &joints, &camera, kind, &settings.intrinsics);
        let world = sample.world_cloud();
        let mut flags = Vec::new();
        let mut reports = Vec::new();
        let mut projected = Vec::new();
        for pa in parts {
            let pose = geometry.kinematics.parts[pa.part];
            let start = std::time::Instant::now();
            let mut cands = project_poses(&pa.candidates, &pose);
            let project_ms = start.elapsed().as_secs_f64() * 1e3;
            let scene = FilterScene {
                points: world.clone(),
                labels: sample.point_labels.clone(),
                camera: sample.camera.position,
                ground_z: sample.ground_z,
                target: pa.part as i32,
            };
            let mut report = filter_batch(&mut cands, &cfg.sampling.depth_values, &scene, &cfg.gripper, &filter_cfg);
            report.stage_ms.project = project_ms;
            reports.push(report);
            flags.push((pa.part, cands.iter().map(flag_byte).collect()));
            let anchors: Vec<Vec3> = pa
                .points
                .iter()
                .map(|p| pose.transform_point(&p.position.into()).coords)
                .collect();
            projected.push((pa.part, anchors, cands));
        }
        let blocks: Vec<PartBlocks> = projected
            .iter()
            .map(|(part, anchors, cands)| PartBlocks {
                part: *part,
                anchors,
                candidates: cands,
            })
            .collect();
        let actionable = assign_actionable_labels(&sample.point_labels, asset);
        let actioness = compute_actioness(&actionable, &world, &sample.point_labels, &blocks, &act_cfg)?;
        out.push(SceneAnnotation {
            scene: scene_index,
            sample,
            flags,
            actioness,
            reports,
        });
    }
    Ok(out)
}

/// Results of a full run, ready for [`crate::archive::write_archive`].
pub fn run(
    asset: &ArticulatedAsset,
    asset_path: Option<String>,
    parts: &[usize],
    cfg: &PipelineConfig,
) -> Result<AnnotationArchive> {
    cfg.validate()?;
    par::with_threads(cfg.threads, || {
        let annotations = parts
            .iter()
            .map(|&p| annotate_part(asset, p, cfg))
            .collect::<Result<Vec<_>>>()?;
        let mut scenes = Vec::new();
        if let Some(s) = &cfg.scenes {
            for k in 0..s.count {
                scenes.extend(annotate_scene(asset, &annotations, cfg, k)?);
            }
        }
        Ok(assemble(asset, asset_path, &annotations, &scenes, cfg))
    })
}

pub fn assemble(
    asset: &ArticulatedAsset,
    asset_path: Option<String>,
    parts: &[PartAnnotation],
    scenes: &[SceneAnnotation],
    cfg: &PipelineConfig,
) -> AnnotationArchive {
    let part_id = |p: usize| asset.parts[p].part_id.clone();
    let tables: Vec<PartTable> = parts
        .iter()
        .map(|pa| PartTable {
            part_id: part_id(pa.part),
            records: pa.candidates.iter().map(PoseRecord::from_candidate).collect(),
        })
        .collect();
    let scene_data: Vec<SceneData> = scenes
        .iter()
        .map(|s| SceneData {
            width: s.sample.intrinsics.width,
            height: s.sample.intrinsics.height,
            depth_mm: s.sample.depth.iter().map(|&d| depth_to_mm(d)).collect(),
            cloud: s.sample.cloud.iter().map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect(),
            part_ids: s.sample.point_labels.clone(),
            actioness: ActionessArrays::from_labels(&s.actioness),
            flags: s
                .flags
                .iter()
                .map(|(p, f)| (part_id(*p), f.clone()))
                .collect::<BTreeMap<_, _>>(),
        })
        .collect();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        asset_id: asset.id.clone(),
        asset_path,
        root_seed: cfg.root_seed,
        sampling: cfg.sampling.clone(),
        gripper: cfg.gripper.clone(),
        mu_grid: cfg.grid.mu_values.clone(),
        scenes_config: cfg.scenes.clone(),
        parts: parts
            .iter()
            .map(|pa| PartEntry {
                part_id: part_id(pa.part),
                records: pa.candidates.len() as u64,
                points: pa.points.len() as u64,
            })
            .collect(),
        scenes: scenes
            .iter()
            .map(|s| SceneEntry {
                scene: s.scene,
                view: s.sample.view,
                joint_config: s.sample.joint_config.0.clone(),
                points: s.sample.cloud.len() as u64,
                camera: DepthSidecar::of(&s.sample),
            })
            .collect(),
        files: BTreeMap::new(),
        checksum: String::new(),
    };
    AnnotationArchive {
        manifest,
        parts: tables,
        scenes: scene_data,
    }
}

/// Pipeline settings recorded in a manifest, for replay.
pub fn config_from_manifest(m: &Manifest) -> Result<PipelineConfig> {
    Ok(PipelineConfig {
        root_seed: m.root_seed,
        sampling: m.sampling.clone(),
        gripper: m.gripper.clone(),
        grid: FrictionGrid::new(m.mu_grid.clone())?,
        scenes: m.scenes_config.clone(),
        threads: 0,
    })
}
