//! Command line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::antipodal::{ContactTarget, FrictionGrid};
use crate::archive::{read_manifest, write_archive, ArchiveReader, SceneSettings, FLAG_COLLISION_FREE};
use crate::asset::{fuse_part_meshes, load_asset, ArticulatedAsset, JointConfig};
use crate::bench::{bench_problem, subsample};
use crate::error::{Error, Result};
use crate::filter::{filter_batch, filter_reference, FilterConfig, GripperVolume};
use crate::geom::{Aabb, Pose};
use crate::mesh::{hexahedron, save_mesh, TriMesh};
use crate::metrics::{depth_metrics, depth_to_disparity, evaluation_grid, precision_at_mu, DepthPair};
use crate::pipeline::{config_from_manifest, run, PipelineConfig};
use crate::sampling::{GripperModel, SamplingConfig};
use crate::scene::{
    camera_from_spherical, raycast_depth, randomize_joints, read_depth_png, sample_camera_object_centric,
    write_cloud_ply, write_depth_png, CameraIntrinsics, DepthSidecar, Placement, SceneGeometry,
};
use crate::seed::{self, Stage};

#[derive(Parser, Debug)]
#[command(name = "partpose", version, about = "Actionable grasp-pose annotation for articulated objects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SamplingArgs {
    /// Candidate points per part
    #[arg(long, default_value_t = 512)]
    n: usize,
    /// Approach directions per point
    #[arg(long, default_value_t = 64)]
    views: usize,
    /// In-plane rotations per view
    #[arg(long, default_value_t = 12)]
    angles: usize,
    /// Number of gripper depths (1 cm apart, from 1 cm) when --depth-values is absent
    #[arg(long)]
    depths: Option<usize>,
    /// Gripper depths in meters
    #[arg(long, value_delimiter = ',')]
    depth_values: Option<Vec<f64>>,
    /// Root seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Friction coefficients for quality scoring
    #[arg(long, value_delimiter = ',')]
    mu_grid: Option<Vec<f64>>,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl SamplingArgs {
    fn config(&self, scenes: Option<SceneSettings>) -> Result<PipelineConfig> {
        let depth_values = match (&self.depth_values, self.depths) {
            (Some(v), Some(d)) if v.len() != d => {
                return Err(Error::invalid("--depths disagrees with --depth-values"));
            }
            (Some(v), _) => v.clone(),
            (None, Some(d)) => (1..=d).map(|i| i as f64 * 0.01).collect(),
            (None, None) => SamplingConfig::default().depth_values,
        };
        let grid = match &self.mu_grid {
            Some(m) => FrictionGrid::new(m.clone())?,
            None => FrictionGrid::default(),
        };
        Ok(PipelineConfig {
            root_seed: self.seed,
            sampling: SamplingConfig {
                n: self.n,
                views: self.views,
                angles: self.angles,
                depth_values,
                seed: self.seed,
            },
            gripper: GripperModel::default(),
            grid,
            scenes,
            threads: self.threads,
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample and score the pose grid of one part
    AnnotatePart {
        #[arg(long)]
        asset: PathBuf,
        #[arg(long)]
        part: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Annotate parts, render randomized scenes, filter poses and label actioness
    AnnotateScene {
        #[arg(long, required_unless_present = "replay")]
        asset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Part ids to annotate (default: all)
        #[arg(long, value_delimiter = ',')]
        parts: Option<Vec<String>>,
        /// Joint configurations to sample
        #[arg(long, default_value_t = 1)]
        scenes: usize,
        #[arg(long, default_value_t = 5)]
        object_views: usize,
        #[arg(long, default_value_t = 5)]
        part_views: usize,
        /// Image resolution relative to 1280x720
        #[arg(long, default_value_t = 1.0)]
        image_scale: f64,
        /// Quality threshold for actioness
        #[arg(long, default_value_t = crate::actioness::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Anchor-to-cloud alignment tolerance (m)
        #[arg(long, default_value_t = crate::filter::DEFAULT_TAU)]
        tau: f64,
        /// Re-run the settings recorded in an existing manifest
        #[arg(long)]
        replay: Option<PathBuf>,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Render one depth image, label map and point cloud
    RenderDepth {
        #[arg(long)]
        asset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Joint values (default: random within limits)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        joints: Option<Vec<f64>>,
        /// Camera latitude in degrees (with --lon and --radius)
        #[arg(long, allow_hyphen_values = true, requires_all = ["lon", "radius"])]
        lat: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lon: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        image_scale: f64,
    },
    /// Depth metrics between two 16-bit depth images
    EvalDepth {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Also report end-point error on disparities derived from depth
        #[arg(long)]
        disparity: bool,
        #[arg(long, default_value_t = 920.0)]
        focal: f64,
        #[arg(long, default_value_t = 0.055)]
        baseline: f64,
    },
    /// Friction-dependent precision of archived poses
    EvalPoses {
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        asset: PathBuf,
        #[arg(long)]
        part: Option<String>,
        /// Use the collision flags of this scene view
        #[arg(long)]
        scene: Option<usize>,
        /// Only evaluate poses with quality above this value
        #[arg(long)]
        min_quality: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        mu_grid: Option<Vec<f64>>,
    },
    /// Time the batch filter on the built-in cabinet scene
    BenchFilter {
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 50_000)]
        cloud_points: usize,
        /// Also time the exhaustive single-threaded filter on every k-th candidate
        #[arg(long)]
        naive_stride: Option<usize>,
    },
    /// Write gripper glyphs of archived poses as an OBJ mesh
    ExportPoses {
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        part: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        limit: usize,
        #[arg(long, default_value_t = 0.0)]
        min_quality: f64,
    },
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Reports go to stdout, diagnostics to stderr.
pub fn cli_dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    cli_run(argv, &mut stdout.lock())
}

pub fn cli_run<I, S>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, value: serde_json::Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json"))
        .map_err(|e| Error::io("<stdout>", e))
}

fn open_asset(path: &Path) -> Result<ArticulatedAsset> {
    fuse_part_meshes(load_asset(path)?)
}

fn part_indices(asset: &ArticulatedAsset, ids: Option<&[String]>) -> Result<Vec<usize>> {
    match ids {
        None => Ok((0..asset.parts.len()).collect()),
        Some(ids) => ids
            .iter()
            .map(|id| {
                asset
                    .part_index(id)
                    .ok_or_else(|| Error::invalid(format!("asset has no part {id}")))
            })
            .collect(),
    }
}

fn annotate(asset_path: &Path, parts: Option<&[String]>, cfg: &PipelineConfig, out_dir: &Path, out: &mut dyn Write) -> Result<()> {
    let asset = open_asset(asset_path)?;
    let parts = part_indices(&asset, parts)?;
    let archive = run(&asset, Some(asset_path.display().to_string()), &parts, cfg)?;
    let manifest = write_archive(out_dir, &archive)?;
    emit(
        out,
        json!({
            "archive": out_dir.display().to_string(),
            "parts": manifest.parts,
            "scenes": manifest.scenes.len(),
            "checksum": manifest.checksum,
        }),
    )
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::AnnotatePart {
            asset,
            part,
            out: dir,
            sampling,
        } => {
            let cfg = sampling.config(None)?;
            annotate(&asset, Some(&[part]), &cfg, &dir, out)
        }
        Command::AnnotateScene {
            asset,
            out: dir,
            parts,
            scenes,
            object_views,
            part_views,
            image_scale,
            threshold,
            tau,
            replay,
            sampling,
        } => {
            if let Some(manifest_path) = replay {
                let dir_of = manifest_path.parent().unwrap_or(Path::new("."));
                let m = read_manifest(dir_of)?;
                let mut cfg = config_from_manifest(&m)?;
                cfg.threads = sampling.threads;
                let asset_path = asset
                    .or_else(|| m.asset_path.as_ref().map(PathBuf::from))
                    .ok_or_else(|| Error::invalid("manifest does not record the asset path; pass --asset"))?;
                let ids: Vec<String> = m.parts.iter().map(|p| p.part_id.clone()).collect();
                return annotate(&asset_path, Some(&ids), &cfg, &dir, out);
            }
            if !(image_scale > 0.0) {
                return Err(Error::invalid("--image-scale must be positive"));
            }
            let settings = SceneSettings {
                count: scenes,
                object_views,
                part_views,
                intrinsics: CameraIntrinsics::default().scaled(image_scale),
                tau,
                threshold,
            };
            let cfg = sampling.config(Some(settings))?;
            let asset = asset.expect("clap enforces --asset without --replay");
            annotate(&asset, parts.as_deref(), &cfg, &dir, out)
        }
        Command::RenderDepth {
            asset,
            out: dir,
            seed: root,
            joints,
            lat,
            lon,
            radius,
            image_scale,
        } => {
            if !(image_scale > 0.0) {
                return Err(Error::invalid("--image-scale must be positive"));
            }
            let asset = open_asset(&asset)?;
            let config = match joints {
                Some(v) => JointConfig(v),
                None => randomize_joints(&asset, seed::derive(root, Stage::JointConfig, 0)),
            };
            asset.check_config(&config)?;
            let intr = CameraIntrinsics::default().scaled(image_scale);
            let geometry = SceneGeometry::build(&asset, &config)?;
            let bounds = asset.world_bounds(&geometry.kinematics);
            let bounds = if bounds.is_empty() { Aabb::from_points(&[nalgebra::Vector3::zeros()]) } else { bounds };
            let camera = match (lat, lon, radius) {
                (Some(la), Some(lo), Some(r)) => {
                    if !(r > 0.0) {
                        return Err(Error::invalid("--radius must be positive"));
                    }
                    let p = Placement {
                        latitude_deg: la,
                        longitude_deg: lo,
                        radius: r,
                    };
                    camera_from_spherical(&asset.base, bounds.center(), &p)
                }
                _ => {
                    let s = seed::derive(root, Stage::ObjectCamera, 0);
                    sample_camera_object_centric(&asset.base, &bounds, &intr, s).0
                }
            };
            let sample = raycast_depth(&asset, &config, &camera, &intr)?;
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write_depth_png(&dir.join("depth.png"), &sample.depth, intr.width, intr.height)?;
            let sidecar = serde_json::to_vec_pretty(&DepthSidecar::of(&sample)).expect("json");
            let side_path = dir.join("depth.json");
            std::fs::write(&side_path, sidecar).map_err(|e| Error::io(&side_path, e))?;
            write_cloud_ply(&dir.join("cloud.ply"), &sample)?;
            emit(
                out,
                json!({
                    "width": intr.width,
                    "height": intr.height,
                    "points": sample.cloud.len(),
                    "joint_config": config.0,
                    "camera": sample.camera,
                }),
            )
        }
        Command::EvalDepth {
            est,
            gt,
            disparity,
            focal,
            baseline,
        } => {
            let (e, ew, eh) = read_depth_png(&est)?;
            let (g, gw, gh) = read_depth_png(&gt)?;
            if (ew, eh) != (gw, gh) {
                return Err(Error::invalid(format!("image sizes differ: {ew}x{eh} vs {gw}x{gh}")));
            }
            let disp = disparity.then(|| {
                (depth_to_disparity(&e, focal, baseline), depth_to_disparity(&g, focal, baseline))
            });
            let m = depth_metrics(&DepthPair {
                estimate: e,
                truth: g,
                disparity: disp,
            })?;
            emit(out, serde_json::to_value(m).expect("json"))
        }
        Command::EvalPoses {
            poses,
            asset,
            part,
            scene,
            min_quality,
            mu_grid,
        } => {
            let reader = ArchiveReader::open(&poses)?;
            let asset = open_asset(&asset)?;
            let grid = match mu_grid {
                Some(m) => FrictionGrid::new(m)?,
                None => evaluation_grid(),
            };
            let ids: Vec<String> = match part {
                Some(p) => vec![p],
                None => reader.part_ids().iter().map(|s| s.to_string()).collect(),
            };
            let mut reports = serde_json::Map::new();
            for id in ids {
                let idx = asset
                    .part_index(&id)
                    .ok_or_else(|| Error::invalid(format!("asset has no part {id}")))?;
                let mut cands: Vec<_> = reader.poses(&id)?.iter().map(|r| r.to_candidate()).collect();
                if let Some(k) = scene {
                    let flags = reader.flags(k, &id)?;
                    for (c, f) in cands.iter_mut().zip(flags) {
                        c.collision_free = f & FLAG_COLLISION_FREE != 0;
                    }
                }
                if let Some(q) = min_quality {
                    cands.retain(|c| c.quality > q);
                }
                let target = ContactTarget::new(asset.parts[idx].mesh()?);
                let report = precision_at_mu(
                    &cands,
                    &reader.manifest.sampling.depth_values,
                    &target,
                    &reader.manifest.gripper,
                    &grid,
                )?;
                reports.insert(id, serde_json::to_value(report).expect("json"));
            }
            emit(out, serde_json::Value::Object(reports))
        }
        Command::BenchFilter {
            threads,
            seed: root,
            n,
            cloud_points,
            naive_stride,
        } => {
            let sampling = SamplingConfig {
                n,
                ..SamplingConfig::default()
            };
            sampling.validate()?;
            let problem = bench_problem(root, &sampling, cloud_points)?;
            let mut cands = problem.candidates.clone();
            let report = filter_batch(
                &mut cands,
                &problem.depth_values,
                &problem.scene,
                &problem.gripper,
                &FilterConfig {
                    threads,
                    ..FilterConfig::default()
                },
            );
            let mut value = serde_json::to_value(report).expect("json");
            value["cloud_points"] = json!(problem.scene.points.len());
            if let Some(stride) = naive_stride {
                let mut small = subsample(&problem.candidates, stride);
                let start = std::time::Instant::now();
                let counts = filter_reference(
                    &mut small,
                    &problem.depth_values,
                    &problem.scene,
                    &problem.gripper,
                    crate::filter::DEFAULT_TAU,
                );
                let naive_ms = start.elapsed().as_secs_f64() * 1e3;
                let mut fast = subsample(&problem.candidates, stride);
                let r = filter_batch(
                    &mut fast,
                    &problem.depth_values,
                    &problem.scene,
                    &problem.gripper,
                    &FilterConfig {
                        threads,
                        ..FilterConfig::default()
                    },
                );
                let fast_ms = r.stage_ms.unreasonable + r.stage_ms.collision;
                value["naive"] = json!({
                    "stride": stride,
                    "counts": counts,
                    "naive_ms": naive_ms,
                    "batch_ms": fast_ms,
                    "speedup": naive_ms / fast_ms.max(1e-9),
                    "identical": fast == small,
                });
            }
            emit(out, value)
        }
        Command::ExportPoses {
            poses,
            part,
            out: path,
            limit,
            min_quality,
        } => {
            let reader = ArchiveReader::open(&poses)?;
            let gripper = reader.manifest.gripper.clone();
            let mut glyphs = Vec::new();
            for r in reader.poses(&part)?.iter().filter(|r| r.quality as f64 > min_quality).take(limit) {
                let c = r.to_candidate();
                glyphs.extend(gripper_glyph(&gripper, c.width, &c.pose()));
            }
            let mesh = TriMesh::concat(&glyphs);
            save_mesh(&path, &mesh)?;
            emit(
                out,
                json!({ "glyphs": glyphs.len() / 3, "triangles": mesh.faces.len(), "out": path.display().to_string() }),
            )
        }
    }
}

/// Fingers and palm of a posed gripper as closed box meshes.
pub fn gripper_glyph(gripper: &GripperModel, width: f64, pose: &Pose) -> Vec<TriMesh> {
    let vol = GripperVolume::new(gripper, width);
    [vol.fingers[0], vol.fingers[1], vol.palm]
        .iter()
        .map(|b| hexahedron(b.corners().map(|c| pose.transform_point(&c.into()).coords)))
        .collect()
}
