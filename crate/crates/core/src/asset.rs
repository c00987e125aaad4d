//! Articulated assets: links, joints, GAParts, forward kinematics.
//!
//! Assets are described by a JSON document:
//!
//! ```json
//! {
//!   "id": "cabinet_0001",
//!   "links":  [{ "name": "base", "meshes": ["base.obj"] }, { "name": "door", "meshes": [] }],
//!   "joints": [{ "name": "hinge", "parent": "base", "child": "door", "kind": "revolute",
//!                "axis": [0, 0, 1], "origin": [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1],
//!                "limits": [0.0, 1.57] }],
//!   "parts":  [{ "part_id": "door_0", "semantic_class": "hinge-door", "owning_link": "door",
//!                "meshes": ["door_a.obj", "door_b.ply"], "actionable": true }]
//! }
//! ```
//!
//! Mesh paths are relative to the asset file. `origin` is a row-major 4x4
//! parent-to-child transform. Fixed joints carry no `limits`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::{Path, PathBuf};

use nalgebra::{Translation3, Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{pose_from_row_major, pose_to_row_major, Aabb, Pose, Vec3};
use crate::mesh::{self, TriMesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemanticClass {
    LineFixedHandle,
    RoundFixedHandle,
    HingeHandle,
    SliderButton,
    HingeKnob,
    SliderDrawer,
    SliderLid,
    HingeLid,
    HingeDoor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    pub mesh_files: Vec<String>,
    pub meshes: Vec<TriMesh>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: usize,
    pub child: usize,
    pub kind: JointKind,
    pub axis: Vec3,
    pub origin: Pose,
    /// `(lower, upper)`; `None` for fixed joints.
    pub limits: Option<(f64, f64)>,
}

impl Joint {
    /// Closed interval of admissible values (a fixed joint admits only 0).
    pub fn range(&self) -> (f64, f64) {
        self.limits.unwrap_or((0.0, 0.0))
    }

    /// Parent-to-child transform at joint value `q`.
    pub fn transform(&self, q: f64) -> Pose {
        let motion = match self.kind {
            JointKind::Fixed => Pose::identity(),
            JointKind::Revolute => Pose::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_axis_angle(&Unit::new_unchecked(self.axis), q),
            ),
            JointKind::Prismatic => Pose::from_parts(
                Translation3::from(self.axis * q),
                UnitQuaternion::identity(),
            ),
        };
        self.origin * motion
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaPart {
    pub part_id: String,
    pub semantic_class: SemanticClass,
    pub owning_link: usize,
    pub mesh_files: Vec<String>,
    pub source_meshes: Vec<TriMesh>,
    /// Set by [`fuse_part_meshes`]; expressed in the owning link's frame.
    pub fused_mesh: Option<TriMesh>,
    pub actionable: bool,
}

impl GaPart {
    pub fn mesh(&self) -> Result<&TriMesh> {
        self.fused_mesh
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("part {} has not been fused", self.part_id)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArticulatedAsset {
    pub id: String,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub parts: Vec<GaPart>,
    pub root: usize,
    pub base: Pose,
    /// Joint indices ordered so every parent link is placed before its child.
    order: Vec<usize>,
}

/// One value per joint, in the asset's joint order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointConfig(pub Vec<f64>);

/// World-frame transforms of every link and part.
#[derive(Clone, Debug)]
pub struct Kinematics {
    pub links: Vec<Pose>,
    pub parts: Vec<Pose>,
}

#[derive(Serialize, Deserialize)]
struct LinkDoc {
    name: String,
    #[serde(default)]
    meshes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct JointDoc {
    name: String,
    parent: String,
    child: String,
    kind: JointKind,
    #[serde(default = "default_axis")]
    axis: [f64; 3],
    #[serde(default = "identity_row_major")]
    origin: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    limits: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct PartDoc {
    part_id: String,
    semantic_class: SemanticClass,
    owning_link: String,
    #[serde(default)]
    meshes: Vec<String>,
    #[serde(default = "default_true")]
    actionable: bool,
}

#[derive(Serialize, Deserialize)]
struct AssetDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<Vec<f64>>,
    links: Vec<LinkDoc>,
    #[serde(default)]
    joints: Vec<JointDoc>,
    #[serde(default)]
    parts: Vec<PartDoc>,
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn identity_row_major() -> Vec<f64> {
    pose_to_row_major(&Pose::identity()).to_vec()
}

fn default_true() -> bool {
    true
}

fn parse_pose(values: &[f64], what: &str) -> Result<Pose> {
    let m: [f64; 16] = values
        .try_into()
        .map_err(|_| Error::invalid(format!("{what}: expected 16 values")))?;
    pose_from_row_major(&m).ok_or_else(|| Error::invalid(format!("{what}: not a rigid transform")))
}

/// Loads and validates an asset description. Part meshes are loaded but not fused.
pub fn load_asset(path: &Path) -> Result<ArticulatedAsset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: AssetDoc = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let id = doc.id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    build_asset(doc, id, |file| {
        let p = dir.join(file);
        if !p.is_file() {
            return Err(Error::invalid(format!("missing mesh file {}", p.display())));
        }
        mesh::load_mesh(&p)
    })
}

/// Builds an asset from in-memory meshes keyed by file name (used by demos and tests).
pub fn asset_from_json(json: &str, meshes: &HashMap<String, TriMesh>) -> Result<ArticulatedAsset> {
    let doc: AssetDoc =
        serde_json::from_str(json).map_err(|e| Error::parse("<memory>", e.to_string()))?;
    let id = doc.id.clone().unwrap_or_default();
    build_asset(doc, id, |file| {
        meshes
            .get(file)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("missing mesh file {file}")))
    })
}

fn build_asset(
    doc: AssetDoc,
    id: String,
    mut load: impl FnMut(&str) -> Result<TriMesh>,
) -> Result<ArticulatedAsset> {
    let mut seen_files = HashSet::new();
    let mut check_file = |f: &str| -> Result<()> {
        if !seen_files.insert(f.to_owned()) {
            return Err(Error::invalid(format!("mesh file {f} referenced more than once")));
        }
        Ok(())
    };

    let mut link_index = HashMap::new();
    let mut links = Vec::with_capacity(doc.links.len());
    for l in doc.links {
        if link_index.insert(l.name.clone(), links.len()).is_some() {
            return Err(Error::invalid(format!("duplicate link name {}", l.name)));
        }
        let mut meshes = Vec::new();
        for f in &l.meshes {
            check_file(f)?;
            meshes.push(load(f)?);
        }
        links.push(Link {
            name: l.name,
            mesh_files: l.meshes,
            meshes,
        });
    }
    if links.is_empty() {
        return Err(Error::invalid("asset has no links"));
    }

    let link = |name: &str, what: &str| {
        link_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("{what} references unknown link {name}")))
    };

    let mut joints = Vec::with_capacity(doc.joints.len());
    let mut joint_names = HashSet::new();
    for j in doc.joints {
        if !joint_names.insert(j.name.clone()) {
            return Err(Error::invalid(format!("duplicate joint name {}", j.name)));
        }
        let what = format!("joint {}", j.name);
        let parent = link(&j.parent, &what)?;
        let child = link(&j.child, &what)?;
        let axis = Vec3::from(j.axis);
        let limits = match (j.kind, j.limits) {
            (JointKind::Fixed, None) => None,
            (JointKind::Fixed, Some(_)) => {
                return Err(Error::invalid(format!("{what}: fixed joints have no limits")))
            }
            (_, None) => return Err(Error::invalid(format!("{what}: missing limits"))),
            (_, Some([lo, hi])) => {
                if !(lo <= hi) {
                    return Err(Error::invalid(format!(
                        "{what}: lower limit {lo} exceeds upper limit {hi}"
                    )));
                }
                Some((lo, hi))
            }
        };
        if j.kind != JointKind::Fixed && (axis.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("{what}: axis is not unit length")));
        }
        joints.push(Joint {
            name: j.name,
            parent,
            child,
            kind: j.kind,
            axis,
            origin: parse_pose(&j.origin, &what)?,
            limits,
        });
    }

    let mut parts = Vec::with_capacity(doc.parts.len());
    let mut part_ids = HashSet::new();
    for p in doc.parts {
        if !part_ids.insert(p.part_id.clone()) {
            return Err(Error::invalid(format!("duplicate part id {}", p.part_id)));
        }
        let owning_link = link(&p.owning_link, &format!("part {}", p.part_id))?;
        let mut source_meshes = Vec::new();
        for f in &p.meshes {
            check_file(f)?;
            source_meshes.push(load(f)?);
        }
        parts.push(GaPart {
            part_id: p.part_id,
            semantic_class: p.semantic_class,
            owning_link,
            mesh_files: p.meshes,
            source_meshes,
            fused_mesh: None,
            actionable: p.actionable,
        });
    }

    let base = match &doc.base {
        Some(v) => parse_pose(v, "base")?,
        None => Pose::identity(),
    };
    let (root, order) = tree_order(&links, &joints)?;
    Ok(ArticulatedAsset {
        id,
        links,
        joints,
        parts,
        root,
        base,
        order,
    })
}

/// Checks that links and joints form a rooted tree; returns the root and a
/// parent-before-child joint order.
fn tree_order(links: &[Link], joints: &[Joint]) -> Result<(usize, Vec<usize>)> {
    let mut parent_joint = vec![None; links.len()];
    for (ji, j) in joints.iter().enumerate() {
        if j.parent == j.child {
            return Err(Error::invalid(format!("joint {} connects a link to itself", j.name)));
        }
        if parent_joint[j.child].replace(ji).is_some() {
            return Err(Error::invalid(format!(
                "link {} has more than one parent joint",
                links[j.child].name
            )));
        }
    }
    let roots: Vec<usize> = (0..links.len()).filter(|&l| parent_joint[l].is_none()).collect();
    let root = match roots.as_slice() {
        [r] => *r,
        [] => return Err(Error::invalid("link graph has a cycle (no root link)")),
        _ => return Err(Error::invalid("link graph has more than one root")),
    };
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); links.len()];
    for (ji, j) in joints.iter().enumerate() {
        children[j.parent].push(ji);
    }
    let mut order = Vec::with_capacity(joints.len());
    let mut queue = VecDeque::from([root]);
    let mut visited = vec![false; links.len()];
    visited[root] = true;
    while let Some(l) = queue.pop_front() {
        for &ji in &children[l] {
            let c = joints[ji].child;
            if visited[c] {
                return Err(Error::invalid("link graph has a cycle"));
            }
            visited[c] = true;
            order.push(ji);
            queue.push_back(c);
        }
    }
    if order.len() != joints.len() {
        return Err(Error::invalid("link graph has a cycle"));
    }
    Ok((root, order))
}

impl ArticulatedAsset {
    /// Configuration with every joint at the value closest to zero within its limits.
    pub fn rest_config(&self) -> JointConfig {
        JointConfig(
            self.joints
                .iter()
                .map(|j| {
                    let (lo, hi) = j.range();
                    0.0f64.clamp(lo, hi)
                })
                .collect(),
        )
    }

    pub fn check_config(&self, config: &JointConfig) -> Result<()> {
        if config.0.len() != self.joints.len() {
            return Err(Error::invalid(format!(
                "joint config has {} values, asset has {} joints",
                config.0.len(),
                self.joints.len()
            )));
        }
        for (j, &v) in self.joints.iter().zip(&config.0) {
            let (lo, hi) = j.range();
            if !(lo <= v && v <= hi) {
                return Err(Error::invalid(format!(
                    "joint {} value {v} outside limits [{lo}, {hi}]",
                    j.name
                )));
            }
        }
        Ok(())
    }

    pub fn forward_kinematics(&self, config: &JointConfig) -> Result<Kinematics> {
        self.check_config(config)?;
        let mut links = vec![Pose::identity(); self.links.len()];
        links[self.root] = self.base;
        for &ji in &self.order {
            let j = &self.joints[ji];
            links[j.child] = links[j.parent] * j.transform(config.0[ji]);
        }
        let parts = self.parts.iter().map(|p| links[p.owning_link]).collect();
        Ok(Kinematics { links, parts })
    }

    pub fn part_index(&self, part_id: &str) -> Option<usize> {
        self.parts.iter().position(|p| p.part_id == part_id)
    }

    /// World bounds of all geometry at the given configuration.
    pub fn world_bounds(&self, kin: &Kinematics) -> Aabb {
        let mut b = Aabb::empty();
        for (li, l) in self.links.iter().enumerate() {
            for m in &l.meshes {
                b = b.union(&m.bounds().transformed(&kin.links[li]));
            }
        }
        for (pi, p) in self.parts.iter().enumerate() {
            for m in part_geometry(p) {
                b = b.union(&m.bounds().transformed(&kin.parts[pi]));
            }
        }
        b
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or(Path::new("."));
        let doc = AssetDoc {
            id: Some(self.id.clone()),
            base: (self.base != Pose::identity()).then(|| pose_to_row_major(&self.base).to_vec()),
            links: self
                .links
                .iter()
                .map(|l| LinkDoc {
                    name: l.name.clone(),
                    meshes: l.mesh_files.clone(),
                })
                .collect(),
            joints: self
                .joints
                .iter()
                .map(|j| JointDoc {
                    name: j.name.clone(),
                    parent: self.links[j.parent].name.clone(),
                    child: self.links[j.child].name.clone(),
                    kind: j.kind,
                    axis: j.axis.into(),
                    origin: pose_to_row_major(&j.origin).to_vec(),
                    limits: j.limits.map(|(a, b)| [a, b]),
                })
                .collect(),
            parts: self
                .parts
                .iter()
                .map(|p| PartDoc {
                    part_id: p.part_id.clone(),
                    semantic_class: p.semantic_class,
                    owning_link: self.links[p.owning_link].name.clone(),
                    meshes: p.mesh_files.clone(),
                    actionable: p.actionable,
                })
                .collect(),
        };
        let mesh_pairs = self
            .links
            .iter()
            .flat_map(|l| l.mesh_files.iter().zip(&l.meshes))
            .chain(
                self.parts
                    .iter()
                    .flat_map(|p| p.mesh_files.iter().zip(&p.source_meshes)),
            );
        for (file, m) in mesh_pairs {
            let target: PathBuf = dir.join(file);
            if let Some(parent) = target.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            mesh::save_mesh(&target, m)?;
        }
        let json = serde_json::to_string_pretty(&doc).expect("asset document serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

/// Fused mesh when available, otherwise the raw source meshes.
pub(crate) fn part_geometry(p: &GaPart) -> Vec<&TriMesh> {
    match &p.fused_mesh {
        Some(m) => vec![m],
        None => p.source_meshes.iter().collect(),
    }
}

/// Gives every part a single welded mesh.
pub fn fuse_part_meshes(mut asset: ArticulatedAsset) -> Result<ArticulatedAsset> {
    for p in &mut asset.parts {
        if p.source_meshes.is_empty() {
            return Err(Error::invalid(format!("part {} has no meshes", p.part_id)));
        }
        let fused = mesh::fuse(&p.source_meshes);
        if fused.is_empty() {
            return Err(Error::invalid(format!(
                "part {} has no non-degenerate triangles",
                p.part_id
            )));
        }
        p.fused_mesh = Some(fused);
    }
    Ok(asset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;
    use std::f64::consts::FRAC_PI_2;

    fn meshes(names: &[&str]) -> HashMap<String, TriMesh> {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let o = i as f64;
                (n.to_string(), box_mesh(Vec3::repeat(o), Vec3::repeat(o + 0.1)))
            })
            .collect()
    }

    const DOOR: &str = r#"{
        "id": "cab",
        "links": [{"name": "base", "meshes": ["base.obj"]}, {"name": "door"}],
        "joints": [{"name": "hinge", "parent": "base", "child": "door", "kind": "revolute",
                    "axis": [0, 0, 1], "limits": [-0.5, 1.5]}],
        "parts": [{"part_id": "d0", "semantic_class": "hinge-door", "owning_link": "door",
                   "meshes": ["door.obj"]}]
    }"#;

    #[test]
    fn minimal_one_link_asset() {
        let a = asset_from_json(r#"{"links": [{"name": "base"}]}"#, &HashMap::new()).unwrap();
        assert_eq!(a.links.len(), 1);
        assert!(a.parts.is_empty());
    }

    #[test]
    fn fixed_joint_two_links() {
        let json = r#"{"links": [{"name": "a"}, {"name": "b"}],
            "joints": [{"name": "f", "parent": "a", "child": "b", "kind": "fixed"}]}"#;
        let a = asset_from_json(json, &HashMap::new()).unwrap();
        assert_eq!(a.joints[0].limits, None);
        let kin = a.forward_kinematics(&JointConfig(vec![0.0])).unwrap();
        assert_eq!(kin.links[1], Pose::identity());
    }

    #[test]
    fn door_fields_round_trip() {
        let a = asset_from_json(DOOR, &meshes(&["base.obj", "door.obj"])).unwrap();
        assert_eq!(a.joints[0].limits, Some((-0.5, 1.5)));
        assert_eq!(a.parts[0].semantic_class, SemanticClass::HingeDoor);
        assert!(a.parts[0].actionable);
    }

    #[test]
    fn lower_above_upper_rejected() {
        let bad = DOOR.replace("[-0.5, 1.5]", "[1.0, 0.5]");
        let err = asset_from_json(&bad, &meshes(&["base.obj", "door.obj"])).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn cycle_rejected() {
        let json = r#"{"links": [{"name": "a"}, {"name": "b"}],
            "joints": [{"name": "x", "parent": "a", "child": "b", "kind": "fixed"},
                       {"name": "y", "parent": "b", "child": "a", "kind": "fixed"}]}"#;
        assert!(matches!(
            asset_from_json(json, &HashMap::new()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn missing_mesh_rejected() {
        assert!(matches!(
            asset_from_json(DOOR, &meshes(&["base.obj"])),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(
            asset_from_json("{links: ", &HashMap::new()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn revolute_quarter_turn_maps_x_to_y() {
        let wide = DOOR.replace("[-0.5, 1.5]", "[-0.5, 1.6]");
        let a = asset_from_json(&wide, &meshes(&["base.obj", "door.obj"])).unwrap();
        let kin = a.forward_kinematics(&JointConfig(vec![FRAC_PI_2])).unwrap();
        let p = kin.links[1].transform_point(&Vec3::x().into());
        assert!((p.coords - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn prismatic_translates_along_axis() {
        let json = r#"{"links": [{"name": "a"}, {"name": "b"}],
            "joints": [{"name": "s", "parent": "a", "child": "b", "kind": "prismatic",
                        "axis": [1, 0, 0], "limits": [0, 0.5]}]}"#;
        let a = asset_from_json(json, &HashMap::new()).unwrap();
        let kin = a.forward_kinematics(&JointConfig(vec![0.3])).unwrap();
        assert!((kin.links[1].translation.vector - Vec3::new(0.3, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn out_of_limit_config_rejected() {
        let a = asset_from_json(DOOR, &meshes(&["base.obj", "door.obj"])).unwrap();
        assert!(a.forward_kinematics(&JointConfig(vec![2.0])).is_err());
    }

    #[test]
    fn zero_config_identity_origins_give_identity() {
        let a = asset_from_json(DOOR, &meshes(&["base.obj", "door.obj"])).unwrap();
        let kin = a.forward_kinematics(&JointConfig(vec![0.0])).unwrap();
        assert!(kin.links.iter().all(|p| *p == Pose::identity()));
    }

    #[test]
    fn empty_part_fusion_names_part() {
        let json = r#"{"links": [{"name": "a"}],
            "parts": [{"part_id": "knob7", "semantic_class": "hinge-knob", "owning_link": "a"}]}"#;
        let a = asset_from_json(json, &HashMap::new()).unwrap();
        let err = fuse_part_meshes(a).unwrap_err();
        assert!(err.to_string().contains("knob7"));
    }
}
