//! On-disk annotation archive.
//!
//! ```text
//! manifest.json               configs, seeds, counts, per-file SHA-256
//! parts/<part_id>.poses       16-byte header + 50-byte pose records
//! scenes/<k>/depth.png        16-bit depth in millimeters
//! scenes/<k>/depth.json       intrinsics, camera pose, ground height
//! scenes/<k>/cloud.ply        camera-frame points with an int part_id
//! scenes/<k>/actioness.bin    u32 n, u32 V, f32 s^P[n], f32 s^V[n·V]
//! scenes/<k>/<part_id>.flags  16-byte header + one flag byte per pose
//! ```
//!
//! Binary headers are an 8-byte magic, a u32 format version and a u32 record
//! size. Every multi-byte value is little-endian.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sampling::{GripperModel, PoseCandidate, SamplingConfig};
use crate::scene::{CameraIntrinsics, DepthSidecar, ViewKind};

pub const FORMAT_VERSION: u32 = 1;
pub const POSE_MAGIC: &[u8; 8] = b"PPOSETBL";
pub const FLAGS_MAGIC: &[u8; 8] = b"PPFLAGS\0";
pub const HEADER_BYTES: usize = 16;
pub const RECORD_BYTES: usize = 50;
/// Bytes used by the record fields; the rest of the record is zero padding.
const RECORD_FIELDS: usize = 47;

pub const FLAG_REASONABLE: u8 = 1;
pub const FLAG_COLLISION_FREE: u8 = 2;

/// One fixed-width pose table row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub point_index: u32,
    pub view_index: u32,
    pub depth_index: u8,
    /// Unit quaternion `(w, x, y, z)`.
    pub rotation: [f32; 4],
    pub translation: [f32; 3],
    pub width: f32,
    pub quality: f32,
    pub reasonable: u8,
    pub collision_free: u8,
}

impl PoseRecord {
    pub fn from_candidate(c: &PoseCandidate) -> Self {
        let q = c.rotation.quaternion();
        PoseRecord {
            point_index: c.point_index,
            view_index: c.view_index,
            depth_index: c.depth_index,
            rotation: [q.w as f32, q.i as f32, q.j as f32, q.k as f32],
            translation: [c.translation.x as f32, c.translation.y as f32, c.translation.z as f32],
            width: c.width as f32,
            quality: c.quality as f32,
            reasonable: c.reasonable as u8,
            collision_free: c.collision_free as u8,
        }
    }

    pub fn to_candidate(&self) -> PoseCandidate {
        let [w, x, y, z] = self.rotation.map(f64::from);
        PoseCandidate {
            point_index: self.point_index,
            view_index: self.view_index,
            depth_index: self.depth_index,
            rotation: nalgebra::UnitQuaternion::new_unchecked(nalgebra::Quaternion::new(w, x, y, z)),
            translation: Vec3::new(
                self.translation[0] as f64,
                self.translation[1] as f64,
                self.translation[2] as f64,
            ),
            width: self.width as f64,
            quality: self.quality as f64,
            reasonable: self.reasonable != 0,
            collision_free: self.collision_free != 0,
        }
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        let start = out.len();
        out.extend_from_slice(&self.point_index.to_le_bytes());
        out.extend_from_slice(&self.view_index.to_le_bytes());
        out.push(self.depth_index);
        for v in self.rotation.iter().chain(&self.translation) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.quality.to_le_bytes());
        out.push(self.reasonable);
        out.push(self.collision_free);
        debug_assert_eq!(out.len() - start, RECORD_FIELDS);
        out.resize(start + RECORD_BYTES, 0);
    }

    pub fn decode(b: &[u8]) -> Self {
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let f32_at = |o: usize| f32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        PoseRecord {
            point_index: u32_at(0),
            view_index: u32_at(4),
            depth_index: b[8],
            rotation: [f32_at(9), f32_at(13), f32_at(17), f32_at(21)],
            translation: [f32_at(25), f32_at(29), f32_at(33)],
            width: f32_at(37),
            quality: f32_at(41),
            reasonable: b[45],
            collision_free: b[46],
        }
    }
}

fn header(magic: &[u8; 8], record: usize) -> Vec<u8> {
    let mut h = Vec::with_capacity(HEADER_BYTES);
    h.extend_from_slice(magic);
    h.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    h.extend_from_slice(&(record as u32).to_le_bytes());
    h
}

pub fn encode_pose_table(records: &[PoseRecord]) -> Vec<u8> {
    let mut out = header(POSE_MAGIC, RECORD_BYTES);
    out.reserve(records.len() * RECORD_BYTES);
    for r in records {
        r.encode(&mut out);
    }
    out
}

/// Validates a table header and returns the body, checking it holds exactly
/// `expected` rows when given.
fn table_body<'a>(
    path: &Path,
    bytes: &'a [u8],
    magic: &[u8; 8],
    record: usize,
    expected: Option<u64>,
) -> Result<&'a [u8]> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Truncated {
            path: path.into(),
            expected: expected.unwrap_or(0),
            found: bytes.len() as u64,
        });
    }
    if &bytes[..8] != magic {
        return Err(Error::parse(path, "bad table magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            path: path.into(),
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let size = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if size != record {
        return Err(Error::parse(path, format!("record size {size}, expected {record}")));
    }
    let body = &bytes[HEADER_BYTES..];
    let whole = body.len() % record == 0;
    let rows = (body.len() / record) as u64;
    if !whole || expected.is_some_and(|e| e != rows) {
        return Err(Error::Truncated {
            path: path.into(),
            expected: expected.unwrap_or(rows),
            found: body.len() as u64,
        });
    }
    Ok(body)
}

pub fn decode_pose_table(path: &Path, bytes: &[u8], expected: Option<u64>) -> Result<Vec<PoseRecord>> {
    let body = table_body(path, bytes, POSE_MAGIC, RECORD_BYTES, expected)?;
    Ok(body.chunks_exact(RECORD_BYTES).map(PoseRecord::decode).collect())
}

pub fn flag_byte(c: &PoseCandidate) -> u8 {
    ((c.reasonable as u8) * FLAG_REASONABLE) | ((c.collision_free as u8) * FLAG_COLLISION_FREE)
}

pub fn encode_flags(flags: &[u8]) -> Vec<u8> {
    let mut out = header(FLAGS_MAGIC, 1);
    out.extend_from_slice(flags);
    out
}

pub fn decode_flags(path: &Path, bytes: &[u8], expected: Option<u64>) -> Result<Vec<u8>> {
    Ok(table_body(path, bytes, FLAGS_MAGIC, 1, expected)?.to_vec())
}

/// Scores as stored: f32 point scores then the row-major view matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionessArrays {
    pub views: u32,
    pub point: Vec<f32>,
    pub view: Vec<f32>,
}

impl ActionessArrays {
    pub fn from_labels(l: &crate::actioness::ActionessLabels) -> Self {
        ActionessArrays {
            views: l.views as u32,
            point: l.point_scores.iter().map(|&s| s as f32).collect(),
            view: l.view_scores.iter().map(|&s| s as f32).collect(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * (self.point.len() + self.view.len()));
        out.extend_from_slice(&(self.point.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.views.to_le_bytes());
        for v in self.point.iter().chain(&self.view) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(path: &Path, b: &[u8]) -> Result<Self> {
        if b.len() < 8 {
            return Err(Error::Truncated {
                path: path.into(),
                expected: 0,
                found: b.len() as u64,
            });
        }
        let n = u32::from_le_bytes(b[0..4].try_into().unwrap()) as u64;
        let views = u32::from_le_bytes(b[4..8].try_into().unwrap());
        let want = 8 + 4 * (n + n * views as u64);
        if b.len() as u64 != want {
            return Err(Error::Truncated {
                path: path.into(),
                expected: n,
                found: b.len() as u64,
            });
        }
        let floats: Vec<f32> = b[8..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (point, view) = floats.split_at(n as usize);
        Ok(ActionessArrays {
            views,
            point: point.to_vec(),
            view: view.to_vec(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSettings {
    pub count: usize,
    pub object_views: usize,
    pub part_views: usize,
    pub intrinsics: CameraIntrinsics,
    pub tau: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartEntry {
    pub part_id: String,
    pub records: u64,
    pub points: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneEntry {
    /// Scene (joint configuration) this view belongs to.
    pub scene: usize,
    pub view: ViewKind,
    pub joint_config: Vec<f64>,
    pub points: u64,
    pub camera: DepthSidecar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub asset_id: String,
    /// Asset file as given on the command line, for replay.
    #[serde(default)]
    pub asset_path: Option<String>,
    pub root_seed: u64,
    pub sampling: SamplingConfig,
    pub gripper: GripperModel,
    pub mu_grid: Vec<f64>,
    #[serde(default)]
    pub scenes_config: Option<SceneSettings>,
    pub parts: Vec<PartEntry>,
    pub scenes: Vec<SceneEntry>,
    /// SHA-256 of every file, keyed by archive-relative path.
    pub files: BTreeMap<String, String>,
    /// SHA-256 over the sorted `path:hash` lines of `files`.
    pub checksum: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartTable {
    pub part_id: String,
    pub records: Vec<PoseRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneData {
    pub width: u32,
    pub height: u32,
    /// Depth in millimeters (0 = invalid).
    pub depth_mm: Vec<u16>,
    pub cloud: Vec<[f32; 3]>,
    pub part_ids: Vec<i32>,
    pub actioness: ActionessArrays,
    /// Per-part flag bytes, keyed by part id.
    pub flags: BTreeMap<String, Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationArchive {
    pub manifest: Manifest,
    pub parts: Vec<PartTable>,
    pub scenes: Vec<SceneData>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn overall_checksum(files: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (k, v) in files {
        h.update(k.as_bytes());
        h.update(b":");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

fn write_file(root: &Path, rel: &str, bytes: &[u8], files: &mut BTreeMap<String, String>) -> Result<()> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    files.insert(rel.to_string(), sha256_hex(bytes));
    Ok(())
}

pub fn part_file(part_id: &str) -> String {
    format!("parts/{part_id}.poses")
}

/// Writes the archive, filling in the manifest's file hashes and checksum.
pub fn write_archive(dir: &Path, archive: &AnnotationArchive) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();
    for t in &archive.parts {
        write_file(dir, &part_file(&t.part_id), &encode_pose_table(&t.records), &mut files)?;
    }
    for (k, s) in archive.scenes.iter().enumerate() {
        let entry = archive
            .manifest
            .scenes
            .get(k)
            .ok_or_else(|| Error::invalid("manifest lists fewer scenes than provided"))?;
        let depth: Vec<f64> = s.depth_mm.iter().map(|&d| d as f64 / 1000.0).collect();
        let png = crate::scene::encode_depth_png(&depth, s.width, s.height);
        write_file(dir, &format!("scenes/{k}/depth.png"), &png, &mut files)?;
        let sidecar = serde_json::to_vec_pretty(&entry.camera).expect("sidecar serializes");
        write_file(dir, &format!("scenes/{k}/depth.json"), &sidecar, &mut files)?;
        let cloud: Vec<Vec3> = s
            .cloud
            .iter()
            .map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64))
            .collect();
        let mut ply = Vec::new();
        crate::ply::encode_ply(&mut ply, &cloud, &[], Some(&s.part_ids));
        write_file(dir, &format!("scenes/{k}/cloud.ply"), &ply, &mut files)?;
        write_file(dir, &format!("scenes/{k}/actioness.bin"), &s.actioness.encode(), &mut files)?;
        for (part, flags) in &s.flags {
            write_file(dir, &format!("scenes/{k}/{part}.flags"), &encode_flags(flags), &mut files)?;
        }
    }
    let mut manifest = archive.manifest.clone();
    manifest.format_version = FORMAT_VERSION;
    manifest.checksum = overall_checksum(&files);
    manifest.files = files;
    let path = dir.join("manifest.json");
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.to_string()))?;
    let version = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            path,
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let manifest: Manifest =
        serde_json::from_value(value).map_err(|e| Error::parse(&path, e.to_string()))?;
    if overall_checksum(&manifest.files) != manifest.checksum {
        return Err(Error::Checksum { path });
    }
    Ok(manifest)
}

/// Read-only view over an archive directory.
pub struct ArchiveReader {
    root: PathBuf,
    pub manifest: Manifest,
}

impl ArchiveReader {
    pub fn open(dir: &Path) -> Result<Self> {
        Ok(ArchiveReader {
            root: dir.to_path_buf(),
            manifest: read_manifest(dir)?,
        })
    }

    /// Reads a listed file; structural checks run before the hash check so
    /// truncation and version problems are reported as such.
    fn load(&self, rel: &str, check: impl FnOnce(&Path, &[u8]) -> Result<()>) -> Result<Vec<u8>> {
        let path = self.root.join(rel);
        let want = self
            .manifest
            .files
            .get(rel)
            .ok_or_else(|| Error::parse(&path, "file not listed in the manifest"))?;
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        check(&path, &bytes)?;
        if &sha256_hex(&bytes) != want {
            return Err(Error::Checksum { path });
        }
        Ok(bytes)
    }

    pub fn part_ids(&self) -> Vec<&str> {
        self.manifest.parts.iter().map(|p| p.part_id.as_str()).collect()
    }

    pub fn poses(&self, part_id: &str) -> Result<Vec<PoseRecord>> {
        let entry = self
            .manifest
            .parts
            .iter()
            .find(|p| p.part_id == part_id)
            .ok_or_else(|| Error::invalid(format!("archive has no part {part_id}")))?;
        let rel = part_file(part_id);
        let mut out = Vec::new();
        self.load(&rel, |path, bytes| {
            out = decode_pose_table(path, bytes, Some(entry.records))?;
            Ok(())
        })?;
        Ok(out)
    }

    pub fn flags(&self, scene: usize, part_id: &str) -> Result<Vec<u8>> {
        let expected = self.manifest.parts.iter().find(|p| p.part_id == part_id).map(|p| p.records);
        let mut out = Vec::new();
        self.load(&format!("scenes/{scene}/{part_id}.flags"), |path, bytes| {
            out = decode_flags(path, bytes, expected)?;
            Ok(())
        })?;
        Ok(out)
    }

    pub fn scene(&self, k: usize) -> Result<SceneData> {
        let entry = self
            .manifest
            .scenes
            .get(k)
            .ok_or_else(|| Error::invalid(format!("archive has no scene {k}")))?;
        let (w, h) = (entry.camera.intrinsics.width, entry.camera.intrinsics.height);
        let png = self.load(&format!("scenes/{k}/depth.png"), |_, _| Ok(()))?;
        let depth_mm = decode_depth_png_mm(&self.root.join(format!("scenes/{k}/depth.png")), &png, w, h)?;
        let ply_rel = format!("scenes/{k}/cloud.ply");
        self.load(&ply_rel, |_, _| Ok(()))?;
        let ply = crate::ply::read_ply(&self.root.join(&ply_rel))?;
        let mut act = None;
        self.load(&format!("scenes/{k}/actioness.bin"), |path, bytes| {
            act = Some(ActionessArrays::decode(path, bytes)?);
            Ok(())
        })?;
        let actioness = act.expect("decoded above");
        if actioness.point.len() as u64 != entry.points || ply.positions.len() as u64 != entry.points {
            return Err(Error::parse(
                self.root.join(format!("scenes/{k}")),
                "point counts disagree with the manifest",
            ));
        }
        let mut flags = BTreeMap::new();
        for p in &self.manifest.parts {
            if self.manifest.files.contains_key(&format!("scenes/{k}/{}.flags", p.part_id)) {
                flags.insert(p.part_id.clone(), self.flags(k, &p.part_id)?);
            }
        }
        Ok(SceneData {
            width: w,
            height: h,
            depth_mm,
            cloud: ply
                .positions
                .iter()
                .map(|p| [p.x as f32, p.y as f32, p.z as f32])
                .collect(),
            part_ids: ply.part_ids.unwrap_or_default(),
            actioness,
            flags,
        })
    }

    /// Verifies every listed file against its hash.
    pub fn verify(&self) -> Result<()> {
        for rel in self.manifest.files.keys() {
            self.load(rel, |_, _| Ok(()))?;
        }
        Ok(())
    }
}

fn decode_depth_png_mm(path: &Path, bytes: &[u8], w: u32, h: u32) -> Result<Vec<u16>> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| Error::parse(path, e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    if (info.width, info.height) != (w, h) || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::parse(path, "depth image does not match the sidecar"));
    }
    Ok(buf[..info.buffer_size()]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect())
}

/// Loads and verifies a whole archive.
pub fn read_archive(dir: &Path) -> Result<AnnotationArchive> {
    let reader = ArchiveReader::open(dir)?;
    let parts = reader
        .manifest
        .parts
        .iter()
        .map(|p| {
            Ok(PartTable {
                part_id: p.part_id.clone(),
                records: reader.poses(&p.part_id)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scenes = (0..reader.manifest.scenes.len())
        .map(|k| reader.scene(k))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnnotationArchive {
        manifest: reader.manifest,
        parts,
        scenes,
    })
}
