//! Triangle meshes: loading, welding, fusion and surface sampling.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Pose, Vec3};
use crate::ply;

/// Vertex weld tolerance used by mesh fusion (meters).
pub const WELD_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    /// Area-weighted unit vertex normals.
    pub normals: Vec<Vec3>,
}

impl TriMesh {
    /// Builds a mesh, checking face indices and computing vertex normals.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
            return Err(Error::invalid(format!(
                "face {f:?} references a vertex outside 0..{n}"
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid("non-finite vertex coordinate"));
        }
        let normals = vertex_normals(&vertices, &faces);
        Ok(TriMesh {
            vertices,
            faces,
            normals,
        })
    }

    pub fn empty() -> Self {
        TriMesh {
            vertices: Vec::new(),
            faces: Vec::new(),
            normals: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unnormalized face normal (length = twice the area).
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn transformed(&self, pose: &Pose) -> TriMesh {
        TriMesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| pose.transform_point(&(*v).into()).coords)
                .collect(),
            faces: self.faces.clone(),
            normals: self.normals.iter().map(|n| pose.rotation * n).collect(),
        }
    }

    /// Concatenates meshes without welding.
    pub fn concat<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> TriMesh {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        let mut normals = Vec::new();
        for m in meshes {
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            normals.extend_from_slice(&m.normals);
            faces.extend(m.faces.iter().map(|f| f.map(|i| i + base)));
        }
        TriMesh {
            vertices,
            faces,
            normals,
        }
    }

    /// Merges vertices closer than `tol`, drops faces that become degenerate
    /// and vertices no face references, then recomputes normals.
    pub fn welded(&self, tol: f64) -> TriMesh {
        let cell = tol.max(f64::MIN_POSITIVE);
        let key = |v: &Vec3| {
            (
                (v.x / cell).floor() as i64,
                (v.y / cell).floor() as i64,
                (v.z / cell).floor() as i64,
            )
        };
        let mut grid: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        let mut reps: Vec<Vec3> = Vec::new();
        let mut remap = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            let (kx, ky, kz) = key(v);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(ids) = grid.get(&(kx + dx, ky + dy, kz + dz)) {
                            for &id in ids {
                                if (reps[id as usize] - v).norm() <= tol {
                                    found = Some(id);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
            }
            let id = match found {
                Some(id) => id,
                None => {
                    let id = reps.len() as u32;
                    reps.push(*v);
                    grid.entry((kx, ky, kz)).or_default().push(id);
                    id
                }
            };
            remap.push(id);
        }

        let faces: Vec<[u32; 3]> = self
            .faces
            .iter()
            .map(|f| f.map(|i| remap[i as usize]))
            .filter(|[a, b, c]| {
                if a == b || b == c || a == c {
                    return false;
                }
                let (pa, pb, pc) = (reps[*a as usize], reps[*b as usize], reps[*c as usize]);
                (pb - pa).cross(&(pc - pa)).norm() > 0.0
            })
            .collect();

        // Compact away vertices that lost all faces.
        let mut used = vec![false; reps.len()];
        for f in &faces {
            for &i in f {
                used[i as usize] = true;
            }
        }
        let mut new_index = vec![u32::MAX; reps.len()];
        let mut vertices = Vec::new();
        for (i, v) in reps.iter().enumerate() {
            if used[i] {
                new_index[i] = vertices.len() as u32;
                vertices.push(*v);
            }
        }
        let faces: Vec<[u32; 3]> = faces
            .into_iter()
            .map(|f| f.map(|i| new_index[i as usize]))
            .collect();
        let normals = vertex_normals(&vertices, &faces);
        TriMesh {
            vertices,
            faces,
            normals,
        }
    }

    /// Area-weighted uniform surface samples with their face normals.
    pub fn sample_surface<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<(Vec3, Vec3)> {
        let mut cdf = Vec::with_capacity(self.faces.len());
        let mut total = 0.0;
        for f in 0..self.faces.len() {
            total += self.face_area(f);
            cdf.push(total);
        }
        if total <= 0.0 {
            return Vec::new();
        }
        (0..n)
            .map(|_| {
                let r = rng.gen::<f64>() * total;
                let f = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
                let [a, b, c] = self.triangle(f);
                let (u, v): (f64, f64) = (rng.gen(), rng.gen());
                let su = u.sqrt();
                let p = a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v);
                (p, self.face_cross(f).normalize())
            })
            .collect()
    }
}

fn vertex_normals(vertices: &[Vec3], faces: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for f in faces {
        let [a, b, c] = f.map(|i| vertices[i as usize]);
        let n = (b - a).cross(&(c - a));
        for &i in f {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 0.0 && len.is_finite() {
                n / len
            } else {
                Vec3::z()
            }
        })
        .collect()
}

/// Fuses several source meshes of one part into a single welded mesh.
pub fn fuse(meshes: &[TriMesh]) -> TriMesh {
    TriMesh::concat(meshes).welded(WELD_TOLERANCE)
}

/// Loads an OBJ or PLY file (chosen by extension).
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let (vertices, faces) = match ext.as_deref() {
        Some("obj") => read_obj(path)?,
        Some("ply") => {
            let d = ply::read_ply(path)?;
            (d.positions, d.faces)
        }
        _ => {
            return Err(Error::parse(
                path,
                "unsupported mesh extension (expected .obj or .ply)",
            ))
        }
    };
    TriMesh::new(vertices, faces).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn save_mesh(path: &Path, mesh: &TriMesh) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ply") => ply::write_ply(path, &mesh.vertices, &mesh.faces, None),
        _ => std::fs::write(path, obj_string(&mesh.vertices, &mesh.faces))
            .map_err(|e| Error::io(path, e)),
    }
}

pub(crate) fn obj_string(vertices: &[Vec3], faces: &[[u32; 3]]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    for v in vertices {
        writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
    }
    for f in faces {
        writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    s
}

fn read_obj(path: &Path) -> Result<(Vec<Vec3>, Vec<[u32; 3]>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text).map_err(|m| Error::parse(path, m))
}

fn parse_obj(text: &str) -> std::result::Result<(Vec<Vec3>, Vec<[u32; 3]>), String> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| format!("line {}: {e}", lineno + 1))?;
                if c.len() != 3 {
                    return Err(format!("line {}: vertex needs 3 coordinates", lineno + 1));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in tok {
                    // "v", "v/vt", "v//vn", "v/vt/vn"
                    let first = t.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| format!("line {}: bad face index {t}", lineno + 1))?;
                    let resolved = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                    if resolved < 0 {
                        return Err(format!("line {}: face index {i} out of range", lineno + 1));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(format!("line {}: face needs 3 vertices", lineno + 1));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

/// Closed axis-aligned box mesh with outward-facing triangles.
pub fn box_mesh(min: Vec3, max: Vec3) -> TriMesh {
    hexahedron(Aabb { min, max }.corners())
}

/// Closed six-faced solid from corners indexed by bits (x = 1, y = 2, z = 4),
/// i.e. in the order of [`Aabb::corners`]. Outward winding assumes the corners
/// keep the box's orientation.
pub fn hexahedron(corners: [Vec3; 8]) -> TriMesh {
    let vertices = corners.to_vec();
    let faces = vec![
        [0, 2, 1],
        [1, 2, 3], // -z
        [4, 5, 6],
        [5, 7, 6], // +z
        [0, 1, 4],
        [1, 5, 4], // -y
        [2, 6, 3],
        [3, 6, 7], // +y
        [0, 4, 2],
        [2, 4, 6], // -x
        [1, 3, 5],
        [3, 7, 5], // +x
    ];
    TriMesh::new(vertices, faces).expect("hexahedron indices are in range")
}

/// UV sphere, useful for tests and demos.
pub fn uv_sphere(center: Vec3, radius: f64, stacks: usize, slices: usize) -> TriMesh {
    let mut vertices = vec![center + Vec3::z() * radius];
    for i in 1..stacks {
        let phi = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / slices as f64;
            vertices.push(
                center
                    + Vec3::new(
                        phi.sin() * theta.cos(),
                        phi.sin() * theta.sin(),
                        phi.cos(),
                    ) * radius,
            );
        }
    }
    vertices.push(center - Vec3::z() * radius);
    let bottom = (vertices.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * slices + (j % slices)) as u32;
    let mut faces = Vec::new();
    for j in 0..slices {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
        faces.push([bottom, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            faces.push([a, c, b]);
            faces.push([b, c, d]);
        }
    }
    TriMesh::new(vertices, faces).expect("sphere indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn brute_force_distinct(points: &[Vec3], tol: f64) -> usize {
        let mut reps: Vec<Vec3> = Vec::new();
        for p in points {
            if !reps.iter().any(|r| (r - p).norm() <= tol) {
                reps.push(*p);
            }
        }
        reps.len()
    }

    #[test]
    fn two_cubes_sharing_a_face_weld_to_twelve_vertices() {
        let a = box_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        let b = box_mesh(Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 1.0, 1.0));
        let all: Vec<Vec3> = a.vertices.iter().chain(&b.vertices).copied().collect();
        let expected = brute_force_distinct(&all, WELD_TOLERANCE);
        assert_eq!(expected, 12);
        let fused = fuse(&[a.clone(), b.clone()]);
        assert_eq!(fused.vertices.len(), expected);
        assert_eq!(fused.faces.len(), 24);
        let rel = (fused.area() - (a.area() + b.area())).abs() / (a.area() + b.area());
        assert!(rel < 1e-6);
    }

    #[test]
    fn single_mesh_fusion_is_identity() {
        let a = box_mesh(Vec3::zeros(), Vec3::new(0.1, 0.2, 0.3));
        assert_eq!(fuse(std::slice::from_ref(&a)), a);
    }

    #[test]
    fn out_of_range_face_rejected() {
        assert!(TriMesh::new(vec![Vec3::zeros(); 2], vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn welding_drops_collapsed_triangles() {
        let v = vec![Vec3::zeros(), Vec3::new(1e-8, 0.0, 0.0), Vec3::y(), Vec3::x()];
        let m = TriMesh::new(v, vec![[0, 1, 2], [0, 3, 2]]).unwrap();
        let w = m.welded(WELD_TOLERANCE);
        assert_eq!(w.faces.len(), 1);
        assert_eq!(w.vertices.len(), 3);
    }

    #[test]
    fn normals_are_unit() {
        let m = uv_sphere(Vec3::zeros(), 0.3, 8, 12);
        for n in &m.normals {
            assert!((n.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn obj_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.obj");
        let m = box_mesh(Vec3::new(-0.5, 0.0, 0.1), Vec3::new(0.25, 0.5, 0.75));
        save_mesh(&p, &m).unwrap();
        assert_eq!(load_mesh(&p).unwrap(), m);
    }

    #[test]
    fn obj_slash_and_negative_indices() {
        let (v, f) = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 -1\n").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(f, vec![[0, 1, 2]]);
    }

    #[test]
    fn surface_samples_lie_on_box() {
        let m = box_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (p, n) in m.sample_surface(200, &mut rng) {
            let on_face = p.iter().any(|c| c.abs() < 1e-12 || (c - 1.0).abs() < 1e-12);
            assert!(on_face, "{p:?}");
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }
}
