//! Small geometric vocabulary shared by every stage.

use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Pose = Isometry3<f64>;

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    /// Radius of the sphere centered at `center()` enclosing the box.
    pub fn bounding_radius(&self) -> f64 {
        self.extent().norm() * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }

    pub fn transformed(&self, pose: &Pose) -> Aabb {
        if self.is_empty() {
            return *self;
        }
        let corners = self.corners().map(|c| pose * nalgebra::Point3::from(c));
        let mut out = Aabb::empty();
        for c in &corners {
            out.grow(&c.coords);
        }
        out
    }
}

/// Builds a pose from a rotation matrix whose columns are the frame axes.
pub fn pose_from_axes(x: Vec3, y: Vec3, z: Vec3, origin: Vec3) -> Pose {
    let m = Mat3::from_columns(&[x, y, z]);
    let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m));
    Isometry3::from_parts(Translation3::from(origin), rot)
}

/// Some unit vector orthogonal to `v` (assumed unit length).
pub fn any_orthogonal(v: &Vec3) -> Vec3 {
    let reference = if v.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    v.cross(&reference).normalize()
}

/// Parses a row-major 4x4 rigid transform.
pub fn pose_from_row_major(m: &[f64; 16]) -> Option<Pose> {
    let rot = Mat3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
    let t = Vec3::new(m[3], m[7], m[11]);
    let bottom_ok = m[12] == 0.0 && m[13] == 0.0 && m[14] == 0.0 && (m[15] - 1.0).abs() < 1e-12;
    let orthonormal = (rot.transpose() * rot - Mat3::identity()).abs().max() < 1e-6
        && (rot.determinant() - 1.0).abs() < 1e-6;
    if !bottom_ok || !orthonormal {
        return None;
    }
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(rot));
    Some(Isometry3::from_parts(Translation3::from(t), q))
}

pub fn pose_to_row_major(p: &Pose) -> [f64; 16] {
    let r = p.rotation.to_rotation_matrix();
    let m = r.matrix();
    let t = p.translation.vector;
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        t.x,
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        t.y,
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
        t.z,
        0.0,
        0.0,
        0.0,
        1.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_round_trip() {
        let p = Pose::new(Vec3::new(0.1, -0.2, 0.3), Vec3::new(0.2, 0.5, -0.1));
        let back = pose_from_row_major(&pose_to_row_major(&p)).unwrap();
        assert!((back.to_homogeneous() - p.to_homogeneous()).abs().max() < 1e-12);
    }

    #[test]
    fn rejects_non_rigid() {
        let mut m = pose_to_row_major(&Pose::identity());
        m[0] = 2.0;
        assert!(pose_from_row_major(&m).is_none());
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        for v in [Vec3::x(), Vec3::z(), Vec3::new(1.0, 2.0, 3.0).normalize()] {
            let o = any_orthogonal(&v);
            assert!(o.dot(&v).abs() < 1e-12);
            assert!((o.norm() - 1.0).abs() < 1e-12);
        }
    }
}
