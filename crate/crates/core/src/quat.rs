//! Quaternions, the Hopf fibration and oriented 2-planes in `R^4`.
//!
//! Quaternions are identified with `R^4` through the basis `1, i, j, k`.
//! Oriented 2-planes are stored as unit decomposable bivectors in the
//! coordinates of the orthonormal basis `sqrt(2) v_1, .., sqrt(2) v_6`,
//! where
//!
//! ```text
//! v1 = (1^i - j^k)/2   v2 = (1^j + i^k)/2   v3 = (1^k - i^j)/2
//! v4 = (1^i + j^k)/2   v5 = (1^j - i^k)/2   v6 = (1^k + i^j)/2
//! ```
//!
//! In these coordinates the oriented Grassmannian is the product of two
//! spheres of radius `1/sqrt(2)`: the "minus" half `(x1, x2, x3)` and the
//! "plus" half `(x4, x5, x6)`. Left multiplication by a unit quaternion
//! rotates the plus half and fixes the minus half.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix3;

use crate::{Error, Result, Vec3, Vec4};

const UNIT_TOLERANCE: f64 = 1e-12;
const ROTATION_TOLERANCE: f64 = 1e-10;
const ORTHONORMAL_TOLERANCE: f64 = 1e-9;
const PLANE_TOLERANCE: f64 = 1e-10;

/// A quaternion `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn one() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub const fn i() -> Self {
        Self::new(0.0, 1.0, 0.0, 0.0)
    }

    pub const fn j() -> Self {
        Self::new(0.0, 0.0, 1.0, 0.0)
    }

    pub const fn k() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0)
    }

    /// The pure quaternion `v.x i + v.y j + v.z k`.
    pub fn pure(v: &Vec3) -> Self {
        Self::new(0.0, v.x, v.y, v.z)
    }

    pub fn from_vec4(v: &Vec4) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vec4(self) -> Vec4 {
        Vec4::new(self.w, self.x, self.y, self.z)
    }

    /// Imaginary part as a 3-vector.
    pub fn imag(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_squared(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product: `i j = k`, `j k = i`, `k i = j`.
    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;

    fn mul(self, s: f64) -> Quaternion {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w + b.w, self.x + b.x, self.y + b.y, self.z + b.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;

    fn sub(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w - b.w, self.x - b.x, self.y - b.y, self.z - b.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        self * -1.0
    }
}

/// A point of the three-sphere of unit quaternions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion(Quaternion);

impl UnitQuaternion {
    /// Checks `|q| = 1` to within `1e-12`.
    pub fn new(q: Quaternion) -> Result<Self> {
        let n = q.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit(n));
        }
        Ok(Self(q))
    }

    pub fn new_normalize(q: Quaternion) -> Result<Self> {
        let n = q.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotUnit(n));
        }
        Ok(Self(q * (1.0 / n)))
    }

    pub const fn identity() -> Self {
        Self(Quaternion::one())
    }

    pub fn quaternion(self) -> Quaternion {
        self.0
    }

    pub fn to_vec4(self) -> Vec4 {
        self.0.to_vec4()
    }

    pub fn conj(self) -> Self {
        Self(self.0.conj())
    }

    /// Rotation of a 3-vector: imaginary part of `q v q̄`.
    pub fn rotate(self, v: &Vec3) -> Vec3 {
        (self.0 * Quaternion::pure(v) * self.0.conj()).imag()
    }

    /// The Hopf map `q ↦ q i q̄`.
    pub fn hopf(self) -> Vec3 {
        self.rotate(&Vec3::x())
    }

    /// `q j q̄`, the unit tangent of the projected great circle `C(q, kappa)`.
    pub fn hopf_tangent(self) -> Vec3 {
        self.rotate(&Vec3::y())
    }

    /// The rotation `x ↦ q x q̄`; its columns are `q i q̄`, `q j q̄`, `q k q̄`.
    pub fn sigma(self) -> RotationMatrix {
        let Quaternion { w, x, y, z } = self.0;
        RotationMatrix(Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ))
    }

    /// The point at angle `t` on the oriented great circle `C(q, kappa)`
    /// through `q` in the direction `q u(kappa)`.
    pub fn great_circle_point(self, kappa: f64, t: f64) -> UnitQuaternion {
        let u = direction_quaternion(kappa);
        let (s, c) = t.sin_cos();
        UnitQuaternion(self.0 * c + (self.0 * u) * s)
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, b: UnitQuaternion) -> UnitQuaternion {
        UnitQuaternion(self.0 * b.0)
    }
}

impl Neg for UnitQuaternion {
    type Output = UnitQuaternion;

    fn neg(self) -> UnitQuaternion {
        UnitQuaternion(-self.0)
    }
}

/// `u(kappa) = (kappa i + k) / sqrt(1 + kappa^2)`.
pub fn direction_quaternion(kappa: f64) -> Quaternion {
    let s = 1.0 / (1.0 + kappa * kappa).sqrt();
    Quaternion::new(0.0, kappa * s, 0.0, s)
}

/// A 3x3 special orthogonal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    /// Checks orthogonality and `det = +1` to within `1e-10`.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let defect = (m.transpose() * m - Matrix3::identity()).abs().max();
        if !(defect <= ROTATION_TOLERANCE) || (m.determinant() - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::NotRotation);
        }
        Ok(Self(m))
    }

    /// The rotation with the given columns.
    pub fn from_columns(c0: &Vec3, c1: &Vec3, c2: &Vec3) -> Result<Self> {
        Self::new(Matrix3::from_columns(&[*c0, *c1, *c2]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }

    /// A unit quaternion `q` with `sigma(q) = self`.
    ///
    /// The branch is picked from the largest of the trace and the diagonal
    /// entries. The sign is fixed by `w >= 0`; when `w` vanishes the first
    /// nonzero component is made positive.
    pub fn to_quaternion(&self) -> UnitQuaternion {
        let r = &self.0;
        let trace = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
        let q = if trace >= r[(0, 0)] && trace >= r[(1, 1)] && trace >= r[(2, 2)] {
            let w = 0.5 * (1.0 + trace).sqrt();
            let f = 0.25 / w;
            Quaternion::new(w, (r[(2, 1)] - r[(1, 2)]) * f, (r[(0, 2)] - r[(2, 0)]) * f, (r[(1, 0)] - r[(0, 1)]) * f)
        } else if r[(0, 0)] >= r[(1, 1)] && r[(0, 0)] >= r[(2, 2)] {
            let x = 0.5 * (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt();
            let f = 0.25 / x;
            Quaternion::new((r[(2, 1)] - r[(1, 2)]) * f, x, (r[(0, 1)] + r[(1, 0)]) * f, (r[(0, 2)] + r[(2, 0)]) * f)
        } else if r[(1, 1)] >= r[(2, 2)] {
            let y = 0.5 * (1.0 - r[(0, 0)] + r[(1, 1)] - r[(2, 2)]).sqrt();
            let f = 0.25 / y;
            Quaternion::new((r[(0, 2)] - r[(2, 0)]) * f, (r[(0, 1)] + r[(1, 0)]) * f, y, (r[(1, 2)] + r[(2, 1)]) * f)
        } else {
            let z = 0.5 * (1.0 - r[(0, 0)] - r[(1, 1)] + r[(2, 2)]).sqrt();
            let f = 0.25 / z;
            Quaternion::new((r[(1, 0)] - r[(0, 1)]) * f, (r[(0, 2)] + r[(2, 0)]) * f, (r[(1, 2)] + r[(2, 1)]) * f, z)
        };
        let q = q * (1.0 / q.norm());
        UnitQuaternion(canonical_sign(q))
    }
}

fn canonical_sign(q: Quaternion) -> Quaternion {
    let lead = [q.w, q.x, q.y, q.z].into_iter().find(|c| *c != 0.0).unwrap_or(0.0);
    if lead < 0.0 {
        -q
    } else {
        q
    }
}

/// A bivector of `Λ²R⁴` in the coordinates of the basis `sqrt(2) v_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bivector(pub [f64; 6]);

impl Bivector {
    /// Coordinates of the oriented plane spanned by the orthonormal pair
    /// `(a, b)`.
    pub fn from_plane(a: &Vec4, b: &Vec4) -> Result<Self> {
        let orthonormal = (a.norm_squared() - 1.0).abs() <= ORTHONORMAL_TOLERANCE
            && (b.norm_squared() - 1.0).abs() <= ORTHONORMAL_TOLERANCE
            && a.dot(b).abs() <= ORTHONORMAL_TOLERANCE;
        if !orthonormal {
            return Err(Error::NotOrthonormal);
        }
        Ok(Self::wedge(a, b))
    }

    /// Coordinates of `a ∧ b` without checking orthonormality.
    pub fn wedge(a: &Vec4, b: &Vec4) -> Self {
        let m = |u: usize, v: usize| a[u] * b[v] - a[v] * b[u];
        let (b01, b02, b03) = (m(0, 1), m(0, 2), m(0, 3));
        let (b12, b13, b23) = (m(1, 2), m(1, 3), m(2, 3));
        let s = FRAC_1_SQRT_2;
        Self([(b01 - b23) * s, (b02 + b13) * s, (b03 - b12) * s, (b01 + b23) * s, (b02 - b13) * s, (b03 + b12) * s])
    }

    /// Builds a bivector from its minus and plus halves.
    pub fn from_halves(minus: &Vec3, plus: &Vec3) -> Self {
        Self([minus.x, minus.y, minus.z, plus.x, plus.y, plus.z])
    }

    pub fn minus(&self) -> Vec3 {
        Vec3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn plus(&self) -> Vec3 {
        Vec3::new(self.0[3], self.0[4], self.0[5])
    }

    /// The same plane with the opposite orientation.
    pub fn reversed(&self) -> Self {
        Self(self.0.map(|c| -c))
    }

    /// Whether both halves have norm `1/sqrt(2)` to within `1e-10`, i.e. the
    /// bivector is a unit decomposable one.
    pub fn is_plane(&self) -> bool {
        (self.minus().norm_squared() - 0.5).abs() <= PLANE_TOLERANCE
            && (self.plus().norm_squared() - 0.5).abs() <= PLANE_TOLERANCE
    }

    /// Antisymmetric matrix `B_{μν}` with `B = a bᵀ - b aᵀ`.
    fn antisymmetric(&self) -> [[f64; 4]; 4] {
        let [x1, x2, x3, x4, x5, x6] = self.0;
        let s = FRAC_1_SQRT_2;
        let b01 = (x1 + x4) * s;
        let b23 = (x4 - x1) * s;
        let b02 = (x2 + x5) * s;
        let b13 = (x2 - x5) * s;
        let b03 = (x3 + x6) * s;
        let b12 = (x6 - x3) * s;
        [[0.0, b01, b02, b03], [-b01, 0.0, b12, b13], [-b02, -b12, 0.0, b23], [-b03, -b13, -b23, 0.0]]
    }

    /// An oriented orthonormal basis `(a, b)` of the plane.
    pub fn to_plane(&self) -> Result<(Vec4, Vec4)> {
        if !self.is_plane() {
            return Err(Error::NotAPlane);
        }
        let m = self.antisymmetric();
        let apply = |v: &Vec4| Vec4::from_fn(|r, _| (0..4).map(|c| m[r][c] * v[c]).sum::<f64>());
        // For B = a∧b the map v ↦ B v sends a to -b and b to a, so any
        // nonzero image lies in the plane.
        let best = (0..4)
            .map(|c| Vec4::from_fn(|r, _| m[r][c]))
            .max_by(|u, v| u.norm_squared().total_cmp(&v.norm_squared()))
            .expect("four columns");
        let a = best.normalize();
        let b = -apply(&a);
        let b = (b - a * a.dot(&b)).normalize();
        Ok((a, b))
    }
}
