//! Algebra on the order-parameter space of symmetric traceless 3x3 tensors.
//!
//! A [`QTensor`] stores five coefficients in the fixed orthonormal basis
//!
//! ```text
//! E1 = diag(-1, -1, 2) / sqrt(6)
//! E2 = diag( 1, -1, 0) / sqrt(2)
//! E3 = (e_x e_y + e_y e_x) / sqrt(2)
//! E4 = (e_x e_z + e_z e_x) / sqrt(2)
//! E5 = (e_y e_z + e_z e_y) / sqrt(2)
//! ```
//!
//! The basis is part of the file formats and must not change. Because it is
//! orthonormal for the Frobenius product, `|Q|` equals the Euclidean norm of
//! the coefficient vector.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, Real};
use crate::vec3::{self, Mat3, Vec3};

/// Symmetric traceless 3x3 tensor in coefficient form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QTensor<T> {
    c: [T; 5],
}

/// Isotropy class of a tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Isotropic,
    Uniaxial,
    Biaxial,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Isotropic => "isotropic",
            Phase::Uniaxial => "uniaxial",
            Phase::Biaxial => "biaxial",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Spectral summary of a tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralData<T> {
    /// Eigenvalues sorted in descending order.
    pub eigenvalues: [T; 3],
    /// Scalar order parameter `3 tr(Q^3) / |Q|^2` (zero when isotropic).
    pub s: T,
    /// Director, sign-normalized. Arbitrary unit vector when isotropic.
    pub n: Vec3<T>,
    pub beta: T,
    pub phase: Phase,
}

/// Default isotropy / uniaxiality tolerance for [`QTensor::decompose`].
pub const DEFAULT_PHASE_TOL: f64 = 1e-9;

impl<T: Real> QTensor<T> {
    pub fn zero() -> Self {
        Self { c: [T::zero(); 5] }
    }

    pub fn from_coeffs(c: [T; 5]) -> Self {
        Self { c }
    }

    pub fn coeffs(&self) -> [T; 5] {
        self.c
    }

    /// Orthogonal projection of an arbitrary matrix onto the space: the
    /// symmetric part with its trace removed.
    pub fn from_matrix(m: &Mat3<T>) -> Self {
        let r2 = T::SQRT_2();
        let r6 = lit::<T>(6.0).sqrt();
        let two = lit::<T>(2.0);
        Self {
            c: [
                (two * m[2][2] - m[0][0] - m[1][1]) / r6,
                (m[0][0] - m[1][1]) / r2,
                (m[0][1] + m[1][0]) / r2,
                (m[0][2] + m[2][0]) / r2,
                (m[1][2] + m[2][1]) / r2,
            ],
        }
    }

    /// Reconstructed matrix; symmetric and traceless by construction.
    pub fn to_matrix(&self) -> Mat3<T> {
        let [c1, c2, c3, c4, c5] = self.c;
        let k1 = T::one() / lit::<T>(6.0).sqrt();
        let k2 = T::FRAC_1_SQRT_2();
        let xx = -c1 * k1 + c2 * k2;
        let yy = -c1 * k1 - c2 * k2;
        let zz = -(xx + yy);
        let xy = c3 * k2;
        let xz = c4 * k2;
        let yz = c5 * k2;
        [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]]
    }

    pub fn norm_sq(&self) -> T {
        self.c.iter().fold(T::zero(), |acc, &x| acc + x * x)
    }

    /// Frobenius norm `|Q|`.
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> T {
        (0..5).fold(T::zero(), |acc, k| acc + self.c[k] * other.c[k])
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    /// `(tr Q^2, tr Q^3)`.
    pub fn invariants(&self) -> (T, T) {
        let m = self.to_matrix();
        // tr(M^3) = 3 det(M) for traceless M.
        (self.norm_sq(), lit::<T>(3.0) * vec3::det(&m))
    }

    /// `s (n n^T - I/3)`. Fails unless `|n| = 1` within `1e-10`.
    pub fn uniaxial(s: T, n: &Vec3<T>) -> Result<Self> {
        let len = vec3::norm(n);
        if !(len - T::one()).abs().le(&lit(1e-10)) {
            return Err(invalid(format!(
                "director must be a unit vector, got |n| = {len}"
            )));
        }
        Ok(Self::uniaxial_unchecked(s, n))
    }

    pub(crate) fn uniaxial_unchecked(s: T, n: &Vec3<T>) -> Self {
        let third = T::one() / lit(3.0);
        let mut m = vec3::outer(n, n);
        for (i, row) in m.iter_mut().enumerate() {
            for x in row.iter_mut() {
                *x = *x * s;
            }
            row[i] = row[i] - s * third;
        }
        Self::from_matrix(&m)
    }

    /// Biaxiality `1 - 6 tr(Q^3)^2 / |Q|^6`, clamped to `[0, 1]`; zero for
    /// the zero tensor.
    pub fn biaxiality(&self) -> T {
        let (tr2, tr3) = self.invariants();
        if tr2 <= T::zero() {
            return T::zero();
        }
        let beta = T::one() - lit::<T>(6.0) * tr3 * tr3 / (tr2 * tr2 * tr2);
        beta.max(T::zero()).min(T::one())
    }

    /// Eigenvalues (descending) and the matching orthonormal eigenvectors.
    ///
    /// Closed-form trigonometric roots of the characteristic polynomial,
    /// polished by one Newton step each.
    pub fn eigen(&self) -> ([T; 3], [Vec3<T>; 3]) {
        let m = self.to_matrix();
        let tr2 = self.norm_sq();
        let unit = [
            [T::one(), T::zero(), T::zero()],
            [T::zero(), T::one(), T::zero()],
            [T::zero(), T::zero(), T::one()],
        ];
        if tr2 <= T::min_positive_value() {
            return ([T::zero(); 3], unit);
        }
        let det = vec3::det(&m);
        let p = (tr2 / lit(6.0)).sqrt();
        let r = (det / (p * p * p) / lit(2.0)).max(-T::one()).min(T::one());
        let phi = r.acos() / lit(3.0);
        let two_pi_3 = lit::<T>(2.0) * T::PI() / lit(3.0);
        let mut l1 = lit::<T>(2.0) * p * phi.cos();
        let mut l3 = lit::<T>(2.0) * p * (phi + two_pi_3).cos();

        // char poly of traceless M: f(x) = x^3 - (tr2 / 2) x - det
        let polish = |x: T| {
            let f = x * x * x - tr2 / lit(2.0) * x - det;
            let df = lit::<T>(3.0) * x * x - tr2 / lit(2.0);
            if df.abs() > lit::<T>(1e-3) * tr2 {
                x - f / df
            } else {
                x
            }
        };
        l1 = polish(l1);
        l3 = polish(l3);
        let l2 = -(l1 + l3);
        let vals = [l1, l2, l3];

        // The eigenvalue farthest from the other two is the best conditioned;
        // compute its vector first and complete the frame from it.
        let gap1 = l1 - l2;
        let gap3 = l2 - l3;
        let mut vecs = unit;
        if gap1 >= gap3 {
            let v1 = kernel_vector(&m, l1);
            let v3 = orthogonal_kernel_vector(&m, l3, &v1);
            vecs[0] = v1;
            vecs[2] = v3;
            vecs[1] = vec3::cross(&v3, &v1);
        } else {
            let v3 = kernel_vector(&m, l3);
            let v1 = orthogonal_kernel_vector(&m, l1, &v3);
            vecs[0] = v1;
            vecs[2] = v3;
            vecs[1] = vec3::cross(&v3, &v1);
        }
        (vals, vecs)
    }

    /// Spectral decomposition: scalar order parameter, director, biaxiality
    /// and phase. `tol` is the isotropy threshold on `|Q|` and the
    /// uniaxiality threshold on the biaxiality.
    pub fn decompose(&self, tol: T) -> SpectralData<T> {
        let norm_sq = self.norm_sq();
        let (vals, vecs) = self.eigen();
        if norm_sq.sqrt() < tol {
            return SpectralData {
                eigenvalues: vals,
                s: T::zero(),
                n: [T::zero(), T::zero(), T::one()],
                beta: T::zero(),
                phase: Phase::Isotropic,
            };
        }
        let (_, tr3) = self.invariants();
        let s = lit::<T>(3.0) * tr3 / norm_sq;
        let beta = self.biaxiality();
        let n = if vals[0].abs() >= vals[2].abs() {
            vecs[0]
        } else {
            vecs[2]
        };
        SpectralData {
            eigenvalues: vals,
            s,
            n: normalize_sign(&n),
            beta,
            phase: if beta < tol {
                Phase::Uniaxial
            } else {
                Phase::Biaxial
            },
        }
    }

    /// `g Q g^T`.
    pub fn rotate(&self, g: &Rotation<T>) -> Self {
        let m = self.to_matrix();
        let gm = vec3::mat_mul(&g.m, &m);
        Self::from_matrix(&vec3::mat_mul(&gm, &vec3::transpose(&g.m)))
    }

    /// Matrix square projected back onto the space: `Q^2 - |Q|^2/3 I`.
    pub fn square_traceless(&self) -> Self {
        let m = self.to_matrix();
        Self::from_matrix(&vec3::mat_mul(&m, &m))
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            c: self.c.map(|x| x * k),
        }
    }
}

/// Unit vector spanning the kernel of `m - lambda I` for a simple eigenvalue.
fn kernel_vector<T: Real>(m: &Mat3<T>, lambda: T) -> Vec3<T> {
    let mut a = *m;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = row[i] - lambda;
    }
    let candidates = [
        vec3::cross(&a[0], &a[1]),
        vec3::cross(&a[1], &a[2]),
        vec3::cross(&a[2], &a[0]),
    ];
    let best = candidates
        .iter()
        .copied()
        .max_by(|x, y| {
            vec3::dot(x, x)
                .partial_cmp(&vec3::dot(y, y))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or([T::zero(), T::zero(), T::one()]);
    vec3::normalize(&best).unwrap_or([T::zero(), T::zero(), T::one()])
}

/// Eigenvector for `lambda` restricted to the plane orthogonal to `v`.
fn orthogonal_kernel_vector<T: Real>(m: &Mat3<T>, lambda: T, v: &Vec3<T>) -> Vec3<T> {
    let candidate = kernel_vector(m, lambda);
    let proj = vec3::sub(&candidate, &vec3::scale(v, vec3::dot(&candidate, v)));
    if let Some(u) = vec3::normalize(&proj).filter(|_| vec3::norm(&proj) > lit(1e-6)) {
        return u;
    }
    // Degenerate pair: any vector orthogonal to v will do.
    let trial = if v[0].abs() < lit(0.9) {
        [T::one(), T::zero(), T::zero()]
    } else {
        [T::zero(), T::one(), T::zero()]
    };
    let u = vec3::cross(v, &trial);
    vec3::normalize(&u).unwrap_or(trial)
}

/// Flips `n` so that its first non-negligible component is positive.
pub fn normalize_sign<T: Real>(n: &Vec3<T>) -> Vec3<T> {
    let eps = lit::<T>(1e-12);
    for &x in n {
        if x.abs() > eps {
            return if x < T::zero() {
                vec3::scale(n, -T::one())
            } else {
                *n
            };
        }
    }
    *n
}

impl<T: Real> Add for QTensor<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            c: std::array::from_fn(|k| self.c[k] + o.c[k]),
        }
    }
}

impl<T: Real> Sub for QTensor<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            c: std::array::from_fn(|k| self.c[k] - o.c[k]),
        }
    }
}

impl<T: Real> Neg for QTensor<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul<T> for QTensor<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

impl<T: Real> AddAssign for QTensor<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for QTensor<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

/// Comma-separated coefficients with 17 significant digits.
impl<T: Real> fmt::Display for QTensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, x) in self.c.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", format_real(*x))?;
        }
        Ok(())
    }
}

impl<T: Real> FromStr for QTensor<T> {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected 5 coefficients, found {}", parts.len()),
            });
        }
        let mut c = [T::zero(); 5];
        for (slot, part) in c.iter_mut().zip(&parts) {
            *slot = parse_real(part).ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("not a number: {part:?}"),
            })?;
        }
        Ok(Self { c })
    }
}

/// Decimal text with 17 significant digits (round-trips any `f64`).
pub fn format_real<T: Real>(x: T) -> String {
    let v = x.as_f64();
    if v == 0.0 {
        // keep the sign of -0.0 out of the files
        "0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_real<T: Real>(text: &str) -> Option<T> {
    text.trim().parse::<f64>().ok().map(T::lit)
}

/// Proper rotation `g` in SO(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation<T> {
    m: Mat3<T>,
}

impl<T: Real> Rotation<T> {
    /// Validates `g^T g = I` and `det g = 1`.
    pub fn new(m: Mat3<T>) -> Result<Self> {
        let tol = T::epsilon().sqrt() * lit(1e-2);
        let gtg = vec3::mat_mul(&vec3::transpose(&m), &m);
        let id = vec3::identity::<T>();
        for i in 0..3 {
            for j in 0..3 {
                if (gtg[i][j] - id[i][j]).abs() > tol {
                    return Err(invalid("matrix is not orthogonal"));
                }
            }
        }
        if (vec3::det(&m) - T::one()).abs() > tol {
            return Err(invalid("matrix is not a proper rotation (det != 1)"));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: vec3::identity(),
        }
    }

    /// Right-handed rotation by `angle` about `axis` (Rodrigues).
    pub fn about_axis(axis: &Vec3<T>, angle: T) -> Result<Self> {
        let k = vec3::normalize(axis).ok_or_else(|| invalid("zero rotation axis"))?;
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        let [x, y, z] = k;
        Ok(Self {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        })
    }

    /// Rotation of the unit quaternion `(w, x, y, z)` (normalized here).
    pub fn from_quaternion(q: [T; 4]) -> Result<Self> {
        let len = q.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
        if !(len > T::zero()) {
            return Err(invalid("zero quaternion"));
        }
        let [w, x, y, z] = q.map(|v| v / len);
        let two = lit::<T>(2.0);
        Ok(Self {
            m: [
                [
                    T::one() - two * (y * y + z * z),
                    two * (x * y - z * w),
                    two * (x * z + y * w),
                ],
                [
                    two * (x * y + z * w),
                    T::one() - two * (x * x + z * z),
                    two * (y * z - x * w),
                ],
                [
                    two * (x * z - y * w),
                    two * (y * z + x * w),
                    T::one() - two * (x * x + y * y),
                ],
            ],
        })
    }

    /// The 24 rotations mapping the coordinate axes onto themselves.
    pub fn axis_aligned() -> Vec<Self> {
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut out = Vec::with_capacity(24);
        for p in perms {
            for signs in 0..8u32 {
                let mut m = vec3::zero_mat::<T>();
                for (row, &col) in p.iter().enumerate() {
                    let neg = signs & (1 << row) != 0;
                    m[row][col] = if neg { -T::one() } else { T::one() };
                }
                if vec3::det(&m) > T::zero() {
                    out.push(Self { m });
                }
            }
        }
        out
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.m
    }

    pub fn apply(&self, v: &Vec3<T>) -> Vec3<T> {
        vec3::mat_vec(&self.m, v)
    }

    pub fn inverse(&self) -> Self {
        Self {
            m: vec3::transpose(&self.m),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            m: vec3::mat_mul(&self.m, &other.m),
        }
    }

    /// True when every entry is exactly 0 or +-1.
    pub fn is_signed_permutation(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|&x| x == T::zero() || x.abs() == T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(a: f64, b: f64, c: f64) -> QTensor<f64> {
        QTensor::from_matrix(&[[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    const EX: [f64; 3] = [1.0, 0.0, 0.0];
    const EY: [f64; 3] = [0.0, 1.0, 0.0];
    const EZ: [f64; 3] = [0.0, 0.0, 1.0];

    #[test]
    fn basis_is_orthonormal_and_traceless() {
        for k in 0..5 {
            let mut c = [0.0f64; 5];
            c[k] = 1.0;
            let m = QTensor::from_coeffs(c).to_matrix();
            assert_eq!(m[0][0] + m[1][1] + m[2][2], 0.0);
            assert!((vec3::frobenius(&m) - 1.0).abs() < 1e-15);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(m[i][j], m[j][i]);
                }
            }
            assert!((QTensor::from_matrix(&m).coeffs()[k] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invariants_examples() {
        assert_eq!(QTensor::<f64>::zero().invariants(), (0.0, 0.0));
        let (a, b) = diag(2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0).invariants();
        assert!((a - 2.0 / 3.0).abs() < 1e-15 && (b - 2.0 / 9.0).abs() < 1e-15);
        let (a, b) = diag(0.5, -0.5, 0.0).invariants();
        assert!((a - 0.5).abs() < 1e-15 && b.abs() < 1e-16);
    }

    #[test]
    fn uniaxial_examples() {
        assert_eq!(QTensor::uniaxial(0.0, &EY).unwrap().norm(), 0.0);
        let q = QTensor::uniaxial(1.0, &EX).unwrap();
        assert!((q - diag(2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0)).norm() < 1e-15);
        let q = QTensor::uniaxial(-2.0, &EZ).unwrap();
        assert!((q - diag(2.0 / 3.0, 2.0 / 3.0, -4.0 / 3.0)).norm() < 1e-15);
        assert!(matches!(
            QTensor::uniaxial(1.0, &[1.0, 1.0, 0.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn decompose_examples() {
        let d = diag(2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0).decompose(1e-9);
        assert_eq!(d.phase, Phase::Uniaxial);
        assert!((d.s - 1.0).abs() < 1e-14);
        assert!((d.n[0] - 1.0).abs() < 1e-14);
        assert!(d.beta < 1e-14);

        let d = diag(0.5, -0.5, 0.0).decompose(1e-9);
        assert_eq!(d.phase, Phase::Biaxial);
        assert!(d.s.abs() < 1e-15);
        assert!((d.beta - 1.0).abs() < 1e-15);

        let d = QTensor::<f64>::zero().decompose(1e-9);
        assert_eq!(d.phase, Phase::Isotropic);
        assert_eq!(d.s, 0.0);
        assert!((vec3::norm(&d.n) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn director_sign_convention() {
        let q = QTensor::uniaxial(0.7f64, &[0.0, -0.6, 0.8]).unwrap();
        let d = q.decompose(1e-9);
        assert!(d.n[0].abs() < 1e-14);
        assert!((d.n[1] - 0.6).abs() < 1e-12 && (d.n[2] + 0.8).abs() < 1e-12);
    }

    #[test]
    fn biaxiality_examples() {
        assert_eq!(QTensor::<f64>::zero().biaxiality(), 0.0);
        assert!((diag(0.5, -0.5, 0.0).biaxiality() - 1.0).abs() < 1e-15);
        let q = QTensor::uniaxial(-3.2, &[0.48, 0.6, 0.64]).unwrap();
        assert!(q.biaxiality() < 1e-12);
    }

    #[test]
    fn rotate_examples() {
        let q = QTensor::uniaxial(1.3, &[0.48, 0.6, 0.64]).unwrap();
        assert!((q.rotate(&Rotation::identity()) - q).norm() < 1e-15);
        let rz = Rotation::about_axis(&EZ, std::f64::consts::FRAC_PI_2).unwrap();
        let r = QTensor::uniaxial(1.0, &EX).unwrap().rotate(&rz);
        assert!((r - QTensor::uniaxial(1.0, &EY).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn axis_aligned_group() {
        let g = Rotation::<f64>::axis_aligned();
        assert_eq!(g.len(), 24);
        for r in &g {
            assert!(r.is_signed_permutation());
            Rotation::new(*r.matrix()).unwrap();
        }
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]).is_err());
        assert!(Rotation::new([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let q = QTensor::from_coeffs([0.1, -1.0 / 3.0, std::f64::consts::PI, 1e-300, -7.25e12]);
        let back: QTensor<f64> = q.to_string().parse().unwrap();
        assert_eq!(back, q);
        assert!("1,2,3".parse::<QTensor<f64>>().is_err());
        assert!("1,2,3,4,x".parse::<QTensor<f64>>().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let q = QTensor::<f32>::uniaxial(1.5, &[0.0, 0.0, 1.0]).unwrap();
        let d = q.decompose(1e-4);
        assert_eq!(d.phase, Phase::Uniaxial);
        assert!((d.s - 1.5).abs() < 1e-5);
    }
}
