//! Quaternion algebra on ℍ, the unit sphere S³ ⊂ ℍ, and the Hopf fibration.
//!
//! Points of S² are unit pure-imaginary quaternions ([`ImVector`]), never
//! spherical angles. Killing fields use the conventions
//!
//! * translation `τ_u(p) = u`
//! * rotation `ρ_u(p) = pu − up = −2 u × p` (rotates at twice unit speed)
//! * left translation `ℓ_u(p) = up`
//! * right translation `r_u(p) = pu`

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to accept a vector as unit length.
pub const UNIT_TOL: f64 = 1e-10;

/// A real quaternion `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn real(w: f64) -> Self {
        Quaternion::new(w, 0.0, 0.0, 0.0)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Euclidean inner product on ℍ ≅ ℝ⁴.
    pub fn dot(self, other: Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inverse(self) -> Option<Self> {
        let n2 = self.norm_sqr();
        (n2 > 0.0).then(|| self.conj() * (1.0 / n2))
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Imaginary part as a vector in ℝ³.
    pub fn imag(self) -> ImVector {
        ImVector::new(self.x, self.y, self.z)
    }

    /// Quaternion exponential, `e^w (cos|v| + sin|v| v/|v|)`.
    pub fn exp(self) -> Self {
        let v = self.imag();
        let theta = v.norm();
        let ew = self.w.exp();
        let sinc = if theta < 1e-8 {
            1.0 - theta * theta / 6.0
        } else {
            theta.sin() / theta
        };
        Quaternion::new(ew * theta.cos(), ew * sinc * v.x, ew * sinc * v.y, ew * sinc * v.z)
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product.
    fn mul(self, q: Quaternion) -> Quaternion {
        let p = self;
        Quaternion::new(
            p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
            p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
            p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
            p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, q: Quaternion) -> Quaternion {
        Quaternion::new(self.w + q.w, self.x + q.x, self.y + q.y, self.z + q.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, q: Quaternion) {
        *self = *self + q;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, q: Quaternion) -> Quaternion {
        Quaternion::new(self.w - q.w, self.x - q.x, self.y - q.y, self.z - q.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i + {}j + {}k", self.w, self.x, self.y, self.z)
    }
}

/// Pure-imaginary quaternion, identified with ℝ³ = T₁S³.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ImVector {
    pub const ZERO: ImVector = ImVector::new(0.0, 0.0, 0.0);
    pub const I: ImVector = ImVector::new(1.0, 0.0, 0.0);
    pub const J: ImVector = ImVector::new(0.0, 1.0, 0.0);
    pub const K: ImVector = ImVector::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        ImVector { x, y, z }
    }

    pub fn dot(self, o: ImVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: ImVector) -> ImVector {
        ImVector::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> ImVector {
        ImVector::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn normalized(self) -> Option<ImVector> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    /// Horizontal part (component orthogonal to `k`).
    pub fn horizontal(self) -> ImVector {
        ImVector::new(self.x, self.y, 0.0)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        ImVector::new(a[0], a[1], a[2])
    }

    pub fn quat(self) -> Quaternion {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    /// `e^{v}` as a unit quaternion.
    pub fn exp(self) -> UnitQuaternion {
        UnitQuaternion::renormalize(self.quat().exp())
    }

    fn require_unit(self, what: &str) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
            return Err(Error::param(format!("{what} must be a unit vector, |{what}| = {n}")));
        }
        Ok(())
    }
}

impl From<ImVector> for Quaternion {
    fn from(v: ImVector) -> Quaternion {
        v.quat()
    }
}

impl Add for ImVector {
    type Output = ImVector;
    fn add(self, o: ImVector) -> ImVector {
        ImVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for ImVector {
    fn add_assign(&mut self, o: ImVector) {
        *self = *self + o;
    }
}

impl Sub for ImVector {
    type Output = ImVector;
    fn sub(self, o: ImVector) -> ImVector {
        ImVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for ImVector {
    type Output = ImVector;
    fn neg(self) -> ImVector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for ImVector {
    type Output = ImVector;
    fn mul(self, s: f64) -> ImVector {
        self.scale(s)
    }
}

/// A point of S³: a quaternion of unit length.
///
/// Every constructor and product renormalizes, so drift stays at rounding level
/// even through long path-ordered products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitQuaternion(Quaternion);

impl Default for UnitQuaternion {
    fn default() -> Self {
        UnitQuaternion::IDENTITY
    }
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion(Quaternion::ONE);

    /// Accepts `q` if it is unit length within [`UNIT_TOL`].
    pub fn new(q: Quaternion) -> Result<Self> {
        let n = q.norm();
        if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
            return Err(Error::param(format!("|q| = {n} is not 1")));
        }
        Ok(UnitQuaternion(q.scale(1.0 / n)))
    }

    /// Projects a nonzero quaternion onto S³.
    pub fn renormalize(q: Quaternion) -> Self {
        let n = q.norm();
        debug_assert!(n > 0.0, "cannot normalize the zero quaternion");
        UnitQuaternion(q.scale(1.0 / n))
    }

    pub fn quat(self) -> Quaternion {
        self.0
    }

    pub fn inverse(self) -> Self {
        UnitQuaternion(self.0.conj())
    }

    /// Conjugation `p v p⁻¹` of an imaginary vector (a rotation by `p`).
    pub fn rotate(self, v: ImVector) -> ImVector {
        (self.0 * v.quat() * self.0.conj()).imag()
    }

    /// Geodesic distance in S³.
    pub fn distance(self, other: UnitQuaternion) -> f64 {
        self.0.dot(other.0).clamp(-1.0, 1.0).acos()
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;
    fn mul(self, o: UnitQuaternion) -> UnitQuaternion {
        UnitQuaternion::renormalize(self.0 * o.0)
    }
}

impl Mul<Quaternion> for UnitQuaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        self.0 * o
    }
}

impl Mul<UnitQuaternion> for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: UnitQuaternion) -> Quaternion {
        self * o.0
    }
}

/// The four families of Killing fields used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KillingKind {
    /// τ_u on ℝ³.
    Translation,
    /// ρ_u on ℝ³.
    Rotation,
    /// ℓ_u on S³.
    LeftTranslation,
    /// r_u on S³.
    RightTranslation,
}

impl KillingKind {
    pub fn lives_on_s3(self) -> bool {
        matches!(self, KillingKind::LeftTranslation | KillingKind::RightTranslation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KillingField {
    pub kind: KillingKind,
    pub axis: ImVector,
}

impl KillingField {
    pub fn new(kind: KillingKind, axis: ImVector) -> Self {
        KillingField { kind, axis }
    }

    pub fn translation(axis: ImVector) -> Self {
        Self::new(KillingKind::Translation, axis)
    }

    pub fn rotation(axis: ImVector) -> Self {
        Self::new(KillingKind::Rotation, axis)
    }

    pub fn left(axis: ImVector) -> Self {
        Self::new(KillingKind::LeftTranslation, axis)
    }

    pub fn right(axis: ImVector) -> Self {
        Self::new(KillingKind::RightTranslation, axis)
    }

    /// Value at a point of ℝ³ (translations and rotations only).
    pub fn at_r3(&self, p: ImVector) -> Result<ImVector> {
        match self.kind {
            KillingKind::Translation => Ok(self.axis),
            KillingKind::Rotation => {
                let u = self.axis.quat();
                let p = p.quat();
                Ok((p * u - u * p).imag())
            }
            _ => Err(Error::param("S³ Killing field evaluated at a point of ℝ³")),
        }
    }

    /// Value at a point of S³ (left and right translations only).
    pub fn at_s3(&self, p: UnitQuaternion) -> Result<Quaternion> {
        let u = self.axis.quat();
        match self.kind {
            KillingKind::LeftTranslation => Ok(u * p),
            KillingKind::RightTranslation => Ok(p * u),
            _ => Err(Error::param("ℝ³ Killing field evaluated at a point of S³")),
        }
    }
}

/// A point in the domain of some Killing field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmbientPoint {
    R3(ImVector),
    S3(UnitQuaternion),
}

/// Evaluates the defining algebraic formula of `field` at `p`.
pub fn killing_eval(field: &KillingField, p: AmbientPoint) -> Result<Quaternion> {
    match p {
        AmbientPoint::R3(v) => field.at_r3(v).map(ImVector::quat),
        AmbientPoint::S3(q) => field.at_s3(q),
    }
}

/// The `u`-Hopf projection `Π_u(p) = p u p⁻¹`.
pub fn hopf_project(p: UnitQuaternion, u: ImVector) -> Result<ImVector> {
    u.require_unit("u")?;
    let v = p.rotate(u);
    Ok(v.normalized().unwrap_or(v))
}

/// `Π_k`, the projection used for boundary classification.
pub fn hopf_k(p: UnitQuaternion) -> ImVector {
    p.rotate(ImVector::K)
}

/// Differential of `Π_k` applied to a left-translation field:
/// `dΠ_k(ℓ_u(p)) = 2 u × Π_k(p)`, i.e. `−ρ_u` at `Π_k(p)`.
pub fn d_hopf(p: UnitQuaternion, field: &KillingField) -> Result<ImVector> {
    if field.kind != KillingKind::LeftTranslation {
        return Err(Error::param(format!(
            "d_hopf is defined for left translations, got {:?}",
            field.kind
        )));
    }
    Ok(field.axis.cross(hopf_k(p)).scale(2.0))
}

/// Great-circle distance on S², with the inner product clamped to [−1, 1].
pub fn geodesic_distance_s2(v: ImVector, w: ImVector) -> Result<f64> {
    v.require_unit("v")?;
    w.require_unit("w")?;
    Ok(unit_distance(v, w))
}

/// Distance between two vectors already known to be unit length.
///
/// Uses `atan2(|v×w|, v·w)`, which keeps full precision near 0 and π.
pub(crate) fn unit_distance(v: ImVector, w: ImVector) -> f64 {
    let c = v.dot(w).clamp(-1.0, 1.0);
    let s = v.cross(w).norm();
    s.atan2(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: Quaternion, b: Quaternion, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn multiplication_table() {
        use Quaternion as Q;
        assert_eq!(Q::I * Q::J, Q::K);
        assert_eq!(Q::J * Q::K, Q::I);
        assert_eq!(Q::K * Q::I, Q::J);
        for e in [Q::I, Q::J, Q::K] {
            assert_eq!(e * e, -Q::ONE);
        }
    }

    #[test]
    fn unit_inverse_pair() {
        let p = Quaternion::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0);
        let q = Quaternion::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0, 0.0);
        assert!(close(p * q, Quaternion::ONE, 1e-15));
    }

    #[test]
    fn exp_of_quarter_turn() {
        let e = Quaternion::K.scale(FRAC_PI_2).exp();
        assert!(close(e, Quaternion::K, 1e-15));
    }

    #[test]
    fn hopf_examples() {
        let k = ImVector::K;
        assert_eq!(hopf_project(UnitQuaternion::IDENTITY, k).unwrap(), k);
        for t in [0.0, 0.3, 1.7, 4.0] {
            let p = k.scale(t).exp();
            let v = hopf_project(p, k).unwrap();
            assert!((v - k).norm() < 1e-15);
        }
        let p = ImVector::I.scale(FRAC_PI_4).exp();
        let v = hopf_project(p, k).unwrap();
        assert!((v - ImVector::new(0.0, -1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hopf_rejects_non_unit_axis() {
        let err = hopf_project(UnitQuaternion::IDENTITY, ImVector::new(0.0, 0.0, 2.0));
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn d_hopf_examples() {
        let one = UnitQuaternion::IDENTITY;
        let v = d_hopf(one, &KillingField::left(ImVector::I)).unwrap();
        assert!((v - ImVector::new(0.0, -2.0, 0.0)).norm() < 1e-15);
        let v = d_hopf(one, &KillingField::left(ImVector::K)).unwrap();
        assert_eq!(v.norm(), 0.0);
        assert!(d_hopf(one, &KillingField::right(ImVector::K)).is_err());
    }

    #[test]
    fn killing_examples() {
        let rho = KillingField::rotation(ImVector::I);
        let v = killing_eval(&rho, AmbientPoint::R3(ImVector::J)).unwrap();
        assert!(close(v, Quaternion::K.scale(-2.0), 1e-15));
        let one = AmbientPoint::S3(UnitQuaternion::IDENTITY);
        assert_eq!(killing_eval(&KillingField::left(ImVector::K), one).unwrap(), Quaternion::K);
        assert_eq!(killing_eval(&KillingField::right(ImVector::K), one).unwrap(), Quaternion::K);
        let u = ImVector::new(0.2, -0.4, 0.9);
        let tau = KillingField::translation(u);
        for p in [ImVector::ZERO, ImVector::new(3.0, 1.0, -2.0)] {
            assert_eq!(killing_eval(&tau, AmbientPoint::R3(p)).unwrap(), u.quat());
        }
        assert!(killing_eval(&tau, one).is_err());
        assert!(killing_eval(&KillingField::left(u), AmbientPoint::R3(u)).is_err());
    }

    #[test]
    fn distance_examples() {
        let k = ImVector::K;
        assert_eq!(geodesic_distance_s2(k, k).unwrap(), 0.0);
        assert!((geodesic_distance_s2(k, -k).unwrap() - PI).abs() < 1e-15);
        assert!((geodesic_distance_s2(ImVector::I, ImVector::J).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!(geodesic_distance_s2(k, k.scale(1.1)).is_err());
    }

    #[test]
    fn unit_quaternion_stays_unit() {
        let mut p = UnitQuaternion::IDENTITY;
        let step = ImVector::new(0.013, -0.021, 0.007).exp();
        for _ in 0..100_000 {
            p = p * step;
        }
        assert!((p.quat().norm() - 1.0).abs() <= 1e-12);
    }
}
