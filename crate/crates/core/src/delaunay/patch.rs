//! Conformal-grid immersions of surfaces of revolution about the `i`-axis.
//!
//! ```text
//! f(t, φ) = x(t) i + r(t) (cos φ j + sin φ k)
//! ```
//!
//! The metric is `r² (dt² + dφ²)`. The inward normal is
//! `ν = sin ψ i − cos ψ e_rad` and `J ∂_t = ∂_φ`, `J ∂_φ = −∂_t`, so that
//! `∂_t × J ∂_t = r² ν`. The upper half (`φ ∈ [0, π]`) lies in `z ≥ 0` with
//! both boundary curves in the `ij`-plane.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profile::{ProfilePoint, RevolutionProfile, UnitSphere};
use crate::error::{Error, Result};
use crate::fd::Stencil1d;
use crate::quat_s3::{ImVector, UnitQuaternion};

/// Order of the finite-difference stencils used by grid diagnostics.
pub const FD_ORDER: usize = 8;

/// A Euclidean motion `p ↦ R p R⁻¹ + v`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidMotion {
    pub rotation: UnitQuaternion,
    pub translation: ImVector,
}

impl RigidMotion {
    pub fn translation(v: ImVector) -> Self {
        RigidMotion { rotation: UnitQuaternion::IDENTITY, translation: v }
    }

    pub fn rotation(q: UnitQuaternion) -> Self {
        RigidMotion { rotation: q, translation: ImVector::ZERO }
    }

    pub fn apply_point(&self, p: ImVector) -> ImVector {
        self.rotation.rotate(p) + self.translation
    }

    pub fn apply_vector(&self, v: ImVector) -> ImVector {
        self.rotation.rotate(v)
    }

    pub fn is_identity(&self) -> bool {
        *self == RigidMotion::default()
    }
}

/// Geometry at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFrame {
    pub t: f64,
    pub phi: f64,
    pub position: ImVector,
    pub d_t: ImVector,
    pub d_phi: ImVector,
    /// Inward unit normal.
    pub normal: ImVector,
    /// Conformal factor `r` (the metric is `r² (dt² + dφ²)`).
    pub conformal: f64,
    /// Squared norm of the second fundamental form.
    pub a_squared: f64,
}

impl SurfaceFrame {
    /// `J` on tangent vectors, `J X = ν × X`.
    pub fn rotate_tangent(&self, v: ImVector) -> ImVector {
        self.normal.cross(v)
    }
}

fn angle_cos_sin(phi: f64) -> (f64, f64) {
    // exact values on the symmetry curves keep the half-patch boundary in z = 0
    if phi == 0.0 {
        (1.0, 0.0)
    } else if phi == PI {
        (-1.0, 0.0)
    } else {
        (phi.cos(), phi.sin())
    }
}

/// Frame of the unmoved surface from a profile point.
pub fn frame_from_profile(p: ProfilePoint, t: f64, phi: f64) -> SurfaceFrame {
    let (cp, sp) = angle_cos_sin(phi);
    let e_rad = ImVector::new(0.0, cp, sp);
    let e_phi = ImVector::new(0.0, -sp, cp);
    let (ca, sa) = (p.angle.cos(), p.angle.sin());
    let k2 = ca / p.r;
    let k1 = 2.0 - k2;
    SurfaceFrame {
        t,
        phi,
        position: ImVector::I * p.x + e_rad * p.r,
        d_t: (ImVector::I * ca + e_rad * sa) * p.r,
        d_phi: e_phi * p.r,
        normal: ImVector::I * sa - e_rad * ca,
        conformal: p.r,
        a_squared: k1 * k1 + k2 * k2,
    }
}

/// Which parameter domain in `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchKind {
    /// `φ_j = j·2π/n_φ`, periodic.
    Full,
    /// `φ_j = j·π/(n_φ − 1)`, the upper half `M⁺` with boundary columns
    /// `j = 0` and `j = n_φ − 1`.
    Upper,
}

/// Grid sizes and extent of a patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_t: usize,
    pub n_phi: usize,
    /// Half-width of the `t` interval.
    pub t_max: f64,
    pub kind: PatchKind,
}

impl GridSpec {
    pub fn new(n_t: usize, n_phi: usize, t_max: f64, kind: PatchKind) -> Result<Self> {
        if n_t < 16 || n_phi < 8 {
            return Err(Error::param(format!("grid {n_t}x{n_phi} is below the 16x8 minimum")));
        }
        if kind != PatchKind::Full && n_phi < FD_ORDER + 2 {
            return Err(Error::param(format!("half patches need n_phi ≥ {}, got {n_phi}", FD_ORDER + 2)));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::param("t range must be positive"));
        }
        Ok(GridSpec { n_t, n_phi, t_max, kind })
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        let h = 2.0 * self.t_max / (self.n_t - 1) as f64;
        (0..self.n_t).map(|i| -self.t_max + h * i as f64).collect()
    }

    pub fn phi_nodes(&self) -> Vec<f64> {
        match self.kind {
            PatchKind::Full => {
                (0..self.n_phi).map(|j| 2.0 * PI * j as f64 / self.n_phi as f64).collect()
            }
            PatchKind::Upper => {
                let last = self.n_phi - 1;
                (0..self.n_phi)
                    .map(|j| if j == last { PI } else { PI * j as f64 / last as f64 })
                    .collect()
            }
        }
    }
}

/// A sampled immersion with frame data, stored row-major: node `(i, j)` at
/// index `i·n_φ + j`, `i` along `t`.
#[derive(Debug, Clone)]
pub struct SurfacePatch {
    pub profile: Arc<dyn RevolutionProfile>,
    pub motion: RigidMotion,
    pub grid: GridSpec,
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    pub frames: Vec<SurfaceFrame>,
}

impl SurfacePatch {
    pub fn n_t(&self) -> usize {
        self.grid.n_t
    }

    pub fn n_phi(&self) -> usize {
        self.grid.n_phi
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_upper(&self) -> bool {
        self.grid.kind == PatchKind::Upper
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.grid.n_phi + j
    }

    #[inline]
    pub fn frame(&self, i: usize, j: usize) -> &SurfaceFrame {
        &self.frames[self.idx(i, j)]
    }

    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    pub fn dphi(&self) -> f64 {
        match self.grid.kind {
            PatchKind::Full => 2.0 * PI / self.grid.n_phi as f64,
            PatchKind::Upper => PI / (self.grid.n_phi - 1) as f64,
        }
    }

    /// Frame at an arbitrary parameter point (used by path integrations).
    pub fn frame_at(&self, t: f64, phi: f64) -> SurfaceFrame {
        let f = frame_from_profile(self.profile.at(t), t, phi);
        if self.motion.is_identity() {
            return f;
        }
        let m = &self.motion;
        SurfaceFrame {
            position: m.apply_point(f.position),
            d_t: m.apply_vector(f.d_t),
            d_phi: m.apply_vector(f.d_phi),
            normal: m.apply_vector(f.normal),
            ..f
        }
    }

    pub fn stencil_t(&self, deriv: usize) -> Stencil1d {
        Stencil1d::new(self.grid.n_t, self.dt(), deriv, FD_ORDER, false)
    }

    pub fn stencil_phi(&self, deriv: usize) -> Stencil1d {
        Stencil1d::new(self.grid.n_phi, self.dphi(), deriv, FD_ORDER, self.grid.kind == PatchKind::Full)
    }

    /// Node index mirrored by `σ : z ↦ −z`, i.e. `φ ↦ −φ`. Full patches only.
    pub fn mirror_index(&self, i: usize, j: usize) -> Result<usize> {
        if self.grid.kind != PatchKind::Full {
            return Err(Error::param("mirror pairing needs a full patch"));
        }
        let n = self.grid.n_phi;
        Ok(self.idx(i, (n - j) % n))
    }

    pub fn positions(&self) -> Vec<ImVector> {
        self.frames.iter().map(|f| f.position).collect()
    }

    pub fn normals(&self) -> Vec<ImVector> {
        self.frames.iter().map(|f| f.normal).collect()
    }
}

/// Samples `profile` on the grid, optionally moved by a rigid motion.
pub fn immerse_profile(
    profile: Arc<dyn RevolutionProfile>,
    grid: GridSpec,
    motion: RigidMotion,
) -> SurfacePatch {
    let t = grid.t_nodes();
    let phi = grid.phi_nodes();
    let mut patch = SurfacePatch { profile, motion, grid, t, phi, frames: Vec::new() };
    let n_phi = grid.n_phi;
    patch.frames = (0..grid.n_t * n_phi)
        .into_par_iter()
        .map(|k| patch.frame_at(patch.t[k / n_phi], patch.phi[k % n_phi]))
        .collect();
    patch
}

/// Unduloid patch with `t ∈ [−t_range·T, t_range·T]`, `T` the conformal
/// period (the nominal period for the cylinder).
pub fn immerse(
    table: Arc<super::profile::ConformalTable>,
    half: bool,
    t_range_periods: f64,
    n_t: usize,
    n_phi: usize,
) -> Result<SurfacePatch> {
    let kind = if half { PatchKind::Upper } else { PatchKind::Full };
    let grid = GridSpec::new(n_t, n_phi, t_range_periods * table.period(), kind)?;
    Ok(immerse_profile(table, grid, RigidMotion::default()))
}

/// Upper unit hemisphere, parametrized by Mercator coordinates about `i`.
pub fn hemisphere(t_max: f64, n_t: usize, n_phi: usize) -> Result<SurfacePatch> {
    let grid = GridSpec::new(n_t, n_phi, t_max, PatchKind::Upper)?;
    Ok(immerse_profile(Arc::new(UnitSphere), grid, RigidMotion::default()))
}

/// Largest relative deviation from conformality, measured with grid finite
/// differences of the positions: `| |f_t|/r − 1 |`, `| |f_φ|/r − 1 |`,
/// `|⟨f_t, f_φ⟩| / r²`.
pub fn conformality_defect(patch: &SurfacePatch) -> f64 {
    let st = patch.stencil_t(1);
    let sp = patch.stencil_phi(1);
    let (n_t, n_phi) = (patch.n_t(), patch.n_phi());
    (0..n_t)
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0f64;
            for j in 0..n_phi {
                let ft = st.apply_at(i, ImVector::ZERO, |k| patch.frame(k, j).position);
                let fp = sp.apply_at(j, ImVector::ZERO, |k| patch.frame(i, k).position);
                let r = patch.frame(i, j).conformal;
                worst = worst
                    .max((ft.norm() / r - 1.0).abs())
                    .max((fp.norm() / r - 1.0).abs())
                    .max(ft.dot(fp).abs() / (r * r));
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::profile::{conformal_table, NecksizeParams, ProfileSettings};

    fn table(n: f64) -> Arc<crate::delaunay::profile::ConformalTable> {
        let p = NecksizeParams::new(n).unwrap();
        Arc::new(conformal_table(&p, &ProfileSettings::default()).unwrap())
    }

    #[test]
    fn cylinder_nodes() {
        let patch = immerse(table(PI), false, 1.0, 40, 16).unwrap();
        for f in &patch.frames {
            assert_eq!(f.a_squared, 4.0);
            let p = f.position;
            assert!(((p.y * p.y + p.z * p.z).sqrt() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn upper_boundary_in_plane() {
        let patch = immerse(table(1.0), true, 1.0, 40, 12).unwrap();
        for i in 0..patch.n_t() {
            assert_eq!(patch.frame(i, 0).position.z, 0.0);
            assert_eq!(patch.frame(i, patch.n_phi() - 1).position.z, 0.0);
            for j in 1..patch.n_phi() - 1 {
                assert!(patch.frame(i, j).normal.z < 0.0);
            }
        }
    }

    #[test]
    fn orientation_and_conformality() {
        let patch = immerse(table(0.7), false, 1.0, 64, 16).unwrap();
        for f in &patch.frames {
            let r2 = f.conformal * f.conformal;
            let cross = f.d_t.cross(f.d_phi);
            assert!((cross - f.normal * r2).norm() < 1e-12);
            assert!((f.rotate_tangent(f.d_t) - f.d_phi).norm() < 1e-12);
            assert!((f.rotate_tangent(f.d_phi) + f.d_t).norm() < 1e-12);
        }
        assert!(conformality_defect(&patch) < 1e-4);
    }

    #[test]
    fn conformality_defect_shrinks_under_refinement() {
        let coarse = conformality_defect(&immerse(table(1.3), false, 1.0, 50, 16).unwrap());
        let fine = conformality_defect(&immerse(table(1.3), false, 1.0, 100, 32).unwrap());
        assert!(fine < coarse / 4.0, "{coarse} -> {fine}");
    }

    #[test]
    fn sphere_frames() {
        let patch = hemisphere(3.0, 30, 10).unwrap();
        for f in &patch.frames {
            assert!((f.position.norm() - 1.0).abs() < 1e-14);
            assert!((f.normal + f.position).norm() < 1e-14);
            assert!((f.a_squared - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_patches_need_room_for_one_sided_stencils() {
        assert!(GridSpec::new(20, 9, 1.0, PatchKind::Upper).is_err());
        assert!(GridSpec::new(20, 10, 1.0, PatchKind::Upper).is_ok());
        assert!(GridSpec::new(20, 8, 1.0, PatchKind::Full).is_ok());
    }

    #[test]
    fn motion_moves_every_vector() {
        let q = ImVector::new(0.1, -0.3, 0.2).exp();
        let v = ImVector::new(0.5, 0.0, -1.0);
        let base = immerse(table(1.0), true, 1.0, 20, 10).unwrap();
        let moved = immerse_profile(base.profile.clone(), base.grid, RigidMotion { rotation: q, translation: v });
        for (a, b) in base.frames.iter().zip(&moved.frames) {
            assert!((q.rotate(a.position) + v - b.position).norm() < 1e-14);
            assert!((q.rotate(a.normal) - b.normal).norm() < 1e-14);
        }
    }

    #[test]
    fn grid_rejects_small() {
        assert!(GridSpec::new(15, 8, 1.0, PatchKind::Full).is_err());
        assert!(GridSpec::new(16, 7, 1.0, PatchKind::Full).is_err());
        assert!(GridSpec::new(16, 8, 0.0, PatchKind::Full).is_err());
    }
}
