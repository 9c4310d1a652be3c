//! The classifying map at unduloid level.
//!
//! The cousin of the upper half of an unduloid is bounded by two Hopf
//! fibers; their `Π_k` images `v₁, v₂ ∈ S²` lie at spherical distance `n`.
//! Necksize changes are measured two ways: through the motion of the
//! boundary points (`dΦ`, by finite differences or from almost-odd cousin
//! fits) and through the end asymptotics of the Jacobi field (`dA`, an
//! end-window fit against `{η, τ_i, τ_j, ρ_k}`).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::cousin::{
    boundary_image, classify_boundary, integrate_cousin, BoundaryVerdict, CousinPatch, CousinSettings,
    FieldOnPatch,
};
use crate::delaunay::{
    immerse_profile, necksize_change_field, profile_table, ConformalTable, GridSpec, NecksizeParams, PatchKind,
    ProfileSettings, RevolutionProfile, RigidMotion, SurfacePatch,
};
use crate::error::{Error, Result};
use crate::quat_s3::{unit_distance, ImVector, KillingField, UnitQuaternion};

/// Consecutive points closer than this are treated as equal.
pub const DISTINCT_TOL: f64 = 1e-9;
/// Jacobi-scaled Gram matrices beyond this condition number are rejected.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifySettings {
    pub n_t: usize,
    pub n_phi: usize,
    /// Half-length of the patch in conformal periods.
    pub t_range: f64,
    pub profile: ProfileSettings,
    pub cousin: CousinSettings,
    /// Largest admissible spread of a boundary curve's Hopf image.
    pub spread_tol: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        ClassifySettings {
            n_t: 400,
            n_phi: 100,
            t_range: 3.0,
            profile: ProfileSettings::default(),
            cousin: CousinSettings::default(),
            spread_tol: 1e-5,
        }
    }
}

/// Ordered points of S² with their boundary-curve spreads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KPointTuple {
    pub points: Vec<ImVector>,
    pub spreads: Vec<f64>,
}

impl KPointTuple {
    pub fn new(points: Vec<ImVector>, spreads: Vec<f64>) -> Result<Self> {
        let k = points.len();
        if k < 2 || spreads.len() != k {
            return Err(Error::param("a k-point tuple needs k ≥ 2 points, one spread each"));
        }
        for p in &points {
            if ((p.norm() - 1.0).abs()) > 1e-9 {
                return Err(Error::param(format!("point {p:?} is not on the unit sphere")));
            }
        }
        for i in 0..k {
            let d = unit_distance(points[i], points[(i + 1) % k]);
            if d < DISTINCT_TOL {
                return Err(Error::param(format!("points {i} and {} coincide", (i + 1) % k)));
            }
        }
        if k >= 3 && k % 2 == 0 {
            let alternating = (0..k).all(|i| unit_distance(points[i], points[i % 2]) < DISTINCT_TOL);
            if alternating {
                return Err(Error::param("alternating two-point tuples are excluded"));
            }
        }
        Ok(KPointTuple { points, spreads })
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        unit_distance(self.points[i], self.points[j])
    }

    pub fn rotated(&self, q: UnitQuaternion) -> KPointTuple {
        KPointTuple { points: self.points.iter().map(|p| q.rotate(*p)).collect(), spreads: self.spreads.clone() }
    }
}

/// Tangent vectors at the points of a tuple, modulo the `so₃` action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentTuple {
    pub points: Vec<ImVector>,
    pub tangents: Vec<ImVector>,
}

impl TangentTuple {
    /// Projects `raw` onto the tangent planes and removes the rotation part.
    pub fn new(points: Vec<ImVector>, raw: Vec<ImVector>) -> Result<Self> {
        if points.len() != raw.len() {
            return Err(Error::param("one tangent vector per point is needed"));
        }
        let tangents = points.iter().zip(&raw).map(|(p, v)| *v - *p * v.dot(*p)).collect();
        let mut t = TangentTuple { points, tangents };
        t.canonicalize();
        Ok(t)
    }

    /// Subtracts the least-squares infinitesimal rotation `ω × v_i`.
    pub fn canonicalize(&mut self) {
        let omega = fit_infinitesimal_rotation(&self.points, &self.tangents);
        for (t, p) in self.tangents.iter_mut().zip(&self.points) {
            *t = *t - omega.cross(*p);
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.tangents.iter().map(|t| t.norm()).fold(0.0, f64::max)
    }

    /// First-order change of `d(v_a, v_b)`; `None` when the points are antipodal.
    pub fn distance_rate(&self, a: usize, b: usize) -> Option<f64> {
        let (pa, pb) = (self.points[a], self.points[b]);
        let towards = |from: ImVector, to: ImVector| (to - from * to.dot(from)).normalized();
        let eab = towards(pa, pb)?;
        let eba = towards(pb, pa)?;
        if (pb - pa * pb.dot(pa)).norm() < 1e-12 {
            return None;
        }
        Some(-self.tangents[a].dot(eab) - self.tangents[b].dot(eba))
    }
}

fn skew_free_solve(m: Matrix3<f64>, rhs: Vector3<f64>) -> Vector3<f64> {
    let svd = m.svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max();
    svd.solve(&rhs, cutoff).unwrap_or_else(|_| Vector3::zeros())
}

fn to_na(v: ImVector) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}

fn from_na(v: Vector3<f64>) -> ImVector {
    ImVector::new(v[0], v[1], v[2])
}

/// `ω` minimizing `Σ |t_i − ω × p_i|²` (pseudo-inverse when degenerate).
fn fit_infinitesimal_rotation(points: &[ImVector], tangents: &[ImVector]) -> ImVector {
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (p, t) in points.iter().zip(tangents) {
        let pv = to_na(*p);
        m += Matrix3::identity() * pv.norm_squared() - pv * pv.transpose();
        rhs += to_na(p.cross(*t));
    }
    from_na(skew_free_solve(m, rhs))
}

/// Rotation `R` minimizing `Σ |R a_i − b_i|²`.
pub fn fit_rotation(from: &[ImVector], to: &[ImVector]) -> Result<Matrix3<f64>> {
    let mut h = Matrix3::zeros();
    for (a, b) in from.iter().zip(to) {
        h += to_na(*a) * to_na(*b).transpose();
    }
    let svd = h.svd(true, true);
    let s = svd.singular_values;
    if !(s[1] > 1e-12 * s[0].max(1e-300)) {
        return Err(Error::numerical("rotation alignment is degenerate (points are collinear)"));
    }
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    Ok(v * fix * u.transpose())
}

fn apply(r: &Matrix3<f64>, p: ImVector) -> ImVector {
    from_na(r * to_na(p))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnduloidClassification {
    pub necksize: f64,
    pub tuple: KPointTuple,
    pub distance: f64,
    /// `|d(v₁, v₂) − n|`.
    pub error: f64,
    pub max_holonomy: f64,
}

fn base_grid(table: &ConformalTable, settings: &ClassifySettings) -> Result<GridSpec> {
    if !(settings.t_range > 0.0) || !(settings.spread_tol > 0.0) {
        return Err(Error::param("t_range and spread tolerance must be positive"));
    }
    GridSpec::new(settings.n_t, settings.n_phi, settings.t_range * table.period(), PatchKind::Upper)
}

/// Cousin and boundary points of a (moved) upper-half patch.
fn classify_surface(
    profile: Arc<dyn RevolutionProfile>,
    grid: GridSpec,
    motion: RigidMotion,
    settings: &ClassifySettings,
) -> Result<(KPointTuple, SurfacePatch, CousinPatch)> {
    let patch = immerse_profile(profile, grid, motion);
    let cousin = integrate_cousin(&patch, &settings.cousin)?;
    let mut points = Vec::with_capacity(2);
    let mut spreads = Vec::with_capacity(2);
    for column in cousin.boundary_columns() {
        let (v, spread) = boundary_image(&cousin, column);
        if spread > settings.spread_tol {
            return Err(Error::numerical(format!(
                "boundary curve φ = {:.3} spreads {spread:.3e} on S² (limit {:.1e})",
                patch.phi[column], settings.spread_tol
            )));
        }
        points.push(v);
        spreads.push(spread);
    }
    Ok((KPointTuple::new(points, spreads)?, patch, cousin))
}

/// Upper-half patch and cousin used by [`classify_unduloid`].
pub fn classified_patch(
    params: &NecksizeParams,
    settings: &ClassifySettings,
) -> Result<(KPointTuple, SurfacePatch, CousinPatch)> {
    let table = profile_table(params, &settings.profile)?;
    let grid = base_grid(&table, settings)?;
    classify_surface(table, grid, RigidMotion::default(), settings)
}

pub fn classify_unduloid(params: &NecksizeParams, settings: &ClassifySettings) -> Result<UnduloidClassification> {
    let (tuple, _, cousin) = classified_patch(params, settings)?;
    let distance = tuple.distance(0, 1);
    Ok(UnduloidClassification {
        necksize: params.necksize,
        error: (distance - params.necksize).abs(),
        tuple,
        distance,
        max_holonomy: cousin.max_holonomy,
    })
}

/// One-parameter families of CMC surfaces through an unduloid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "axis", rename_all = "snake_case")]
pub enum Family {
    Necksize,
    /// `M + ε u`.
    Translation(ImVector),
    /// `e^{−εu} M e^{εu}`, whose velocity is `ρ_u`.
    Rotation(ImVector),
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::Necksize => "necksize".into(),
            Family::Translation(u) => format!("translation({}, {}, {})", u.x, u.y, u.z),
            Family::Rotation(u) => format!("rotation({}, {}, {})", u.x, u.y, u.z),
        }
    }
}

fn check_step(params: &NecksizeParams, family: &Family, h: f64) -> Result<()> {
    let n = params.necksize;
    if !(h > 0.0) {
        return Err(Error::param("finite-difference step must be positive"));
    }
    if *family == Family::Necksize && (n - h <= 0.0 || n + h >= std::f64::consts::PI) {
        return Err(Error::param(format!("n ± h = {n} ± {h} leaves (0, π)")));
    }
    Ok(())
}

/// Profile and motion of the family member at parameter `eps`.
fn family_member(
    family: &Family,
    params: &NecksizeParams,
    table: &Arc<ConformalTable>,
    settings: &ProfileSettings,
    eps: f64,
) -> Result<(Arc<dyn RevolutionProfile>, RigidMotion)> {
    Ok(match family {
        Family::Necksize => {
            let p = NecksizeParams::new(params.necksize + eps)?;
            (profile_table(&p, settings)?, RigidMotion::default())
        }
        Family::Translation(u) => (table.clone(), RigidMotion::translation(*u * eps)),
        Family::Rotation(u) => (table.clone(), RigidMotion::rotation((*u * -eps).exp())),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DPhiResult {
    pub family: Family,
    pub h: f64,
    pub base: KPointTuple,
    pub tangent: TangentTuple,
    pub distance_rate: f64,
}

/// `dΦ` of a family by central differences of rotation-aligned boundary tuples,
/// all members sampled on the grid of the base surface.
pub fn dphi_fd(
    params: &NecksizeParams,
    family: &Family,
    h: f64,
    settings: &ClassifySettings,
) -> Result<DPhiResult> {
    check_step(params, family, h)?;
    let table = profile_table(params, &settings.profile)?;
    let grid = base_grid(&table, settings)?;
    let (base, _, _) = classify_surface(table.clone(), grid, RigidMotion::default(), settings)?;
    let mut aligned = Vec::with_capacity(2);
    for eps in [h, -h] {
        let (profile, motion) = family_member(family, params, &table, &settings.profile, eps)?;
        let (tuple, _, _) = classify_surface(profile, grid, motion, settings)?;
        let r = fit_rotation(&tuple.points, &base.points)?;
        aligned.push(tuple.points.iter().map(|p| apply(&r, *p)).collect::<Vec<_>>());
    }
    let raw = aligned[0].iter().zip(&aligned[1]).map(|(p, m)| (*p - *m) * (0.5 / h)).collect();
    let tangent = TangentTuple::new(base.points.clone(), raw)?;
    let distance_rate = tangent
        .distance_rate(0, 1)
        .ok_or_else(|| Error::numerical("boundary points are antipodal; distance rate undefined"))?;
    Ok(DPhiResult { family: *family, h, base, tangent, distance_rate })
}

/// `dΦ` from the boundary behavior of a cousin field: each curve must be
/// almost odd with some `w_i`, and then `δv_i = dΠ_k(ℓ_{w_i}) = 2 w_i × v_i`.
pub fn dphi_almost_odd(field: &FieldOnPatch, patch: &SurfacePatch, cousin: &CousinPatch) -> Result<TangentTuple> {
    let classes = classify_boundary(field, cousin, patch)?;
    let mut points = Vec::with_capacity(2);
    let mut raw = Vec::with_capacity(2);
    for curve in &classes.curves {
        let w = match curve.verdict {
            BoundaryVerdict::Odd => ImVector::ZERO,
            BoundaryVerdict::AlmostOdd { w } => w,
            other => {
                return Err(Error::contract(format!(
                    "cousin field is not almost odd along column {}: {other:?} \
                     (odd residual {:.3e}, almost-odd residual {:?}, scale {:.3e})",
                    curve.column, curve.odd_residual, curve.almost_odd_residual, curve.scale
                )))
            }
        };
        points.push(curve.hopf_point);
        raw.push(w.cross(curve.hopf_point) * 2.0);
    }
    TangentTuple::new(points, raw)
}

/// Cousin field of the necksize variation on the grid of `patch`, by central
/// differences of the cousins at `n ± h` (all anchored at `(0, 0)`).
pub fn necksize_cousin_field(
    params: &NecksizeParams,
    patch: &SurfacePatch,
    cousin: &CousinPatch,
    h: f64,
    settings: &ClassifySettings,
) -> Result<FieldOnPatch> {
    check_step(params, &Family::Necksize, h)?;
    let mut members = Vec::with_capacity(2);
    for eps in [h, -h] {
        let p = NecksizeParams::new(params.necksize + eps)?;
        let moved = immerse_profile(profile_table(&p, &settings.profile)?, patch.grid, patch.motion);
        members.push(integrate_cousin(&moved, &settings.cousin)?);
    }
    let values = cousin
        .values
        .iter()
        .zip(members[0].values.iter().zip(&members[1].values))
        .map(|(q, (p, m))| {
            let diff = (p.quat() - m.quat()) * (0.5 / h);
            // keep only the part tangent to S³ at f̃
            let bar = (q.inverse().quat() * diff).imag();
            *q * bar.quat()
        })
        .collect();
    Ok(FieldOnPatch::cousin(values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    /// `t → −∞`.
    Left,
    /// `t → +∞`.
    Right,
}

/// Names of the even deficiency basis, in coefficient order.
pub const DEFICIENCY_BASIS: [&str; 4] = ["eta", "tau_i", "tau_j", "rho_k"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndFit {
    pub end: End,
    /// Range of `|t|` sampled.
    pub window: [f64; 2],
    /// Coefficients on `DEFICIENCY_BASIS`.
    pub coefficients: [f64; 4],
    /// `max |V − Σ c_a b_a|` over the window, relative to `max |V|`.
    pub residual: f64,
    pub gram_condition: f64,
}

/// Per-end decomposition of a field against its asymptote's even deficiency basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptotePerturbation {
    pub necksize: f64,
    pub ends: [EndFit; 2],
}

impl AsymptotePerturbation {
    pub fn necksize_rates(&self) -> [f64; 2] {
        [self.ends[0].coefficients[0], self.ends[1].coefficients[0]]
    }
}

/// Normal parts of `η, τ_i, τ_j, ρ_k` on `patch`.
pub fn deficiency_basis(
    params: &NecksizeParams,
    settings: &ProfileSettings,
    patch: &SurfacePatch,
    h: f64,
) -> Result<[Vec<f64>; 4]> {
    let eta = necksize_change_field(params, settings, patch, h, 0.0)?.normal_part;
    let killing = |k: KillingField| -> Result<Vec<f64>> {
        patch.frames.iter().map(|f| Ok(k.at_r3(f.position)?.dot(f.normal))).collect()
    };
    Ok([
        eta,
        killing(KillingField::translation(ImVector::I))?,
        killing(KillingField::translation(ImVector::J))?,
        killing(KillingField::rotation(ImVector::K))?,
    ])
}

fn fit_window(v: &[f64], basis: &[Vec<f64>; 4], rows: &[usize]) -> Result<([f64; 4], f64, f64)> {
    let m = rows.len();
    let a = DMatrix::from_fn(m, 4, |r, c| basis[c][rows[r]]);
    let b = DVector::from_iterator(m, rows.iter().map(|&k| v[k]));
    let gram = a.transpose() * &a;
    let d: Vec<f64> = (0..4).map(|c| gram[(c, c)].sqrt()).collect();
    if d.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::numerical("a deficiency basis element vanishes on the end window"));
    }
    let scaled = DMatrix::from_fn(4, 4, |r, c| gram[(r, c)] / (d[r] * d[c]));
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), e| (lo.min(*e), hi.max(*e)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= GRAM_CONDITION_LIMIT) {
        return Err(Error::numerical(format!("end-window Gram matrix is ill-conditioned ({condition:.3e})")));
    }
    let coeffs = a
        .clone()
        .svd(true, true)
        .solve(&b, 0.0)
        .map_err(|e| Error::numerical(format!("end-window least squares failed: {e}")))?;
    let fitted = &a * &coeffs;
    let scale = b.amax().max(f64::MIN_POSITIVE);
    let residual = (b - fitted).amax() / scale;
    Ok(([coeffs[0], coeffs[1], coeffs[2], coeffs[3]], residual, condition))
}

/// `dA`: fits the normal part `v` of a field on `|t| ≥ window_start` of each end.
pub fn da_fit(
    v: &[f64],
    patch: &SurfacePatch,
    params: &NecksizeParams,
    settings: &ProfileSettings,
    h: f64,
    window_start: f64,
) -> Result<AsymptotePerturbation> {
    if v.len() != patch.len() {
        return Err(Error::param("field and patch sizes differ"));
    }
    let t_max = patch.grid.t_max;
    if !(window_start > 0.0 && window_start < t_max) {
        return Err(Error::param(format!("end window start {window_start} outside (0, {t_max})")));
    }
    let basis = deficiency_basis(params, settings, patch, h)?;
    let n_phi = patch.n_phi();
    let fit = |end: End| -> Result<EndFit> {
        let rows: Vec<usize> = (0..patch.len())
            .filter(|&k| {
                let t = patch.t[k / n_phi];
                match end {
                    End::Left => t <= -window_start,
                    End::Right => t >= window_start,
                }
            })
            .collect();
        if rows.len() < 8 {
            return Err(Error::param("end window holds too few samples"));
        }
        let (coefficients, residual, gram_condition) = fit_window(v, &basis, &rows)?;
        Ok(EndFit { end, window: [window_start, t_max], coefficients, residual, gram_condition })
    };
    Ok(AsymptotePerturbation { necksize: params.necksize, ends: [fit(End::Left)?, fit(End::Right)?] })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DPhiDAComparison {
    pub necksize: f64,
    pub family: Family,
    pub h: f64,
    /// Rate of `d(v₁, v₂)` from `dΦ`.
    pub dphi_rate: f64,
    /// `η`-coefficients of the two ends from `dA`.
    pub da_rates: [f64; 2],
    pub da_residual: f64,
    /// `max_i |dphi_rate − da_rates[i]|`.
    pub difference: f64,
}

/// Necksize-change rate of a family via `dΦ` and via `dA`.
///
/// The `dA` side differences the family's immersions on the base grid and
/// fits the normal part on the end windows `|t| ≥ 1` period.
pub fn compare_dphi_da(
    params: &NecksizeParams,
    family: &Family,
    h: f64,
    settings: &ClassifySettings,
) -> Result<DPhiDAComparison> {
    if settings.t_range < 2.0 {
        return Err(Error::param("the end fit needs t_range ≥ 2 periods"));
    }
    let dphi = dphi_fd(params, family, h, settings)?;
    let table = profile_table(params, &settings.profile)?;
    let grid = base_grid(&table, settings)?;
    let base = immerse_profile(table.clone(), grid, RigidMotion::default());
    let mut members = Vec::with_capacity(2);
    for eps in [h, -h] {
        let (profile, motion) = family_member(family, params, &table, &settings.profile, eps)?;
        members.push(immerse_profile(profile, grid, motion));
    }
    let v: Vec<f64> = base
        .frames
        .iter()
        .zip(members[0].frames.iter().zip(&members[1].frames))
        .map(|(f, (p, m))| ((p.position - m.position) * (0.5 / h)).dot(f.normal))
        .collect();
    let da = da_fit(&v, &base, params, &settings.profile, h, table.period())?;
    let da_rates = da.necksize_rates();
    let difference = da_rates.iter().map(|r| (dphi.distance_rate - r).abs()).fold(0.0, f64::max);
    Ok(DPhiDAComparison {
        necksize: params.necksize,
        family: *family,
        h,
        dphi_rate: dphi.distance_rate,
        da_rates,
        da_residual: da.ends.iter().map(|e| e.residual).fold(0.0, f64::max),
        difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat_s3::Quaternion;
    use std::f64::consts::PI;

    fn small() -> ClassifySettings {
        ClassifySettings { n_t: 160, n_phi: 40, t_range: 2.0, ..ClassifySettings::default() }
    }

    #[test]
    fn distance_is_necksize() {
        for n in [0.7, PI / 2.0, 2.4] {
            let c = classify_unduloid(&NecksizeParams::new(n).unwrap(), &small()).unwrap();
            assert!(c.error < 1e-3, "n = {n}: d = {}", c.distance);
        }
    }

    #[test]
    fn cylinder_points_are_antipodal() {
        let c = classify_unduloid(&NecksizeParams::new(PI).unwrap(), &small()).unwrap();
        assert!((c.tuple.points[0] + c.tuple.points[1]).norm() < 1e-3);
    }

    #[test]
    fn tuple_rejects_repeats_and_alternation() {
        let (p, q) = (ImVector::I, ImVector::J);
        assert!(KPointTuple::new(vec![p, p], vec![0.0; 2]).is_err());
        assert!(KPointTuple::new(vec![p, q, p, q], vec![0.0; 4]).is_err());
        assert!(KPointTuple::new(vec![p, q, p, ImVector::K], vec![0.0; 4]).is_ok());
    }

    #[test]
    fn kabsch_recovers_rotation() {
        let q = ImVector::new(0.3, -0.5, 0.2).exp();
        let a = vec![ImVector::I, ImVector::new(0.0, 0.6, 0.8)];
        let b: Vec<ImVector> = a.iter().map(|p| q.rotate(*p)).collect();
        let r = fit_rotation(&a, &b).unwrap();
        for v in [ImVector::I, ImVector::J, ImVector::K] {
            assert!((apply(&r, v) - q.rotate(v)).norm() < 1e-12);
        }
        assert!(fit_rotation(&[ImVector::I, ImVector::I], &[ImVector::J, ImVector::J]).is_err());
    }

    #[test]
    fn pure_rotations_canonicalize_to_zero() {
        let points = vec![ImVector::I, ImVector::new(0.0, 0.6, 0.8), ImVector::K];
        let w = ImVector::new(0.4, 1.0, -0.3);
        let raw = points.iter().map(|p| w.cross(*p)).collect();
        let t = TangentTuple::new(points, raw).unwrap();
        assert!(t.max_norm() < 1e-14);
    }

    #[test]
    fn necksize_family_moves_distance_at_unit_rate() {
        let params = NecksizeParams::new(1.3).unwrap();
        let r = dphi_fd(&params, &Family::Necksize, 1e-3, &small()).unwrap();
        assert!((r.distance_rate - 1.0).abs() < 1e-2, "{}", r.distance_rate);
    }

    #[test]
    fn killing_families_do_not_move_the_tuple() {
        let params = NecksizeParams::new(1.1).unwrap();
        for family in [Family::Translation(ImVector::J), Family::Rotation(ImVector::K)] {
            let r = dphi_fd(&params, &family, 1e-3, &small()).unwrap();
            assert!(r.tangent.max_norm() < 1e-3, "{family:?}: {:?}", r.tangent);
        }
    }

    #[test]
    fn killing_cousins_give_zero_tangent() {
        let s = small();
        let params = NecksizeParams::new(1.2).unwrap();
        let table = profile_table(&params, &s.profile).unwrap();
        let grid = base_grid(&table, &s).unwrap();
        let (_, patch, cousin) = classify_surface(table, grid, RigidMotion::default(), &s).unwrap();
        let rho = FieldOnPatch::killing(&KillingField::right(ImVector::K), &patch, &cousin).unwrap();
        assert!(dphi_almost_odd(&rho, &patch, &cousin).unwrap().max_norm() < 1e-8);
        let zero = FieldOnPatch::cousin(vec![Quaternion::ZERO; patch.len()]);
        assert_eq!(dphi_almost_odd(&zero, &patch, &cousin).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn necksize_cousin_matches_finite_difference() {
        let s = small();
        let params = NecksizeParams::new(1.3).unwrap();
        let table = profile_table(&params, &s.profile).unwrap();
        let grid = base_grid(&table, &s).unwrap();
        let (_, patch, cousin) = classify_surface(table, grid, RigidMotion::default(), &s).unwrap();
        let eta = necksize_cousin_field(&params, &patch, &cousin, 1e-3, &s).unwrap();
        let rate = dphi_almost_odd(&eta, &patch, &cousin).unwrap().distance_rate(0, 1).unwrap();
        assert!((rate - 1.0).abs() < 1e-2, "{rate}");
    }

    #[test]
    fn basis_elements_fit_themselves() {
        let s = small();
        let params = NecksizeParams::new(1.0).unwrap();
        let table = profile_table(&params, &s.profile).unwrap();
        let patch = immerse_profile(table.clone(), base_grid(&table, &s).unwrap(), RigidMotion::default());
        let basis = deficiency_basis(&params, &s.profile, &patch, 1e-3).unwrap();
        for (a, v) in basis.iter().enumerate() {
            let fit = da_fit(v, &patch, &params, &s.profile, 1e-3, table.period()).unwrap();
            for end in &fit.ends {
                for (b, c) in end.coefficients.iter().enumerate() {
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((c - expected).abs() < 1e-8, "{a} {b} {c}");
                }
                assert!(end.residual < 1e-8);
            }
        }
    }

    #[test]
    fn routes_agree_on_families() {
        let params = NecksizeParams::new(1.5).unwrap();
        let c = compare_dphi_da(&params, &Family::Necksize, 1e-3, &small()).unwrap();
        assert!(c.difference < 1e-2, "{c:?}");
        let c = compare_dphi_da(&params, &Family::Rotation(ImVector::K), 1e-3, &small()).unwrap();
        assert!(c.dphi_rate.abs() < 1e-3 && c.da_rates.iter().all(|r| r.abs() < 1e-3), "{c:?}");
    }
}
