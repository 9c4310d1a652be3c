//! Vector fields on `M⁺` and on its cousin, transplants between them, and
//! cousins of Killing fields.
//!
//! A field `W` along `f̃` is transplanted to `W̄ = f̃⁻¹ W`, which is pure
//! imaginary exactly when `W` is tangent to S³. Cousin Jacobi fields of Killing
//! data (`J̇ = 0`) satisfy
//!
//! ```text
//! ∂_t Ṽ = Ṽ f_φ + f̃ V_φ,      ∂_φ Ṽ = −Ṽ f_t − f̃ V_t
//! ```
//!
//! Writing `Ṽ = f̃ Z` turns this into `Z' = 2 Z × A + C` along each
//! coordinate line, which is what gets integrated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::{connection, CousinPatch, CousinSettings, Direction};
use crate::delaunay::SurfacePatch;
use crate::error::{Error, Result};
use crate::quat_s3::{ImVector, KillingField, KillingKind, Quaternion};

/// Relative tolerance for tangency to S³.
pub const TANGENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSide {
    /// A field along `f` on `M⁺` (values in ℝ³).
    Surface,
    /// A field along `f̃` on the cousin (values in ℍ, tangent to S³).
    Cousin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldOnPatch {
    pub side: FieldSide,
    pub values: Vec<Quaternion>,
}

impl FieldOnPatch {
    pub fn surface(values: Vec<ImVector>) -> Self {
        FieldOnPatch { side: FieldSide::Surface, values: values.into_iter().map(ImVector::quat).collect() }
    }

    pub fn cousin(values: Vec<Quaternion>) -> Self {
        FieldOnPatch { side: FieldSide::Cousin, values }
    }

    /// A Killing field sampled along the surface or the cousin, by kind.
    pub fn killing(field: &KillingField, patch: &SurfacePatch, cousin: &CousinPatch) -> Result<Self> {
        if field.kind.lives_on_s3() {
            let values = cousin.values.iter().map(|q| field.at_s3(*q)).collect::<Result<_>>()?;
            Ok(FieldOnPatch::cousin(values))
        } else {
            let values = patch.frames.iter().map(|f| field.at_r3(f.position)).collect::<Result<_>>()?;
            Ok(FieldOnPatch::surface(values))
        }
    }

    pub fn scale(&self) -> f64 {
        self.values.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }
}

/// `W̄ = f̃⁻¹ W`; rejects fields that are not tangent to S³.
pub fn transplant(w: &[Quaternion], cousin: &CousinPatch) -> Result<Vec<ImVector>> {
    if w.len() != cousin.len() {
        return Err(Error::param("field and cousin sizes differ"));
    }
    let scale = w.iter().map(|q| q.norm()).fold(0.0, f64::max).max(1.0);
    w.iter()
        .zip(&cousin.values)
        .enumerate()
        .map(|(k, (wk, fk))| {
            let bar = fk.inverse().quat() * *wk;
            if bar.w.abs() > TANGENCY_TOL * scale {
                return Err(Error::param(format!(
                    "field is not tangent to S³ at node {k}: ⟨W, f̃⟩ = {:.3e}",
                    bar.w
                )));
            }
            Ok(bar.imag())
        })
        .collect()
}

/// Node-wise maximum of the two components of
/// `f̃⁻¹ dW − dW̄ − (df∘J) W̄`, evaluated with grid differences.
pub fn transplant_residual(w: &[Quaternion], cousin: &CousinPatch, patch: &SurfacePatch) -> Result<f64> {
    let bar: Vec<Quaternion> = transplant(w, cousin)?.into_iter().map(ImVector::quat).collect();
    let st = patch.stencil_t(1);
    let sp = patch.stencil_phi(1);
    let (n_t, n_phi) = (patch.n_t(), patch.n_phi());
    Ok((0..n_t)
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0f64;
            for j in 0..n_phi {
                let k = patch.idx(i, j);
                let f = patch.frame(i, j);
                let inv = cousin.values[k].inverse().quat();
                let wt = st.apply_at(i, Quaternion::ZERO, |m| w[patch.idx(m, j)]);
                let wp = sp.apply_at(j, Quaternion::ZERO, |m| w[patch.idx(i, m)]);
                let bt = st.apply_at(i, Quaternion::ZERO, |m| bar[patch.idx(m, j)]);
                let bp = sp.apply_at(j, Quaternion::ZERO, |m| bar[patch.idx(i, m)]);
                let rt = inv * wt - bt - f.d_phi.quat() * bar[k];
                let rp = inv * wp - bp + f.d_t.quat() * bar[k];
                worst = worst.max(rt.norm()).max(rp.norm());
            }
            worst
        })
        .reduce(|| 0.0, f64::max))
}

/// `ℓ̄_u = f̃⁻¹ u f̃`, the transplant of the left translation by `u`.
pub fn left_transplant(u: ImVector, cousin: &CousinPatch) -> Vec<ImVector> {
    cousin.values.iter().map(|q| q.inverse().rotate(u)).collect()
}

/// Residual of `2 df × ℓ̄_u − dℓ̄_u ∘ J = 0` on both coordinate directions:
/// `2 f_t × ℓ̄ − ∂_φ ℓ̄` and `2 f_φ × ℓ̄ + ∂_t ℓ̄`.
pub fn left_transplant_residual(cousin: &CousinPatch, patch: &SurfacePatch, u: ImVector) -> f64 {
    let l = left_transplant(u, cousin);
    let st = patch.stencil_t(1);
    let sp = patch.stencil_phi(1);
    (0..patch.n_t())
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0f64;
            for j in 0..patch.n_phi() {
                let f = patch.frame(i, j);
                let lk = l[patch.idx(i, j)];
                let lt = st.apply_at(i, ImVector::ZERO, |m| l[patch.idx(m, j)]);
                let lp = sp.apply_at(j, ImVector::ZERO, |m| l[patch.idx(i, m)]);
                let rt = f.d_t.cross(lk) * 2.0 - lp;
                let rp = f.d_phi.cross(lk) * 2.0 + lt;
                worst = worst.max(rt.norm()).max(rp.norm());
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Derivative of an affine Killing field of ℝ³ along a vector.
fn killing_derivative(field: &KillingField, x: ImVector) -> Result<ImVector> {
    Ok(field.at_r3(x)? - field.at_r3(ImVector::ZERO)?)
}

/// Known cousin of a Killing field of ℝ³: `τ_u ↦ 0`, `ρ_u ↦ r_u`.
pub fn closed_form_cousin(field: &KillingField, cousin: &CousinPatch) -> Result<Vec<Quaternion>> {
    match field.kind {
        KillingKind::Translation => Ok(vec![Quaternion::ZERO; cousin.len()]),
        KillingKind::Rotation => Ok(cousin.values.iter().map(|q| *q * field.axis.quat()).collect()),
        _ => Err(Error::param("cousin fields are defined for Killing fields of ℝ³")),
    }
}

/// `f̃ J(V)` for a field tangent to `M⁺`, with `J V = ν × V`.
pub fn tangential_cousin(v: &[ImVector], patch: &SurfacePatch, cousin: &CousinPatch) -> Result<Vec<Quaternion>> {
    let scale = v.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1.0);
    v.iter()
        .zip(&patch.frames)
        .zip(&cousin.values)
        .map(|((vk, f), q)| {
            if vk.dot(f.normal).abs() > 1e-10 * scale {
                return Err(Error::param("field is not tangent to the surface"));
            }
            Ok(*q * f.rotate_tangent(*vk).quat())
        })
        .collect()
}

fn z_transport(
    patch: &SurfacePatch,
    field: &KillingField,
    dir: Direction,
    fixed: f64,
    s0: f64,
    s1: f64,
    z0: ImVector,
    max_substep: f64,
) -> Result<ImVector> {
    let n = (((s1 - s0).abs() / max_substep).ceil() as usize).max(1);
    let h = (s1 - s0) / n as f64;
    let rhs = |s: f64, z: ImVector| -> Result<ImVector> {
        let (t, phi) = match dir {
            Direction::T => (s, fixed),
            Direction::Phi => (fixed, s),
        };
        let a = connection(patch, dir, t, phi);
        // C = V_φ along t-lines and −V_t along φ-lines
        let f = patch.frame_at(t, phi);
        let c = match dir {
            Direction::T => killing_derivative(field, f.d_phi)?,
            Direction::Phi => -killing_derivative(field, f.d_t)?,
        };
        Ok(z.cross(a) * 2.0 + c)
    };
    let mut z = z0;
    for k in 0..n {
        let s = s0 + k as f64 * h;
        let k1 = rhs(s, z)?;
        let k2 = rhs(s + 0.5 * h, z + k1 * (0.5 * h))?;
        let k3 = rhs(s + 0.5 * h, z + k2 * (0.5 * h))?;
        let k4 = rhs(s + h, z + k3 * h)?;
        z = z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(z)
}

/// Integrates the cousin Jacobi system for a Killing field of ℝ³ with
/// `f̃⁻¹ Ṽ = z0` at the anchor, along the same paths as the cousin itself.
pub fn integrate_cousin_field(
    field: &KillingField,
    patch: &SurfacePatch,
    cousin: &CousinPatch,
    z0: ImVector,
    settings: &CousinSettings,
) -> Result<Vec<Quaternion>> {
    if field.kind.lives_on_s3() {
        return Err(Error::param("cousin fields are defined for Killing fields of ℝ³"));
    }
    let (n_t, n_phi) = (patch.n_t(), patch.n_phi());
    let (t, phi) = (&patch.t, &patch.phi);
    let step = settings.max_substep;
    let mut column = vec![ImVector::ZERO; n_t];
    let first_up = t.iter().position(|&s| s >= 0.0).unwrap_or(n_t);
    let mut prev = (0.0, z0);
    for i in first_up..n_t {
        column[i] = z_transport(patch, field, Direction::T, phi[0], prev.0, t[i], prev.1, step)?;
        prev = (t[i], column[i]);
    }
    prev = (0.0, z0);
    for i in (0..first_up).rev() {
        column[i] = z_transport(patch, field, Direction::T, phi[0], prev.0, t[i], prev.1, step)?;
        prev = (t[i], column[i]);
    }
    let rows: Vec<Vec<ImVector>> = (0..n_t)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(n_phi);
            row.push(column[i]);
            for j in 0..n_phi - 1 {
                let z = z_transport(patch, field, Direction::Phi, t[i], phi[j], phi[j + 1], row[j], step)?;
                row.push(z);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(rows
        .into_iter()
        .flatten()
        .zip(&cousin.values)
        .map(|(z, q)| *q * z.quat())
        .collect())
}

/// Best left translation `w` with `a − b ≈ w f̃`, and the remaining residual.
pub fn fit_left_translation(a: &[Quaternion], b: &[Quaternion], cousin: &CousinPatch) -> (ImVector, f64) {
    let n = a.len() as f64;
    let mut w = ImVector::ZERO;
    for ((x, y), q) in a.iter().zip(b).zip(&cousin.values) {
        w += ((*x - *y) * q.inverse().quat()).imag() * (1.0 / n);
    }
    let residual = a
        .iter()
        .zip(b)
        .zip(&cousin.values)
        .map(|((x, y), q)| (*x - *y - w.quat() * *q).norm())
        .fold(0.0, f64::max);
    (w, residual)
}

/// Tolerance for the agreement of integrated and closed-form cousin fields.
pub const COUSIN_FIELD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CousinFieldResult {
    pub field: KillingField,
    pub closed_form: Vec<Quaternion>,
    pub integrated: Vec<Quaternion>,
    /// Left translation separating the two solutions.
    pub fitted_left: ImVector,
    /// Residual after removing the fitted left translation.
    pub discrepancy: f64,
    /// Grid-difference residual of the closed form in the cousin Jacobi system.
    pub equation_residual: f64,
}

/// Closed-form and integrated cousins of a Killing field of ℝ³.
///
/// The integration starts from `Ṽ = 0` at the anchor, so it differs from the
/// closed form by a left translation.
pub fn cousin_field(
    field: &KillingField,
    patch: &SurfacePatch,
    cousin: &CousinPatch,
    settings: &CousinSettings,
) -> Result<CousinFieldResult> {
    let closed_form = closed_form_cousin(field, cousin)?;
    let integrated = integrate_cousin_field(field, patch, cousin, ImVector::ZERO, settings)?;
    let (fitted_left, discrepancy) = fit_left_translation(&integrated, &closed_form, cousin);
    if discrepancy > COUSIN_FIELD_TOL {
        return Err(Error::numerical(format!(
            "integrated cousin field differs from the closed form by {discrepancy:.3e} after fitting"
        )));
    }
    let equation_residual = cousin_equation_residual(field, &closed_form, patch, cousin)?;
    Ok(CousinFieldResult { field: *field, closed_form, integrated, fitted_left, discrepancy, equation_residual })
}

/// `∂_t Ṽ − Ṽ f_φ − f̃ V_φ` and `∂_φ Ṽ + Ṽ f_t + f̃ V_t` with grid differences.
pub fn cousin_equation_residual(
    field: &KillingField,
    values: &[Quaternion],
    patch: &SurfacePatch,
    cousin: &CousinPatch,
) -> Result<f64> {
    let st = patch.stencil_t(1);
    let sp = patch.stencil_phi(1);
    let mut worst = 0.0f64;
    for i in 0..patch.n_t() {
        for j in 0..patch.n_phi() {
            let k = patch.idx(i, j);
            let f = patch.frame(i, j);
            let q = cousin.values[k].quat();
            let vt = st.apply_at(i, Quaternion::ZERO, |m| values[patch.idx(m, j)]);
            let vp = sp.apply_at(j, Quaternion::ZERO, |m| values[patch.idx(i, m)]);
            let dv_t = killing_derivative(field, f.d_t)?.quat();
            let dv_p = killing_derivative(field, f.d_phi)?.quat();
            let rt = vt - values[k] * f.d_phi.quat() - q * dv_p;
            let rp = vp + values[k] * f.d_t.quat() + q * dv_t;
            worst = worst.max(rt.norm()).max(rp.norm());
        }
    }
    Ok(worst)
}

/// Mirror `σ(x, y, z) = (x, y, −z)`.
fn mirror(v: ImVector) -> ImVector {
    ImVector::new(v.x, v.y, -v.z)
}

/// `V±(p) = ½ (V(p) ± σ V(σp))` on a full patch.
pub fn even_odd_decompose(v: &[ImVector], patch: &SurfacePatch) -> Result<(Vec<ImVector>, Vec<ImVector>)> {
    if v.len() != patch.len() {
        return Err(Error::param("field and patch sizes differ"));
    }
    let mut even = Vec::with_capacity(v.len());
    let mut odd = Vec::with_capacity(v.len());
    for i in 0..patch.n_t() {
        for j in 0..patch.n_phi() {
            let a = v[patch.idx(i, j)];
            let b = mirror(v[patch.mirror_index(i, j)?]);
            even.push((a + b) * 0.5);
            odd.push((a - b) * 0.5);
        }
    }
    Ok((even, odd))
}
