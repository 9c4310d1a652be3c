//! Boundary behavior of fields along the two symmetry curves of `M⁺`.
//!
//! Along a boundary curve (lying in the `ij`-plane) a field is
//!
//! * even: horizontal, with vertical conormal derivative;
//! * odd: vertical, with horizontal conormal derivative;
//! * almost even: even after subtracting a vertical translation `τ_v`;
//! * almost odd (cousin side): the transplant is odd after subtracting
//!   `ℓ̄_w = f̃⁻¹ w f̃` for some `w ⊥ v_i`, `v_i` the Hopf image of the curve.
//!
//! Cousin-side fields are judged through their transplants. The conormal
//! derivative is `∂_φ / r`, taken with one-sided grid stencils.

use serde::{Deserialize, Serialize};

use super::fields::{left_transplant, transplant, FieldOnPatch, FieldSide};
use super::integrate::CousinPatch;
use super::verify::boundary_image;
use crate::delaunay::SurfacePatch;
use crate::error::{Error, Result};
use crate::quat_s3::ImVector;

/// Fits pass when their residual is at most this multiple of the field scale.
pub const CLASSIFY_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryVerdict {
    Even,
    Odd,
    AlmostEven { vertical: f64 },
    AlmostOdd { w: ImVector },
    None,
}

impl BoundaryVerdict {
    /// Odd fields are almost odd with `w = 0`.
    pub fn is_almost_odd(&self) -> bool {
        matches!(self, BoundaryVerdict::Odd | BoundaryVerdict::AlmostOdd { .. })
    }

    pub fn is_almost_even(&self) -> bool {
        matches!(self, BoundaryVerdict::Even | BoundaryVerdict::AlmostEven { .. })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveClassification {
    pub column: usize,
    /// Hopf image `v_i` of the cousin boundary curve.
    pub hopf_point: ImVector,
    pub verdict: BoundaryVerdict,
    pub even_residual: f64,
    pub odd_residual: f64,
    pub almost_even_residual: f64,
    /// Vertical translation fitted for almost-even.
    pub fitted_vertical: f64,
    /// `None` for surface-side fields.
    pub almost_odd_residual: Option<f64>,
    /// Left translation fitted for almost-odd (`⊥ v_i`).
    pub fitted_left: Option<ImVector>,
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryClassification {
    pub side: FieldSide,
    pub curves: [CurveClassification; 2],
}

fn conormal(values: &[ImVector], patch: &SurfacePatch, i: usize, j: usize) -> ImVector {
    let sp = patch.stencil_phi(1);
    let d = sp.apply_at(j, ImVector::ZERO, |m| values[patch.idx(i, m)]);
    d * (1.0 / patch.frame(i, j).conformal)
}

struct Samples {
    value: Vec<ImVector>,
    normal_derivative: Vec<ImVector>,
}

fn sample(values: &[ImVector], patch: &SurfacePatch, column: usize) -> Samples {
    let n_t = patch.n_t();
    Samples {
        value: (0..n_t).map(|i| values[patch.idx(i, column)]).collect(),
        normal_derivative: (0..n_t).map(|i| conormal(values, patch, i, column)).collect(),
    }
}

fn hnorm(v: ImVector) -> f64 {
    v.x.hypot(v.y)
}

fn even_residual(s: &Samples, vertical: f64) -> f64 {
    s.value
        .iter()
        .zip(&s.normal_derivative)
        .map(|(v, d)| (v.z - vertical).abs().max(hnorm(*d)))
        .fold(0.0, f64::max)
}

fn odd_residual(s: &Samples) -> f64 {
    s.value
        .iter()
        .zip(&s.normal_derivative)
        .map(|(v, d)| hnorm(*v).max(d.z.abs()))
        .fold(0.0, f64::max)
}

/// Least-squares `w = α e₁ + β e₂ ⊥ v` making `W̄ − ℓ̄_w` odd on the curve.
fn fit_almost_odd(
    field: &Samples,
    basis: &[Samples; 3],
    v: ImVector,
) -> (ImVector, f64) {
    let helper = if v.x.abs() < 0.9 { ImVector::I } else { ImVector::J };
    let e1 = v.cross(helper).normalized().unwrap_or(ImVector::I);
    let e2 = v.cross(e1);
    let combo = |s: &[Samples; 3], e: ImVector, pick: &dyn Fn(&Samples, usize) -> f64, k: usize| {
        e.x * pick(&s[0], k) + e.y * pick(&s[1], k) + e.z * pick(&s[2], k)
    };
    // odd-defect components: x, y of the value and z of the conormal derivative
    let picks: [&dyn Fn(&Samples, usize) -> f64; 3] = [
        &|s, k| s.value[k].x,
        &|s, k| s.value[k].y,
        &|s, k| s.normal_derivative[k].z,
    ];
    let n = field.value.len();
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..n {
        for pick in &picks {
            let g1 = combo(basis, e1, *pick, k);
            let g2 = combo(basis, e2, *pick, k);
            let y = pick(field, k);
            a11 += g1 * g1;
            a12 += g1 * g2;
            a22 += g2 * g2;
            b1 += g1 * y;
            b2 += g2 * y;
        }
    }
    let det = a11 * a22 - a12 * a12;
    let (alpha, beta) = if det.abs() > 1e-300 {
        ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
    } else {
        (0.0, 0.0)
    };
    let w = e1 * alpha + e2 * beta;
    let mut residual = 0.0f64;
    for k in 0..n {
        for pick in &picks {
            let fit = alpha * combo(basis, e1, *pick, k) + beta * combo(basis, e2, *pick, k);
            residual = residual.max((pick(field, k) - fit).abs());
        }
    }
    (w, residual)
}

/// Classifies a field on `M⁺` or on the cousin along both boundary curves.
pub fn classify_boundary(
    field: &FieldOnPatch,
    cousin: &CousinPatch,
    patch: &SurfacePatch,
) -> Result<BoundaryClassification> {
    if !patch.is_upper() || cousin.grid != patch.grid {
        return Err(Error::param("boundary classification needs matching upper-half grids"));
    }
    if field.values.len() != patch.len() {
        return Err(Error::param("field and patch sizes differ"));
    }
    let values: Vec<ImVector> = match field.side {
        FieldSide::Surface => field.values.iter().map(|q| q.imag()).collect(),
        FieldSide::Cousin => transplant(&field.values, cousin)?,
    };
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let threshold = CLASSIFY_REL_TOL * if scale > 0.0 { scale } else { 1.0 };
    let basis_fields: Option<[Vec<ImVector>; 3]> = (field.side == FieldSide::Cousin).then(|| {
        [ImVector::I, ImVector::J, ImVector::K].map(|u| left_transplant(u, cousin))
    });

    let classify_curve = |column: usize| -> CurveClassification {
        let (hopf_point, _) = boundary_image(cousin, column);
        let s = sample(&values, patch, column);
        let even = even_residual(&s, 0.0);
        let odd = odd_residual(&s);
        let vertical = s.value.iter().map(|v| v.z).sum::<f64>() / s.value.len() as f64;
        let almost_even = even_residual(&s, vertical);
        let (almost_odd_residual, fitted_left) = match &basis_fields {
            Some(b) => {
                let basis = [0, 1, 2].map(|a| sample(&b[a], patch, column));
                let (w, res) = fit_almost_odd(&s, &basis, hopf_point);
                (Some(res), Some(w))
            }
            None => (None, None),
        };
        let verdict = match field.side {
            FieldSide::Surface => {
                if even <= threshold {
                    BoundaryVerdict::Even
                } else if odd <= threshold {
                    BoundaryVerdict::Odd
                } else if almost_even <= threshold {
                    BoundaryVerdict::AlmostEven { vertical }
                } else {
                    BoundaryVerdict::None
                }
            }
            FieldSide::Cousin => {
                if odd <= threshold {
                    BoundaryVerdict::Odd
                } else if even <= threshold {
                    BoundaryVerdict::Even
                } else if almost_odd_residual.is_some_and(|r| r <= threshold) {
                    BoundaryVerdict::AlmostOdd { w: fitted_left.unwrap() }
                } else {
                    BoundaryVerdict::None
                }
            }
        };
        CurveClassification {
            column,
            hopf_point,
            verdict,
            even_residual: even,
            odd_residual: odd,
            almost_even_residual: almost_even,
            fitted_vertical: vertical,
            almost_odd_residual,
            fitted_left,
            scale,
        }
    };
    let [c0, c1] = cousin.boundary_columns();
    Ok(BoundaryClassification { side: field.side, curves: [classify_curve(c0), classify_curve(c1)] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cousin::fields::integrate_cousin_field;
    use crate::cousin::integrate::{integrate_cousin, CousinSettings};
    use crate::delaunay::{immerse, profile_table, NecksizeParams, ProfileSettings};
    use crate::quat_s3::KillingField;

    fn setup(n: f64) -> (SurfacePatch, CousinPatch) {
        let p = NecksizeParams::new(n).unwrap();
        let patch = immerse(profile_table(&p, &ProfileSettings::default()).unwrap(), true, 1.0, 120, 40).unwrap();
        let cousin = integrate_cousin(&patch, &CousinSettings::default()).unwrap();
        (patch, cousin)
    }

    #[test]
    fn constant_horizontal_translation_is_even() {
        let (patch, cousin) = setup(1.0);
        let f = FieldOnPatch::killing(&KillingField::translation(ImVector::I), &patch, &cousin).unwrap();
        let c = classify_boundary(&f, &cousin, &patch).unwrap();
        assert!(c.curves.iter().all(|c| c.verdict == BoundaryVerdict::Even));
    }

    #[test]
    fn vertical_translation_is_odd_and_almost_even() {
        let (patch, cousin) = setup(1.0);
        let f = FieldOnPatch::killing(&KillingField::translation(ImVector::K), &patch, &cousin).unwrap();
        let c = classify_boundary(&f, &cousin, &patch).unwrap();
        for curve in &c.curves {
            assert_eq!(curve.verdict, BoundaryVerdict::Odd);
            assert!(curve.almost_even_residual < 1e-12);
        }
    }

    #[test]
    fn right_translation_k_is_odd() {
        let (patch, cousin) = setup(1.3);
        let f = FieldOnPatch::killing(&KillingField::right(ImVector::K), &patch, &cousin).unwrap();
        let c = classify_boundary(&f, &cousin, &patch).unwrap();
        assert!(c.curves.iter().all(|c| c.verdict == BoundaryVerdict::Odd));
    }

    #[test]
    fn left_translation_is_almost_odd() {
        let (patch, cousin) = setup(1.3);
        let u = ImVector::new(0.48, -0.6, 0.64);
        let f = FieldOnPatch::killing(&KillingField::left(u), &patch, &cousin).unwrap();
        let c = classify_boundary(&f, &cousin, &patch).unwrap();
        for curve in &c.curves {
            let v = curve.hopf_point;
            let BoundaryVerdict::AlmostOdd { w } = curve.verdict else {
                panic!("verdict {:?}", curve.verdict)
            };
            let expected = u - v * u.dot(v);
            assert!((w - expected).norm() < 1e-4, "{w:?} vs {expected:?}");
        }
    }

    #[test]
    fn even_field_cousins_are_almost_odd() {
        let (patch, cousin) = setup(1.1);
        for k in [
            KillingField::translation(ImVector::I),
            KillingField::translation(ImVector::J),
            KillingField::rotation(ImVector::K),
        ] {
            let z0 = ImVector::new(0.2, -0.1, 0.3);
            let v = integrate_cousin_field(&k, &patch, &cousin, z0, &CousinSettings::default()).unwrap();
            let c = classify_boundary(&FieldOnPatch::cousin(v), &cousin, &patch).unwrap();
            for curve in &c.curves {
                assert!(curve.verdict.is_almost_odd(), "{k:?}: {:?}", curve);
            }
        }
    }
}
