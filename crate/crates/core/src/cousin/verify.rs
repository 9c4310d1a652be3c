//! Geometric checks of an integrated cousin against its source patch.
//!
//! All quantities are invariant under the gauge `f̃ ↦ q f̃`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::CousinPatch;
use crate::delaunay::SurfacePatch;
use crate::error::{Error, Result};
use crate::quat_s3::{hopf_k, unit_distance, ImVector, Quaternion, UnitQuaternion};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CousinReport {
    /// `max | |∂f̃| / r − 1 |` over both coordinate directions.
    pub isometry_defect: f64,
    /// `max |⟨∂_t f̃, ∂_φ f̃⟩| / r²`.
    pub orthogonality_defect: f64,
    pub max_holonomy: f64,
    /// Hopf images `v₁, v₂` of the boundary curves `φ = 0` and `φ = π`.
    pub boundary_points: [ImVector; 2],
    /// Largest distance on S² from a boundary sample to its curve's mean image.
    pub boundary_spread: [f64; 2],
    /// `max |⟨f̃ν, f̃k⟩ − ⟨ν, k⟩|`.
    pub normal_relation_defect: f64,
    /// `max ⟨ν̃, f̃k⟩` over interior nodes (negative when transversal).
    pub transversality_margin: f64,
    /// `max |H̃|` of the cousin as a surface in S³.
    pub max_mean_curvature: f64,
}

fn check_grids(cousin: &CousinPatch, patch: &SurfacePatch) -> Result<()> {
    if cousin.grid != patch.grid {
        return Err(Error::param("cousin and patch grids differ"));
    }
    Ok(())
}

/// Grid derivatives `(∂_t f̃, ∂_φ f̃)` at node `(i, j)`.
pub fn cousin_derivatives(
    cousin: &CousinPatch,
    st: &crate::fd::Stencil1d,
    sp: &crate::fd::Stencil1d,
    i: usize,
    j: usize,
) -> (Quaternion, Quaternion) {
    let dt = st.apply_at(i, Quaternion::ZERO, |k| cousin.at(k, j).quat());
    let dp = sp.apply_at(j, Quaternion::ZERO, |k| cousin.at(i, k).quat());
    (dt, dp)
}

/// Mean Hopf image of a boundary column and the spread about it.
pub fn boundary_image(cousin: &CousinPatch, column: usize) -> (ImVector, f64) {
    let pts: Vec<ImVector> = (0..cousin.grid.n_t).map(|i| hopf_k(cousin.at(i, column))).collect();
    let mut mean = ImVector::ZERO;
    for p in &pts {
        mean += *p;
    }
    let mean = mean.normalized().unwrap_or(ImVector::K);
    let spread = pts.iter().map(|p| unit_distance(*p, mean)).fold(0.0, f64::max);
    (mean, spread)
}

pub fn verify_cousin(cousin: &CousinPatch, patch: &SurfacePatch) -> Result<CousinReport> {
    check_grids(cousin, patch)?;
    let st = patch.stencil_t(1);
    let sp = patch.stencil_phi(1);
    let stt = patch.stencil_t(2);
    let spp = patch.stencil_phi(2);
    let (n_t, n_phi) = (patch.n_t(), patch.n_phi());
    let per_row: Vec<[f64; 5]> = (0..n_t)
        .into_par_iter()
        .map(|i| {
            let mut acc = [0.0, 0.0, 0.0, f64::NEG_INFINITY, 0.0];
            for j in 0..n_phi {
                let f = patch.frame(i, j);
                let q = cousin.at(i, j);
                let (dt, dp) = cousin_derivatives(cousin, &st, &sp, i, j);
                let r = f.conformal;
                acc[0] = acc[0].max((dt.norm() / r - 1.0).abs()).max((dp.norm() / r - 1.0).abs());
                acc[1] = acc[1].max(dt.dot(dp).abs() / (r * r));
                let nu = q * f.normal.quat();
                let fk = q * Quaternion::K;
                acc[2] = acc[2].max((nu.dot(fk) - f.normal.z).abs());
                if j > 0 && j + 1 < n_phi {
                    acc[3] = acc[3].max(nu.dot(fk));
                }
                let lap = stt.apply_at(i, Quaternion::ZERO, |k| cousin.at(k, j).quat())
                    + spp.apply_at(j, Quaternion::ZERO, |k| cousin.at(i, k).quat());
                acc[4] = acc[4].max((0.5 * lap.dot(nu) / (r * r)).abs());
            }
            acc
        })
        .collect();
    let fold = |k: usize| per_row.iter().map(|a| a[k]).fold(f64::NEG_INFINITY, f64::max);
    let (v1, s1) = boundary_image(cousin, 0);
    let (v2, s2) = boundary_image(cousin, n_phi - 1);
    Ok(CousinReport {
        isometry_defect: fold(0),
        orthogonality_defect: fold(1),
        max_holonomy: cousin.max_holonomy,
        boundary_points: [v1, v2],
        boundary_spread: [s1, s2],
        normal_relation_defect: fold(2),
        transversality_margin: fold(3),
        max_mean_curvature: fold(4),
    })
}

/// Largest node-wise distance between two cousins after fitting the best
/// left translation `q` (so `q f̃₁ ≈ f̃₂`).
pub fn gauge_fitted_distance(a: &[UnitQuaternion], b: &[UnitQuaternion]) -> f64 {
    // q = normalized Σ b a⁻¹ maximizes Σ ⟨q a, b⟩
    let mut s = Quaternion::ZERO;
    for (x, y) in a.iter().zip(b) {
        s += y.quat() * x.inverse().quat();
    }
    let q = UnitQuaternion::renormalize(s);
    a.iter().zip(b).map(|(x, y)| ((q * *x).quat() - y.quat()).norm()).fold(0.0, f64::max)
}
