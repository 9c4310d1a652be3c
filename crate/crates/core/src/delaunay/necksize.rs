//! The Jacobi field generated by varying the necksize.
//!
//! `η = ∂f/∂n` is taken node-wise as a central difference of the immersions at
//! `n ± h`, sampled on the same absolute `t` grid with necks at `t = phase`.
//! At the cylinder only the one-sided difference towards smaller necksize
//! exists; that case is flagged.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::patch::{frame_from_profile, SurfacePatch};
use super::profile::{conformal_table, ConformalTable, NecksizeParams, ProfileSettings, RevolutionProfile};
use crate::error::{Error, Result};
use crate::quat_s3::ImVector;

/// Richardson consistency threshold for the central difference.
pub const CENTRAL_CONSISTENCY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NecksizeChangeField {
    pub necksize: f64,
    pub step: f64,
    pub phase: f64,
    /// Node-wise field, same layout as the patch.
    pub field: Vec<ImVector>,
    /// `⟨η, ν⟩` node-wise.
    pub normal_part: Vec<f64>,
    /// True at the cylinder, where the difference is one-sided.
    pub one_sided: bool,
    /// `max |η_h − η_{h/2}| / max |η_h|`.
    pub consistency: f64,
}

fn family_positions(
    table: &ConformalTable,
    patch: &SurfacePatch,
    phase: f64,
) -> Vec<ImVector> {
    let n_phi = patch.n_phi();
    (0..patch.len())
        .map(|k| {
            let (t, phi) = (patch.t[k / n_phi], patch.phi[k % n_phi]);
            let f = frame_from_profile(table.at(t - phase), t, phi);
            patch.motion.apply_point(f.position)
        })
        .collect()
}

fn difference(
    params: &NecksizeParams,
    settings: &ProfileSettings,
    patch: &SurfacePatch,
    h: f64,
    phase: f64,
) -> Result<(Vec<ImVector>, bool)> {
    let n = params.necksize;
    let lower = conformal_table(&NecksizeParams::new(n - h)?, settings)?;
    let minus = family_positions(&lower, patch, phase);
    if params.is_cylinder() {
        let centre = family_positions(&conformal_table(params, settings)?, patch, 0.0);
        let eta = centre.iter().zip(&minus).map(|(c, m)| (*c - *m) * (1.0 / h)).collect();
        return Ok((eta, true));
    }
    let upper = conformal_table(&NecksizeParams::new(n + h)?, settings)?;
    let plus = family_positions(&upper, patch, phase);
    let eta = plus.iter().zip(&minus).map(|(p, m)| (*p - *m) * (0.5 / h)).collect();
    Ok((eta, false))
}

/// Necksize-change field on `patch`, which must be a patch of the unduloid
/// with necksize `params.necksize` (not checked).
pub fn necksize_change_field(
    params: &NecksizeParams,
    settings: &ProfileSettings,
    patch: &SurfacePatch,
    h: f64,
    phase: f64,
) -> Result<NecksizeChangeField> {
    let n = params.necksize;
    if !(h > 0.0) || n - h <= 0.0 || (!params.is_cylinder() && n + h >= std::f64::consts::PI) {
        return Err(Error::param(format!("necksize step {h} leaves (0, π) around n = {n}")));
    }
    let (eta, one_sided) = difference(params, settings, patch, h, phase)?;
    let (half, _) = difference(params, settings, patch, 0.5 * h, phase)?;
    let scale = eta.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let gap = eta.iter().zip(&half).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
    let consistency = if scale > 0.0 { gap / scale } else { 0.0 };
    // first-order one-sided differences are held to an h-proportional bound
    let limit = if one_sided { 100.0 * h } else { CENTRAL_CONSISTENCY_TOL };
    if consistency > limit {
        return Err(Error::numerical(format!(
            "necksize step h = {h} too large: halving h changes η by {consistency:.3e} (limit {limit:.1e})"
        )));
    }
    let normal_part = eta.iter().zip(&patch.frames).map(|(e, f)| e.dot(f.normal)).collect();
    Ok(NecksizeChangeField { necksize: n, step: h, phase, field: eta, normal_part, one_sided, consistency })
}

/// Shared dense table for immersing and differencing.
pub fn profile_table(params: &NecksizeParams, settings: &ProfileSettings) -> Result<Arc<ConformalTable>> {
    Ok(Arc::new(conformal_table(params, settings)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::patch::immerse;
    use crate::fd::Stencil1d;

    /// Jacobi residual of the `t`-only normal part along `φ = 0`:
    /// `u'' − (−r²|A|²) u` with an 8th-order stencil, relative to `max |u|`.
    fn mode0_residual(n: f64) -> f64 {
        let params = NecksizeParams::new(n).unwrap();
        let settings = ProfileSettings::default();
        let table = profile_table(&params, &settings).unwrap();
        let patch = immerse(table, false, 1.0, 200, 8).unwrap();
        let eta = necksize_change_field(&params, &settings, &patch, 1e-4, 0.0).unwrap();
        let u: Vec<f64> = (0..patch.n_t()).map(|i| eta.normal_part[patch.idx(i, 0)]).collect();
        let d2 = Stencil1d::new(u.len(), patch.dt(), 2, 8, false).apply(&u);
        let scale = u.iter().map(|x| x.abs()).fold(0.0, f64::max);
        (0..u.len())
            .map(|i| {
                let f = patch.frame(i, 0);
                (d2[i] + f.conformal * f.conformal * f.a_squared * u[i]).abs()
            })
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn eta_solves_jacobi_equation() {
        for n in [0.4, 1.0, 2.5] {
            let res = mode0_residual(n);
            assert!(res < 1e-4, "n = {n}: {res}");
        }
    }

    #[test]
    fn eta_is_rotationally_symmetric() {
        let params = NecksizeParams::new(1.2).unwrap();
        let settings = ProfileSettings::default();
        let patch = immerse(profile_table(&params, &settings).unwrap(), false, 1.0, 40, 12).unwrap();
        let eta = necksize_change_field(&params, &settings, &patch, 1e-4, 0.0).unwrap();
        for i in 0..patch.n_t() {
            let u0 = eta.normal_part[patch.idx(i, 0)];
            for j in 1..patch.n_phi() {
                assert!((eta.normal_part[patch.idx(i, j)] - u0).abs() < 1e-10);
            }
        }
        assert!(!eta.one_sided);
    }

    #[test]
    fn cylinder_is_one_sided() {
        let params = NecksizeParams::new(std::f64::consts::PI).unwrap();
        let settings = ProfileSettings::default();
        let patch = immerse(profile_table(&params, &settings).unwrap(), false, 1.0, 40, 12).unwrap();
        let eta = necksize_change_field(&params, &settings, &patch, 1e-4, 0.0).unwrap();
        assert!(eta.one_sided);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let params = NecksizeParams::new(1.0).unwrap();
        let settings = ProfileSettings::default();
        let patch = immerse(profile_table(&params, &settings).unwrap(), false, 3.0, 60, 8).unwrap();
        let err = necksize_change_field(&params, &settings, &patch, 0.5, 0.0).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }
}
