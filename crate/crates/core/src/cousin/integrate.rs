//! Path-ordered integration of `df̃ = f̃ df ∘ J` on an upper-half patch.
//!
//! In conformal coordinates the system reads
//!
//! ```text
//! ∂_t f̃ = f̃ f_φ,      ∂_φ f̃ = −f̃ f_t
//! ```
//!
//! Each grid edge is integrated with a fourth-order Magnus method for the
//! right-multiplied linear equation `Y' = Y A(s)`, `A` pure imaginary:
//!
//! ```text
//! Ω = h/2 (A₁ + A₂) + (√3/6) h² A₁ × A₂,    Y ← Y exp(Ω)
//! ```
//!
//! with `A₁, A₂` at the Gauss nodes. Every step is an exact rotation of S³.
//! The values are propagated from the anchor `(t, φ) = (0, 0)`, first along
//! the boundary curve `φ = 0` and then along each row. Holonomy around each
//! plaquette certifies path independence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delaunay::{GridSpec, SurfacePatch};
use crate::error::{Error, Result};
use crate::quat_s3::{ImVector, Quaternion, UnitQuaternion};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CousinSettings {
    /// Largest parameter step inside one grid edge.
    pub max_substep: f64,
    /// Plaquette holonomy above this aborts the integration.
    pub holonomy_tol: f64,
}

impl Default for CousinSettings {
    fn default() -> Self {
        CousinSettings { max_substep: 0.005, holonomy_tol: 1e-6 }
    }
}

/// The conjugate cousin sampled on the grid of its upper-half patch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CousinPatch {
    pub grid: GridSpec,
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    /// Row-major values, same layout as the patch.
    pub values: Vec<UnitQuaternion>,
    /// Value assigned at the anchor `(0, 0)`.
    pub gauge: UnitQuaternion,
    pub max_holonomy: f64,
    /// Lower-left node `(i, j)` of the worst plaquette.
    pub worst_plaquette: (usize, usize),
}

impl CousinPatch {
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.grid.n_phi + j
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> UnitQuaternion {
        self.values[self.idx(i, j)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The cousin `q f̃` for a unit `q` (the left-translation freedom).
    pub fn with_gauge(&self, q: UnitQuaternion) -> CousinPatch {
        CousinPatch {
            values: self.values.iter().map(|v| q * *v).collect(),
            gauge: q * self.gauge,
            ..self.clone()
        }
    }

    /// Column indices of the two boundary curves `φ = 0` and `φ = π`.
    pub fn boundary_columns(&self) -> [usize; 2] {
        [0, self.grid.n_phi - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    T,
    Phi,
}

/// Coefficient `A` of `∂ f̃ = f̃ A` along a coordinate direction.
pub(crate) fn connection(patch: &SurfacePatch, dir: Direction, t: f64, phi: f64) -> ImVector {
    let f = patch.frame_at(t, phi);
    match dir {
        Direction::T => f.d_phi,
        Direction::Phi => -f.d_t,
    }
}

fn substeps(length: f64, max_substep: f64) -> usize {
    ((length.abs() / max_substep).ceil() as usize).max(1)
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6
const MAGNUS_CROSS: f64 = 0.288_675_134_594_812_9; // √3/6

/// Transport `Y(s1) = Y(s0) E` along one coordinate line.
pub(crate) fn transport(
    patch: &SurfacePatch,
    dir: Direction,
    fixed: f64,
    s0: f64,
    s1: f64,
    max_substep: f64,
) -> UnitQuaternion {
    let n = substeps(s1 - s0, max_substep);
    let h = (s1 - s0) / n as f64;
    let at = |s: f64| match dir {
        Direction::T => connection(patch, dir, s, fixed),
        Direction::Phi => connection(patch, dir, fixed, s),
    };
    let mut y = Quaternion::ONE;
    for k in 0..n {
        let mid = s0 + (k as f64 + 0.5) * h;
        let a1 = at(mid - GAUSS_OFFSET * h);
        let a2 = at(mid + GAUSS_OFFSET * h);
        let omega = (a1 + a2) * (0.5 * h) + a1.cross(a2) * (MAGNUS_CROSS * h * h);
        y = y * omega.exp().quat();
    }
    UnitQuaternion::renormalize(y)
}

/// Integrates the cousin of an upper-half patch with `f̃(0, 0) = 1`.
pub fn integrate_cousin(patch: &SurfacePatch, settings: &CousinSettings) -> Result<CousinPatch> {
    if !patch.is_upper() {
        return Err(Error::param("the cousin is integrated on an upper-half patch"));
    }
    if !(settings.max_substep > 0.0) || !(settings.holonomy_tol > 0.0) {
        return Err(Error::param("cousin settings must be positive"));
    }
    let (n_t, n_phi) = (patch.n_t(), patch.n_phi());
    for i in 0..n_t {
        for j in 1..n_phi - 1 {
            let z = patch.frame(i, j).normal.z;
            if !(z < 0.0) {
                return Err(Error::param(format!(
                    "normal is not downward at node ({i}, {j}): ⟨ν, k⟩ = {z}"
                )));
            }
        }
    }
    let step = settings.max_substep;
    let (t, phi) = (&patch.t, &patch.phi);

    // boundary curve φ = 0, marching out from t = 0 in both directions
    let mut column = vec![UnitQuaternion::IDENTITY; n_t];
    let first_up = t.iter().position(|&s| s >= 0.0).unwrap_or(n_t);
    let mut prev = (0.0, UnitQuaternion::IDENTITY);
    for i in first_up..n_t {
        let e = transport(patch, Direction::T, phi[0], prev.0, t[i], step);
        column[i] = prev.1 * e;
        prev = (t[i], column[i]);
    }
    prev = (0.0, UnitQuaternion::IDENTITY);
    for i in (0..first_up).rev() {
        let e = transport(patch, Direction::T, phi[0], prev.0, t[i], step);
        column[i] = prev.1 * e;
        prev = (t[i], column[i]);
    }

    // rows, keeping the φ-edge transports for the holonomy check
    let rows: Vec<(Vec<UnitQuaternion>, Vec<UnitQuaternion>)> = (0..n_t)
        .into_par_iter()
        .map(|i| {
            let edges: Vec<UnitQuaternion> = (0..n_phi - 1)
                .map(|j| transport(patch, Direction::Phi, t[i], phi[j], phi[j + 1], step))
                .collect();
            let mut row = Vec::with_capacity(n_phi);
            row.push(column[i]);
            for e in &edges {
                let last = *row.last().unwrap();
                row.push(last * *e);
            }
            (row, edges)
        })
        .collect();

    // holonomy: E_t(i, j) E_φ(i+1, j) against E_φ(i, j) E_t(i, j+1)
    let t_edges: Vec<Vec<UnitQuaternion>> = (0..n_t - 1)
        .into_par_iter()
        .map(|i| {
            (0..n_phi)
                .map(|j| transport(patch, Direction::T, phi[j], t[i], t[i + 1], step))
                .collect()
        })
        .collect();
    let (max_holonomy, worst_plaquette) = (0..n_t - 1)
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0f64, (i, 0));
            for j in 0..n_phi - 1 {
                let a = t_edges[i][j] * rows[i + 1].1[j];
                let b = rows[i].1[j] * t_edges[i][j + 1];
                let gap = (a.quat() - b.quat()).norm();
                if gap > best.0 {
                    best = (gap, (i, j));
                }
            }
            best
        })
        .reduce(|| (0.0, (0, 0)), |a, b| if b.0 > a.0 { b } else { a });
    if max_holonomy > settings.holonomy_tol {
        return Err(Error::numerical(format!(
            "plaquette holonomy {max_holonomy:.3e} at node {worst_plaquette:?} exceeds {:.1e}",
            settings.holonomy_tol
        )));
    }

    let values = rows.into_iter().flat_map(|(row, _)| row).collect();
    Ok(CousinPatch {
        grid: patch.grid,
        t: t.clone(),
        phi: phi.clone(),
        values,
        gauge: UnitQuaternion::IDENTITY,
        max_holonomy,
        worst_plaquette,
    })
}
