//! Cotangent-formula mean curvature of a triangulated grid patch.
//!
//! Each grid quad is split along the diagonal `(i, j)–(i+1, j+1)`. At a vertex
//! the integrated Laplace–Beltrami of the position is
//! `K = ½ Σ (cot α + cot β)(f_j − f_i)` and the mean curvature is
//! `H = ⟨K, ν⟩ / (2A)` with `A` the barycentric (one-third) area.

use super::patch::{PatchKind, SurfacePatch};
use crate::quat_s3::ImVector;

fn cot(o: ImVector, p: ImVector, q: ImVector) -> f64 {
    let u = p - o;
    let v = q - o;
    u.dot(v) / u.cross(v).norm()
}

/// Signed mean curvature at every vertex with a complete one-ring
/// (`None` on the patch boundary).
pub fn cotan_mean_curvature(patch: &SurfacePatch) -> Vec<Option<f64>> {
    let (n_t, n_phi) = (patch.n_t(), patch.n_phi());
    let periodic = patch.grid.kind == PatchKind::Full;
    let mut lap = vec![ImVector::ZERO; patch.len()];
    let mut area = vec![0.0; patch.len()];
    let cols = if periodic { n_phi } else { n_phi - 1 };
    for i in 0..n_t - 1 {
        for j in 0..cols {
            let j1 = (j + 1) % n_phi;
            let quad = [patch.idx(i, j), patch.idx(i + 1, j), patch.idx(i + 1, j1), patch.idx(i, j1)];
            for tri in [[quad[0], quad[1], quad[2]], [quad[0], quad[2], quad[3]]] {
                let p = tri.map(|k| patch.frames[k].position);
                let a = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
                for c in 0..3 {
                    let (o, u, v) = (c, (c + 1) % 3, (c + 2) % 3);
                    // edge (u, v) is opposite corner o
                    let w = 0.5 * cot(p[o], p[u], p[v]);
                    lap[tri[u]] += (p[v] - p[u]) * w;
                    lap[tri[v]] += (p[u] - p[v]) * w;
                    area[tri[c]] += a / 3.0;
                }
            }
        }
    }
    (0..patch.len())
        .map(|k| {
            let (i, j) = (k / n_phi, k % n_phi);
            let interior_t = i > 0 && i + 1 < n_t;
            let interior_phi = periodic || (j > 0 && j + 1 < n_phi);
            (interior_t && interior_phi)
                .then(|| lap[k].dot(patch.frames[k].normal) / (2.0 * area[k]))
        })
        .collect()
}

/// Largest `|H − target|` over interior vertices.
pub fn max_mean_curvature_error(patch: &SurfacePatch, target: f64) -> f64 {
    cotan_mean_curvature(patch)
        .into_iter()
        .flatten()
        .map(|h| (h - target).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::patch::{hemisphere, immerse};
    use crate::delaunay::profile::{conformal_table, NecksizeParams, ProfileSettings};
    use std::sync::Arc;

    fn error_at(n: f64, n_t: usize, n_phi: usize) -> f64 {
        let p = NecksizeParams::new(n).unwrap();
        let table = Arc::new(conformal_table(&p, &ProfileSettings::default()).unwrap());
        max_mean_curvature_error(&immerse(table, false, 1.0, n_t, n_phi).unwrap(), 1.0)
    }

    #[test]
    fn cylinder_is_h_one() {
        assert!(error_at(std::f64::consts::PI, 60, 40) < 5e-3);
    }

    #[test]
    fn refinement_improves() {
        let coarse = error_at(1.1, 100, 50);
        let fine = error_at(1.1, 200, 100);
        assert!(fine < coarse * 0.5, "{coarse} -> {fine}");
        assert!(fine < 5e-3);
    }

    #[test]
    fn sphere_interior() {
        let patch = hemisphere(2.0, 80, 40).unwrap();
        assert!(max_mean_curvature_error(&patch, 1.0) < 5e-3);
    }
}
