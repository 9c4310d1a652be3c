//! OBJ and CSV writers. Numbers are printed with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::cousin::CousinPatch;
use crate::delaunay::{DelaunayProfile, PatchKind, SurfacePatch};
use crate::error::{Error, Result};
use crate::jacobi_modes::{FloquetData, ModeVerdict};
use crate::quat_s3::UnitQuaternion;

/// A structured quad mesh with row-major vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMesh {
    pub n_t: usize,
    pub n_phi: usize,
    /// Close each row with a quad back to its first vertex.
    pub wrap_phi: bool,
    pub vertices: Vec<[f64; 3]>,
}

impl GridMesh {
    pub fn from_patch(patch: &SurfacePatch) -> Self {
        GridMesh {
            n_t: patch.n_t(),
            n_phi: patch.n_phi(),
            wrap_phi: patch.grid.kind == PatchKind::Full,
            vertices: patch.frames.iter().map(|f| f.position.to_array()).collect(),
        }
    }

    /// Stereographic image of the cousin from `−center`: `p ↦ Im(q)/(1 + Re q)`,
    /// `q = center⁻¹ p`, so `center` lands at the origin.
    pub fn from_cousin(cousin: &CousinPatch, center: UnitQuaternion) -> Result<Self> {
        let inv = center.inverse();
        let vertices = cousin
            .values
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let q = (inv * *p).quat();
                if 1.0 + q.w < 1e-12 {
                    return Err(Error::numerical(format!(
                        "cousin node {k} sits at the projection pole; choose another center"
                    )));
                }
                Ok(q.imag().scale(1.0 / (1.0 + q.w)).to_array())
            })
            .collect::<Result<_>>()?;
        Ok(GridMesh { n_t: cousin.grid.n_t, n_phi: cousin.grid.n_phi, wrap_phi: false, vertices })
    }

    pub fn faces(&self) -> Vec<[usize; 4]> {
        let cols = if self.wrap_phi { self.n_phi } else { self.n_phi - 1 };
        let mut faces = Vec::with_capacity((self.n_t - 1) * cols);
        for i in 0..self.n_t - 1 {
            for j in 0..cols {
                let j1 = (j + 1) % self.n_phi;
                let at = |a: usize, b: usize| a * self.n_phi + b;
                faces.push([at(i, j), at(i + 1, j), at(i + 1, j1), at(i, j1)]);
            }
        }
        faces
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::with_capacity(self.vertices.len() * 72);
        let _ = writeln!(out, "# structured grid {} x {}, row-major", self.n_t, self.n_phi);
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
        }
        for f in self.faces() {
            let _ = writeln!(out, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1);
        }
        out
    }

    pub fn write_obj(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_obj())?;
        Ok(())
    }
}

/// `s, x, r, angle, t` per sample (`t` empty before reparametrization).
pub fn profile_csv(profile: &DelaunayProfile) -> String {
    let mut out = String::from("s,x,r,angle,t\n");
    for k in 0..profile.len() {
        let t = profile.t.as_ref().map(|t| format!("{:.16e}", t[k])).unwrap_or_default();
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{t}",
            profile.s[k], profile.x[k], profile.r[k], profile.angle[k]
        );
    }
    out
}

/// One row per mode `m ≥ 0`.
pub fn modes_csv(modes: &[FloquetData], verdicts: &[ModeVerdict]) -> String {
    let mut out = String::from("# mode -m has the same potential as m; rows list m = 0..m_max\n");
    out.push_str("m,mu1_re,mu1_im,mu2_re,mu2_im,trace,class,tempered,growth_rate,wronskian_defect,error_estimate\n");
    for (d, v) in modes.iter().zip(verdicts) {
        let tempered = v.tempered.map(|c| c.to_string()).unwrap_or_else(|| "?".into());
        let [a, b] = d.multipliers;
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e},{:.16e}",
            d.m,
            a[0],
            a[1],
            b[0],
            b[1],
            d.trace,
            v.class.label(),
            tempered,
            d.growth_rate,
            d.wronskian_defect,
            d.error_estimate
        );
    }
    out
}
