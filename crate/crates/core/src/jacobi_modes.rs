//! Fourier-mode analysis of the Jacobi operator on unduloids.
//!
//! In conformal coordinates `Δ = r⁻² (∂_t² + ∂_φ²)`, so `Δu + |A|²u = 0`
//! separates into the Hill equations
//!
//! ```text
//! u_m'' = q_m(t) u_m,     q_m = m² − r²|A|² = m² − (2r − cos ψ)² − cos² ψ
//! ```
//!
//! with `T`-periodic potential. Growth of each mode is read off the monodromy
//! (period transfer matrix of `(u, u')`). The cylinder has constant `q_m` and
//! is handled in closed form with the nominal period `2π`.
//!
//! Modes `|m| ≥ 2` with `m² > max r²|A|²` have `q_m > 0` everywhere, so every
//! solution is convex in `|u|` and grows exponentially on some end; this tail
//! argument covers the modes beyond `m_max`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delaunay::{
    necksize_change_field, ConformalTable, NecksizeParams, ProfileSettings, RevolutionProfile,
    SurfacePatch, CYLINDER_NOMINAL_PERIOD,
};
use crate::error::{Error, Result};
use crate::ode::{integrate, StepControl};
use crate::quat_s3::{ImVector, KillingField};

/// Default highest mode examined explicitly.
pub const DEFAULT_M_MAX: u32 = 8;

/// `r²|A|²` along the profile.
pub fn scaled_curvature(r: f64, angle: f64) -> f64 {
    let c = angle.cos();
    (2.0 * r - c).powi(2) + c * c
}

/// The mode-`m` Hill equation sampled over one conformal period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeOde {
    pub m: u32,
    pub necksize: f64,
    /// `None` for the cylinder.
    pub period: Option<f64>,
    pub t: Vec<f64>,
    pub potential: Vec<f64>,
}

impl ModeOde {
    pub fn max_scaled_curvature(&self) -> f64 {
        let m2 = (self.m * self.m) as f64;
        self.potential.iter().map(|q| m2 - q).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `q_m` at an arbitrary `t` from the profile table.
    pub fn potential_at(m: u32, table: &ConformalTable, t: f64) -> f64 {
        let p = table.at(t);
        (m * m) as f64 - scaled_curvature(p.r, p.angle)
    }
}

/// Samples `q_m` on `samples + 1` points of `[0, T]`.
pub fn mode_potential(table: &ConformalTable, m: u32, samples: usize) -> ModeOde {
    let params = table.params();
    let period = table.period();
    let t: Vec<f64> = (0..=samples).map(|k| period * k as f64 / samples as f64).collect();
    let potential = t.iter().map(|&s| ModeOde::potential_at(m, table, s)).collect();
    ModeOde {
        m,
        necksize: params.necksize,
        period: (!params.is_cylinder()).then_some(period),
        t,
        potential,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    /// `|tr| < 2`: multipliers on the unit circle, all solutions bounded.
    Oscillatory,
    /// `|tr| = 2`: at most linear growth.
    Parabolic,
    /// `|tr| > 2`: exponential growth on at least one end.
    Hyperbolic,
    /// The trace is within the error band of a class boundary.
    Inconclusive,
}

impl GrowthClass {
    pub fn label(self) -> &'static str {
        match self {
            GrowthClass::Oscillatory => "oscillatory",
            GrowthClass::Parabolic => "parabolic",
            GrowthClass::Hyperbolic => "hyperbolic",
            GrowthClass::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetData {
    pub m: u32,
    pub necksize: f64,
    pub period: f64,
    /// Row-major transfer matrix of `(u, u')` over one period.
    pub monodromy: [[f64; 2]; 2],
    /// Multipliers as `[re, im]`, larger modulus first.
    pub multipliers: [[f64; 2]; 2],
    pub trace: f64,
    pub wronskian_defect: f64,
    /// Estimated absolute error of the monodromy entries.
    pub error_estimate: f64,
    pub class: GrowthClass,
    /// `ln max|μ| / T`, the exponential rate of the growing solution.
    pub growth_rate: f64,
    pub closed_form: bool,
}

impl FloquetData {
    pub fn max_modulus(&self) -> f64 {
        let [a, b] = self.multipliers;
        Complex64::new(a[0], a[1]).norm().max(Complex64::new(b[0], b[1]).norm())
    }

    pub fn multiplier_product(&self) -> Complex64 {
        let [a, b] = self.multipliers;
        Complex64::new(a[0], a[1]) * Complex64::new(b[0], b[1])
    }
}

fn multipliers(m: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = det2(m);
    let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    let half = Complex64::new(tr / 2.0, 0.0);
    // pair the large root with its reciprocal to avoid cancellation
    let big = if tr >= 0.0 { half + disc } else { half - disc };
    let small = if big.norm() > 0.0 { Complex64::new(det, 0.0) / big } else { half - disc };
    if big.norm() >= small.norm() {
        [big, small]
    } else {
        [small, big]
    }
}

/// `ad − bc` with Kahan's compensated product.
fn det2(m: &[[f64; 2]; 2]) -> f64 {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let w = b * c;
    let e = (-b).mul_add(c, w);
    let f = a.mul_add(d, -w);
    f + e
}

/// `|det − 1|` relative to the size of the products in the determinant, so
/// that strongly hyperbolic modes are judged at their working precision.
fn wronskian_defect(m: &[[f64; 2]; 2]) -> f64 {
    let scale = (m[0][0] * m[1][1]).abs() + (m[0][1] * m[1][0]).abs();
    (det2(m) - 1.0).abs() / scale.max(1.0)
}

fn pack(z: [Complex64; 2]) -> [[f64; 2]; 2] {
    [[z[0].re, z[0].im], [z[1].re, z[1].im]]
}

/// Profile and both fundamental solutions, integrated together over `[0, T]`.
fn transfer(params: &NecksizeParams, m: u32, period: f64, tol: f64) -> Result<[[f64; 2]; 2]> {
    let m2 = (m * m) as f64;
    let rhs = |_: f64, y: &[f64; 6]| {
        let (c, s) = (y[1].cos(), y[1].sin());
        let q = m2 - scaled_curvature(y[0], y[1]);
        [y[0] * s, c - 2.0 * y[0], y[3], q * y[2], y[5], q * y[4]]
    };
    let mut ctl = StepControl::with_tol(tol);
    ctl.initial_step = 1e-3;
    let y0 = [params.neck_radius, 0.0, 1.0, 0.0, 0.0, 1.0];
    let (y, _) = integrate(rhs, 0.0, y0, period, &ctl)?;
    Ok([[y[2], y[4]], [y[3], y[5]]])
}

/// Conformal period located as the return of the tangent angle to zero.
fn refined_period(params: &NecksizeParams, guess: f64, tol: f64) -> Result<f64> {
    let rhs = |_: f64, y: &[f64; 2]| [y[0] * y[1].sin(), y[1].cos() - 2.0 * y[0]];
    let ctl = StepControl::with_tol(tol.min(1e-12));
    let (mut y, _) = integrate(rhs, 0.0, [params.neck_radius, 0.0], guess, &ctl)?;
    let mut t = guess;
    for _ in 0..20 {
        let slope = y[1].cos() - 2.0 * y[0];
        let step = -y[1] / slope;
        let (y1, _) = integrate(rhs, t, y, t + step, &ctl)?;
        t += step;
        y = y1;
        if step.abs() < 1e-15 * t {
            break;
        }
    }
    Ok(t)
}

fn closed_form(params: &NecksizeParams, m: u32) -> FloquetData {
    let q = (m * m) as f64 - 1.0;
    let t = CYLINDER_NOMINAL_PERIOD;
    let (mono, mult, class) = if q < 0.0 {
        let w = (-q).sqrt();
        let (c, s) = ((w * t).cos(), (w * t).sin());
        let e = Complex64::new(0.0, w * t).exp();
        ([[c, s / w], [-w * s, c]], [e, e.conj()], GrowthClass::Oscillatory)
    } else if q == 0.0 {
        let one = Complex64::new(1.0, 0.0);
        ([[1.0, t], [0.0, 1.0]], [one, one], GrowthClass::Parabolic)
    } else {
        let w = q.sqrt();
        let (c, s) = ((w * t).cosh(), (w * t).sinh());
        let e = (w * t).exp();
        (
            [[c, s / w], [w * s, c]],
            [Complex64::new(e, 0.0), Complex64::new(1.0 / e, 0.0)],
            GrowthClass::Hyperbolic,
        )
    };
    FloquetData {
        m,
        necksize: params.necksize,
        period: t,
        monodromy: mono,
        multipliers: pack(mult),
        trace: mono[0][0] + mono[1][1],
        wronskian_defect: wronskian_defect(&mono),
        error_estimate: 0.0,
        class,
        growth_rate: if q > 0.0 { q.sqrt() } else { 0.0 },
        closed_form: true,
    }
}

/// Monodromy of mode `m`. For the cylinder the closed form is returned.
pub fn monodromy(table: &ConformalTable, m: u32, tol: f64) -> Result<FloquetData> {
    if !(tol > 0.0) {
        return Err(Error::param("monodromy tolerance must be positive"));
    }
    let params = *table.params();
    if params.is_cylinder() {
        return Ok(closed_form(&params, m));
    }
    let period = refined_period(&params, table.period(), tol)?;
    let coarse = transfer(&params, m, period, tol)?;
    let fine = transfer(&params, m, period, tol / 16.0)?;
    let scale = fine.iter().flatten().fold(1.0f64, |a, b| a.max(b.abs()));
    let diff = coarse
        .iter()
        .flatten()
        .zip(fine.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let error_estimate = diff.max(tol * scale);
    let mono = fine;
    let mult = multipliers(&mono);
    let trace = mono[0][0] + mono[1][1];
    let mut data = FloquetData {
        m,
        necksize: params.necksize,
        period,
        monodromy: mono,
        multipliers: pack(mult),
        trace,
        wronskian_defect: wronskian_defect(&mono),
        error_estimate,
        class: GrowthClass::Inconclusive,
        growth_rate: mult[0].norm().ln() / period,
        closed_form: false,
    };
    data.class = growth_class(&data);
    Ok(data)
}

/// Classification by the trace with a margin of ten error estimates on
/// either side of `|tr| = 2`.
fn growth_class(d: &FloquetData) -> GrowthClass {
    if d.closed_form {
        return d.class;
    }
    let band = 10.0 * 2.0 * d.error_estimate;
    let excess = d.trace.abs() - 2.0;
    if excess.abs() <= band {
        GrowthClass::Parabolic
    } else if excess < -10.0 * band {
        GrowthClass::Oscillatory
    } else if excess > 10.0 * band {
        GrowthClass::Hyperbolic
    } else {
        GrowthClass::Inconclusive
    }
}

/// Growth class and number of tempered (sub-exponential) solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeVerdict {
    pub m: u32,
    pub class: GrowthClass,
    /// `None` when inconclusive.
    pub tempered: Option<u32>,
}

pub fn classify_mode(data: &FloquetData) -> ModeVerdict {
    let class = growth_class(data);
    let tempered = match class {
        GrowthClass::Oscillatory | GrowthClass::Parabolic => Some(2),
        GrowthClass::Hyperbolic => Some(0),
        GrowthClass::Inconclusive => None,
    };
    ModeVerdict { m: data.m, class, tempered }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemperedDimension {
    pub necksize: f64,
    pub m_max: u32,
    /// Modes `±m` counted twice for `m ≥ 1`.
    pub total: u32,
    /// Even part: one of each `±m` pair.
    pub even: u32,
    pub modes: Vec<FloquetData>,
    pub verdicts: Vec<ModeVerdict>,
    /// Largest `r²|A|²` over the period.
    pub max_scaled_curvature: f64,
    /// True when `(m_max + 1)² > max r²|A|²`, covering all higher modes.
    pub tail_covered: bool,
    pub inconclusive: bool,
}

pub fn tempered_dimension(table: &ConformalTable, m_max: u32, tol: f64) -> Result<TemperedDimension> {
    if m_max < 2 {
        return Err(Error::param("m_max must be at least 2"));
    }
    let modes: Vec<FloquetData> = (0..=m_max)
        .into_par_iter()
        .map(|m| monodromy(table, m, tol))
        .collect::<Result<_>>()?;
    let verdicts: Vec<ModeVerdict> = modes.iter().map(classify_mode).collect();
    let mut total = 0;
    let mut even = 0;
    for v in &verdicts {
        let c = v.tempered.unwrap_or(0);
        total += if v.m == 0 { c } else { 2 * c };
        even += c;
    }
    let samples = mode_potential(table, 0, 2048);
    let max_scaled_curvature = samples.max_scaled_curvature();
    let next = (m_max + 1) as f64;
    let tail_covered = next * next > max_scaled_curvature;
    let inconclusive = verdicts.iter().any(|v| v.tempered.is_none()) || !tail_covered;
    Ok(TemperedDimension {
        necksize: table.params().necksize,
        m_max,
        total,
        even,
        modes,
        verdicts,
        max_scaled_curvature,
        tail_covered,
        inconclusive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nondegeneracy {
    Nondegenerate,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub verdict: Nondegeneracy,
    pub dimension: TemperedDimension,
    /// Smallest `max|μ| − 1` over the modes `2..=m_max`.
    pub min_hyperbolic_margin: f64,
    /// Smallest exponential rate over modes `2..=m_max`.
    pub min_growth_rate: f64,
}

/// No mode has an L² solution: hyperbolic modes pair a solution decaying at
/// one end with growth at the other, and oscillatory or parabolic modes have
/// no decaying solutions at all.
pub fn nondegeneracy_check(table: &ConformalTable, m_max: u32, tol: f64) -> Result<NondegeneracyReport> {
    let dimension = tempered_dimension(table, m_max, tol)?;
    let high = dimension.modes.iter().filter(|d| d.m >= 2);
    let min_hyperbolic_margin = high.clone().map(|d| d.max_modulus() - 1.0).fold(f64::INFINITY, f64::min);
    let min_growth_rate = high.map(|d| d.growth_rate).fold(f64::INFINITY, f64::min);
    let verdict = if dimension.inconclusive {
        Nondegeneracy::Inconclusive
    } else {
        Nondegeneracy::Nondegenerate
    };
    Ok(NondegeneracyReport { verdict, dimension, min_hyperbolic_margin, min_growth_rate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldLabel {
    TranslationI,
    TranslationJ,
    TranslationK,
    RotationJ,
    RotationK,
    NecksizeChange,
}

impl FieldLabel {
    pub const ALL: [FieldLabel; 6] = [
        FieldLabel::TranslationI,
        FieldLabel::TranslationJ,
        FieldLabel::TranslationK,
        FieldLabel::RotationJ,
        FieldLabel::RotationK,
        FieldLabel::NecksizeChange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldLabel::TranslationI => "tau_i",
            FieldLabel::TranslationJ => "tau_j",
            FieldLabel::TranslationK => "tau_k",
            FieldLabel::RotationJ => "rho_j",
            FieldLabel::RotationK => "rho_k",
            FieldLabel::NecksizeChange => "eta",
        }
    }

    pub fn killing(self) -> Option<KillingField> {
        match self {
            FieldLabel::TranslationI => Some(KillingField::translation(ImVector::I)),
            FieldLabel::TranslationJ => Some(KillingField::translation(ImVector::J)),
            FieldLabel::TranslationK => Some(KillingField::translation(ImVector::K)),
            FieldLabel::RotationJ => Some(KillingField::rotation(ImVector::J)),
            FieldLabel::RotationK => Some(KillingField::rotation(ImVector::K)),
            FieldLabel::NecksizeChange => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometricField {
    pub label: FieldLabel,
    pub field: Vec<ImVector>,
    pub normal_part: Vec<f64>,
    pub parity: Parity,
    /// Fourier mode in `φ` carrying the field.
    pub mode: u32,
    /// Fraction of `Σ|û|²` outside `±mode`.
    pub mode_leakage: f64,
    /// `max |u_tt + u_φφ + r²|A|² u| / max |u|` with grid differences.
    pub jacobi_residual: f64,
}

/// Relative discrete Jacobi residual of a normal part on a full patch.
pub fn jacobi_residual(patch: &SurfacePatch, u: &[f64]) -> f64 {
    let st = patch.stencil_t(2);
    let sp = patch.stencil_phi(2);
    let (n_t, n_phi) = (patch.n_t(), patch.n_phi());
    let scale = u.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let worst = (0..n_t)
        .into_par_iter()
        .map(|i| {
            (0..n_phi)
                .map(|j| {
                    let utt = st.apply_at(i, 0.0, |k| u[patch.idx(k, j)]);
                    let upp = sp.apply_at(j, 0.0, |k| u[patch.idx(i, k)]);
                    let f = patch.frame(i, j);
                    (utt + upp + f.conformal * f.conformal * f.a_squared * u[patch.idx(i, j)]).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    worst / scale
}

/// Parity of a normal part under `φ ↦ −φ`.
pub fn normal_parity(patch: &SurfacePatch, u: &[f64]) -> Result<Parity> {
    let mut sym = 0.0;
    let mut anti = 0.0;
    for i in 0..patch.n_t() {
        for j in 0..patch.n_phi() {
            let a = u[patch.idx(i, j)];
            let b = u[patch.mirror_index(i, j)?];
            sym += (a + b).powi(2);
            anti += (a - b).powi(2);
        }
    }
    let total = sym + anti;
    Ok(if anti <= 1e-20 * total {
        Parity::Even
    } else if sym <= 1e-20 * total {
        Parity::Odd
    } else {
        Parity::Mixed
    })
}

/// Dominant `φ`-mode and the energy fraction outside it.
pub fn mode_content(patch: &SurfacePatch, u: &[f64]) -> (u32, f64) {
    let n_phi = patch.n_phi();
    let mut energy = vec![0.0; n_phi / 2 + 1];
    for i in 0..patch.n_t() {
        for (m, e) in energy.iter_mut().enumerate() {
            let mut z = Complex64::new(0.0, 0.0);
            for j in 0..n_phi {
                z += Complex64::from_polar(u[patch.idx(i, j)], -(m as f64) * patch.phi[j]);
            }
            // ±m pairs are combined; m = 0 and the Nyquist mode stand alone
            let weight = if m == 0 || 2 * m == n_phi { 1.0 } else { 2.0 };
            *e += weight * z.norm_sqr();
        }
    }
    let total: f64 = energy.iter().sum();
    let (best, peak) = energy
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (m, &e)| if e > acc.1 { (m, e) } else { acc });
    let leak = if total > 0.0 { (total - peak) / total } else { 0.0 };
    (best as u32, leak)
}

/// Normal parts of `τ_i, τ_j, τ_k, ρ_j, ρ_k` and `η` on a full patch.
/// `ρ_i` is tangential and omitted.
pub fn geometric_jacobi_fields(
    patch: &SurfacePatch,
    params: &NecksizeParams,
    settings: &ProfileSettings,
    h: f64,
) -> Result<Vec<GeometricField>> {
    if patch.is_upper() {
        return Err(Error::param("geometric Jacobi fields need a full patch"));
    }
    let eta = necksize_change_field(params, settings, patch, h, 0.0)?;
    FieldLabel::ALL
        .iter()
        .map(|&label| {
            let field: Vec<ImVector> = match label.killing() {
                Some(k) => patch.frames.iter().map(|f| k.at_r3(f.position)).collect::<Result<_>>()?,
                None => eta.field.clone(),
            };
            let normal_part: Vec<f64> =
                field.iter().zip(&patch.frames).map(|(v, f)| v.dot(f.normal)).collect();
            let parity = normal_parity(patch, &normal_part)?;
            let (mode, mode_leakage) = mode_content(patch, &normal_part);
            let jacobi_residual = jacobi_residual(patch, &normal_part);
            Ok(GeometricField { label, field, normal_part, parity, mode, mode_leakage, jacobi_residual })
        })
        .collect()
}

/// Rank and condition number of the Gram matrix of the normalized normal parts.
pub fn gram_rank(fields: &[GeometricField]) -> (usize, f64) {
    let n = fields.len();
    let unit: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| {
            let s = f.normal_part.iter().map(|x| x * x).sum::<f64>().sqrt();
            f.normal_part.iter().map(|x| x / s).collect()
        })
        .collect();
    let gram = DMatrix::from_fn(n, n, |a, b| unit[a].iter().zip(&unit[b]).map(|(x, y)| x * y).sum::<f64>());
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let max = eig.iter().copied().fold(0.0, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let rank = eig.iter().filter(|&&e| e > 1e-12 * max).count();
    (rank, if min > 0.0 { max / min } else { f64::INFINITY })
}
