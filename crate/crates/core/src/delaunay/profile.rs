//! Generating curves of unduloids.
//!
//! The profile is integrated in arclength from the neck:
//!
//! ```text
//! x' = cos ψ,   r' = sin ψ,   ψ' = cos ψ / r − 2
//! ```
//!
//! where ψ is the angle of the tangent to the axis. `r cos ψ − r²` is a first
//! integral, equal to `c = a − a²` with neck radius `a = n / 2π`; its drift is
//! the accuracy monitor. The conformal coordinate is `dt = ds / r`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, StepControl};

/// Necksize and the derived radii of an unduloid with `H = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NecksizeParams {
    pub necksize: f64,
    /// Neck radius `a = n / 2π`.
    pub neck_radius: f64,
    /// Bulge radius `b = 1 − a`.
    pub bulge_radius: f64,
    /// First integral `c = a − a²`.
    pub delaunay_constant: f64,
}

impl NecksizeParams {
    pub fn new(necksize: f64) -> Result<Self> {
        if !(necksize > 0.0 && necksize <= PI) || !necksize.is_finite() {
            return Err(Error::param(format!("necksize {necksize} outside (0, π]")));
        }
        let a = necksize / (2.0 * PI);
        Ok(NecksizeParams {
            necksize,
            neck_radius: a,
            bulge_radius: 1.0 - a,
            delaunay_constant: a - a * a,
        })
    }

    /// The cylinder of radius 1/2; no period, no phase.
    pub fn is_cylinder(&self) -> bool {
        self.necksize >= PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSettings {
    pub tol: f64,
    pub samples_per_period: usize,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        ProfileSettings { tol: 1e-12, samples_per_period: 4096 }
    }
}

impl ProfileSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::param("profile tolerance must be positive"));
        }
        if self.samples_per_period < 16 {
            return Err(Error::param("need at least 16 samples per period"));
        }
        Ok(())
    }
}

/// Conformal period assigned to the cylinder, the limit of the unduloid
/// conformal period as the necksize tends to π.
pub const CYLINDER_NOMINAL_PERIOD: f64 = 2.0 * PI;

/// A sampled generating curve covering one period from neck to neck.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelaunayProfile {
    pub params: NecksizeParams,
    pub settings: ProfileSettings,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    /// Tangent angle ψ against the axis.
    pub angle: Vec<f64>,
    /// Conformal coordinate, present after [`conformal_reparam`].
    pub t: Option<Vec<f64>>,
    /// Arclength period; `None` for the cylinder.
    pub arclength_period: Option<f64>,
    /// Conformal period; `None` for the cylinder or before reparametrization.
    pub conformal_period: Option<f64>,
    /// Axial advance per period.
    pub axial_period: Option<f64>,
    pub max_conservation_residual: f64,
}

fn rhs(y: &[f64; 3]) -> [f64; 3] {
    let (c, s) = (y[2].cos(), y[2].sin());
    [c, s, c / y[1] - 2.0]
}

impl DelaunayProfile {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn is_cylinder(&self) -> bool {
        self.params.is_cylinder()
    }

    pub fn conservation_residual(&self, k: usize) -> f64 {
        let r = self.r[k];
        r * self.angle[k].cos() - r * r - self.params.delaunay_constant
    }

    pub fn min_radius(&self) -> f64 {
        self.r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Conformal period, or the cylinder's nominal period.
    pub fn nominal_period(&self) -> f64 {
        self.conformal_period.unwrap_or(CYLINDER_NOMINAL_PERIOD)
    }

    /// Largest `|r(s + S) − r(s)|` implied by the sampled endpoints.
    pub fn periodicity_defect(&self) -> f64 {
        let last = self.len() - 1;
        (self.r[last] - self.r[0]).abs().max(self.angle[last].abs())
    }
}

/// Integrates the arclength system over one full period, neck to neck.
pub fn solve_profile(
    params: &NecksizeParams,
    tol: f64,
    samples_per_period: usize,
) -> Result<DelaunayProfile> {
    let settings = ProfileSettings { tol, samples_per_period };
    settings.validate()?;
    let n = samples_per_period;
    if params.is_cylinder() {
        let span = CYLINDER_NOMINAL_PERIOD / 2.0;
        let s: Vec<f64> = (0..=n).map(|k| span * k as f64 / n as f64).collect();
        return Ok(DelaunayProfile {
            params: *params,
            settings,
            x: s.clone(),
            r: vec![0.5; n + 1],
            angle: vec![0.0; n + 1],
            s,
            t: None,
            arclength_period: None,
            conformal_period: None,
            axial_period: None,
            max_conservation_residual: 0.0,
        });
    }

    // The integrator runs a decade tighter than the requested tolerance so the
    // first-integral drift over a period stays inside 10·tol.
    let ctl = StepControl::with_tol(tol * 0.1);
    let f = |_: f64, y: &[f64; 3]| rhs(y);
    let y0 = [0.0, params.neck_radius, 0.0];

    // march to the first bulge, where the tangent angle returns to zero
    let chunk = 0.02;
    let mut s0 = 0.0;
    let mut y = y0;
    let half_period = loop {
        let (y1, _) = integrate(f, s0, y, s0 + chunk, &ctl)?;
        if y1[2] <= 0.0 && s0 > 0.0 {
            // Newton on ψ(s) = 0 from the last positive state
            let mut delta = chunk * y[2] / (y[2] - y1[2]);
            for _ in 0..60 {
                let (yd, _) = integrate(f, s0, y, s0 + delta, &ctl)?;
                let step = yd[2] / rhs(&yd)[2];
                delta -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            break s0 + delta;
        }
        s0 += chunk;
        y = y1;
        if s0 > 100.0 {
            return Err(Error::numerical("no bulge found within s = 100"));
        }
    };
    let period = 2.0 * half_period;

    let mut s = Vec::with_capacity(n + 1);
    let mut x = Vec::with_capacity(n + 1);
    let mut r = Vec::with_capacity(n + 1);
    let mut angle = Vec::with_capacity(n + 1);
    let mut y = y0;
    let mut local = ctl;
    s.push(0.0);
    x.push(y[0]);
    r.push(y[1]);
    angle.push(y[2]);
    for k in 1..=n {
        let sa = period * (k - 1) as f64 / n as f64;
        let sb = period * k as f64 / n as f64;
        let (y1, stats) = integrate(f, sa, y, sb, &local)?;
        local.initial_step = stats.next_step;
        y = y1;
        s.push(sb);
        x.push(y[0]);
        r.push(y[1]);
        angle.push(y[2]);
    }

    let mut profile = DelaunayProfile {
        params: *params,
        settings,
        s,
        x,
        r,
        angle,
        t: None,
        arclength_period: Some(period),
        conformal_period: None,
        axial_period: Some(y[0]),
        max_conservation_residual: 0.0,
    };
    profile.max_conservation_residual = (0..profile.len())
        .map(|k| profile.conservation_residual(k).abs())
        .fold(0.0, f64::max);
    if profile.max_conservation_residual > 10.0 * tol {
        return Err(Error::numerical(format!(
            "first integral drifted by {:.3e} (> 10·tol = {:.3e})",
            profile.max_conservation_residual,
            10.0 * tol
        )));
    }
    Ok(profile)
}

/// Adds the conformal coordinate `t = ∫ ds / r` and the conformal period.
///
/// Uses the trapezoid rule with the endpoint-derivative correction, which is
/// fourth order on the uniform arclength samples.
pub fn conformal_reparam(profile: &DelaunayProfile) -> DelaunayProfile {
    let mut out = profile.clone();
    if profile.is_cylinder() {
        out.t = Some(profile.s.iter().map(|s| 2.0 * s).collect());
        out.conformal_period = None;
        return out;
    }
    let g = |k: usize| 1.0 / profile.r[k];
    let dg = |k: usize| -profile.angle[k].sin() / (profile.r[k] * profile.r[k]);
    let mut t = Vec::with_capacity(profile.len());
    t.push(0.0);
    for k in 1..profile.len() {
        let h = profile.s[k] - profile.s[k - 1];
        let inc = 0.5 * h * (g(k - 1) + g(k)) + h * h / 12.0 * (dg(k - 1) - dg(k));
        t.push(t[k - 1] + inc);
    }
    out.conformal_period = t.last().copied();
    out.t = Some(t);
    out
}

/// A point of the generating curve in conformal parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub x: f64,
    pub r: f64,
    /// Tangent angle ψ; `x_t = r cos ψ`, `r_t = r sin ψ`.
    pub angle: f64,
}

/// A conformally parametrized generating curve of a surface of revolution
/// about the `i`-axis.
pub trait RevolutionProfile: Send + Sync + std::fmt::Debug {
    fn at(&self, t: f64) -> ProfilePoint;

    /// Mean curvature of the surface (1 for every profile in this crate).
    fn mean_curvature(&self) -> f64 {
        1.0
    }

    fn describe(&self) -> String;
}

fn derivs(x: f64, r: f64, a: f64) -> ([f64; 3], [f64; 3]) {
    let _ = x;
    let (c, s) = (a.cos(), a.sin());
    let xt = r * c;
    let rt = r * s;
    let at = c - 2.0 * r;
    let xtt = rt * c - r * s * at;
    let rtt = rt * s + r * c * at;
    let att = -s * at - 2.0 * rt;
    ([xt, rt, at], [xtt, rtt, att])
}

/// Quintic Hermite interpolation on `[0, 1]` (values, first and second
/// derivatives scaled by `h`, `h²`).
fn hermite5(u: f64, h: f64, f0: [f64; 3], f1: [f64; 3]) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u3 * u;
    let u5 = u4 * u;
    let h0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
    let h1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
    let h2 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
    let h3 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
    let h4 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
    let h5 = 0.5 * (u3 - 2.0 * u4 + u5);
    f0[0] * h0 + h * f0[1] * h1 + h * h * f0[2] * h2 + f1[0] * h3 + h * f1[1] * h4 + h * h * f1[2] * h5
}

/// Dense evaluator of a conformally parametrized unduloid profile.
///
/// Holds one period and extends by periodicity (`x` advances by the axial
/// period each time).
#[derive(Debug, Clone)]
pub struct ConformalTable {
    params: NecksizeParams,
    t: Vec<f64>,
    // per node: value, first derivative, second derivative
    x: Vec<[f64; 3]>,
    r: Vec<[f64; 3]>,
    a: Vec<[f64; 3]>,
    period: f64,
    axial: f64,
}

impl ConformalTable {
    pub fn new(profile: &DelaunayProfile) -> Result<Self> {
        let t = profile
            .t
            .as_ref()
            .ok_or_else(|| Error::param("profile has no conformal coordinate"))?;
        let mut xs = Vec::with_capacity(t.len());
        let mut rs = Vec::with_capacity(t.len());
        let mut az = Vec::with_capacity(t.len());
        for k in 0..t.len() {
            let (d1, d2) = derivs(profile.x[k], profile.r[k], profile.angle[k]);
            xs.push([profile.x[k], d1[0], d2[0]]);
            rs.push([profile.r[k], d1[1], d2[1]]);
            az.push([profile.angle[k], d1[2], d2[2]]);
        }
        Ok(ConformalTable {
            params: profile.params,
            t: t.clone(),
            x: xs,
            r: rs,
            a: az,
            period: profile.conformal_period.unwrap_or(CYLINDER_NOMINAL_PERIOD),
            axial: profile.axial_period.unwrap_or(0.0),
        })
    }

    pub fn params(&self) -> &NecksizeParams {
        &self.params
    }

    pub fn period(&self) -> f64 {
        self.period
    }
}

impl RevolutionProfile for ConformalTable {
    fn at(&self, t: f64) -> ProfilePoint {
        if self.params.is_cylinder() {
            return ProfilePoint { x: 0.5 * t, r: 0.5, angle: 0.0 };
        }
        let wraps = (t / self.period).floor();
        let mut tau = t - wraps * self.period;
        if tau >= self.period {
            tau = 0.0;
        }
        let last = self.t.len() - 1;
        let idx = match self.t.binary_search_by(|v| v.partial_cmp(&tau).unwrap()) {
            Ok(i) => i.min(last - 1),
            Err(i) => i.saturating_sub(1).min(last - 1),
        };
        let h = self.t[idx + 1] - self.t[idx];
        let u = (tau - self.t[idx]) / h;
        let x = hermite5(u, h, self.x[idx], self.x[idx + 1]);
        let r = hermite5(u, h, self.r[idx], self.r[idx + 1]);
        let a = hermite5(u, h, self.a[idx], self.a[idx + 1]);
        ProfilePoint { x: x + wraps * self.axial, r, angle: a }
    }

    fn describe(&self) -> String {
        format!("unduloid(n = {})", self.params.necksize)
    }
}

/// The unit sphere about the `i`-axis in Mercator coordinates:
/// `x = tanh t`, `r = sech t`. It solves the same profile system with `c = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitSphere;

impl RevolutionProfile for UnitSphere {
    fn at(&self, t: f64) -> ProfilePoint {
        ProfilePoint { x: t.tanh(), r: 1.0 / t.cosh(), angle: -t.sinh().atan() }
    }

    fn describe(&self) -> String {
        "unit sphere".into()
    }
}

/// Profile, reparametrization and dense table in one call.
pub fn conformal_table(params: &NecksizeParams, settings: &ProfileSettings) -> Result<ConformalTable> {
    let profile = solve_profile(params, settings.tol, settings.samples_per_period)?;
    ConformalTable::new(&conformal_reparam(&profile))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Conformal period by Gauss–Legendre quadrature after the substitution
    /// `r = (a+b)/2 − (b−a)/2 cos u`, which removes the endpoint singularities:
    /// `T = 2 ∫₀^π du / sqrt(r² + r + c)`.
    fn period_by_quadrature(p: &NecksizeParams) -> f64 {
        let (a, b, c) = (p.neck_radius, p.bulge_radius, p.delaunay_constant);
        // composite Simpson on a smooth periodic integrand is spectrally accurate
        let m = 2000;
        let h = PI / m as f64;
        let g = |u: f64| {
            let r = 0.5 * (a + b) - 0.5 * (b - a) * u.cos();
            1.0 / (r * r + r + c).sqrt()
        };
        let mut acc = g(0.0) + g(PI);
        for k in 1..m {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
        }
        2.0 * acc * h / 3.0
    }

    #[test]
    fn params_invariants() {
        for n in [0.1, 0.5, 1.0, 2.0, 3.0, PI] {
            let p = NecksizeParams::new(n).unwrap();
            assert!((p.neck_radius + p.bulge_radius - 1.0).abs() < 1e-15);
            assert!(p.neck_radius > 0.0 && p.neck_radius <= 0.5);
            assert!(p.delaunay_constant > 0.0 && p.delaunay_constant <= 0.25);
        }
        assert!(NecksizeParams::new(PI).unwrap().is_cylinder());
        assert!(NecksizeParams::new(0.0).is_err());
        assert!(NecksizeParams::new(3.2).is_err());
        assert!(NecksizeParams::new(f64::NAN).is_err());
    }

    #[test]
    fn cylinder_profile() {
        let p = NecksizeParams::new(PI).unwrap();
        assert_eq!(p.delaunay_constant, 0.25);
        let prof = solve_profile(&p, 1e-10, 64).unwrap();
        assert!(prof.r.iter().all(|&r| r == 0.5));
        assert!(prof.angle.iter().all(|&a| a == 0.0));
        let c = conformal_reparam(&prof);
        let t = c.t.as_ref().unwrap();
        for k in 0..c.len() {
            assert_eq!(t[k], 2.0 * c.s[k]);
        }
        let table = ConformalTable::new(&c).unwrap();
        let pt = table.at(3.7);
        assert_eq!(pt.x, 1.85);
        assert_eq!(pt.r, 0.5);
    }

    #[test]
    fn half_pi_radii_match_quadratic_roots() {
        let p = NecksizeParams::new(PI / 2.0).unwrap();
        assert!((p.neck_radius - 0.25).abs() < 1e-15);
        assert!((p.bulge_radius - 0.75).abs() < 1e-15);
        assert!((p.delaunay_constant - 3.0 / 16.0).abs() < 1e-15);
        let prof = solve_profile(&p, 1e-10, 1024).unwrap();
        // roots of r − r² = c
        let disc = (1.0 - 4.0 * p.delaunay_constant).sqrt();
        let (lo, hi) = ((1.0 - disc) / 2.0, (1.0 + disc) / 2.0);
        assert!((prof.min_radius() - lo).abs() < 1e-10);
        // the bulge sits exactly on a sample (the midpoint of the period)
        assert!((prof.max_radius() - hi).abs() < 1e-9);
    }

    #[test]
    fn conservation_at_tight_tolerance() {
        let p = NecksizeParams::new(PI / 2.0).unwrap();
        let prof = solve_profile(&p, 1e-10, 512).unwrap();
        assert!(prof.max_conservation_residual <= 1e-9);
        assert!(prof.periodicity_defect() <= 1e-9);
    }

    #[test]
    fn conformal_period_matches_quadrature() {
        for n in [PI / 2.0, 0.3, 2.7] {
            let p = NecksizeParams::new(n).unwrap();
            let prof = conformal_reparam(&solve_profile(&p, 1e-12, 4096).unwrap());
            let tq = period_by_quadrature(&p);
            let tt = prof.conformal_period.unwrap();
            assert!((tt - tq).abs() < 1e-7, "n = {n}: {tt} vs {tq}");
        }
    }

    #[test]
    fn metric_is_conformal() {
        // x_t² + r_t² = r² at every sample, by construction of dt = ds/r
        let p = NecksizeParams::new(1.2).unwrap();
        let table = conformal_table(&p, &ProfileSettings::default()).unwrap();
        let h = 1e-4;
        for k in 0..40 {
            let t = -7.0 + 0.37 * k as f64;
            let (a, b) = (table.at(t - h), table.at(t + h));
            let xt = (b.x - a.x) / (2.0 * h);
            let rt = (b.r - a.r) / (2.0 * h);
            let r = table.at(t).r;
            assert!(((xt * xt + rt * rt).sqrt() / r - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn table_is_even_about_neck() {
        let p = NecksizeParams::new(0.8).unwrap();
        let table = conformal_table(&p, &ProfileSettings::default()).unwrap();
        for k in 1..30 {
            let t = 0.41 * k as f64;
            let (a, b) = (table.at(t), table.at(-t));
            assert!((a.r - b.r).abs() < 1e-11);
            assert!((a.angle + b.angle).abs() < 1e-10);
            assert!((a.x + b.x).abs() < 1e-10);
        }
        let n = table.at(0.0);
        assert!((n.r - p.neck_radius).abs() < 1e-14);
    }

    #[test]
    fn hermite_reproduces_quintics() {
        let f = |u: f64| [u.powi(5) - 2.0 * u * u + 1.0, 5.0 * u.powi(4) - 4.0 * u, 20.0 * u.powi(3) - 4.0];
        let h = 0.7;
        let g = |t: f64| {
            let u = t;
            let v = f(u);
            v
        };
        let (t0, t1) = (0.2, 0.2 + h);
        for k in 0..=10 {
            let u = k as f64 / 10.0;
            let v = hermite5(u, h, g(t0), g(t1));
            assert!((v - g(t0 + u * h)[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_solves_profile_system() {
        let s = UnitSphere;
        for k in 0..20 {
            let t = -3.0 + 0.3 * k as f64;
            let p = s.at(t);
            // first integral r cos ψ − r² = 0
            assert!((p.r * p.angle.cos() - p.r * p.r).abs() < 1e-15);
            assert!((p.x * p.x + p.r * p.r - 1.0).abs() < 1e-15);
        }
    }
}
