//! The verification suite behind `unduloid verify`.
//!
//! Records are named `cN.<check>.n=<necksize>` so that sorting groups them by
//! criterion. A computation that raises an error becomes a failed record
//! carrying the error text. Geometry and identity checks sample one period
//! (`t ∈ [−T, T]`); the classifying-map checks use `config.t_range`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::{
    classified_patch, classify_unduloid, compare_dphi_da, dphi_almost_odd, necksize_cousin_field, ClassifySettings,
    Family,
};
use crate::config::RunConfig;
use crate::cousin::{
    classify_boundary, cousin_field, gauge_fitted_distance, integrate_cousin, integrate_cousin_field,
    left_transplant_residual, transplant_residual, verify_cousin, BoundaryVerdict, CousinPatch, CousinSettings,
    FieldOnPatch,
};
use crate::delaunay::{
    hemisphere, immerse, max_mean_curvature_error, profile_table, solve_profile, NecksizeParams, ProfileSettings,
    SurfacePatch,
};
use crate::error::{Error, Result};
use crate::index_count::{consistency_report, dimension_table, Symmetry};
use crate::jacobi_modes::{mode_potential, nondegeneracy_check, GrowthClass, Nondegeneracy};
use crate::quat_s3::{ImVector, KillingField, Quaternion, UnitQuaternion};
use crate::report::{CheckRecord, VerifyReport};

/// Residual floor below which a convergence order is not meaningful.
pub const CONVERGENCE_FLOOR: f64 = 1e-12;

/// Grid for the mesh mean-curvature check. The cotangent estimate does not
/// converge on strongly anisotropic grids, so it is not tied to the config grid.
pub const MESH_GRID: (usize, usize) = (200, 100);

/// Grid for the hemisphere cousin check.
pub const HEMISPHERE_GRID: (usize, usize) = (200, 200);

fn tag(n: f64) -> String {
    format!("n={n:.4}")
}

pub fn profile_settings(config: &RunConfig) -> ProfileSettings {
    ProfileSettings { tol: config.tol, ..ProfileSettings::default() }
}

pub fn classify_settings(config: &RunConfig) -> ClassifySettings {
    ClassifySettings {
        n_t: config.n_t,
        n_phi: config.n_phi,
        t_range: config.t_range,
        profile: profile_settings(config),
        ..ClassifySettings::default()
    }
}

/// Runs `block`; an error becomes a single failed record named `name`.
fn guarded(out: &mut Vec<CheckRecord>, name: &str, anchor: &str, block: impl FnOnce() -> Result<Vec<CheckRecord>>) {
    match block() {
        Ok(records) => out.extend(records),
        Err(e) => out.push(CheckRecord::failed(name, anchor, &e.to_string())),
    }
}

fn one_period_patch(n: f64, config: &RunConfig, half: bool) -> Result<SurfacePatch> {
    let table = profile_table(&NecksizeParams::new(n)?, &profile_settings(config))?;
    immerse(table, half, 1.0, config.n_t, config.n_phi)
}

fn delaunay_checks(n: f64, config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let params = NecksizeParams::new(n)?;
    let s = profile_settings(config);
    let profile = solve_profile(&params, s.tol, s.samples_per_period)?;
    let (n_t, n_phi) = MESH_GRID;
    let full = immerse(profile_table(&params, &s)?, false, 1.0, n_t, n_phi)?;
    let t = tag(n);
    Ok(vec![
        CheckRecord::at_most(
            &format!("c1.conservation.{t}"),
            "profile first integral r cos ψ − r² = a − a²",
            profile.max_conservation_residual,
            1e-9,
        ),
        CheckRecord::near(
            &format!("c1.neck_radius.{t}"),
            "minimum profile radius equals n/2π",
            profile.min_radius(),
            n / (2.0 * PI),
            1e-8,
        ),
        CheckRecord::at_most(
            &format!("c1.mesh_mean_curvature.{t}"),
            "cotangent mean curvature of the mesh equals 1",
            max_mean_curvature_error(&full, 1.0),
            5e-3,
        ),
    ])
}

fn hemisphere_checks() -> Result<Vec<CheckRecord>> {
    let patch = hemisphere(2.5, HEMISPHERE_GRID.0, HEMISPHERE_GRID.1)?;
    let cousin = integrate_cousin(&patch, &CousinSettings::default())?;
    let surface: Vec<UnitQuaternion> =
        patch.frames.iter().map(|f| UnitQuaternion::renormalize(f.position.quat())).collect();
    let report = verify_cousin(&cousin, &patch)?;
    Ok(vec![
        CheckRecord::at_most(
            "c2.hemisphere_cousin_is_itself",
            "cousin of the unit hemisphere equals the hemisphere up to left translation",
            gauge_fitted_distance(&cousin.values, &surface),
            1e-5,
        ),
        CheckRecord::at_most(
            "c2.hemisphere_mean_curvature",
            "discrete mean curvature of the hemisphere cousin in S³ vanishes",
            report.max_mean_curvature,
            5e-3,
        ),
    ])
}

fn cousin_checks(n: f64, patch: &SurfacePatch, cousin: &CousinPatch, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    let r = verify_cousin(cousin, patch)?;
    let q = UnitQuaternion::renormalize(Quaternion::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ));
    let g = verify_cousin(&cousin.with_gauge(q), patch)?;
    let gauge_gap = (g.isometry_defect - r.isometry_defect)
        .abs()
        .max((g.normal_relation_defect - r.normal_relation_defect).abs())
        .max((g.boundary_spread[0] - r.boundary_spread[0]).abs())
        .max((g.boundary_spread[1] - r.boundary_spread[1]).abs());
    let t = tag(n);
    Ok(vec![
        CheckRecord::at_most(&format!("c2.isometry.{t}"), "cousin is isometric to the surface", r.isometry_defect, 1e-5),
        CheckRecord::at_most(
            &format!("c2.holonomy.{t}"),
            "integration of df̃ = f̃ df∘J is path independent around every plaquette",
            r.max_holonomy,
            1e-6,
        ),
        CheckRecord::at_most(
            &format!("c2.boundary_spread.{t}"),
            "each cousin boundary curve projects to one point under Π_k",
            r.boundary_spread[0].max(r.boundary_spread[1]),
            1e-5,
        ),
        CheckRecord::at_most(
            &format!("c2.normal_relation.{t}"),
            "⟨ν̃, f̃k⟩ = ⟨ν, k⟩ with ν̃ = f̃ν",
            r.normal_relation_defect,
            1e-10,
        ),
        CheckRecord::at_most(
            &format!("c2.transversality.{t}"),
            "⟨ν̃, f̃k⟩ < 0 on the interior",
            r.transversality_margin,
            0.0,
        ),
        CheckRecord::at_most(
            &format!("c2.gauge_invariance.{t}"),
            "cousin checks are unchanged by a left translation of f̃",
            gauge_gap,
            1e-9,
        ),
    ])
}

fn distance_checks(n: f64, config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let params = NecksizeParams::new(n)?;
    let s = classify_settings(config);
    let main = classify_unduloid(&params, &s)?;
    let short = classify_unduloid(&params, &ClassifySettings { t_range: 2.0, ..s })?;
    let long = classify_unduloid(&params, &ClassifySettings { t_range: 4.0, ..s })?;
    let t = tag(n);
    Ok(vec![
        CheckRecord::near(
            &format!("c3.distance.{t}"),
            "spherical distance between the boundary points equals the necksize",
            main.distance,
            n,
            5e-3,
        ),
        CheckRecord::at_most(
            &format!("c3.distance_monotone.{t}"),
            "distance error does not grow from 2 to 4 periods (1e-9 floor)",
            long.error - short.error,
            1e-9,
        ),
    ])
}

/// Residuals of the three identities on one grid, plus the gap between the
/// integrated and closed-form rotation cousins.
///
/// The gap is limited by the integrator, not the grid, so it enters the bound
/// but not the convergence order.
fn identity_residuals(n: f64, config: &RunConfig, n_t: usize, n_phi: usize) -> Result<([f64; 3], f64)> {
    let table = profile_table(&NecksizeParams::new(n)?, &profile_settings(config))?;
    let patch = immerse(table, true, 1.0, n_t, n_phi)?;
    let cousin = integrate_cousin(&patch, &CousinSettings::default())?;
    let rho = cousin_field(&KillingField::rotation(ImVector::K), &patch, &cousin, &CousinSettings::default())?;
    let w: Vec<Quaternion> = cousin.values.iter().map(|q| Quaternion::I * *q).collect();
    Ok((
        [rho.equation_residual, left_transplant_residual(&cousin, &patch, ImVector::I), transplant_residual(&w, &cousin, &patch)?],
        rho.discrepancy,
    ))
}

fn identity_checks(n: f64, config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let (fine, gap) = identity_residuals(n, config, config.n_t, config.n_phi)?;
    let (coarse, _) = identity_residuals(n, config, config.n_t / 2, config.n_phi / 2)?;
    let t = tag(n);
    let names = [
        ("rotation_cousin", "ρ_k has the right translation r_k as cousin"),
        ("left_transplant", "2 df × ℓ̄_u − dℓ̄_u∘J = 0"),
        ("transplant", "f̃⁻¹dW = dW̄ + (df∘J)W̄"),
    ];
    let mut out = Vec::new();
    for (k, (name, anchor)) in names.iter().enumerate() {
        let bound = if k == 0 { fine[k].max(gap) } else { fine[k] };
        out.push(CheckRecord::at_most(&format!("c4.{name}.{t}"), anchor, bound, 1e-5));
        let order = if fine[k] <= CONVERGENCE_FLOOR { f64::INFINITY } else { (coarse[k] / fine[k]).log2() };
        out.push(CheckRecord::holds(
            &format!("c4.{name}_order.{t}"),
            "residual converges at least quadratically under grid halving (or sits at the floor)",
            order >= 2.0,
        ));
    }
    Ok(out)
}

fn cylinder_mode_checks(config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let table = profile_table(&NecksizeParams::new(PI)?, &profile_settings(config))?;
    let mut potential_gap = 0.0f64;
    for m in 0..=config.m_max {
        let q = mode_potential(&table, m, 64);
        let exact = (m * m) as f64 - 1.0;
        potential_gap = q.potential.iter().map(|v| (v - exact).abs()).fold(potential_gap, f64::max);
    }
    let report = nondegeneracy_check(&table, config.m_max, config.tol)?;
    let classes_ok = report.dimension.verdicts.iter().all(|v| {
        v.class
            == match v.m {
                0 => GrowthClass::Oscillatory,
                1 => GrowthClass::Parabolic,
                _ => GrowthClass::Hyperbolic,
            }
    });
    Ok(vec![
        CheckRecord::at_most("c5.cylinder_potential", "cylinder potential q_m = m² − 1", potential_gap, 0.0),
        CheckRecord::holds(
            "c5.cylinder_classes",
            "cylinder modes: m = 0 oscillatory, |m| = 1 parabolic, |m| ≥ 2 hyperbolic",
            classes_ok,
        ),
    ])
}

fn mode_checks(n: f64, config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let table = profile_table(&NecksizeParams::new(n)?, &profile_settings(config))?;
    let r = nondegeneracy_check(&table, config.m_max, config.tol)?;
    let d = &r.dimension;
    let high_hyperbolic = d.verdicts.iter().filter(|v| v.m >= 2).all(|v| v.class == GrowthClass::Hyperbolic);
    let wronskian = d.modes.iter().map(|m| m.wronskian_defect).fold(0.0, f64::max);
    let t = tag(n);
    Ok(vec![
        CheckRecord::holds(
            &format!("c5.high_modes_hyperbolic.{t}"),
            "modes |m| ≥ 2 are hyperbolic",
            high_hyperbolic && r.min_hyperbolic_margin > 0.0,
        ),
        CheckRecord::info(&format!("c5.hyperbolic_margin.{t}"), "smallest max|μ| − 1 over |m| ≥ 2", r.min_hyperbolic_margin),
        CheckRecord::holds(
            &format!("c5.tempered_dimension.{t}"),
            "tempered Jacobi fields: 6 in all, 4 even",
            d.total == 6 && d.even == 4,
        ),
        CheckRecord::holds(
            &format!("c5.nondegenerate.{t}"),
            "no decaying Jacobi fields and no inconclusive modes",
            r.verdict == Nondegeneracy::Nondegenerate && !d.inconclusive,
        ),
        CheckRecord::at_most(&format!("c5.wronskian.{t}"), "monodromy has unit determinant", wronskian, 1e-8),
    ])
}

fn consistency_checks(n: f64, config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let table = profile_table(&NecksizeParams::new(n)?, &profile_settings(config))?;
    let consistency = consistency_report(&table, config.m_max, config.tol)?;
    Ok(vec![CheckRecord::holds(
        &format!("c6.even_count_is_2k.{}", tag(n)),
        "even tempered dimension equals 2k for k = 2",
        consistency.consistent && !consistency.inconclusive,
    )])
}

fn table_checks() -> Result<Vec<CheckRecord>> {
    let ok = dimension_table(2..=6)?.iter().all(|d| {
        let k = d.k;
        (d.premoduli_dim, d.moduli_dim)
            == match d.symmetry {
                Symmetry::Coplanar => (2 * k, 2 * k - 3),
                Symmetry::General => (3 * k, 3 * k - 6),
            }
    });
    Ok(vec![CheckRecord::holds(
        "c6.dimension_table",
        "premoduli and moduli dimensions 2k, 2k − 3 (coplanar) and 3k, 3k − 6 (general)",
        ok,
    )])
}

fn necksize_change_checks(n: f64, config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let t = tag(n);
    if n + config.h >= PI {
        return Ok(vec![CheckRecord::info(
            &format!("c7.skipped.{t}"),
            "necksize family leaves (0, π); routes not compared",
            n,
        )]);
    }
    let params = NecksizeParams::new(n)?;
    let s = classify_settings(config);
    let necksize = compare_dphi_da(&params, &Family::Necksize, config.h, &s)?;
    let mut out = vec![
        CheckRecord::at_most(
            &format!("c7.necksize_routes.{t}"),
            "necksize-change rate agrees between dΦ and dA",
            necksize.difference,
            1e-2,
        ),
        CheckRecord::near(&format!("c7.necksize_rate.{t}"), "dΦ necksize rate per unit δn", necksize.dphi_rate, 1.0, 1e-2),
    ];
    for (label, family) in [("translation_j", Family::Translation(ImVector::J)), ("rotation_k", Family::Rotation(ImVector::K))] {
        let c = compare_dphi_da(&params, &family, config.h, &s)?;
        let worst = c.da_rates.iter().fold(c.dphi_rate.abs(), |a, r| a.max(r.abs()));
        out.push(CheckRecord::at_most(
            &format!("c7.{label}_rate.{t}"),
            "Killing families do not change the necksize via dΦ or dA",
            worst,
            1e-3,
        ));
    }
    let (_, patch, cousin) = classified_patch(&params, &s)?;
    let eta = necksize_cousin_field(&params, &patch, &cousin, config.h, &s)?;
    let rate = dphi_almost_odd(&eta, &patch, &cousin)?.distance_rate(0, 1).unwrap_or(f64::NAN);
    out.push(CheckRecord::near(
        &format!("c7.almost_odd_route.{t}"),
        "necksize rate from the almost-odd cousin of η matches dΦ",
        rate,
        necksize.dphi_rate,
        1e-2,
    ));
    Ok(out)
}

fn boundary_checks(
    n: f64,
    patch: &SurfacePatch,
    cousin: &CousinPatch,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CheckRecord>> {
    let t = tag(n);
    let verdicts = |f: &FieldOnPatch| -> Result<[BoundaryVerdict; 2]> {
        let c = classify_boundary(f, cousin, patch)?;
        Ok([c.curves[0].verdict, c.curves[1].verdict])
    };
    let tau_i = verdicts(&FieldOnPatch::killing(&KillingField::translation(ImVector::I), patch, cousin)?)?;
    let r_k = verdicts(&FieldOnPatch::killing(&KillingField::right(ImVector::K), patch, cousin)?)?;

    let mut unit = || {
        let v = ImVector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        v.normalized().unwrap_or(ImVector::K)
    };
    let u = unit();
    let left = classify_boundary(&FieldOnPatch::killing(&KillingField::left(u), patch, cousin)?, cousin, patch)?;
    let mut w_error = 0.0f64;
    let mut left_ok = true;
    for curve in &left.curves {
        let v = curve.hopf_point;
        match curve.verdict {
            BoundaryVerdict::AlmostOdd { w } => w_error = w_error.max((w - (u - v * u.dot(v))).norm()),
            _ => left_ok = false,
        }
    }

    let mut even_ok = true;
    for field in [
        KillingField::translation(ImVector::I),
        KillingField::translation(ImVector::J),
        KillingField::rotation(ImVector::K),
    ] {
        let z0 = unit() * 0.5;
        let values = integrate_cousin_field(&field, patch, cousin, z0, &CousinSettings::default())?;
        even_ok &= verdicts(&FieldOnPatch::cousin(values))?.iter().all(|v| v.is_almost_odd());
    }
    Ok(vec![
        CheckRecord::holds(&format!("c8.tau_i_even.{t}"), "τ_i is even on both boundary curves", tau_i.iter().all(|v| *v == BoundaryVerdict::Even)),
        CheckRecord::holds(&format!("c8.r_k_odd.{t}"), "r_k is odd on both boundary curves", r_k.iter().all(|v| *v == BoundaryVerdict::Odd)),
        CheckRecord::holds(&format!("c8.left_almost_odd.{t}"), "generic ℓ_u is almost odd", left_ok),
        CheckRecord::at_most(
            &format!("c8.left_recovered.{t}"),
            "fitted left translation equals u modulo v_i",
            if left_ok { w_error } else { f64::NAN },
            1e-4,
        ),
        CheckRecord::holds(
            &format!("c8.even_cousins_almost_odd.{t}"),
            "cousins of even Killing fields are almost odd",
            even_ok,
        ),
    ])
}

fn determinism_check(config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let params = NecksizeParams::new(config.necksizes[0])?;
    let s = ClassifySettings { n_t: 64, n_phi: 16, t_range: 1.0, ..classify_settings(config) };
    let a = serde_json::to_string(&classify_unduloid(&params, &s)?)?;
    let b = serde_json::to_string(&classify_unduloid(&params, &s)?)?;
    Ok(vec![CheckRecord::holds("c9.determinism", "repeated runs give byte-identical output", a == b)])
}

/// Number of acceptance criteria covered by the suite.
pub const CRITERIA: u8 = 9;

/// Records for one criterion (1 through 9), without the report round-trip.
fn criterion_records(id: u8, config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(u64::from(id)));
    let mut out = Vec::new();
    let sweep = |out: &mut Vec<CheckRecord>, anchor: &str, check: &dyn Fn(f64) -> Result<Vec<CheckRecord>>| {
        for &n in &config.necksizes {
            guarded(out, &format!("c{id}.{}", tag(n)), anchor, || check(n));
        }
    };
    match id {
        1 => sweep(&mut out, "Delaunay profile and mesh", &|n| delaunay_checks(n, config)),
        2 | 8 => {
            if id == 2 {
                guarded(&mut out, "c2.hemisphere", "hemisphere cousin", hemisphere_checks);
            }
            for &n in &config.necksizes {
                let t = tag(n);
                let upper = one_period_patch(n, config, true)
                    .and_then(|p| integrate_cousin(&p, &CousinSettings::default()).map(|c| (p, c)));
                match upper {
                    Ok((patch, cousin)) if id == 2 => guarded(&mut out, &format!("c2.{t}"), "cousin geometry", || {
                        cousin_checks(n, &patch, &cousin, &mut rng)
                    }),
                    Ok((patch, cousin)) => guarded(&mut out, &format!("c8.{t}"), "boundary classification", || {
                        boundary_checks(n, &patch, &cousin, &mut rng)
                    }),
                    Err(e) => out.push(CheckRecord::failed(&format!("c{id}.{t}"), "cousin integration", &e.to_string())),
                }
            }
        }
        3 => sweep(&mut out, "necksize equals spherical distance", &|n| distance_checks(n, config)),
        4 => sweep(&mut out, "cousin identities", &|n| identity_checks(n, config)),
        5 => {
            guarded(&mut out, "c5.cylinder", "cylinder closed forms", || cylinder_mode_checks(config));
            sweep(&mut out, "mode structure", &|n| mode_checks(n, config));
        }
        6 => {
            guarded(&mut out, "c6.dimension_table", "dimension tables", table_checks);
            sweep(&mut out, "k = 2 consistency", &|n| consistency_checks(n, config));
        }
        7 => sweep(&mut out, "dΦ and dA agreement", &|n| necksize_change_checks(n, config)),
        9 => {
            guarded(&mut out, "c9.determinism", "determinism", || determinism_check(config));
        }
        _ => return Err(Error::param(format!("criteria are numbered 1 to {CRITERIA}, got {id}"))),
    }
    Ok(out)
}

fn finish(mut records: Vec<CheckRecord>) -> Result<VerifyReport> {
    let draft = VerifyReport::new(records.clone());
    let round_trip = VerifyReport::parse(&draft.to_json()?).map(|back| back == draft).unwrap_or(false);
    records.push(CheckRecord::holds("c9.round_trip", "report JSON round-trips exactly", round_trip));
    Ok(VerifyReport::new(records))
}

/// Runs the checks of a single criterion. Criterion 9 includes the report
/// round-trip of its own records.
pub fn run_criterion(id: u8, config: &RunConfig) -> Result<VerifyReport> {
    config.validate()?;
    let records = criterion_records(id, config)?;
    if id == 9 {
        finish(records)
    } else {
        Ok(VerifyReport::new(records))
    }
}

/// Runs every check for `config`.
pub fn run_verify(config: &RunConfig) -> Result<VerifyReport> {
    config.validate()?;
    let mut records = Vec::new();
    for id in 1..=CRITERIA {
        records.extend(criterion_records(id, config)?);
    }
    finish(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let config = RunConfig { necksizes: vec![1.2], n_t: 200, n_phi: 100, t_range: 2.0, ..RunConfig::default() };
        let report = run_verify(&config).unwrap();
        let failed: Vec<_> = report.records.iter().filter(|r| !r.pass && !r.informational).collect();
        assert!(report.pass, "{failed:#?}");
        assert!(report.count > 30);
    }

    #[test]
    fn criteria_partition_the_suite() {
        let config = RunConfig { necksizes: vec![1.2], n_t: 200, n_phi: 100, t_range: 2.0, ..RunConfig::default() };
        let mut names = Vec::new();
        for id in 1..=CRITERIA {
            let r = run_criterion(id, &config).unwrap();
            assert!(r.records.iter().all(|x| x.name.starts_with(&format!("c{id}."))), "criterion {id}");
            names.extend(r.records.into_iter().map(|x| x.name));
        }
        names.sort();
        let all: Vec<String> = run_verify(&config).unwrap().records.into_iter().map(|x| x.name).collect();
        assert_eq!(names, all);
        assert!(run_criterion(10, &config).is_err());
    }
}
