//! `unduloid`: generate, analyze and verify Delaunay unduloids and their cousins.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use unduloid_core::classify::{classify_unduloid, compare_dphi_da, dphi_fd, Family};
use unduloid_core::config::RunConfig;
use unduloid_core::cousin::{
    cousin_field, integrate_cousin, left_transplant_residual, transplant_residual, verify_cousin, CousinSettings,
};
use unduloid_core::delaunay::{conformal_reparam, immerse, profile_table, solve_profile, NecksizeParams};
use unduloid_core::export::{modes_csv, profile_csv, GridMesh};
use unduloid_core::index_count::{consistency_report, dimension_table};
use unduloid_core::jacobi_modes::{nondegeneracy_check, Nondegeneracy};
use unduloid_core::quat_s3::{ImVector, KillingField, Quaternion, UnitQuaternion};
use unduloid_core::verify::{classify_settings, profile_settings, run_verify};
use unduloid_core::Error;

#[derive(Parser)]
#[command(name = "unduloid", version, about = "Delaunay unduloids, their cousins in S³, and Jacobi-field checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Profile CSV and surface OBJ.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Export only the upper half `φ ∈ [0, π]`.
        #[arg(long)]
        half: bool,
    },
    /// Floquet data per mode and the nondegeneracy verdict.
    Modes {
        #[command(flatten)]
        common: Common,
    },
    /// Cousin OBJ (stereographic) and identity residuals.
    Cousin {
        #[command(flatten)]
        common: Common,
        /// Projection center as `w,x,y,z` (normalized); defaults to a point well away from the antipodes of the cousin.
        #[arg(long)]
        center: Option<String>,
    },
    /// Boundary points, distance and necksize-change rates.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Full check suite as a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Dimension tables and the k = 2 consistency check.
    Dims {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        k_max: u32,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Flat JSON config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Necksize in (0, π]; repeat for a sweep.
    #[arg(long = "necksize")]
    necksizes: Vec<f64>,
    /// Grid as NTxNPHI.
    #[arg(long)]
    grid: Option<String>,
    /// Patch half-length in conformal periods.
    #[arg(long)]
    t_range: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    m_max: Option<u32>,
    /// Finite-difference step along families.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if !self.necksizes.is_empty() {
            c.necksizes = self.necksizes.clone();
        }
        if let Some(g) = &self.grid {
            (c.n_t, c.n_phi) = RunConfig::parse_grid(g)?;
        }
        if let Some(v) = self.t_range {
            c.t_range = v;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.m_max {
            c.m_max = v;
        }
        if let Some(v) = self.h {
            c.h = v;
        }
        if let Some(v) = &self.out {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate()?;
        Ok(c)
    }
}

enum Outcome {
    Pass,
    CheckFailed(String),
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn label(n: f64) -> String {
    format!("n{n:.4}")
}

fn pretty(v: &serde_json::Value) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn gen(c: &RunConfig, half: bool) -> Result<Outcome, Error> {
    for &n in &c.necksizes {
        let params = NecksizeParams::new(n)?;
        let s = profile_settings(c);
        let profile = conformal_reparam(&solve_profile(&params, s.tol, s.samples_per_period)?);
        let patch = immerse(profile_table(&params, &s)?, half, c.t_range, c.n_t, c.n_phi)?;
        let p = write(&c.output_dir, &format!("profile_{}.csv", label(n)), &profile_csv(&profile))?;
        let m = write(&c.output_dir, &format!("surface_{}.obj", label(n)), &GridMesh::from_patch(&patch).to_obj())?;
        println!("n = {n}: {} and {} ({} vertices)", p.display(), m.display(), patch.len());
    }
    Ok(Outcome::Pass)
}

fn modes(c: &RunConfig) -> Result<Outcome, Error> {
    let mut failed = Vec::new();
    for &n in &c.necksizes {
        let table = profile_table(&NecksizeParams::new(n)?, &profile_settings(c))?;
        let r = nondegeneracy_check(&table, c.m_max, c.tol)?;
        let d = &r.dimension;
        let path = write(&c.output_dir, &format!("modes_{}.csv", label(n)), &modes_csv(&d.modes, &d.verdicts))?;
        let verdict = match r.verdict {
            Nondegeneracy::Nondegenerate => "nondegenerate",
            Nondegeneracy::Inconclusive => "inconclusive",
        };
        println!(
            "n = {n}: {verdict}; tempered dimension {} ({} even); {}",
            d.total,
            d.even,
            path.display()
        );
        if r.verdict != Nondegeneracy::Nondegenerate {
            failed.push(format!("nondegeneracy at n = {n}"));
        }
    }
    Ok(if failed.is_empty() { Outcome::Pass } else { Outcome::CheckFailed(failed.join(", ")) })
}

fn parse_center(s: &str) -> Result<UnitQuaternion, Error> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Parameter(format!("center '{s}' is not w,x,y,z")))?;
    if v.len() != 4 {
        return Err(Error::Parameter(format!("center '{s}' needs four components")));
    }
    let q = Quaternion::new(v[0], v[1], v[2], v[3]);
    if !(q.norm() > 0.0) {
        return Err(Error::Parameter("center must be nonzero".into()));
    }
    Ok(UnitQuaternion::renormalize(q))
}

/// Among a few fixed candidates, the center whose antipode stays farthest from the surface.
fn default_center(values: &[UnitQuaternion]) -> UnitQuaternion {
    let s = 0.5;
    let candidates = [
        Quaternion::new(1.0, 0.0, 0.0, 0.0),
        Quaternion::new(0.0, 1.0, 0.0, 0.0),
        Quaternion::new(0.0, 0.0, 1.0, 0.0),
        Quaternion::new(0.0, 0.0, 0.0, 1.0),
        Quaternion::new(s, s, s, s),
        Quaternion::new(s, -s, s, -s),
        Quaternion::new(-s, s, s, -s),
        Quaternion::new(s, s, -s, s),
    ];
    let clearance = |c: &Quaternion| {
        values.iter().map(|p| 1.0 + c.dot(p.quat())).fold(f64::INFINITY, f64::min)
    };
    let best = candidates
        .iter()
        .max_by(|a, b| clearance(a).total_cmp(&clearance(b)))
        .copied()
        .unwrap_or(Quaternion::new(1.0, 0.0, 0.0, 0.0));
    UnitQuaternion::renormalize(best)
}

fn cousin(c: &RunConfig, center: Option<&str>) -> Result<Outcome, Error> {
    let center = center.map(parse_center).transpose()?;
    for &n in &c.necksizes {
        let table = profile_table(&NecksizeParams::new(n)?, &profile_settings(c))?;
        let patch = immerse(table, true, c.t_range, c.n_t, c.n_phi)?;
        let settings = CousinSettings::default();
        let cousin = integrate_cousin(&patch, &settings)?;
        let report = verify_cousin(&cousin, &patch)?;
        let rho = cousin_field(&KillingField::rotation(ImVector::K), &patch, &cousin, &settings)?;
        let w: Vec<Quaternion> = cousin.values.iter().map(|q| Quaternion::I * *q).collect();
        let summary = json!({
            "necksize": n,
            "grid": [c.n_t, c.n_phi],
            "t_range": c.t_range,
            "geometry": report,
            "residuals": {
                "rotation_cousin": rho.equation_residual,
                "rotation_cousin_discrepancy": rho.discrepancy,
                "left_transplant": left_transplant_residual(&cousin, &patch, ImVector::I),
                "transplant": transplant_residual(&w, &cousin, &patch)?,
            },
        });
        let mesh = GridMesh::from_cousin(&cousin, center.unwrap_or_else(|| default_center(&cousin.values)))?;
        let obj = write(&c.output_dir, &format!("cousin_{}.obj", label(n)), &mesh.to_obj())?;
        let js = write(&c.output_dir, &format!("cousin_{}.json", label(n)), &pretty(&summary)?)?;
        println!("n = {n}: {} and {}", obj.display(), js.display());
    }
    Ok(Outcome::Pass)
}

fn classify(c: &RunConfig) -> Result<Outcome, Error> {
    let s = classify_settings(c);
    let mut failed = Vec::new();
    for &n in &c.necksizes {
        let params = NecksizeParams::new(n)?;
        let cl = classify_unduloid(&params, &s)?;
        let comparable = n + c.h < std::f64::consts::PI;
        let (dphi, cmp) = if comparable {
            let d = dphi_fd(&params, &Family::Necksize, c.h, &s)?;
            let cmp = compare_dphi_da(&params, &Family::Necksize, c.h, &s)?;
            (Some(d), Some(cmp))
        } else {
            (None, None)
        };
        let summary = json!({
            "n": n,
            "v1": cl.tuple.points[0],
            "v2": cl.tuple.points[1],
            "distance": cl.distance,
            "distance_error": cl.error,
            "spreads": cl.tuple.spreads,
            "dPhi": dphi,
            "dA": cmp.as_ref().map(|x| x.da_rates),
            "discrepancies": cmp.as_ref().map(|x| json!({ "dPhi_vs_dA": x.difference, "dA_residual": x.da_residual })),
        });
        let path = write(&c.output_dir, &format!("classify_{}.json", label(n)), &pretty(&summary)?)?;
        println!("n = {n}: d(v1, v2) = {:.12}, |d − n| = {:.3e}; {}", cl.distance, cl.error, path.display());
        if cl.error > 5e-3 {
            failed.push(format!("distance at n = {n}"));
        }
    }
    Ok(if failed.is_empty() { Outcome::Pass } else { Outcome::CheckFailed(failed.join(", ")) })
}

fn verify(c: &RunConfig) -> Result<Outcome, Error> {
    let report = run_verify(c)?;
    std::fs::create_dir_all(&c.output_dir)?;
    let path = c.output_dir.join("report.json");
    report.emit(&path)?;
    println!("{} checks, pass = {}; {}", report.count, report.pass, path.display());
    if report.has_errors() {
        let names: Vec<&str> =
            report.records.iter().filter(|r| r.error.is_some()).map(|r| r.name.as_str()).collect();
        return Err(Error::Numerical(format!("checks could not be computed: {}", names.join(", "))));
    }
    Ok(if report.pass { Outcome::Pass } else { Outcome::CheckFailed(report.failed.join(", ")) })
}

fn dims(c: &RunConfig, k_max: u32) -> Result<Outcome, Error> {
    if k_max < 2 {
        return Err(Error::Parameter("k_max must be at least 2".into()));
    }
    let table = dimension_table(2..=k_max)?;
    let mut consistency = Vec::new();
    for &n in &c.necksizes {
        let profile = profile_table(&NecksizeParams::new(n)?, &profile_settings(c))?;
        consistency.push(consistency_report(&profile, c.m_max, c.tol)?);
    }
    let path = write(&c.output_dir, "dims.json", &pretty(&json!({ "table": table, "consistency": consistency }))?)?;
    for d in &table {
        println!("k = {} {:?}: premoduli {}, moduli {}", d.k, d.symmetry, d.premoduli_dim, d.moduli_dim);
    }
    println!("{}", path.display());
    let bad: Vec<String> =
        consistency.iter().filter(|r| !r.consistent).map(|r| format!("k = 2 count at n = {}", r.necksize)).collect();
    Ok(if bad.is_empty() { Outcome::Pass } else { Outcome::CheckFailed(bad.join(", ")) })
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Gen { common, half } => gen(&common.resolve()?, half),
        Command::Modes { common } => modes(&common.resolve()?),
        Command::Cousin { common, center } => cousin(&common.resolve()?, center.as_deref()),
        Command::Classify { common } => classify(&common.resolve()?),
        Command::Verify { common } => verify(&common.resolve()?),
        Command::Dims { common, k_max } => dims(&common.resolve()?, k_max),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed(what)) => {
            eprintln!("check failed: {what}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Parameter(_) | Error::Json(_) => 2,
                Error::Numerical(_) | Error::Contract(_) | Error::Io(_) => 3,
            };
            ExitCode::from(code)
        }
    }
}
