//! Run configuration, stored as flat JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::delaunay::NecksizeParams;
use crate::error::{Error, Result};

/// Necksizes exercised by the default sweep.
pub const DEFAULT_SWEEP: [f64; 6] = [0.3, 0.9, 1.5, 2.1, 2.7, std::f64::consts::PI];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub necksizes: Vec<f64>,
    pub n_t: usize,
    pub n_phi: usize,
    /// Half-length of unduloid patches in conformal periods.
    pub t_range: f64,
    /// Integrator tolerance for profiles and monodromies.
    pub tol: f64,
    pub m_max: u32,
    /// Finite-difference step along families.
    pub h: f64,
    pub output_dir: PathBuf,
    /// Seed for sampled checks (random gauges).
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            necksizes: DEFAULT_SWEEP.to_vec(),
            n_t: 400,
            n_phi: 100,
            t_range: 3.0,
            tol: 1e-12,
            m_max: 8,
            h: 1e-3,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.necksizes.is_empty() {
            return Err(Error::param("at least one necksize is required"));
        }
        for &n in &self.necksizes {
            NecksizeParams::new(n)?;
        }
        if self.n_t < 16 || self.n_phi < 8 {
            return Err(Error::param(format!("grid {}x{} is below the 16x8 minimum", self.n_t, self.n_phi)));
        }
        for (name, v) in [("t_range", self.t_range), ("tol", self.tol), ("h", self.h)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if self.m_max < 2 {
            return Err(Error::param("m_max must be at least 2"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Parses `NTxNPHI`.
    pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::param(format!("grid '{s}' is not of the form NTxNPHI")))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::param(format!("bad grid size '{v}'")));
        Ok((parse(a)?, parse(b)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back: RunConfig = serde_json::from_str(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"necksizes": [1.0], "n_t": 64}"#).unwrap();
        assert_eq!(c.n_t, 64);
        assert_eq!(c.n_phi, 100);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            RunConfig { n_t: 8, ..RunConfig::default() },
            RunConfig { tol: 0.0, ..RunConfig::default() },
            RunConfig { necksizes: vec![4.0], ..RunConfig::default() },
            RunConfig { necksizes: vec![], ..RunConfig::default() },
            RunConfig { m_max: 1, ..RunConfig::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Parameter(_))), "{c:?}");
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(RunConfig::parse_grid("200x100").unwrap(), (200, 100));
        assert!(RunConfig::parse_grid("200-100").is_err());
    }
}
