//! Dimension bookkeeping for the relative index count.
//!
//! Each representative end contributes to the deficiency space `W^G`
//! according to its position relative to the symmetry group. The tempered
//! Jacobi fields exceed the decaying ones by `½ dim W^G`, which for
//! nondegenerate surfaces gives the premoduli and moduli dimensions.

use serde::{Deserialize, Serialize};

use crate::delaunay::ConformalTable;
use crate::error::{Error, Result};
use crate::jacobi_modes::{nondegeneracy_check, Nondegeneracy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndClass {
    Generic,
    MirrorPlane,
    Axis,
}

impl EndClass {
    pub fn contribution(self) -> u32 {
        match self {
            EndClass::Generic => 6,
            EndClass::MirrorPlane => 4,
            EndClass::Axis => 2,
        }
    }
}

/// `dim W^G` summed over representative ends.
pub fn deficiency_dim(ends: &[EndClass]) -> Result<u32> {
    if ends.is_empty() {
        return Err(Error::param("at least one representative end is needed"));
    }
    Ok(ends.iter().map(|e| e.contribution()).sum())
}

/// Dimension of the even Killing fields (two horizontal translations and `ρ_k`).
pub const EVEN_KILLING_DIM: u32 = 3;
/// Dimension of all Euclidean Killing fields.
pub const KILLING_DIM: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Ends in a common mirror plane.
    Coplanar,
    General,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimReport {
    pub k: u32,
    /// Genus is not constrained by the count; recorded for the table only.
    pub genus: u32,
    pub symmetry: Symmetry,
    pub deficiency_dim: u32,
    /// `dim Ĵ^G − dim Ĵ^G_0 = ½ dim W^G`.
    pub tempered_excess: u32,
    pub premoduli_dim: u32,
    pub moduli_dim: u32,
    /// Without nondegeneracy the premoduli count is only a lower bound.
    pub lower_bound_only: bool,
}

pub fn moduli_dims(k: u32, genus: u32, coplanar: bool, nondegenerate: bool) -> Result<DimReport> {
    if k < 2 {
        return Err(Error::param(format!("moduli counts need k ≥ 2 ends, got {k}")));
    }
    let (symmetry, end, killing) = if coplanar {
        (Symmetry::Coplanar, EndClass::MirrorPlane, EVEN_KILLING_DIM)
    } else {
        (Symmetry::General, EndClass::Generic, KILLING_DIM)
    };
    let deficiency_dim = deficiency_dim(&vec![end; k as usize])?;
    let tempered_excess = deficiency_dim / 2;
    Ok(DimReport {
        k,
        genus,
        symmetry,
        deficiency_dim,
        tempered_excess,
        premoduli_dim: tempered_excess,
        moduli_dim: tempered_excess - killing,
        lower_bound_only: !nondegenerate,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub necksize: f64,
    /// Even tempered dimension from the mode analysis.
    pub computed: u32,
    /// `2k` with `k = 2`.
    pub predicted: u32,
    pub consistent: bool,
    /// Carried over from inconclusive mode verdicts.
    pub inconclusive: bool,
}

/// Compares a computed even tempered dimension with the coplanar count `2k`, `k = 2`.
pub fn consistency_from(necksize: f64, computed_even: u32, inconclusive: bool) -> ConsistencyReport {
    let predicted = moduli_dims(2, 0, true, true).map(|d| d.premoduli_dim).unwrap_or(4);
    ConsistencyReport {
        necksize,
        computed: computed_even,
        predicted,
        consistent: !inconclusive && computed_even == predicted,
        inconclusive,
    }
}

pub fn consistency_report(table: &ConformalTable, m_max: u32, tol: f64) -> Result<ConsistencyReport> {
    let report = nondegeneracy_check(table, m_max, tol)?;
    let inconclusive = report.verdict == Nondegeneracy::Inconclusive;
    Ok(consistency_from(table.params().necksize, report.dimension.even, inconclusive))
}

/// Table of `moduli_dims` for `k ∈ ks`, coplanar and general.
pub fn dimension_table(ks: std::ops::RangeInclusive<u32>) -> Result<Vec<DimReport>> {
    let mut rows = Vec::new();
    for k in ks {
        rows.push(moduli_dims(k, 0, true, true)?);
        rows.push(moduli_dims(k, 0, false, true)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::{profile_table, NecksizeParams, ProfileSettings};
    use proptest::prelude::*;

    #[test]
    fn end_contributions() {
        assert_eq!(deficiency_dim(&[EndClass::MirrorPlane; 5]).unwrap(), 20);
        assert_eq!(deficiency_dim(&[EndClass::Generic; 3]).unwrap(), 18);
        assert_eq!(deficiency_dim(&[EndClass::Axis]).unwrap(), 2);
        assert!(deficiency_dim(&[]).is_err());
    }

    #[test]
    fn moduli_examples() {
        let d = moduli_dims(3, 0, true, true).unwrap();
        assert_eq!((d.premoduli_dim, d.moduli_dim), (6, 3));
        let d = moduli_dims(2, 0, true, true).unwrap();
        assert_eq!(d.premoduli_dim, 4);
        let d = moduli_dims(4, 1, false, true).unwrap();
        assert_eq!((d.premoduli_dim, d.moduli_dim), (12, 6));
        assert!(moduli_dims(4, 0, true, false).unwrap().lower_bound_only);
        assert!(moduli_dims(1, 0, true, true).is_err());
    }

    #[test]
    fn table_matches_formulas() {
        for d in dimension_table(2..=6).unwrap() {
            let k = d.k;
            let expected = match d.symmetry {
                Symmetry::Coplanar => (2 * k, 2 * k - 3),
                Symmetry::General => (3 * k, 3 * k - 6),
            };
            assert_eq!((d.premoduli_dim, d.moduli_dim), expected);
        }
    }

    #[test]
    fn unduloid_counts_are_consistent() {
        for n in [1.0, std::f64::consts::PI] {
            let table = profile_table(&NecksizeParams::new(n).unwrap(), &ProfileSettings::default()).unwrap();
            let r = consistency_report(&table, 8, 1e-10).unwrap();
            assert!(r.consistent, "{r:?}");
            assert_eq!((r.computed, r.predicted), (4, 4));
        }
    }

    #[test]
    fn injected_fault_is_flagged() {
        assert!(!consistency_from(1.0, 5, false).consistent);
        assert!(!consistency_from(1.0, 4, true).consistent);
    }

    proptest! {
        #[test]
        fn deficiency_is_additive_and_order_free(
            a in proptest::collection::vec(0u8..3, 1..12),
            b in proptest::collection::vec(0u8..3, 1..12),
        ) {
            let class = |x: &u8| [EndClass::Generic, EndClass::MirrorPlane, EndClass::Axis][*x as usize];
            let ea: Vec<EndClass> = a.iter().map(class).collect();
            let eb: Vec<EndClass> = b.iter().map(class).collect();
            let joined: Vec<EndClass> = ea.iter().chain(&eb).copied().collect();
            let mut reversed = joined.clone();
            reversed.reverse();
            let sum = deficiency_dim(&ea).unwrap() + deficiency_dim(&eb).unwrap();
            prop_assert_eq!(deficiency_dim(&joined).unwrap(), sum);
            prop_assert_eq!(deficiency_dim(&reversed).unwrap(), sum);
        }

        #[test]
        fn coplanar_moduli_drop_even_killing_fields(k in 2u32..40) {
            let d = moduli_dims(k, 0, true, true).unwrap();
            prop_assert_eq!(d.moduli_dim + EVEN_KILLING_DIM, d.premoduli_dim);
            prop_assert_eq!(2 * d.tempered_excess, d.deficiency_dim);
        }
    }
}
