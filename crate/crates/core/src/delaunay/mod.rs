//! Unduloids: generating curves, conformal immersions and their Jacobi data.

pub mod curvature;
pub mod necksize;
pub mod patch;
pub mod profile;

pub use curvature::{cotan_mean_curvature, max_mean_curvature_error};
pub use necksize::{necksize_change_field, profile_table, NecksizeChangeField};
pub use patch::{
    conformality_defect, hemisphere, immerse, immerse_profile, GridSpec, PatchKind, RigidMotion,
    SurfaceFrame, SurfacePatch,
};
pub use profile::{
    conformal_reparam, conformal_table, solve_profile, ConformalTable, DelaunayProfile,
    NecksizeParams, ProfileSettings, RevolutionProfile, UnitSphere, CYLINDER_NOMINAL_PERIOD,
};
