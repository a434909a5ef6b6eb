//! Asymptotic long-wave fields over variable bathymetry.
//!
//! The pipeline is: [`bathymetry`] supplies `H` and `C = sqrt(gH)`, [`raytrace`]
//! integrates the ray family with its variational columns, [`geometry`] finds
//! and classifies focal points and Maslov indices, and [`field`] assembles the
//! free-surface elevation. [`oracles`] holds the spectral and finite-difference
//! reference solvers used to check the asymptotics.

pub mod bathymetry;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod oracles;
pub mod quad;
pub mod raytrace;
pub mod solve;
pub mod source;
pub mod special;

pub use bathymetry::{Bathymetry, BathyKind, SpeedJet};
pub use error::{Error, Result};
pub use field::{AmplitudeRadius, BranchPoint, FieldValue, Scene, SceneOptions};
pub use geometry::{FocalPointInfo, FrontBranch, Jacobians};
pub use oracles::{BandError, FdResult, Field2, Grid2};
pub use raytrace::{ConservationReport, Front, Ray, RayBundle, RayState, TraceOptions};
pub use source::{ProfileMethod, SourceModel};

pub use nalgebra::{Matrix2, Vector2};
pub use num_complex::Complex64;

pub type V2 = Vector2<f64>;
pub type M2 = Matrix2<f64>;

/// Unit direction n(psi) = (cos psi, sin psi).
#[inline]
pub fn unit(psi: f64) -> V2 {
    V2::new(psi.cos(), psi.sin())
}

/// n_perp(psi) = (-sin psi, cos psi).
#[inline]
pub fn unit_perp(psi: f64) -> V2 {
    V2::new(-psi.sin(), psi.cos())
}

#[inline]
pub fn det2(a: &V2, b: &V2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_pi(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut r = a.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r -= tau;
    }
    r
}
