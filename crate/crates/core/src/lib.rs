//! Pop dynamics of planar four-bar linkages.
//!
//! A pop reflects one mobile vertex of the linkage across the line through
//! its two neighbours. Alternating pops of the two mobile vertices give a
//! map on the angle torus that preserves the closure curve of the linkage;
//! on that curve it acts as an orientation-preserving circle map whose
//! rotation number decides whether pop orbits are dense.
//!
//! - [`linkage`]: lengths, motion classification, closure length, kinematics
//! - [`pops`]: the angle maps, a geometric reflection oracle, orbits
//! - [`circle`]: polar coordinates, the circle map, lift, invariant measure,
//!   rotation numbers
//! - [`analysis`]: density, rotation scans, relabeling, closure-curve
//!   topology and confinement

// negated float comparisons are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circle;
pub mod contfrac;
pub mod error;
pub mod export;
pub mod linkage;
pub mod pops;
pub mod quadrature;

pub use analysis::{
    confinement_check, density_report, gamma_geometry, relabel_for_theorem, scan_rotation,
    DensityReport, GammaGeometry, Monotonicity, Relabeling, ScanOptions, ScanReport,
};
pub use circle::{
    det_jg, from_polar, polar_angle, to_polar, CircleMap, Lift, PeriodicityReport, PolarConfig,
    RotationEstimate, RotationMethod,
};
pub use error::{Error, Result};
pub use linkage::{
    classify, forward_kinematics, lbar, on_gamma, theorem_conditions, AngleConfig, Bars, Linkage,
    MotionClass, MotionKind, PlanarConfig, Point,
};
pub use pops::{
    alpha, orbit, orbit_with, pop12, pop23, pop23_with, pop_geometric, wrap, H23Reading,
    OrbitOptions, OrbitTrace, Pop, PopGeometry, Vertex,
};
