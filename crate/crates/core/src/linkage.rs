//! Four-bar linkages with a fixed ground bar.
//!
//! Bars 1, 2 and 3 form the mobile chain A-B-C-D; the ground bar of length
//! `L` joins D back to A. A configuration is described by the two relative
//! turning angles (theta1 from bar 1 to bar 2, theta2 from bar 2 to bar 3),
//! and the chain closes exactly when [`lbar`] of those angles equals `L`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pops::wrap;

/// Relative tolerance below which a `T_i` term counts as zero.
pub const DEGENERATE_REL_TOL: f64 = 1e-12;

/// Default closure tolerance, relative to the ground length.
pub const CLOSURE_REL_TOL: f64 = 1e-9;

/// Lengths of the three mobile bars (input, floating, output).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Bars {
    l1: f64,
    l2: f64,
    l3: f64,
}

impl Bars {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        for (name, v) in [("l1", l1), ("l2", l2), ("l3", l3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { l1, l2, l3 })
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn l3(&self) -> f64 {
        self.l3
    }

    pub fn sum(&self) -> f64 {
        self.l1 + self.l2 + self.l3
    }

    /// Open interval of ground lengths for which the chain is a 0-pi double
    /// rocker: `max{-l1+l2+l3, l1-l2+l3, l1+l2-l3} < L < l1+l2+l3`.
    pub fn lambda(&self) -> (f64, f64) {
        let (l1, l2, l3) = (self.l1, self.l2, self.l3);
        let lo = (-l1 + l2 + l3).max(l1 - l2 + l3).max(l1 + l2 - l3);
        (lo, self.sum())
    }

    /// Checks `ground` against the admissible interval and names the
    /// violated inequality.
    pub fn check_lambda(&self, ground: f64) -> Result<()> {
        let (l1, l2, l3) = (self.l1, self.l2, self.l3);
        let fail = |violated: String| {
            Err(Error::OutsideLambda {
                value: ground,
                violated,
            })
        };
        if !ground.is_finite() {
            return fail("L must be finite".into());
        }
        if ground >= self.sum() {
            return fail(format!("L < l1+l2+l3 = {}", self.sum()));
        }
        if ground <= l1 - l2 + l3 {
            return fail(format!("L > l1-l2+l3 = {} (T1 > 0)", l1 - l2 + l3));
        }
        if ground <= l1 + l2 - l3 {
            return fail(format!("L > l1+l2-l3 = {} (T2 > 0)", l1 + l2 - l3));
        }
        if ground <= -l1 + l2 + l3 {
            return fail(format!("L > -l1+l2+l3 = {} (T3 < 0)", -l1 + l2 + l3));
        }
        Ok(())
    }

    pub fn contains_in_lambda(&self, ground: f64) -> bool {
        self.check_lambda(ground).is_ok()
    }
}

impl TryFrom<[f64; 3]> for Bars {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Bars::new(v[0], v[1], v[2])
    }
}

impl From<Bars> for [f64; 3] {
    fn from(b: Bars) -> Self {
        [b.l1, b.l2, b.l3]
    }
}

#[derive(Deserialize)]
struct RawLinkage {
    l1: f64,
    l2: f64,
    l3: f64,
    #[serde(rename = "L")]
    ground: f64,
}

/// A feasible four-bar linkage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinkage")]
pub struct Linkage {
    l1: f64,
    l2: f64,
    l3: f64,
    #[serde(rename = "L")]
    ground: f64,
}

impl TryFrom<RawLinkage> for Linkage {
    type Error = Error;

    fn try_from(r: RawLinkage) -> Result<Self> {
        Linkage::new(r.l1, r.l2, r.l3, r.ground)
    }
}

impl Linkage {
    /// Builds a linkage, rejecting non-positive lengths and length sets that
    /// cannot close:
    /// `max{0, l1-l2-l3, -l1+l2-l3, -l1-l2+l3} < L < l1+l2+l3`.
    pub fn new(l1: f64, l2: f64, l3: f64, ground: f64) -> Result<Self> {
        let bars = Bars::new(l1, l2, l3)?;
        if !(ground.is_finite() && ground > 0.0) {
            return Err(Error::Infeasible {
                bound: format!("L must be positive and finite, got {ground}"),
            });
        }
        if ground >= bars.sum() {
            return Err(Error::Infeasible {
                bound: format!("L < l1+l2+l3 violated: {ground} >= {}", bars.sum()),
            });
        }
        let lower = [
            ("l1-l2-l3", l1 - l2 - l3),
            ("-l1+l2-l3", -l1 + l2 - l3),
            ("-l1-l2+l3", -l1 - l2 + l3),
        ];
        for (name, v) in lower {
            if ground <= v {
                return Err(Error::Infeasible {
                    bound: format!("L > {name} violated: {ground} <= {v}"),
                });
            }
        }
        Ok(Self { l1, l2, l3, ground })
    }

    pub fn from_bars(bars: Bars, ground: f64) -> Result<Self> {
        Self::new(bars.l1, bars.l2, bars.l3, ground)
    }

    pub fn bars(&self) -> Bars {
        Bars {
            l1: self.l1,
            l2: self.l2,
            l3: self.l3,
        }
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn l3(&self) -> f64 {
        self.l3
    }

    /// Length of the fixed ground bar.
    pub fn ground(&self) -> f64 {
        self.ground
    }

    /// Closure tolerance used when no explicit one is given.
    pub fn default_tol(&self) -> f64 {
        CLOSURE_REL_TOL * self.ground
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(l1={}, l2={}, l3={}, L={})",
            self.l1, self.l2, self.l3, self.ground
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionKind {
    /// `T1 > 0, T2 > 0, T3 < 0`.
    ZeroPiDoubleRocker,
    OtherNonGrashof,
    Grashof,
    /// Some `T_i` vanishes; the linkage can fold flat.
    DegenerateBoundary,
}

impl fmt::Display for MotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ZeroPiDoubleRocker => "ZeroPiDoubleRocker",
            Self::OtherNonGrashof => "OtherNonGrashof",
            Self::Grashof => "Grashof",
            Self::DegenerateBoundary => "DegenerateBoundary",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionClass {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub grashof: bool,
    pub kind: MotionKind,
}

/// The three motion terms `(T1, T2, T3)` of an arbitrary length tuple.
pub fn motion_terms(l1: f64, l2: f64, l3: f64, ground: f64) -> (f64, f64, f64) {
    (
        -l1 + l2 - l3 + ground,
        -l1 - l2 + l3 + ground,
        -l1 + l2 + l3 - ground,
    )
}

pub(crate) fn classify_lengths(l1: f64, l2: f64, l3: f64, ground: f64) -> MotionClass {
    let (t1, t2, t3) = motion_terms(l1, l2, l3, ground);
    let zero_tol = DEGENERATE_REL_TOL * (l1 + l2 + l3);
    let grashof = t1 * t2 * t3 > 0.0;
    let kind = if [t1, t2, t3].iter().any(|t| t.abs() < zero_tol) {
        MotionKind::DegenerateBoundary
    } else if t1 > 0.0 && t2 > 0.0 && t3 < 0.0 {
        MotionKind::ZeroPiDoubleRocker
    } else if grashof {
        MotionKind::Grashof
    } else {
        MotionKind::OtherNonGrashof
    };
    MotionClass {
        t1,
        t2,
        t3,
        grashof,
        kind,
    }
}

pub fn classify(linkage: &Linkage) -> MotionClass {
    classify_lengths(linkage.l1, linkage.l2, linkage.l3, linkage.ground)
}

/// Whether the density theorem applies: a 0-pi double rocker whose floating
/// bar is either the shortest or the longest of the three mobile bars.
pub fn theorem_conditions(linkage: &Linkage) -> bool {
    classify(linkage).kind == MotionKind::ZeroPiDoubleRocker && floating_bar_extreme(&linkage.bars())
}

pub(crate) fn floating_bar_extreme(bars: &Bars) -> bool {
    bars.l2 <= bars.l1.min(bars.l3) || bars.l2 >= bars.l1.max(bars.l3)
}

/// Relative turning angles of a configuration, always in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AngleConfig {
    theta1: f64,
    theta2: f64,
}

#[derive(Deserialize)]
struct RawAngles {
    theta1: f64,
    theta2: f64,
}

impl<'de> Deserialize<'de> for AngleConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawAngles::deserialize(d)?;
        if !(raw.theta1.is_finite() && raw.theta2.is_finite()) {
            return Err(serde::de::Error::custom("angles must be finite"));
        }
        Ok(AngleConfig::new(raw.theta1, raw.theta2))
    }
}

impl AngleConfig {
    /// Wraps both angles into `(-pi, pi]`.
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1: wrap(theta1),
            theta2: wrap(theta2),
        }
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn mirrored(&self) -> Self {
        Self::new(-self.theta1, -self.theta2)
    }

    /// Largest per-angle distance on the circle.
    pub fn distance(&self, other: &AngleConfig) -> f64 {
        wrap(self.theta1 - other.theta1)
            .abs()
            .max(wrap(self.theta2 - other.theta2).abs())
    }
}

/// Squared closure distance for raw (unwrapped) angles.
pub fn lbar_sq_raw(bars: &Bars, theta1: f64, theta2: f64) -> f64 {
    let (l1, l2, l3) = (bars.l1, bars.l2, bars.l3);
    l1 * l1
        + l2 * l2
        + l3 * l3
        + 2.0 * l1 * l2 * theta1.cos()
        + 2.0 * l2 * l3 * theta2.cos()
        + 2.0 * l1 * l3 * (theta1 + theta2).cos()
}

/// Distance between the free ends of the open chain A-B-C-D:
/// `sqrt(l1^2+l2^2+l3^2 + 2 l1 l2 cos t1 + 2 l2 l3 cos t2 + 2 l1 l3 cos(t1+t2))`.
pub fn lbar(bars: &Bars, angles: &AngleConfig) -> f64 {
    lbar_raw(bars, angles.theta1, angles.theta2)
}

pub fn lbar_raw(bars: &Bars, theta1: f64, theta2: f64) -> f64 {
    // The radicand is a squared length; only round-off can push it negative.
    lbar_sq_raw(bars, theta1, theta2).max(0.0).sqrt()
}

pub fn on_gamma(linkage: &Linkage, angles: &AngleConfig, tol: f64) -> bool {
    (lbar(&linkage.bars(), angles) - linkage.ground).abs() <= tol
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, heading: f64) -> Self {
        Self::new(r * heading.cos(), r * heading.sin())
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Joint positions of the chain; `a` is the start of bar 1, `d` the end of
/// bar 3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarConfig {
    pub a: Point,
    pub b: Point,
    pub c: Point,
    pub d: Point,
}

impl PlanarConfig {
    pub fn bar_lengths(&self) -> [f64; 3] {
        [
            self.a.dist(self.b),
            self.b.dist(self.c),
            self.c.dist(self.d),
        ]
    }

    pub fn points(&self) -> [Point; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Relative turning angles between consecutive bars.
    pub fn angles(&self) -> AngleConfig {
        let h1 = (self.b - self.a).heading();
        let h2 = (self.c - self.b).heading();
        let h3 = (self.d - self.c).heading();
        AngleConfig::new(h2 - h1, h3 - h2)
    }

    pub fn max_distance(&self, other: &PlanarConfig) -> f64 {
        self.points()
            .iter()
            .zip(other.points())
            .map(|(p, q)| p.dist(q))
            .fold(0.0, f64::max)
    }
}

/// Builds the chain with `a` at the origin and `d` on the positive x axis.
///
/// Headings accumulate: bar 2 is bar 1 turned by theta1, bar 3 is bar 2
/// turned by theta2. The open chain is laid out with bar 1 along +x and then
/// rotated rigidly so that its end lands on the ground line, which fixes one
/// configuration per angle pair; negating both angles gives the mirror image
/// across the ground bar.
pub fn forward_kinematics(linkage: &Linkage, angles: &AngleConfig) -> Result<PlanarConfig> {
    forward_kinematics_with_tol(linkage, angles, linkage.default_tol())
}

pub fn forward_kinematics_with_tol(
    linkage: &Linkage,
    angles: &AngleConfig,
    tol: f64,
) -> Result<PlanarConfig> {
    let bars = linkage.bars();
    let residual = (lbar(&bars, angles) - linkage.ground).abs();
    if residual > tol {
        return Err(Error::NotOnManifold { residual, tol });
    }
    let (t1, t2) = (angles.theta1, angles.theta2);
    let a = Point::default();
    let b = a + Point::from_polar(linkage.l1, 0.0);
    let c = b + Point::from_polar(linkage.l2, t1);
    let d = c + Point::from_polar(linkage.l3, t1 + t2);
    let turn = -d.heading();
    Ok(PlanarConfig {
        a,
        b: b.rotate(turn),
        c: c.rotate(turn),
        d: d.rotate(turn),
    })
}
