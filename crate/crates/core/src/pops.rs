//! Pops as maps on the angle torus.
//!
//! Popping vertex B reflects it across the line A-C: bar 1 turns to the
//! other side (theta1 -> -theta1) and bar 2 rotates by twice the angle
//! `alpha` at C between bar 2 and the diagonal A-C. Popping vertex C is the
//! mirror image with bars 2 and 3.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::circle;
use crate::error::{Error, Result};
use crate::linkage::{lbar, AngleConfig, Bars, Linkage, PlanarConfig, Point};

/// Default orbit drift bound, relative to the ground length.
pub const DRIFT_REL_BOUND: f64 = 1e-8;

/// `((x + pi) mod 2pi) - pi`, with the result in `(-pi, pi]`.
pub fn wrap(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let r = (x + PI).rem_euclid(TAU);
    if r == 0.0 || r == TAU {
        PI
    } else {
        r - PI
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Triangle data for one pop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopGeometry {
    /// Length of the diagonal the popped vertex is reflected across.
    pub d: f64,
    /// Angle in `[0, pi]` between the shared bar and the diagonal.
    pub alpha: f64,
    /// Signed rotation of the shared bar, `sign(theta)*2*alpha`.
    pub delta: f64,
}

/// Geometry of the triangle formed by an outer bar `outer`, the shared bar
/// `shared` and the diagonal, with `theta` the turn from outer to shared.
///
/// Uses half-angle forms so that `alpha` stays accurate near `theta = 0`
/// and near the folded state `theta = pi`:
/// `d^2 = (a-b)^2 + 4ab cos^2(t/2)`, `tan alpha = a sin t / (b + a cos t)`.
pub fn pop_geometry(outer: f64, shared: f64, theta: f64) -> Result<PopGeometry> {
    let (s, c) = (0.5 * theta).sin_cos();
    let diff = outer - shared;
    let d = (diff * diff + 4.0 * outer * shared * c * c).sqrt();
    if d <= 1e-15 * (outer + shared) {
        return Err(Error::DegenerateDiagonal(outer, shared));
    }
    let along = -diff + 2.0 * outer * c * c;
    let across = (2.0 * outer * s * c).abs();
    let alpha = across.atan2(along);
    Ok(PopGeometry {
        d,
        alpha,
        delta: sign(theta) * 2.0 * alpha,
    })
}

/// `arccos((l2 + l1 cos t1) / sqrt(l1^2 + l2^2 + 2 l1 l2 cos t1))`.
pub fn alpha(l1: f64, l2: f64, theta1: f64) -> Result<f64> {
    pop_geometry(l1, l2, theta1).map(|g| g.alpha)
}

/// Which lengths enter the arccos of the bars 2-3 pop.
///
/// The published form reuses `l1, l2`; the triangle B-C-D actually has
/// sides `l2, l3`. Only `Symmetric` preserves the closure length for
/// `l1 != l3`; `Verbatim` is kept for comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum H23Reading {
    #[default]
    Symmetric,
    Verbatim,
}

/// Bars 1-2 pop without wrapping: `(-t1, t2 + sign(t1) 2 alpha)`.
pub fn h12(bars: &Bars, theta1: f64, theta2: f64) -> Result<(f64, f64)> {
    let g = pop_geometry(bars.l1(), bars.l2(), theta1)?;
    Ok((-theta1, theta2 + g.delta))
}

/// Bars 2-3 pop without wrapping: `(t1 + sign(t2) 2 alpha', -t2)`.
pub fn h23(bars: &Bars, theta1: f64, theta2: f64) -> Result<(f64, f64)> {
    h23_with(bars, theta1, theta2, H23Reading::Symmetric)
}

pub fn h23_with(bars: &Bars, theta1: f64, theta2: f64, reading: H23Reading) -> Result<(f64, f64)> {
    let outer = match reading {
        H23Reading::Symmetric => bars.l3(),
        H23Reading::Verbatim => bars.l1(),
    };
    let g = pop_geometry(outer, bars.l2(), theta2)?;
    Ok((theta1 + g.delta, -theta2))
}

pub fn pop12(bars: &Bars, angles: &AngleConfig) -> Result<AngleConfig> {
    let (t1, t2) = h12(bars, angles.theta1(), angles.theta2())?;
    Ok(AngleConfig::new(t1, t2))
}

pub fn pop23(bars: &Bars, angles: &AngleConfig) -> Result<AngleConfig> {
    pop23_with(bars, angles, H23Reading::Symmetric)
}

pub fn pop23_with(bars: &Bars, angles: &AngleConfig, reading: H23Reading) -> Result<AngleConfig> {
    let (t1, t2) = h23_with(bars, angles.theta1(), angles.theta2(), reading)?;
    Ok(AngleConfig::new(t1, t2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pop {
    P12,
    P23,
}

impl Pop {
    pub fn apply(self, bars: &Bars, angles: &AngleConfig) -> Result<AngleConfig> {
        match self {
            Pop::P12 => pop12(bars, angles),
            Pop::P23 => pop23(bars, angles),
        }
    }

    pub fn other(self) -> Pop {
        match self {
            Pop::P12 => Pop::P23,
            Pop::P23 => Pop::P12,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pop::P12 => "P12",
            Pop::P23 => "P23",
        }
    }

    /// Vertex moved by this pop.
    pub fn vertex(self) -> Vertex {
        match self {
            Pop::P12 => Vertex::B,
            Pop::P23 => Vertex::C,
        }
    }
}

impl fmt::Display for Pop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vertex {
    B,
    C,
}

fn reflect(p: Point, a: Point, b: Point) -> Result<Point> {
    let dir = b - a;
    let len = dir.norm();
    let scale = a.norm().max(b.norm()).max(p.norm()).max(1.0);
    if len <= 1e-14 * scale {
        return Err(Error::CollinearNeighbors);
    }
    let u = dir * (1.0 / len);
    let v = p - a;
    Ok(a + u * (2.0 * v.dot(u)) - v)
}

/// Reflects one mobile vertex across the line through its two neighbours.
pub fn pop_geometric(config: &PlanarConfig, vertex: Vertex) -> Result<PlanarConfig> {
    let mut out = *config;
    match vertex {
        Vertex::B => out.b = reflect(config.b, config.a, config.c)?,
        Vertex::C => out.c = reflect(config.c, config.b, config.d)?,
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OrbitOptions {
    /// Largest tolerated `|Lbar - L|`; `None` means `1e-8 * L`.
    pub drift_bound: Option<f64>,
    /// Project each state back onto the closure curve along its polar ray.
    /// Only available for ground lengths in the admissible interval.
    pub renormalize: bool,
}


#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitStep {
    pub pop: Pop,
    pub angles: AngleConfig,
    pub residual: f64,
}

/// Every state visited by an alternating pop sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitTrace {
    pub start: AngleConfig,
    pub start_residual: f64,
    pub steps: Vec<OrbitStep>,
}

impl OrbitTrace {
    pub fn last(&self) -> AngleConfig {
        self.steps.last().map_or(self.start, |s| s.angles)
    }

    /// Start followed by every post-pop state.
    pub fn states(&self) -> impl Iterator<Item = AngleConfig> + '_ {
        std::iter::once(self.start).chain(self.steps.iter().map(|s| s.angles))
    }

    pub fn max_residual(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.residual)
            .fold(self.start_residual, f64::max)
    }

    /// CSV with columns `step,pop_label,theta1,theta2,lbar_residual`; the
    /// first row is the start, labelled `start`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "step,pop_label,theta1,theta2,lbar_residual")?;
        let row = |w: &mut W, i: usize, label: &str, a: &AngleConfig, r: f64| {
            writeln!(
                w,
                "{i},{label},{:.16e},{:.16e},{:.16e}",
                a.theta1(),
                a.theta2(),
                r
            )
        };
        row(&mut w, 0, "start", &self.start, self.start_residual)?;
        for (i, s) in self.steps.iter().enumerate() {
            row(&mut w, i + 1, s.pop.label(), &s.angles, s.residual)?;
        }
        Ok(())
    }
}

pub fn orbit(linkage: &Linkage, start: AngleConfig, n_pops: usize, first: Pop) -> Result<OrbitTrace> {
    orbit_with(linkage, start, n_pops, first, &OrbitOptions::default())
}

/// Applies `n_pops` alternating pops beginning with `first`, checking the
/// closure residual after every pop.
pub fn orbit_with(
    linkage: &Linkage,
    start: AngleConfig,
    n_pops: usize,
    first: Pop,
    options: &OrbitOptions,
) -> Result<OrbitTrace> {
    let bars = linkage.bars();
    let ground = linkage.ground();
    let bound = options
        .drift_bound
        .unwrap_or(DRIFT_REL_BOUND * ground);
    let start_residual = (lbar(&bars, &start) - ground).abs();
    if start_residual > bound {
        return Err(Error::NotOnManifold {
            residual: start_residual,
            tol: bound,
        });
    }
    let mut steps = Vec::with_capacity(n_pops);
    let mut state = start;
    let mut pop = first;
    for step in 1..=n_pops {
        state = pop.apply(&bars, &state)?;
        let residual = (lbar(&bars, &state) - ground).abs();
        if residual > bound {
            return Err(Error::DriftExceeded {
                step,
                residual,
                bound,
            });
        }
        if options.renormalize {
            state = project_to_gamma(&bars, ground, &state)?;
        }
        steps.push(OrbitStep {
            pop,
            angles: state,
            residual,
        });
        pop = pop.other();
    }
    Ok(OrbitTrace {
        start,
        start_residual,
        steps,
    })
}

/// Moves `angles` along its ray from the origin onto `Lbar = ground`.
pub fn project_to_gamma(bars: &Bars, ground: f64, angles: &AngleConfig) -> Result<AngleConfig> {
    let phi = circle::polar_angle(angles.theta1(), angles.theta2())?;
    circle::from_polar(bars, ground, phi)
}
