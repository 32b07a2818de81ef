//! Polar-type coordinates on the angle torus and the induced circle map.
//!
//! For a 0-pi double rocker every ray `gamma * (cos phi, sin phi)` from the
//! origin of angle space meets the closure curve `Lbar = L` exactly once,
//! because `Lbar^2` strictly decreases along the ray inside the admissible
//! region. The pair `(L, phi)` is therefore a coordinate system, and two
//! consecutive pops act on `phi` alone as an orientation-preserving circle
//! map `f_L`.
//!
//! Rotation numbers are reported as the fraction of a turn travelled per
//! iterate in the direction the pops move `phi`, which is clockwise: a
//! lifted displacement of `-2 pi rho` per step gives `rho`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::contfrac::convergents;
use crate::error::{Error, Result};
use crate::linkage::{lbar, lbar_sq_raw, AngleConfig, Bars, Linkage};
use crate::pops::{pop12, pop23, wrap};
use crate::quadrature::{adaptive_simpson, DEFAULT_BUDGET};

/// Iteration cap for the ray root finder.
pub const MAX_ROOT_ITERATIONS: usize = 200;

/// Grid used to track the lift's branch around the circle.
pub const LIFT_SAMPLES: usize = 720;

/// A lift step may not come closer than this to a half-turn ambiguity.
pub const BRANCH_MARGIN: f64 = 1e-3;

/// Number of circle points probed by periodicity detection.
pub const PERIODICITY_SAMPLES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarConfig {
    /// Closure length, now treated as a state variable.
    pub ground: f64,
    pub phi: f64,
}

/// Two-argument arctangent of `(theta1, theta2)` in `(-pi, pi]`.
pub fn polar_angle(theta1: f64, theta2: f64) -> Result<f64> {
    if theta1 == 0.0 && theta2 == 0.0 {
        return Err(Error::OriginUndefined);
    }
    let phi = theta2.atan2(theta1);
    Ok(if phi == -PI { PI } else { phi })
}

pub fn to_polar(bars: &Bars, angles: &AngleConfig) -> Result<PolarConfig> {
    let phi = polar_angle(angles.theta1(), angles.theta2())?;
    Ok(PolarConfig {
        ground: lbar(bars, angles),
        phi,
    })
}

/// Inverse of [`to_polar`]: the unique angle pair on the ray of angle `phi`
/// whose closure length is `ground`.
pub fn from_polar(bars: &Bars, ground: f64, phi: f64) -> Result<AngleConfig> {
    from_polar_counted(bars, ground, phi).map(|(a, _)| a)
}

/// Same as [`from_polar`], also returning the number of root-finder
/// iterations spent.
pub fn from_polar_counted(bars: &Bars, ground: f64, phi: f64) -> Result<(AngleConfig, usize)> {
    bars.check_lambda(ground)?;
    if !phi.is_finite() {
        return Err(Error::InvalidInput(format!("phi must be finite, got {phi}")));
    }
    let (s, c) = phi.sin_cos();
    let target = ground * ground;
    let (l1, l2, l3) = (bars.l1(), bars.l2(), bars.l3());
    let residual = |g: f64| lbar_sq_raw(bars, g * c, g * s) - target;
    let slope = |g: f64| {
        -2.0 * (l1 * l2 * c * (g * c).sin()
            + l2 * l3 * s * (g * s).sin()
            + l1 * l3 * (c + s) * (g * (c + s)).sin())
    };

    // The ray leaves the square (-pi, pi]^2 at gamma_max; there the closure
    // length is below every admissible L.
    let gamma_max = PI / c.abs().max(s.abs());
    let (mut lo, mut hi) = (0.0, gamma_max);
    if residual(hi) >= 0.0 {
        return Err(Error::OutsideLambda {
            value: ground,
            violated: format!("no closure on the ray phi = {phi}"),
        });
    }
    let mut iters = 0;
    while hi - lo > 1e-2 * gamma_max {
        iters += 1;
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton, falling back to bisection whenever a step leaves the bracket.
    let mut g = 0.5 * (lo + hi);
    loop {
        iters += 1;
        if iters > MAX_ROOT_ITERATIONS {
            break;
        }
        let h = residual(g);
        if h == 0.0 {
            break;
        }
        if h > 0.0 {
            lo = g;
        } else {
            hi = g;
        }
        let dh = slope(g);
        let mut next = g - h / dh;
        if !(dh < 0.0) || !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - g).abs();
        g = next;
        if step <= 4.0 * f64::EPSILON * g || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok((AngleConfig::new(g * c, g * s), iters))
}

/// Determinant of the Jacobian of `(theta1, theta2) -> (Lbar, phi)`:
/// `-(l1 l2 t1 sin t1 + l2 l3 t2 sin t2 + l1 l3 (t1+t2) sin(t1+t2)) / (Lbar (t1^2+t2^2))`.
pub fn det_jg(bars: &Bars, angles: &AngleConfig) -> Result<f64> {
    let (t1, t2) = (angles.theta1(), angles.theta2());
    let r2 = t1 * t1 + t2 * t2;
    if r2 == 0.0 {
        return Err(Error::OriginUndefined);
    }
    let (l1, l2, l3) = (bars.l1(), bars.l2(), bars.l3());
    let t12 = t1 + t2;
    let num = l1 * l2 * t1 * t1.sin() + l2 * l3 * t2 * t2.sin() + l1 * l3 * t12 * t12.sin();
    Ok(-num / (lbar(bars, angles) * r2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationMethod {
    OrbitAverage,
    MeasureIntegral,
}

impl RotationMethod {
    pub fn label(self) -> &'static str {
        match self {
            Self::OrbitAverage => "orbit",
            Self::MeasureIntegral => "integral",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// Clockwise turns per iterate, in `[0, 1)`.
    pub rho: f64,
    pub method: RotationMethod,
    pub error_bound: f64,
    pub iterations_or_nodes: usize,
    /// Mean lifted displacement per iterate in radians (counterclockwise
    /// positive). Only the orbit method produces one.
    pub displacement: Option<f64>,
}

/// Distance between two rotation numbers on the circle `R/Z`.
pub fn rho_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn unit_interval(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityReport {
    /// `(p, q)` in lowest terms with `f_L^q = Id` on every sample.
    pub rational: Option<(i64, u64)>,
    /// Worst sample defect for the reported `q`, or the smallest worst-case
    /// defect among the candidates tried when none passed.
    pub max_defect: f64,
    /// Rotation number the candidates were drawn from.
    pub rho: f64,
    /// Candidate denominators and their worst sample defect.
    pub candidates: Vec<(u64, f64)>,
}

/// The circle map `f_L` of a fixed 0-pi double rocker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleMap {
    bars: Bars,
    ground: f64,
}

impl CircleMap {
    pub fn new(bars: Bars, ground: f64) -> Result<Self> {
        bars.check_lambda(ground)?;
        Ok(Self { bars, ground })
    }

    pub fn from_linkage(linkage: &Linkage) -> Result<Self> {
        Self::new(linkage.bars(), linkage.ground())
    }

    pub fn bars(&self) -> Bars {
        self.bars
    }

    pub fn ground(&self) -> f64 {
        self.ground
    }

    pub fn linkage(&self) -> Linkage {
        Linkage::from_bars(self.bars, self.ground).expect("admissible L is feasible")
    }

    pub fn angles_at(&self, phi: f64) -> Result<AngleConfig> {
        from_polar(&self.bars, self.ground, phi)
    }

    /// Polar angle after popping bars 1-2.
    pub fn f12(&self, phi: f64) -> Result<f64> {
        let a = pop12(&self.bars, &self.angles_at(phi)?)?;
        polar_angle(a.theta1(), a.theta2())
    }

    /// Polar angle after popping bars 2-3.
    pub fn f23(&self, phi: f64) -> Result<f64> {
        let a = pop23(&self.bars, &self.angles_at(phi)?)?;
        polar_angle(a.theta1(), a.theta2())
    }

    /// `f_L = f23 o f12`. The intermediate state is kept in angle space,
    /// which equals `from_polar(L, f12(phi))` without a second root solve.
    pub fn f(&self, phi: f64) -> Result<f64> {
        let a = self.angles_at(phi)?;
        let b = pop23(&self.bars, &pop12(&self.bars, &a)?)?;
        polar_angle(b.theta1(), b.theta2())
    }

    pub fn iterate(&self, phi: f64, n: usize) -> Result<f64> {
        (0..n).try_fold(phi, |p, _| self.f(p))
    }

    /// `df_L/dphi` as the ratio `det J_g(after) / det J_g(before)`.
    pub fn derivative(&self, phi: f64) -> Result<f64> {
        let a = self.angles_at(phi)?;
        let b = pop23(&self.bars, &pop12(&self.bars, &a)?)?;
        Ok(det_jg(&self.bars, &b)? / det_jg(&self.bars, &a)?)
    }

    /// Density `|det J_g^{-1}|` of the invariant measure at `phi`.
    pub fn density(&self, phi: f64) -> Result<f64> {
        Ok(1.0 / det_jg(&self.bars, &self.angles_at(phi)?)?.abs())
    }

    fn integrate(&self, from: f64, len: f64, tol: f64) -> Result<(f64, usize)> {
        let q = adaptive_simpson(
            |p| self.density(p).unwrap_or(f64::NAN),
            from,
            from + len,
            tol,
            DEFAULT_BUDGET,
        )?;
        Ok((q.value, q.nodes))
    }

    /// Invariant measure of the counterclockwise arc from `phi_a` to `phi_b`.
    pub fn invariant_measure(&self, phi_a: f64, phi_b: f64, tol: f64) -> Result<f64> {
        let len = (phi_b - phi_a).rem_euclid(TAU);
        if len == 0.0 || len == TAU {
            return Ok(0.0);
        }
        self.integrate(phi_a, len, tol).map(|(v, _)| v)
    }

    /// Measure of the whole circle.
    pub fn total_measure(&self, tol: f64) -> Result<f64> {
        self.integrate(-PI, TAU, tol).map(|(v, _)| v)
    }

    /// Continuous lift of `f_L` to the real line.
    pub fn lift(&self) -> Result<Lift> {
        Lift::new(*self)
    }

    /// Plain orbit average `(F^n(phi0) - phi0) / (2 pi n)`, with the
    /// guaranteed bound `1/n` for circle homeomorphisms.
    pub fn rotation_number_orbit(&self, n: usize, phi0: f64) -> Result<RotationEstimate> {
        if n == 0 {
            return Err(Error::InvalidInput("orbit length must be at least 1".into()));
        }
        let lift = self.lift()?;
        let mut phi = wrap(phi0);
        // Kahan summation of the per-step displacements
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for _ in 0..n {
            let next = self.f(phi)?;
            let d = lift.branch(next - phi) - carry;
            let t = sum + d;
            carry = (t - sum) - d;
            sum = t;
            phi = next;
        }
        let turns = sum / (TAU * n as f64);
        Ok(RotationEstimate {
            rho: unit_interval(-turns),
            method: RotationMethod::OrbitAverage,
            error_bound: 1.0 / n as f64,
            iterations_or_nodes: n,
            displacement: Some(sum / n as f64),
        })
    }

    /// `mu([f_L(phi), phi]) / mu(S)`: the conjugacy to a rigid rotation
    /// turns the measure of one step into the rotation number.
    pub fn rotation_number_integral(&self, phi: f64, tol: f64) -> Result<RotationEstimate> {
        let (total, n_total) = self.integrate(-PI, TAU, tol)?;
        let image = self.f(phi)?;
        let len = (phi - image).rem_euclid(TAU);
        let (arc, n_arc) = if len == 0.0 {
            (0.0, 0)
        } else {
            self.integrate(image, len, tol)?
        };
        Ok(RotationEstimate {
            rho: unit_interval(arc / total),
            method: RotationMethod::MeasureIntegral,
            error_bound: 2.0 * tol / total,
            iterations_or_nodes: n_total + n_arc,
            displacement: None,
        })
    }

    /// Looks for `q <= q_max` with `f_L^q = Id`, trying the continued
    /// fraction convergents of the rotation number.
    pub fn detect_periodicity(&self, q_max: u64, tol: f64) -> Result<PeriodicityReport> {
        let rho = self.rotation_number_integral(0.0, 1e-11)?.rho;
        let samples: Vec<f64> = (0..PERIODICITY_SAMPLES)
            .map(|j| -PI + TAU * (j as f64 + 0.5) / PERIODICITY_SAMPLES as f64)
            .collect();
        periodicity_search(|p| self.f(p), rho, q_max, tol, &samples)
    }
}

/// Tests each convergent denominator of `rho` on every sample; a candidate
/// is accepted only if all samples return within `tol`, since a rational
/// rotation number makes every orbit periodic.
pub fn periodicity_search<F>(
    map: F,
    rho: f64,
    q_max: u64,
    tol: f64,
    samples: &[f64],
) -> Result<PeriodicityReport>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut candidates = Vec::new();
    let mut best = f64::INFINITY;
    for (p, q) in convergents(rho, q_max) {
        let mut worst: f64 = 0.0;
        for &s in samples {
            let mut x = s;
            for _ in 0..q {
                x = map(x)?;
            }
            worst = worst.max(wrap(x - s).abs());
        }
        candidates.push((q, worst));
        if worst <= tol {
            return Ok(PeriodicityReport {
                rational: Some((p, q)),
                max_defect: worst,
                rho,
                candidates,
            });
        }
        best = best.min(worst);
    }
    Ok(PeriodicityReport {
        rational: None,
        max_defect: best,
        rho,
        candidates,
    })
}

/// Lift `F_L` of `f_L` with `F_L(x + 2 pi) = F_L(x) + 2 pi`.
///
/// The displacement `F_L(x) - x` is continuous and periodic and, for a
/// circle homeomorphism, varies by less than `2 pi`. Tracking it around the
/// circle on a grid fixes a window `(center - pi, center + pi]` that holds
/// every displacement; each step then picks the unique branch in it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lift {
    map: CircleMap,
    center: f64,
    range: f64,
}

impl Lift {
    pub fn new(map: CircleMap) -> Result<Self> {
        let n = LIFT_SAMPLES;
        let mut tracked = Vec::with_capacity(n + 1);
        let mut prev: Option<f64> = None;
        for j in 0..=n {
            let phi = -PI + TAU * j as f64 / n as f64;
            let raw = wrap(map.f(phi)? - phi);
            let value = match prev {
                None => raw,
                Some(p) => {
                    let jump = wrap(raw - p);
                    if jump.abs() >= PI - BRANCH_MARGIN {
                        return Err(Error::BranchAmbiguity { range: jump.abs() });
                    }
                    p + jump
                }
            };
            tracked.push(value);
            prev = Some(value);
        }
        // degree one: the displacement must come back to where it started
        let closure = tracked[n] - tracked[0];
        if closure.abs() > 1e-6 {
            return Err(Error::BranchAmbiguity { range: closure.abs() });
        }
        let (lo, hi) = tracked
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        if range >= TAU - 2.0 * BRANCH_MARGIN {
            return Err(Error::BranchAmbiguity { range });
        }
        Ok(Self {
            map,
            center: 0.5 * (lo + hi),
            range,
        })
    }

    /// Middle of the displacement window, in radians.
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Sampled spread of the displacement around the circle.
    pub fn range(&self) -> f64 {
        self.range
    }

    fn branch(&self, raw: f64) -> f64 {
        self.center + wrap(raw - self.center)
    }

    /// `F_L(phi) - phi` for `phi` on the circle.
    pub fn displacement(&self, phi: f64) -> Result<f64> {
        let phi = wrap(phi);
        Ok(self.branch(self.map.f(phi)? - phi))
    }

    /// `F_L(x)` for any real `x`.
    pub fn apply(&self, x: f64) -> Result<f64> {
        Ok(x + self.displacement(x)?)
    }
}
