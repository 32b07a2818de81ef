//! Experiments built on the maps: orbit density, rotation-number scans over
//! the ground length, cyclic relabeling, and the topology of the closure
//! curve.

mod gamma;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::circle::{CircleMap, RotationEstimate};
use crate::error::{Error, Result};
use crate::linkage::{classify_lengths, floating_bar_extreme, Bars, Linkage, MotionClass, MotionKind};
use crate::pops::wrap;

pub use gamma::{
    confinement_check, confinement_check_with, gamma_geometry, ComponentIndex, GammaGeometry,
    Located, DEFAULT_RESOLUTION,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub n_iterates: usize,
    /// Largest empty arc in `phi` between circularly sorted orbit points.
    pub max_gap_phi: f64,
    /// `(n, max gap of the first n points)` at powers of ten below
    /// `n_iterates`, then at `n_iterates`.
    pub gap_history: Vec<(usize, f64)>,
}

/// Largest circular gap between the given angles.
pub fn max_circular_gap(points: &[f64]) -> f64 {
    if points.len() < 2 {
        return TAU;
    }
    let mut sorted: Vec<f64> = points.iter().map(|&p| wrap(p)).collect();
    sorted.sort_by(f64::total_cmp);
    let wrap_gap = sorted[0] + TAU - sorted[sorted.len() - 1];
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(wrap_gap, f64::max)
}

/// Orbit `phi0, f(phi0), ..., f^{n-1}(phi0)` and how its largest gap in
/// `phi` shrinks as points are added.
pub fn density_report(linkage: &Linkage, phi0: f64, n: usize) -> Result<DensityReport> {
    if n == 0 {
        return Err(Error::InvalidInput("density report needs at least one point".into()));
    }
    let map = CircleMap::from_linkage(linkage)?;
    let mut points = Vec::with_capacity(n);
    let mut phi = wrap(phi0);
    points.push(phi);
    for _ in 1..n {
        phi = map.f(phi)?;
        points.push(phi);
    }
    let mut checkpoints = Vec::new();
    let mut m = 1;
    while m < n {
        checkpoints.push(m);
        m *= 10;
    }
    checkpoints.push(n);
    let gap_history: Vec<(usize, f64)> = checkpoints
        .par_iter()
        .map(|&m| (m, max_circular_gap(&points[..m])))
        .collect();
    Ok(DensityReport {
        n_iterates: n,
        max_gap_phi: gap_history[gap_history.len() - 1].1,
        gap_history,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Absolute quadrature tolerance for the integral estimate.
    pub tol: f64,
    /// Largest period searched per row; `None` skips the search.
    pub q_max: Option<u64>,
    /// Return distance accepted by the period search.
    pub periodicity_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            tol: crate::quadrature::DEFAULT_TOL,
            q_max: None,
            periodicity_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub ground: f64,
    pub estimate: RotationEstimate,
    pub periodic_q: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Monotonicity {
    /// Every adjacent step moves the same way by more than the two error
    /// bounds combined. `min_margin` is the smallest step.
    Monotone { increasing: bool, min_margin: f64 },
    /// The lengths do not satisfy the hypotheses of the monotonicity result.
    Skipped,
    Violated {
        index: usize,
        l_left: f64,
        l_right: f64,
        rho_left: f64,
        rho_right: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub verdict: Monotonicity,
}

impl ScanReport {
    /// `Err(MonotonicityViolation)` for a violated verdict.
    pub fn check(&self) -> Result<()> {
        match self.verdict {
            Monotonicity::Violated {
                index,
                l_left,
                l_right,
                rho_left,
                rho_right,
            } => Err(Error::MonotonicityViolation {
                index,
                l_left,
                l_right,
                rho_left,
                rho_right,
            }),
            _ => Ok(()),
        }
    }

    /// Largest error bound over the rows.
    pub fn max_error_bound(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.estimate.error_bound)
            .fold(0.0, f64::max)
    }
}

/// Whether `rho(L)` must be strictly monotone over the admissible interval:
/// the floating bar is shortest or longest, and the three bars are not all
/// equal (equal bars give period 3 for every `L`).
pub fn monotonicity_expected(bars: &Bars) -> bool {
    let all_equal = bars.l1() == bars.l2() && bars.l2() == bars.l3();
    floating_bar_extreme(bars) && !all_equal
}

/// `count` evenly spaced values from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..count)
            .map(|k| min + (max - min) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Integral rotation number at every grid value, in grid order, followed by
/// a strict monotonicity check when [`monotonicity_expected`] holds.
pub fn scan_rotation(bars: &Bars, grid: &[f64], options: &ScanOptions) -> Result<ScanReport> {
    for &l in grid {
        bars.check_lambda(l)?;
    }
    let rows = grid
        .par_iter()
        .map(|&ground| {
            let map = CircleMap::new(*bars, ground)?;
            let estimate = map.rotation_number_integral(0.0, options.tol)?;
            let periodic_q = match options.q_max {
                Some(q_max) => map
                    .detect_periodicity(q_max, options.periodicity_tol)?
                    .rational
                    .map(|(_, q)| q),
                None => None,
            };
            Ok(ScanRow {
                ground,
                estimate,
                periodic_q,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = if monotonicity_expected(bars) {
        monotonicity_verdict(&rows)
    } else {
        Monotonicity::Skipped
    };
    Ok(ScanReport { rows, verdict })
}

/// Signed step from `a` to `b` on `R/Z`, in `(-1/2, 1/2]`.
fn rho_step(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(1.0);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

fn monotonicity_verdict(rows: &[ScanRow]) -> Monotonicity {
    if rows.len() < 2 {
        return Monotonicity::Monotone {
            increasing: true,
            min_margin: f64::INFINITY,
        };
    }
    let total: f64 = rows
        .windows(2)
        .map(|w| rho_step(w[0].estimate.rho, w[1].estimate.rho))
        .sum();
    let dir = if total >= 0.0 { 1.0 } else { -1.0 };
    let mut min_margin = f64::INFINITY;
    for (index, w) in rows.windows(2).enumerate() {
        let step = dir * rho_step(w[0].estimate.rho, w[1].estimate.rho);
        let slack = w[0].estimate.error_bound + w[1].estimate.error_bound;
        if step <= slack {
            return Monotonicity::Violated {
                index,
                l_left: w[0].ground,
                l_right: w[1].ground,
                rho_left: w[0].estimate.rho,
                rho_right: w[1].estimate.rho,
            };
        }
        min_margin = min_margin.min(step);
    }
    Monotonicity::Monotone {
        increasing: dir > 0.0,
        min_margin,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relabeling {
    /// `k` such that the relabeled tuple is `(x_k, x_{k+1}, x_{k+2}, x_{k+3})`
    /// for the input `x = (l1, l2, l3, L)`, indices mod 4.
    pub shift: usize,
    pub lengths: [f64; 4],
    pub class: MotionClass,
    /// `max{l2,L} <= min{l1,l3}` or `min{l2,L} >= max{l1,l3}` for the input.
    pub corollary_condition: bool,
    /// `l2' <= min{l1',l3'}` or `l2' >= max{l1',l3'}` after relabeling.
    pub theorem_condition: bool,
}

/// Finds the cyclic relabeling of `(l1, l2, l3, L)` that turns a
/// non-Grashof linkage into a 0-pi double rocker.
pub fn relabel_for_theorem(lengths: [f64; 4]) -> Result<Relabeling> {
    if lengths.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "lengths must be positive and finite, got {lengths:?}"
        )));
    }
    let [l1, l2, l3, ground] = lengths;
    let corollary_condition =
        l2.max(ground) <= l1.min(l3) || l2.min(ground) >= l1.max(l3);
    for shift in 0..4 {
        let r: [f64; 4] = std::array::from_fn(|i| lengths[(i + shift) % 4]);
        let class = classify_lengths(r[0], r[1], r[2], r[3]);
        if class.kind == MotionKind::ZeroPiDoubleRocker {
            let theorem_condition = r[1] <= r[0].min(r[2]) || r[1] >= r[0].max(r[2]);
            return Ok(Relabeling {
                shift,
                lengths: r,
                class,
                corollary_condition,
                theorem_condition,
            });
        }
    }
    Err(Error::NotFound)
}
