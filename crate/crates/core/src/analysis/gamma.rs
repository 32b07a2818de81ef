//! The closure curve `Lbar = L` on the angle torus, by marching squares.
//!
//! The grid has `n x n` vertices at `-pi + 2 pi k / n`; the last row and
//! column wrap to the first. Every crossed grid edge is shared by exactly
//! two cells, so the extracted segments form disjoint cycles and each cycle
//! is one connected component of the curve.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linkage::{classify, lbar, lbar_sq_raw, AngleConfig, Bars, Linkage};
use crate::pops::{orbit, wrap, Pop};

pub const DEFAULT_RESOLUTION: usize = 1024;

/// Finest grid ever tried.
const MAX_RESOLUTION: usize = 4096;

/// Classification is ambiguous when another component comes within this
/// many cell diagonals.
const AMBIGUITY_DIAGONALS: f64 = 3.0;

/// Cells searched in each direction around a query; covers the ambiguity
/// margin plus one cell.
const SEARCH_RADIUS: isize = 5;

#[derive(Clone, Copy, Debug)]
struct Segment {
    cell: (usize, usize),
    /// Endpoints in coordinates continuous across the cell.
    a: [f64; 2],
    b: [f64; 2],
    component: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaGeometry {
    pub components: usize,
    /// One closed polyline per component; the last vertex connects back to
    /// the first.
    pub polylines: Vec<Vec<AngleConfig>>,
    /// Grid size the polylines were extracted at.
    pub resolution: usize,
    /// Largest `|Lbar - L|` over all polyline vertices.
    pub max_residual: f64,
    /// `Lbar < L` on the whole lines `theta1 = pi` and `theta2 = pi`, as
    /// sampled by the grid.
    pub avoids_pi_lines: bool,
    #[serde(skip)]
    segments: Vec<Segment>,
}

impl GammaGeometry {
    /// Grid spacing in radians.
    pub fn cell_size(&self) -> f64 {
        TAU / self.resolution as f64
    }

    pub fn index(&self) -> ComponentIndex<'_> {
        let mut cells: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (k, s) in self.segments.iter().enumerate() {
            cells.entry(s.cell).or_default().push(k);
        }
        ComponentIndex {
            geometry: self,
            cells,
        }
    }
}

/// Nearest-polyline lookup into a [`GammaGeometry`].
pub struct ComponentIndex<'g> {
    geometry: &'g GammaGeometry,
    cells: HashMap<(usize, usize), Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Located {
    pub component: usize,
    /// Distance to the nearest segment of `component`.
    pub distance: f64,
    /// Distance to the nearest segment of any other component, infinite if
    /// none is within the search window.
    pub clearance: f64,
}

impl ComponentIndex<'_> {
    /// Distance beyond which a classification counts as unambiguous.
    pub fn margin(&self) -> f64 {
        AMBIGUITY_DIAGONALS * self.geometry.cell_size() * 2f64.sqrt()
    }

    pub fn locate(&self, angles: &AngleConfig) -> Option<Located> {
        let n = self.geometry.resolution;
        let h = self.geometry.cell_size();
        let (x, y) = (angles.theta1(), angles.theta2());
        let ci = ((x + PI) / h).floor() as isize;
        let cj = ((y + PI) / h).floor() as isize;
        let mut best: Vec<(usize, f64)> = Vec::new();
        for dj in -SEARCH_RADIUS..=SEARCH_RADIUS {
            for di in -SEARCH_RADIUS..=SEARCH_RADIUS {
                let cell = (
                    (ci + di).rem_euclid(n as isize) as usize,
                    (cj + dj).rem_euclid(n as isize) as usize,
                );
                let Some(list) = self.cells.get(&cell) else {
                    continue;
                };
                let cx = -PI + h * (cell.0 as f64 + 0.5);
                let cy = -PI + h * (cell.1 as f64 + 0.5);
                let q = [cx + wrap(x - cx), cy + wrap(y - cy)];
                for &k in list {
                    let s = &self.geometry.segments[k];
                    let d = point_segment_distance(q, s.a, s.b);
                    match best.iter_mut().find(|(c, _)| *c == s.component) {
                        Some(entry) => entry.1 = entry.1.min(d),
                        None => best.push((s.component, d)),
                    }
                }
            }
        }
        best.sort_by(|a, b| a.1.total_cmp(&b.1));
        let &(component, distance) = best.first()?;
        let clearance = best.get(1).map_or(f64::INFINITY, |b| b.1);
        Some(Located {
            component,
            distance,
            clearance,
        })
    }

    /// Component of `angles`, or `None` if the point is not clearly closer
    /// to one component than to every other.
    pub fn component_of(&self, angles: &AngleConfig) -> Option<usize> {
        let loc = self.locate(angles)?;
        let margin = self.margin();
        (loc.distance <= margin && loc.clearance - loc.distance > margin).then_some(loc.component)
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (ex, ey) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    ex.hypot(ey)
}

/// Traces `Lbar = L`, doubling the grid from `resolution` until two
/// consecutive grids agree on the number of components.
pub fn gamma_geometry(linkage: &Linkage, resolution: usize) -> Result<GammaGeometry> {
    check_resolution(resolution)?;
    let (bars, ground) = (linkage.bars(), linkage.ground());
    let mut prev = extract(&bars, ground, resolution)?;
    let mut n = resolution;
    while 2 * n <= MAX_RESOLUTION {
        n *= 2;
        let next = extract(&bars, ground, n)?;
        if next.components == prev.components {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::ResolutionTooCoarse { resolution: n })
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 4 || !resolution.is_multiple_of(2) || 2 * resolution > MAX_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "grid resolution must be even, at least 4 and at most {}, got {resolution}",
            MAX_RESOLUTION / 2
        )));
    }
    Ok(())
}

fn edge_id(n: usize, i: usize, j: usize, vertical: bool) -> u64 {
    2 * (j * n + i) as u64 + vertical as u64
}

/// Marching squares at a single resolution.
fn extract(bars: &Bars, ground: f64, n: usize) -> Result<GammaGeometry> {
    let h = TAU / n as f64;
    let coord = |k: usize| -PI + h * k as f64;
    let target = ground * ground;
    let field = |x: f64, y: f64| lbar_sq_raw(bars, x, y) - target;

    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = field(coord(i), coord(j));
        }
    });
    let value = |i: usize, j: usize| values[(j % n) * n + (i % n)];

    // one entry per segment: cell and the two crossed edges it joins
    let raw: Vec<((usize, usize), u64, u64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut out = Vec::new();
            for i in 0..n {
                let inside = [
                    value(i, j) > 0.0,
                    value(i + 1, j) > 0.0,
                    value(i + 1, j + 1) > 0.0,
                    value(i, j + 1) > 0.0,
                ];
                let bottom = edge_id(n, i, j, false);
                let right = edge_id(n, (i + 1) % n, j, true);
                let top = edge_id(n, i, (j + 1) % n, false);
                let left = edge_id(n, i, j, true);
                let crossed: Vec<u64> = [
                    (inside[0] != inside[1], bottom),
                    (inside[1] != inside[2], right),
                    (inside[3] != inside[2], top),
                    (inside[0] != inside[3], left),
                ]
                .iter()
                .filter(|c| c.0)
                .map(|c| c.1)
                .collect();
                match crossed.len() {
                    2 => out.push(((i, j), crossed[0], crossed[1])),
                    4 => {
                        let centre = field(coord(i) + 0.5 * h, coord(j) + 0.5 * h) > 0.0;
                        if centre == inside[0] {
                            out.push(((i, j), bottom, right));
                            out.push(((i, j), top, left));
                        } else {
                            out.push(((i, j), bottom, left));
                            out.push(((i, j), right, top));
                        }
                    }
                    _ => {}
                }
            }
            out
        })
        .collect();

    let mut edges: Vec<u64> = raw.iter().flat_map(|s| [s.1, s.2]).collect();
    edges.par_sort_unstable();
    edges.dedup();
    let roots: Vec<[f64; 2]> = edges
        .par_iter()
        .map(|&e| {
            let k = (e / 2) as usize;
            let (i, j) = (k % n, k / n);
            let vertical = e % 2 == 1;
            let (x0, y0) = (coord(i), coord(j));
            let (dx, dy) = if vertical { (0.0, h) } else { (h, 0.0) };
            let f1 = if vertical { value(i, j + 1) } else { value(i + 1, j) };
            let t = edge_root(|t| field(x0 + t * dx, y0 + t * dy), value(i, j), f1);
            [x0 + t * dx, y0 + t * dy]
        })
        .collect();
    let pos = |e: u64| edges.binary_search(&e).expect("edge was collected");

    let mut adjacency = vec![[usize::MAX; 2]; edges.len()];
    for (k, s) in raw.iter().enumerate() {
        for e in [s.1, s.2] {
            let slot = &mut adjacency[pos(e)];
            if slot[0] == usize::MAX {
                slot[0] = k;
            } else {
                slot[1] = k;
            }
        }
    }

    let mut component = vec![usize::MAX; raw.len()];
    let mut polylines = Vec::new();
    for start in 0..raw.len() {
        if component[start] != usize::MAX {
            continue;
        }
        let c = polylines.len();
        let mut poly = Vec::new();
        let (mut seg, mut edge) = (start, raw[start].1);
        loop {
            component[seg] = c;
            let [x, y] = roots[pos(edge)];
            poly.push(AngleConfig::new(x, y));
            let other = if raw[seg].1 == edge { raw[seg].2 } else { raw[seg].1 };
            let [p, q] = adjacency[pos(other)];
            let next = if p == seg { q } else { p };
            edge = other;
            if next == usize::MAX || component[next] != usize::MAX {
                break;
            }
            seg = next;
        }
        polylines.push(poly);
    }

    let segments = raw
        .iter()
        .zip(&component)
        .map(|(&((i, j), e1, e2), &c)| {
            let cx = coord(i) + 0.5 * h;
            let cy = coord(j) + 0.5 * h;
            let local = |p: [f64; 2]| [cx + wrap(p[0] - cx), cy + wrap(p[1] - cy)];
            Segment {
                cell: (i, j),
                a: local(roots[pos(e1)]),
                b: local(roots[pos(e2)]),
                component: c,
            }
        })
        .collect();

    let max_residual = polylines
        .iter()
        .flatten()
        .map(|a| (lbar(bars, a) - ground).abs())
        .fold(0.0, f64::max);
    let avoids_pi_lines = (0..n).all(|k| value(0, k) < 0.0 && value(k, 0) < 0.0);

    Ok(GammaGeometry {
        components: polylines.len(),
        polylines,
        resolution: n,
        max_residual,
        avoids_pi_lines,
        segments,
    })
}

/// Root of `g` on `[0, 1]` given `g(0) = f0`, `g(1) = f1` of opposite sign
/// (or `f0 == 0`), by the Illinois variant of regula falsi.
fn edge_root(g: impl Fn(f64) -> f64, f0: f64, f1: f64) -> f64 {
    let (mut a, mut b, mut fa, mut fb) = (0.0, 1.0, f0, f1);
    if fa == 0.0 {
        return 0.0;
    }
    let scale = fa.abs().max(fb.abs());
    let mut side = 0;
    let mut t = 0.5;
    for _ in 0..100 {
        t = (a * fb - b * fa) / (fb - fa);
        let ft = g(t);
        if ft.abs() <= 4.0 * f64::EPSILON * scale || b - a <= f64::EPSILON {
            break;
        }
        if (ft > 0.0) == (fa > 0.0) {
            a = t;
            fa = ft;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = t;
            fb = ft;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    t
}

/// [`confinement_check_with`] on the default grid.
pub fn confinement_check(linkage: &Linkage, start: AngleConfig, n_pops: usize) -> Result<bool> {
    confinement_check_with(linkage, start, n_pops, DEFAULT_RESOLUTION)
}

/// Runs `n_pops` alternating pops from `start` (bars 1-2 first) and reports
/// whether every state stays on the component of the closure curve that
/// holds `start`. Ambiguous classifications refine the grid and start over.
///
/// Requires the sign pattern `T1 < 0, T2 > 0, T3 < 0`.
pub fn confinement_check_with(
    linkage: &Linkage,
    start: AngleConfig,
    n_pops: usize,
    resolution: usize,
) -> Result<bool> {
    let c = classify(linkage);
    if !(c.t1 < 0.0 && c.t2 > 0.0 && c.t3 < 0.0) {
        return Err(Error::InvalidInput(format!(
            "confinement needs T1 < 0, T2 > 0, T3 < 0; got ({}, {}, {})",
            c.t1, c.t2, c.t3
        )));
    }
    let trace = orbit(linkage, start, n_pops, Pop::P12)?;
    if n_pops == 0 {
        return Ok(true);
    }
    let mut geometry = gamma_geometry(linkage, resolution)?;
    loop {
        let index = geometry.index();
        match confined(&index, trace.states()) {
            Some(verdict) => return Ok(verdict),
            None if 2 * geometry.resolution <= MAX_RESOLUTION => {
                geometry = extract(&linkage.bars(), linkage.ground(), 2 * geometry.resolution)?;
            }
            None => {
                return Err(Error::ResolutionTooCoarse {
                    resolution: geometry.resolution,
                })
            }
        }
    }
}

/// `Some(stayed)` if the states can be classified, `None` on ambiguity.
fn confined(index: &ComponentIndex<'_>, mut states: impl Iterator<Item = AngleConfig>) -> Option<bool> {
    let home = index.component_of(&states.next()?)?;
    for s in states {
        if index.component_of(&s)? != home {
            return Some(false);
        }
    }
    Some(true)
}
