//! CSV and SVG writers. Floats in CSV files use 17 significant digits so
//! that every value reads back bit for bit.

use std::f64::consts::PI;
use std::io::{self, Write};

use crate::analysis::{DensityReport, GammaGeometry, ScanReport};
use crate::linkage::{Linkage, PlanarConfig};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Columns `L,rho,method,error_bound,periodic_q`; `periodic_q` is empty
/// when no period was found or searched.
pub fn write_scan_csv<W: Write>(mut w: W, report: &ScanReport) -> io::Result<()> {
    writeln!(w, "L,rho,method,error_bound,periodic_q")?;
    for row in &report.rows {
        let q = row.periodic_q.map(|q| q.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{:.16e},{:.16e},{},{:.16e},{q}",
            row.ground,
            row.estimate.rho,
            row.estimate.method.label(),
            row.estimate.error_bound
        )?;
    }
    Ok(())
}

/// Columns `n,max_gap`.
pub fn write_density_csv<W: Write>(mut w: W, report: &DensityReport) -> io::Result<()> {
    writeln!(w, "n,max_gap")?;
    for (n, gap) in &report.gap_history {
        writeln!(w, "{n},{gap:.16e}")?;
    }
    Ok(())
}

/// Columns `component_id,theta1,theta2`, one row per polyline vertex.
pub fn write_gamma_csv<W: Write>(mut w: W, geometry: &GammaGeometry) -> io::Result<()> {
    writeln!(w, "component_id,theta1,theta2")?;
    for (c, poly) in geometry.polylines.iter().enumerate() {
        for v in poly {
            writeln!(w, "{c},{:.16e},{:.16e}", v.theta1(), v.theta2())?;
        }
    }
    Ok(())
}

/// Splits a closed torus polyline into pieces that do not jump across the
/// seams, in plot coordinates.
fn torus_pieces(points: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
    let mut pieces: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut current = Vec::new();
    let closed = points.iter().chain(points.first());
    let mut prev: Option<(f64, f64)> = None;
    for &p in closed {
        if let Some(q) = prev {
            if (p.0 - q.0).abs() > PI || (p.1 - q.1).abs() > PI {
                pieces.push(std::mem::take(&mut current));
            }
        }
        current.push(p);
        prev = Some(p);
    }
    pieces.push(current);
    pieces.retain(|p| p.len() > 1);
    pieces
}

fn svg_polyline<W: Write>(w: &mut W, points: &[(f64, f64)], style: &str) -> io::Result<()> {
    write!(w, "<polyline fill=\"none\" {style} points=\"")?;
    for (k, (x, y)) in points.iter().enumerate() {
        if k > 0 {
            write!(w, " ")?;
        }
        write!(w, "{x:.6},{y:.6}")?;
    }
    writeln!(w, "\"/>")
}

/// The closure curve on the square `(-pi, pi]^2` with `theta1` to the right
/// and `theta2` up, one colour per component.
pub fn write_gamma_svg<W: Write>(mut w: W, geometry: &GammaGeometry) -> io::Result<()> {
    let size = 2.0 * PI;
    let pad = 0.05 * size;
    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\" width=\"600\" height=\"600\">",
        -PI - pad,
        -PI - pad,
        size + 2.0 * pad,
        size + 2.0 * pad
    )?;
    writeln!(w, "<g transform=\"scale(1,-1)\">")?;
    writeln!(
        w,
        "<rect x=\"{:.6}\" y=\"{:.6}\" width=\"{size:.6}\" height=\"{size:.6}\" fill=\"none\" stroke=\"#888888\" stroke-width=\"0.02\"/>",
        -PI, -PI
    )?;
    for (c, poly) in geometry.polylines.iter().enumerate() {
        let colour = PALETTE[c % PALETTE.len()];
        let points: Vec<(f64, f64)> = poly.iter().map(|a| (a.theta1(), a.theta2())).collect();
        writeln!(w, "<g class=\"component\" data-id=\"{c}\">")?;
        for piece in torus_pieces(&points) {
            svg_polyline(&mut w, &piece, &format!("stroke=\"{colour}\" stroke-width=\"0.03\""))?;
        }
        writeln!(w, "</g>")?;
    }
    writeln!(w, "</g>")?;
    writeln!(w, "</svg>")
}

/// Overlaid planar chains A-B-C-D, shaded from black (first) to red (last),
/// over the ground bar. The view is the disc of radius `l1+l2+l3` around A,
/// which holds every configuration.
pub fn write_chains_svg<W: Write>(
    mut w: W,
    linkage: &Linkage,
    chains: &[PlanarConfig],
) -> io::Result<()> {
    let r = linkage.bars().sum();
    let pad = 0.05 * r;
    let stroke = 0.01 * r;
    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\" width=\"600\" height=\"600\">",
        -r - pad,
        -r - pad,
        2.0 * (r + pad),
        2.0 * (r + pad)
    )?;
    writeln!(w, "<g transform=\"scale(1,-1)\">")?;
    writeln!(
        w,
        "<line class=\"ground\" x1=\"0\" y1=\"0\" x2=\"{:.6}\" y2=\"0\" stroke=\"#888888\" stroke-width=\"{:.6}\"/>",
        linkage.ground(),
        2.0 * stroke
    )?;
    let last = chains.len().saturating_sub(1).max(1) as f64;
    for (k, chain) in chains.iter().enumerate() {
        let red = (255.0 * k as f64 / last).round() as u8;
        let points: Vec<(f64, f64)> = chain.points().iter().map(|p| (p.x, p.y)).collect();
        svg_polyline(
            &mut w,
            &points,
            &format!("class=\"chain\" stroke=\"#{red:02x}0000\" stroke-width=\"{stroke:.6}\""),
        )?;
    }
    writeln!(w, "</g>")?;
    writeln!(w, "</svg>")
}
