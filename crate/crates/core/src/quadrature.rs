//! Adaptive Simpson quadrature with a node budget.

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_BUDGET: usize = 1_000_000;

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Integrand evaluations spent.
    pub nodes: usize,
}

struct Panel {
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

struct Integrator<'f, F> {
    f: &'f F,
    nodes: usize,
    budget: usize,
    tol: f64,
}

impl<F: Fn(f64) -> f64> Integrator<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::QuadratureFailure {
                tol: self.tol,
                budget: self.budget,
            });
        }
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("integrand not finite at {x}")));
        }
        Ok(v)
    }

    fn refine(&mut self, p: Panel, eps: f64, depth: u32) -> Result<f64> {
        let lm = 0.5 * (p.a + p.m);
        let rm = 0.5 * (p.m + p.b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let h = p.b - p.a;
        let left = h * (p.fa + 4.0 * flm + p.fm) / 12.0;
        let right = h * (p.fm + 4.0 * frm + p.fb) / 12.0;
        let both = left + right;
        let err = both - p.whole;
        if err.abs() <= 15.0 * eps {
            return Ok(both + err / 15.0);
        }
        if depth == 0 {
            return Err(Error::QuadratureFailure {
                tol: self.tol,
                budget: self.budget,
            });
        }
        let l = Panel {
            a: p.a,
            m: lm,
            b: p.m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        };
        let r = Panel {
            a: p.m,
            m: rm,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        };
        Ok(self.refine(l, 0.5 * eps, depth - 1)? + self.refine(r, 0.5 * eps, depth - 1)?)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, spending at most
/// `budget` integrand evaluations. Reversed limits flip the sign.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    budget: usize,
) -> Result<Quadrature> {
    if !(tol > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bad quadrature request [{a}, {b}] tol {tol}"
        )));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            nodes: 0,
        });
    }
    let mut it = Integrator {
        f: &f,
        nodes: 0,
        budget,
        tol,
    };
    let n = INITIAL_PANELS;
    let h = (b - a) / n as f64;
    let xs: Vec<f64> = (0..=2 * n).map(|k| a + 0.5 * h * k as f64).collect();
    let mut fs = Vec::with_capacity(xs.len());
    for &x in &xs {
        fs.push(it.eval(x)?);
    }
    let mut total = 0.0;
    for k in 0..n {
        let (i, j, l) = (2 * k, 2 * k + 1, 2 * k + 2);
        let panel = Panel {
            a: xs[i],
            m: xs[j],
            b: xs[l],
            fa: fs[i],
            fm: fs[j],
            fb: fs[l],
            whole: h * (fs[i] + 4.0 * fs[j] + fs[l]) / 6.0,
        };
        total += it.refine(panel, tol / n as f64, MAX_DEPTH)?;
    }
    Ok(Quadrature {
        value: total,
        nodes: it.nodes,
    })
}
