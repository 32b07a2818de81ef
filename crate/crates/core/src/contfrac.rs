//! Continued-fraction convergents of a real number.

/// Convergents `p/q` of `x` in order, stopping before the first denominator
/// larger than `q_max`. Denominators are positive and each fraction is in
/// lowest terms.
pub fn convergents(x: f64, q_max: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    if !x.is_finite() || q_max == 0 {
        return out;
    }
    // p_{-1}/q_{-1} = 1/0, p_{-2}/q_{-2} = 0/1
    let (mut p_prev, mut q_prev): (i128, i128) = (1, 0);
    let (mut p_prev2, mut q_prev2): (i128, i128) = (0, 1);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let p = ai * p_prev + p_prev2;
        let q = ai * q_prev + q_prev2;
        if q > q_max as i128 {
            break;
        }
        out.push((p as i64, q as u64));
        let frac = rest - a;
        if frac < 1e-12 {
            break;
        }
        rest = 1.0 / frac;
        (p_prev2, q_prev2, p_prev, q_prev) = (p_prev, q_prev, p, q);
    }
    out
}
