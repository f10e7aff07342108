//! Bracketed scalar root finding and golden-section minimization.

use crate::error::{numeric, Error, Result};

/// Root of a monotone function on `[lo, hi]` by bisection to absolute tolerance `tol`.
pub fn find_root_monotone(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(numeric(format!("empty bracket [{lo}, {hi}]")));
    }
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let increasing = f_lo < 0.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if b - a <= tol || m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == increasing {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Minimizer of a convex function on `[lo, hi]` by golden-section search.
pub fn minimize_convex(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(numeric(format!("empty interval [{lo}, {hi}]")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        if c <= a || d >= b {
            break;
        }
    }
    // Compare with the endpoints so boundary minima are returned exactly.
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid)?);
    for x in [lo, hi] {
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_root() {
        let r = find_root_monotone(|x| Ok(x * x * x - 2.0), 0.0, 3.0, 1e-12).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-11);
        let r = find_root_monotone(|x| Ok(1.0 - x), 0.0, 3.0, 1e-12).unwrap();
        assert!((r - 1.0).abs() < 1e-11);
    }

    #[test]
    fn missing_bracket_is_an_error() {
        let err = find_root_monotone(|x| Ok(x + 1.0), 0.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn golden_section() {
        let m = minimize_convex(|x| Ok((x - 0.7).powi(2)), 0.0, 5.0, 1e-10).unwrap();
        assert!((m - 0.7).abs() < 1e-8);
        let m = minimize_convex(|x| Ok(x), 1.0, 5.0, 1e-10).unwrap();
        assert_eq!(m, 1.0);
    }
}
