//! Bracketing root finders on the real line.

use crate::error::{Error, Result};

/// Bisection refinement of a sign change of `f` on `[lo, hi]`.
///
/// Stops when the bracket can no longer be split in floating point or when
/// `|f| <= ftol` at the midpoint.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::BracketFailure(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 || fm.abs() <= ftol {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

/// Brent's method (inverse quadratic interpolation with bisection safeguard).
///
/// `f` may fail; failures are propagated. Returns the abscissa once the
/// bracket shrinks below `xtol` (plus a machine-epsilon term).
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailure(format!(
            "f({a}) = {fa} and f({b}) = {fb} share a sign"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::BracketFailure(format!(
        "Brent did not converge in {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_solves_classic_cases() {
        let cases: [(fn(f64) -> f64, f64, f64); 4] = [
            (|x| x.sin() - 0.5 * x, 1.0, 2.0),
            (|x| 2.0 * x - (-x).exp(), 0.0, 1.0),
            (|x| x * (-x).exp(), -1.0, 0.5),
            (|x| (x + 3.0) * (x - 1.0) * (x - 1.0), -5.0, 2.0),
        ];
        for (f, a, b) in cases {
            let x = brent(|x| Ok(f(x)), a, b, 1e-14, 200).unwrap();
            assert!(f(x).abs() < 1e-12, "f({x}) = {}", f(x));
        }
    }

    #[test]
    fn brent_rejects_missing_sign_change() {
        assert!(matches!(
            brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 50),
            Err(Error::BracketFailure(_))
        ));
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let x = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }
}
