//! Bracketed root finding for monotone inversion.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Brent's method on a bracketing interval `[a, b]` with `f(a) f(b) <= 0`.
pub fn brent(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::RootFind(format!(
            "no sign change on [{a}, {b}] (f = {fa:.3e}, {fb:.3e})"
        )));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..MAX_ITER {
        if fb == 0.0 || (b - a).abs() < tol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let cond = !((lo.min(b) < s && s < lo.max(b))
            && !(mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            && !(!mflag && (s - b).abs() >= (c - d).abs() / 2.0)
            && !(mflag && (b - c).abs() < tol)
            && !(!mflag && (c - d).abs() < tol));
        if cond {
            s = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Ok(b)
}

/// Expands a bracket for a monotone increasing function from a starting
/// guess toward the open interval `(lo, hi)` until `f` changes sign, then
/// solves by Brent. Expansion approaches the endpoints geometrically without
/// reaching them.
pub fn monotone_solve(
    f: impl Fn(f64) -> f64,
    guess: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let clampg = |x: f64| {
        if lo.is_finite() && hi.is_finite() {
            x.clamp(lo + 1e-300, hi - 1e-300)
        } else {
            x
        }
    };
    let mut a = clampg(guess);
    let mut b = a;
    let fg = f(a);
    if fg == 0.0 {
        return Ok(a);
    }
    let mut step = (a.abs() * 0.1).max(1e-4);
    if fg > 0.0 {
        // root below
        for _ in 0..200 {
            a = if lo.is_finite() {
                lo + 0.5 * (a - lo)
            } else {
                a - step
            };
            step *= 2.0;
            if f(a) <= 0.0 {
                return brent(f, a, b, tol);
            }
            b = a;
        }
    } else {
        for _ in 0..200 {
            b = if hi.is_finite() {
                hi - 0.5 * (hi - b)
            } else {
                b + step
            };
            step *= 2.0;
            if f(b) >= 0.0 {
                return brent(f, a, b, tol);
            }
            a = b;
        }
    }
    Err(Error::RootFind(
        "bracket expansion exhausted without a sign change".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_cubic() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn brent_needs_bracket() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn monotone_expand_infinite() {
        // solve ln x = 3 on (0, inf) from a poor guess
        let r = monotone_solve(|x| x.ln() - 3.0, 1.0, 0.0, f64::INFINITY, 1e-13).unwrap();
        assert!((r - 3f64.exp()).abs() < 1e-9, "{r}");
    }

    #[test]
    fn monotone_expand_bounded() {
        // solve atanh-like monotone map on (-1, 1)
        let f = |x: f64| 0.5 * ((1.0 + x) / (1.0 - x)).ln() - 2.0;
        let r = monotone_solve(f, 0.0, -1.0, 1.0, 1e-14).unwrap();
        assert!((r - 2f64.tanh()).abs() < 1e-10, "{r}");
    }
}
