//! Scalar root finding and minimisation.

use crate::error::{Error, Result};

/// Safeguarded Newton iteration on a sign-changing bracket `[lo, hi]`.
///
/// `f` returns `(value, derivative)`. A Newton step is accepted only when it
/// lands strictly inside the current bracket; otherwise the bracket is bisected.
/// Stops when the step is below `rel_tol * |x|`.
pub fn newton_bisect<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::NonConvergence {
            op: "newton_bisect",
            detail: format!("no sign change on [{lo}, {hi}]: f(lo) = {flo}, f(hi) = {fhi}"),
        });
    }
    let lo_positive = flo > 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == lo_positive {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= rel_tol * x.abs() || (hi - lo) <= rel_tol * x.abs() {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        op: "newton_bisect",
        detail: format!("bracket [{lo}, {hi}] after {max_iter} iterations, last x = {x}"),
    })
}

/// Golden-section search for a minimiser of a unimodal `f` on `[a, b]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c == d {
            break;
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let r = newton_bisect(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 5.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn survives_bad_newton_steps() {
        // derivative vanishes at the bracket midpoint
        let r = newton_bisect(|x| (x.atan(), 1.0 / (1.0 + x * x)), -20.0, 30.0, 1e-14, 500).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        assert!(newton_bisect(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 1e-12, 50).is_err());
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_min(|x| (x - 1.25).powi(2) + 3.0, -10.0, 10.0, 1e-10);
        assert!((x - 1.25).abs() < 1e-6);
        assert!((fx - 3.0).abs() < 1e-15);
    }
}
