//! Safeguarded Newton iteration for monotone scalar equations.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum RootError {
    /// `f(lo)` and `f(hi)` do not bracket a root of an increasing function.
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    MaxIterations {
        last: f64,
        residual: f64,
    },
    NonFinite {
        x: f64,
    },
}

impl fmt::Display for RootError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootError::NotBracketed { lo, hi, f_lo, f_hi } => write!(
                f,
                "root not bracketed by [{lo}, {hi}] (f = {f_lo:e}, {f_hi:e})"
            ),
            RootError::MaxIterations { last, residual } => {
                write!(
                    f,
                    "no convergence, last iterate {last} residual {residual:e}"
                )
            }
            RootError::NonFinite { x } => write!(f, "non-finite function value at {x}"),
        }
    }
}

impl std::error::Error for RootError {}

/// Solves `f(x) = 0` for an increasing `f` on `[lo, hi]`.
///
/// `f` returns the value and the derivative. Newton steps that leave the
/// current bracket, or that fail to halve it fast enough, are replaced by
/// bisection. Iteration stops when the step or bracket width is below `tol`.
pub fn newton_bisect<F>(f: F, lo: f64, hi: f64, guess: f64, tol: f64) -> Result<f64, RootError>
where
    F: Fn(f64) -> (f64, f64),
{
    const MAX_ITER: usize = 200;

    let (mut a, mut b) = (lo, hi);
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa > 0.0 || fb < 0.0 {
        return Err(RootError::NotBracketed {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut x = if guess > a && guess < b {
        guess
    } else {
        0.5 * (a + b)
    };
    let mut last_width = b - a;
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if !fx.is_finite() {
            return Err(RootError::NonFinite { x });
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }

        let newton = x - fx / dfx;
        let width = b - a;
        let next = if dfx > 0.0 && newton > a && newton < b && width < 0.5 * last_width + tol {
            newton
        } else if dfx > 0.0 && newton > a && newton < b && (newton - x).abs() < 0.25 * width {
            newton
        } else {
            0.5 * (a + b)
        };
        last_width = width;

        if (next - x).abs() <= tol || width <= tol {
            return Ok(next);
        }
        x = next;
    }
    let (residual, _) = f(x);
    Err(RootError::MaxIterations { last: x, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = newton_bisect(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0, 1.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn flat_derivative_falls_back_to_bisection() {
        // derivative vanishes at the starting guess
        let r = newton_bisect(|x| (x.powi(3), 3.0 * x * x), -1.0, 3.0, 0.0, 1e-12);
        assert!(r.unwrap().abs() < 1e-4);
    }

    #[test]
    fn reports_missing_bracket() {
        let err = newton_bisect(|x| (x + 10.0, 1.0), 0.0, 1.0, 0.5, 1e-12).unwrap_err();
        assert!(matches!(err, RootError::NotBracketed { .. }));
    }

    #[test]
    fn nearly_linear_map_converges_fast() {
        // shape of t + L(t) = τ for a slowly moving wall
        let f = |t: f64| {
            (
                t + 1.0 + 0.05 * (3.0 * t).sin() - 7.3,
                1.0 + 0.15 * (3.0 * t).cos(),
            )
        };
        let r = newton_bisect(f, 5.0, 7.0, 6.3, 1e-14).unwrap();
        assert!(f(r).0.abs() < 1e-13);
    }
}
