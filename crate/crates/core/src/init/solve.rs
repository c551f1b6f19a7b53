use crate::error::{Error, Result};

/// Root of a scalar function on `[lo, hi]` with a sign change, by Newton steps
/// (central-difference derivative) safeguarded with bisection.
pub fn bracketed_root<F>(f: F, mut lo: f64, mut hi: f64, guess: f64, x_tol: f64, what: &str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(Error::domain(format!("{what}: non-finite residual at the bracket ends")));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Convergence {
            what: format!("{what}: no sign change in [{lo}, {hi}]"),
            residual: f_lo.abs().min(f_hi.abs()),
        });
    }
    let increasing = f_hi > 0.0;
    let mut x = if guess.is_finite() && guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for _ in 0..300 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
            f_lo = fx;
        }
        let h = 1e-7 * x.abs().max(1.0);
        let d = (f(x + h) - f(x - h)) / (2.0 * h);
        let newton = x - fx / d;
        let next = if d.is_finite() && d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= x_tol || hi - lo <= x_tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Convergence { what: what.to_string(), residual: f_lo.abs() })
}
