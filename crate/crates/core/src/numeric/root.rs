//! Bracketed bisection for monotone problems.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("bracket [{lo}, {hi}] does not straddle the target")]
    NoBracket { lo: f64, hi: f64 },
    #[error("bisection hit {0} iterations without meeting tolerance")]
    MaxIterations(usize),
}

/// Stopping rule for [`bisect`].
#[derive(Debug, Clone, Copy)]
pub struct BisectOptions {
    /// Stop once `hi - lo <= abs_tol + rel_tol * max(|lo|, |hi|)`.
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 0.0,
            max_iter: 200,
        }
    }
}

/// Locates the switch point of a monotone predicate.
///
/// `inside(lo)` must hold and `inside(hi)` must fail; the returned bracket
/// `(lo, hi)` keeps that property and is narrower than the tolerance.
pub fn bisect<P: FnMut(f64) -> bool>(
    mut inside: P,
    mut lo: f64,
    mut hi: f64,
    opts: BisectOptions,
) -> Result<(f64, f64), RootError> {
    if !inside(lo) || inside(hi) {
        return Err(RootError::NoBracket { lo, hi });
    }
    for _ in 0..opts.max_iter {
        let width = (hi - lo).abs();
        if width <= opts.abs_tol + opts.rel_tol * lo.abs().max(hi.abs()) {
            return Ok((lo, hi));
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid == lo || mid == hi {
            return Ok((lo, hi));
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let width = (hi - lo).abs();
    if width <= opts.abs_tol + opts.rel_tol * lo.abs().max(hi.abs()) {
        Ok((lo, hi))
    } else {
        Err(RootError::MaxIterations(opts.max_iter))
    }
}

/// Solves `f(x) = target` for nondecreasing `f` on `[lo, hi]`.
pub fn solve_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    target: f64,
    lo: f64,
    hi: f64,
    opts: BisectOptions,
) -> Result<f64, RootError> {
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == target {
        return Ok(lo);
    }
    if f_hi == target {
        return Ok(hi);
    }
    if !(f_lo < target && target < f_hi) {
        return Err(RootError::NoBracket { lo, hi });
    }
    let (a, b) = bisect(|x| f(x) < target, lo, hi, opts)?;
    Ok(0.5 * (a + b))
}
