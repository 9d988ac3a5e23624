//! Linear quantile regression and least squares on `(t, y)` pairs.
//!
//! The pinball loss of a line is convex and piecewise linear in its
//! coefficients, so some optimal line passes through two sample points. For
//! each pivot point the loss of lines through it is a convex function of the
//! slope alone, with breakpoints at the slopes to the other points; its
//! minimum sits at a weighted quantile of those slopes. Scanning every pivot
//! therefore finds the exact optimum in `O(n² log n)` time.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QrError {
    #[error("all t values are equal; the slope is not identifiable")]
    DegenerateDesign,
    #[error("need at least 2 observations, got {0}")]
    InsufficientData(usize),
    #[error("quantile level must lie in (0, 1), got {0}")]
    InvalidTau(f64),
    #[error("non-finite observation at index {0}")]
    NonFinite(usize),
}

/// `y = intercept + slope · t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedLine {
    /// `None` for least squares.
    pub tau: Option<f64>,
    pub intercept: f64,
    pub slope: f64,
    /// Pinball loss for quantile fits, residual sum of squares otherwise.
    pub loss: f64,
}

impl FittedLine {
    pub fn at(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

/// `ρ_τ(r) = r (τ − 1[r < 0])`.
pub fn pinball(r: f64, tau: f64) -> f64 {
    if r < 0.0 {
        r * (tau - 1.0)
    } else {
        r * tau
    }
}

/// Total pinball loss of the line `a + b t`.
pub fn pinball_loss(pairs: &[(f64, f64)], tau: f64, a: f64, b: f64) -> f64 {
    pairs
        .iter()
        .map(|&(t, y)| pinball(y - a - b * t, tau))
        .sum()
}

fn validate(pairs: &[(f64, f64)]) -> Result<(), QrError> {
    if pairs.len() < 2 {
        return Err(QrError::InsufficientData(pairs.len()));
    }
    if let Some(i) = pairs
        .iter()
        .position(|&(t, y)| !(t.is_finite() && y.is_finite()))
    {
        return Err(QrError::NonFinite(i));
    }
    let t0 = pairs[0].0;
    if pairs.iter().all(|&(t, _)| t == t0) {
        return Err(QrError::DegenerateDesign);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    loss: f64,
    a: f64,
    b: f64,
}

impl Candidate {
    /// Lower loss wins; near-ties go to the smaller `|b|`, then the smaller `a`.
    fn better_than(&self, other: &Candidate) -> bool {
        let tol = 1e-12 * (1.0 + self.loss.abs().max(other.loss.abs()));
        if (self.loss - other.loss).abs() > tol {
            return self.loss < other.loss;
        }
        if self.b.abs() != other.b.abs() {
            return self.b.abs() < other.b.abs();
        }
        self.a < other.a
    }
}

fn best(cands: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    cands.into_iter().fold(None, |acc, c| match acc {
        Some(best) if !c.better_than(&best) => Some(best),
        _ => Some(c),
    })
}

/// Optimal slopes for lines through `pairs[i]`.
fn pivot_slopes(pairs: &[(f64, f64)], i: usize, tau: f64) -> Vec<f64> {
    let (ti, yi) = pairs[i];
    let mut kinks: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    let mut slope = 0.0;
    for &(t, y) in pairs {
        let d = t - ti;
        if d > 0.0 {
            slope -= d * tau;
        } else if d < 0.0 {
            slope += d * (1.0 - tau);
        } else {
            continue;
        }
        kinks.push(((y - yi) / d, d.abs()));
    }
    kinks.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out = Vec::with_capacity(2);
    for (k, &(b, w)) in kinks.iter().enumerate() {
        slope += w;
        if slope >= 0.0 {
            out.push(b);
            // a flat stretch makes the next kink optimal too
            if slope == 0.0 {
                if let Some(&(next, _)) = kinks.get(k + 1) {
                    out.push(next);
                }
            }
            break;
        }
    }
    out
}

/// Exact minimiser of the pinball loss over all lines.
pub fn fit_lqr(pairs: &[(f64, f64)], tau: f64) -> Result<FittedLine, QrError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(QrError::InvalidTau(tau));
    }
    validate(pairs)?;
    let per_pivot: Vec<Option<Candidate>> = (0..pairs.len())
        .into_par_iter()
        .map(|i| {
            let (ti, yi) = pairs[i];
            let lines = pivot_slopes(pairs, i, tau)
                .into_iter()
                .map(|b| (yi - b * ti, b))
                .chain(std::iter::once((yi, 0.0)));
            best(lines.map(|(a, b)| Candidate {
                loss: pinball_loss(pairs, tau, a, b),
                a,
                b,
            }))
        })
        .collect();
    let winner = best(per_pivot.into_iter().flatten()).expect("at least one pivot");
    Ok(FittedLine {
        tau: Some(tau),
        intercept: winner.a,
        slope: winner.b,
        loss: winner.loss,
    })
}

/// Least-squares line from the centred normal equations.
pub fn fit_ols(pairs: &[(f64, f64)]) -> Result<FittedLine, QrError> {
    validate(pairs)?;
    let n = pairs.len() as f64;
    let tm = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = pairs.iter().fold((0.0, 0.0), |(sxx, sxy), &(t, y)| {
        (sxx + (t - tm) * (t - tm), sxy + (t - tm) * (y - ym))
    });
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let loss = pairs
        .iter()
        .map(|&(t, y)| (y - intercept - slope * t).powi(2))
        .sum();
    Ok(FittedLine {
        tau: None,
        intercept,
        slope,
        loss,
    })
}

/// Quantile lines at several levels, with any crossings inside the data range.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFits {
    /// Sorted by `tau`.
    pub lines: Vec<FittedLine>,
    /// Index pairs `(i, i+1)` into `lines` whose order flips within `[t_min, t_max]`.
    pub crossings: Vec<(usize, usize)>,
}

impl QuantileFits {
    pub fn crossing(&self) -> bool {
        !self.crossings.is_empty()
    }
}

pub fn fit_lqr_levels(pairs: &[(f64, f64)], taus: &[f64]) -> Result<QuantileFits, QrError> {
    let mut taus = taus.to_vec();
    taus.sort_by(f64::total_cmp);
    let lines = taus
        .iter()
        .map(|&tau| fit_lqr(pairs, tau))
        .collect::<Result<Vec<_>, _>>()?;
    let (lo, hi) = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let crossings = crossings(&lines, lo, hi);
    Ok(QuantileFits { lines, crossings })
}

/// Adjacent pairs of `lines` (sorted by level) that swap order somewhere in `[lo, hi]`.
pub fn crossings(lines: &[FittedLine], lo: f64, hi: f64) -> Vec<(usize, usize)> {
    // lines are linear, so checking the ends of the range is enough
    lines
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].at(lo) > w[1].at(lo) || w[0].at(hi) > w[1].at(hi))
        .map(|(i, _)| (i, i + 1))
        .collect()
}
