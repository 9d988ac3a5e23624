//! Survival copulas with analytic mixed partial derivatives.
//!
//! A survival copula `Ĉ` couples the common component survival function:
//! `Pr(X_1 > x_1, …, X_n > x_n) = Ĉ(F̄(x_1), …, F̄(x_n))`. Coordinates are
//! 0-based in this module; structure indices and the Clayton pair in
//! [`SurvivalCopula::clayton_pair`] are 1-based.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CopulaError {
    #[error("coordinate {index} = {value} is outside [0, 1]")]
    OutOfUnitInterval { index: usize, value: f64 },
    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mixed partials are implemented up to order 3, got {0} indices")]
    UnsupportedOrder(usize),
    #[error("partial derivative indices must be distinct and < {dim}: {indices:?}")]
    BadIndices { indices: Vec<usize>, dim: usize },
    #[error("assignment covers {got} of {expected} coordinates")]
    IncompleteAssignment { expected: usize, got: usize },
    #[error("coordinate {index} = {value} is closer than h = {h} to the boundary")]
    BoundaryTooClose { index: usize, value: f64, h: f64 },
    #[error("invalid copula parameters: {0}")]
    InvalidParameter(String),
}

/// Evaluation interface shared by the shipped families and user copulas.
///
/// Implementations may assume validated input: points have length `dim()`
/// with coordinates in `[0, 1]`, and `indices` holds 1 to 3 distinct
/// coordinates. Boundary partials are continuous extensions from the interior.
pub trait Copula: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, u: &[f64]) -> f64;

    fn mixed_partial(&self, indices: &[usize], u: &[f64]) -> f64;

    /// Closed-form inverse of the conditional law of coordinate `prefix.len()`
    /// given the earlier coordinates, when one is available.
    ///
    /// Returns the value `v` such that `Pr(V_k ≤ v | V_0..V_{k-1} = prefix) = p`.
    fn conditional_inverse(&self, _prefix: &[f64], _p: f64) -> Option<f64> {
        None
    }
}

/// The shipped survival copula families.
#[derive(Debug, Clone, PartialEq)]
pub enum SurvivalCopula {
    /// Independence: `Π u_i`.
    Product { n: usize },
    /// Farlie–Gumbel–Morgenstern: `Π u_i · (1 + θ Π (1 − u_i))`, `θ ∈ [−1, 1]`.
    Fgm { n: usize, theta: f64 },
    /// Clayton dependence on one pair `(j, k)` (0-based), remaining
    /// coordinates independent: `Π_{i∉{j,k}} u_i · (u_j^{−θ} + u_k^{−θ} − 1)^{−1/θ}`.
    ClaytonPair {
        n: usize,
        pair: (usize, usize),
        theta: f64,
    },
}

impl SurvivalCopula {
    pub fn product(n: usize) -> Result<Self, CopulaError> {
        if n == 0 {
            return Err(CopulaError::InvalidParameter(
                "dimension must be positive".into(),
            ));
        }
        Ok(Self::Product { n })
    }

    pub fn fgm(n: usize, theta: f64) -> Result<Self, CopulaError> {
        if n < 2 {
            return Err(CopulaError::InvalidParameter("FGM needs n >= 2".into()));
        }
        if !(-1.0..=1.0).contains(&theta) {
            return Err(CopulaError::InvalidParameter(format!(
                "FGM theta must lie in [-1, 1], got {theta}"
            )));
        }
        Ok(Self::Fgm { n, theta })
    }

    /// Clayton pair on 1-based components `pair.0`, `pair.1`.
    pub fn clayton_pair(n: usize, pair: (usize, usize), theta: f64) -> Result<Self, CopulaError> {
        let (a, b) = pair;
        if a == b || a == 0 || b == 0 || a > n || b > n {
            return Err(CopulaError::InvalidParameter(format!(
                "Clayton pair {pair:?} must be two distinct indices in 1..={n}"
            )));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(CopulaError::InvalidParameter(format!(
                "Clayton theta must be positive, got {theta}"
            )));
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        Ok(Self::ClaytonPair {
            n,
            pair: (lo - 1, hi - 1),
            theta,
        })
    }

    fn check_point(&self, u: &[f64]) -> Result<(), CopulaError> {
        if u.len() != self.dim() {
            return Err(CopulaError::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        for (index, &value) in u.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(CopulaError::OutOfUnitInterval { index, value });
            }
        }
        Ok(())
    }

    fn check_indices(&self, indices: &[usize]) -> Result<(), CopulaError> {
        if indices.is_empty() || indices.len() > 3 {
            return Err(CopulaError::UnsupportedOrder(indices.len()));
        }
        let dim = self.dim();
        let distinct = indices
            .iter()
            .enumerate()
            .all(|(k, i)| !indices[..k].contains(i));
        if !distinct || indices.iter().any(|&i| i >= dim) {
            return Err(CopulaError::BadIndices {
                indices: indices.to_vec(),
                dim,
            });
        }
        Ok(())
    }

    /// `Ĉ(u)`, validated.
    pub fn eval(&self, u: &[f64]) -> Result<f64, CopulaError> {
        self.check_point(u)?;
        Ok(self.value(u))
    }

    /// Analytic mixed partial over 1–3 distinct 0-based coordinates.
    pub fn partial(&self, indices: &[usize], u: &[f64]) -> Result<f64, CopulaError> {
        if indices.len() > 3 {
            return Err(CopulaError::UnsupportedOrder(indices.len()));
        }
        self.check_point(u)?;
        self.check_indices(indices)?;
        Ok(self.mixed_partial(indices, u))
    }
}

/// Clayton generator pieces for the pair `(a, b)`.
struct ClaytonPairTerms {
    value: f64,
    d_a: f64,
    d_b: f64,
    d_ab: f64,
}

fn clayton_pair_terms(a: f64, b: f64, theta: f64) -> ClaytonPairTerms {
    if a == 0.0 || b == 0.0 {
        // K(0, b) = 0 with ∂_a K(0, b) = 1 for b > 0; ∂_{ab} K vanishes there.
        return ClaytonPairTerms {
            value: 0.0,
            d_a: if a == 0.0 && b > 0.0 { 1.0 } else { 0.0 },
            d_b: if b == 0.0 && a > 0.0 { 1.0 } else { 0.0 },
            d_ab: 0.0,
        };
    }
    // K/a = (1 + a^θ (b^{−θ} − 1))^{−1/θ} stays bounded near the axes.
    let ra = (1.0 + a.powf(theta) * (b.powf(-theta) - 1.0)).powf(-1.0 / theta);
    let rb = (1.0 + b.powf(theta) * (a.powf(-theta) - 1.0)).powf(-1.0 / theta);
    let value = a * ra;
    let d_a = ra.powf(1.0 + theta);
    let d_b = rb.powf(1.0 + theta);
    let d_ab = (1.0 + theta) * d_a * d_b / value;
    ClaytonPairTerms {
        value,
        d_a,
        d_b,
        d_ab,
    }
}

impl Copula for SurvivalCopula {
    fn dim(&self) -> usize {
        match *self {
            Self::Product { n } | Self::Fgm { n, .. } | Self::ClaytonPair { n, .. } => n,
        }
    }

    fn value(&self, u: &[f64]) -> f64 {
        match *self {
            Self::Product { .. } => u.iter().product(),
            Self::Fgm { theta, .. } => {
                let p: f64 = u.iter().product();
                let q: f64 = u.iter().map(|x| 1.0 - x).product();
                p + theta * p * q
            }
            Self::ClaytonPair { pair, theta, .. } => {
                let rest: f64 = u
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != pair.0 && i != pair.1)
                    .map(|(_, x)| x)
                    .product();
                rest * clayton_pair_terms(u[pair.0], u[pair.1], theta).value
            }
        }
    }

    fn mixed_partial(&self, indices: &[usize], u: &[f64]) -> f64 {
        let in_set = |i: usize| indices.contains(&i);
        match *self {
            Self::Product { .. } => u
                .iter()
                .enumerate()
                .filter(|&(i, _)| !in_set(i))
                .map(|(_, x)| x)
                .product(),
            Self::Fgm { theta, .. } => {
                let mut base = 1.0;
                let mut tilt = 1.0;
                for (i, &x) in u.iter().enumerate() {
                    if in_set(i) {
                        tilt *= 1.0 - 2.0 * x;
                    } else {
                        base *= x;
                        tilt *= x * (1.0 - x);
                    }
                }
                base + theta * tilt
            }
            Self::ClaytonPair { pair, theta, .. } => {
                let rest: f64 = u
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != pair.0 && i != pair.1 && !in_set(i))
                    .map(|(_, x)| x)
                    .product();
                let k = clayton_pair_terms(u[pair.0], u[pair.1], theta);
                let pair_part = match (in_set(pair.0), in_set(pair.1)) {
                    (false, false) => k.value,
                    (true, false) => k.d_a,
                    (false, true) => k.d_b,
                    (true, true) => k.d_ab,
                };
                rest * pair_part
            }
        }
    }

    fn conditional_inverse(&self, prefix: &[f64], p: f64) -> Option<f64> {
        let k = prefix.len();
        match *self {
            Self::Product { .. } => Some(p),
            Self::Fgm { n, theta } => {
                if k + 1 < n {
                    // Every (n−1)-margin of this FGM family is the product copula.
                    return Some(p);
                }
                // Conditional cdf v + a·v(1−v), a = θ Π (1 − 2 v_i).
                let a = theta * prefix.iter().map(|v| 1.0 - 2.0 * v).product::<f64>();
                if a == 0.0 {
                    return Some(p);
                }
                let disc = ((1.0 + a) * (1.0 + a) - 4.0 * a * p).max(0.0);
                // Root of a v² − (1+a) v + p = 0 in [0, 1], in cancellation-free form.
                Some((2.0 * p / ((1.0 + a) + disc.sqrt())).clamp(0.0, 1.0))
            }
            Self::ClaytonPair { pair, theta, .. } => {
                if k == pair.1 {
                    let a = prefix[pair.0];
                    // ∂_a K(a, v) = p  ⇒  v = ((p^{−θ/(1+θ)} − 1) a^{−θ} + 1)^{−1/θ}
                    let s = (p.powf(-theta / (1.0 + theta)) - 1.0) * a.powf(-theta) + 1.0;
                    Some(s.powf(-1.0 / theta).clamp(0.0, 1.0))
                } else {
                    Some(p)
                }
            }
        }
    }
}

/// Role of a coordinate in a copula slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    U,
    V,
    W,
    One,
}

/// A copula with each coordinate tied to `u`, `v`, `w` or the constant 1.
#[derive(Debug, Clone)]
pub struct CopulaSlice<'a, C: Copula + ?Sized> {
    copula: &'a C,
    slots: Vec<Slot>,
}

/// Restricts `c` to a slice; `assignment` must cover every coordinate.
pub fn slice<'a, C: Copula + ?Sized>(
    c: &'a C,
    assignment: &[Slot],
) -> Result<CopulaSlice<'a, C>, CopulaError> {
    if assignment.len() != c.dim() {
        return Err(CopulaError::IncompleteAssignment {
            expected: c.dim(),
            got: assignment.len(),
        });
    }
    Ok(CopulaSlice {
        copula: c,
        slots: assignment.to_vec(),
    })
}

impl<C: Copula + ?Sized> CopulaSlice<'_, C> {
    pub fn eval(&self, u: f64, v: f64, w: f64) -> f64 {
        let point: Vec<f64> = self
            .slots
            .iter()
            .map(|s| match s {
                Slot::U => u,
                Slot::V => v,
                Slot::W => w,
                Slot::One => 1.0,
            })
            .collect();
        self.copula.value(&point)
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }
}

/// Central finite-difference estimate of a mixed partial of order `indices.len()`.
pub fn fd_partial_oracle<C: Copula + ?Sized>(
    c: &C,
    indices: &[usize],
    u: &[f64],
    h: f64,
) -> Result<f64, CopulaError> {
    if indices.is_empty() || indices.len() > 3 {
        return Err(CopulaError::UnsupportedOrder(indices.len()));
    }
    for &i in indices {
        if i >= u.len() {
            return Err(CopulaError::BadIndices {
                indices: indices.to_vec(),
                dim: u.len(),
            });
        }
        if u[i] - h < 0.0 || u[i] + h > 1.0 {
            return Err(CopulaError::BoundaryTooClose {
                index: i,
                value: u[i],
                h,
            });
        }
    }
    let k = indices.len();
    let mut point = u.to_vec();
    let mut acc = 0.0;
    for signs in 0u32..(1 << k) {
        let mut sign = 1.0;
        for (bit, &i) in indices.iter().enumerate() {
            if signs & (1 << bit) != 0 {
                point[i] = u[i] + h;
            } else {
                point[i] = u[i] - h;
                sign = -sign;
            }
        }
        acc += sign * c.value(&point);
    }
    Ok(acc / (2.0 * h).powi(k as i32))
}
