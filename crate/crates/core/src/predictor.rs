//! Conditional survival of the system lifetime given early failure times,
//! with quantile inversion, regression curves and prediction bands.
//!
//! All survival functions are evaluated in `z = F̄(y)`. For the pair cases
//! with `u = F̄(t)`:
//!
//! ```text
//! S(z) = [∂₁D̂(u, z) − ∂₁D̂(u, 0⁺)] / ∂₁D̂(u, 1)        (Case I, II.b)
//! ```
//!
//! and Case II.a divides by `α(t) = S(u)`. The denominator is the density of
//! `T₁` in distortion form, `q̄'_{T₁}(u)`. Case III uses `∂₁₂D̂` of the
//! trivariate distortion in the same way.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::copula::Copula;
use crate::distortion::{
    build_univariate, BivariateDistortion, DistortionError, TrivariateDistortion,
    UnivariateDistortion,
};
use crate::marginal::{Marginal, MarginalError};
use crate::numeric::{
    beta_quantile, bisect, integrate, BisectOptions, QuadOptions, QuadratureError, RootError,
};
use crate::structure::SystemStructure;

/// Survival levels below this are treated as the end of the support.
pub const TAIL_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictorError {
    #[error("conditioning density vanishes at {0:?}")]
    DegenerateDenominator(Given),
    #[error("α(t) = 0 at t = {0}: conditioning on a null event")]
    ZeroAlpha(f64),
    #[error("survival never drops to {w} beyond the conditioning time")]
    NotInvertible { w: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(#[from] QuadratureError),
    #[error("invalid order statistics (n, r, s) = ({n}, {r}, {s}); need 1 ≤ r < s ≤ n")]
    InvalidOrder { n: usize, r: usize, s: usize },
    #[error("probability level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("{0}")]
    CaseMismatch(String),
    #[error("invalid conditioning: {0}")]
    InvalidConditioning(String),
    #[error(transparent)]
    Marginal(#[from] MarginalError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Conditioning regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// `T₁ < T` almost surely, condition on `T₁ = t`.
    I,
    /// `T₁ ≤ T` with an atom at `T = T₁`; condition on `T₁ = t, T > t`.
    IIa,
    /// As II.a but condition only on `T₁ = t`; the law of `T` has an atom at `t`.
    IIb,
    /// `T₁ < T₂ < T`, condition on `T₁ = t₁, T₂ = t₂`.
    III,
}

impl Case {
    pub fn name(&self) -> &'static str {
        match self {
            Case::I => "I",
            Case::IIa => "IIa",
            Case::IIb => "IIb",
            Case::III => "III",
        }
    }
}

/// Observed early failure times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Given {
    One(f64),
    Two(f64, f64),
}

impl Given {
    /// The latest observed failure time; survival is 1 before it.
    pub fn last(&self) -> f64 {
        match *self {
            Given::One(t) | Given::Two(_, t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandKind {
    /// `[G⁻¹((1+γ)/2), G⁻¹((1−γ)/2)]`.
    Centered,
    /// `[t, G⁻¹(1−γ)]`.
    Bottom,
}

/// A prediction band of a given kind and coverage level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionBand {
    pub kind: BandKind,
    pub level: f64,
}

impl PredictionBand {
    pub fn new(kind: BandKind, level: f64) -> Result<Self, PredictorError> {
        if !(level > 0.0 && level < 1.0) {
            return Err(PredictorError::InvalidLevel(level));
        }
        Ok(Self { kind, level })
    }

    pub fn centered(level: f64) -> Result<Self, PredictorError> {
        Self::new(BandKind::Centered, level)
    }

    pub fn bottom(level: f64) -> Result<Self, PredictorError> {
        Self::new(BandKind::Bottom, level)
    }
}

/// Lower and upper limits of a prediction interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

/// How [`ConditionalPredictor::quantile_with`] inverts the survival function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inversion {
    /// Use a closed form when the survival function is recognised, else bisect.
    Auto,
    /// Always bisect.
    Numeric,
}

#[derive(Debug, Clone)]
enum Model {
    Pair(BivariateDistortion),
    Triple(TrivariateDistortion),
}

/// Conditional law of the system lifetime given early failure times.
#[derive(Debug, Clone)]
pub struct ConditionalPredictor {
    case: Case,
    model: Model,
    marginal: Marginal,
}

/// Per-conditioning constants.
#[derive(Debug, Clone, Copy)]
enum Prepared {
    Pair {
        t: f64,
        u: f64,
        offset: f64,
        denom: f64,
        alpha: f64,
    },
    Triple {
        t2: f64,
        u1: f64,
        v2: f64,
        offset: f64,
        denom: f64,
    },
}

impl Prepared {
    fn time(&self) -> f64 {
        match *self {
            Prepared::Pair { t, .. } => t,
            Prepared::Triple { t2, .. } => t2,
        }
    }

    /// Survival level at the conditioning time; the upper end in `z`.
    fn level(&self) -> f64 {
        match *self {
            Prepared::Pair { u, .. } => u,
            Prepared::Triple { v2, .. } => v2,
        }
    }
}

/// Closed-form survival shapes in `z` with known inverses.
#[derive(Debug, Clone, Copy)]
enum Shape {
    /// `(2uz + z²) / (3u²)`.
    FirstOfParallelSeries,
    /// `c z² / u²`.
    Quadratic(f64),
    /// `(z/v)(1 + c(1 − z)) / (1 + c(1 − v))`.
    Tilted(f64),
}

impl Shape {
    fn eval(&self, level: f64, z: f64) -> f64 {
        match *self {
            Shape::FirstOfParallelSeries => (2.0 * level * z + z * z) / (3.0 * level * level),
            Shape::Quadratic(c) => c * z * z / (level * level),
            Shape::Tilted(c) => z / level * (1.0 + c * (1.0 - z)) / (1.0 + c * (1.0 - level)),
        }
    }

    fn invert(&self, level: f64, w: f64) -> f64 {
        match *self {
            Shape::FirstOfParallelSeries => level * ((1.0 + 3.0 * w).sqrt() - 1.0),
            Shape::Quadratic(c) => level * (w / c).sqrt(),
            Shape::Tilted(c) => {
                // c z² − (1 + c) z + wB = 0, root in [0, 1]
                let b = w * level * (1.0 + c * (1.0 - level));
                let p = 1.0 + c;
                2.0 * b / (p + (p * p - 4.0 * c * b).max(0.0).sqrt())
            }
        }
    }
}

impl ConditionalPredictor {
    /// Predictor from a `(T₁, T)` distortion; `case` must be I, II.a or II.b.
    pub fn pair(
        case: Case,
        distortion: BivariateDistortion,
        marginal: Marginal,
    ) -> Result<Self, PredictorError> {
        if case == Case::III {
            return Err(PredictorError::CaseMismatch(
                "case III needs a trivariate distortion".into(),
            ));
        }
        Ok(Self {
            case,
            model: Model::Pair(distortion),
            marginal,
        })
    }

    /// Case III predictor from a `(T₁, T₂, T)` distortion.
    pub fn triple(distortion: TrivariateDistortion, marginal: Marginal) -> Self {
        Self {
            case: Case::III,
            model: Model::Triple(distortion),
            marginal,
        }
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    fn prepare(&self, given: Given) -> Result<Prepared, PredictorError> {
        match (&self.model, given) {
            (Model::Pair(d), Given::One(t)) => {
                let u = self.marginal.sf(t)?;
                let denom = d.first().derivative(u);
                if !(denom > 0.0 && denom.is_finite()) {
                    return Err(PredictorError::DegenerateDenominator(given));
                }
                let offset = d.d1_at_zero_plus(u);
                let alpha = (d.d1(u, u) - offset) / denom;
                Ok(Prepared::Pair {
                    t,
                    u,
                    offset,
                    denom,
                    alpha,
                })
            }
            (Model::Triple(d), Given::Two(t1, t2)) => {
                if t2 < t1 {
                    return Err(PredictorError::InvalidConditioning(format!(
                        "second failure time {t2} precedes the first {t1}"
                    )));
                }
                let u1 = self.marginal.sf(t1)?;
                let v2 = self.marginal.sf(t2)?;
                let denom = d.boundary().d12(u1, v2);
                if !(denom > 0.0 && denom.is_finite()) {
                    return Err(PredictorError::DegenerateDenominator(given));
                }
                let offset = d.d12_at_zero_plus(u1, v2);
                Ok(Prepared::Triple {
                    t2,
                    u1,
                    v2,
                    offset,
                    denom,
                })
            }
            (Model::Pair(_), Given::Two(..)) => Err(PredictorError::CaseMismatch(format!(
                "case {} conditions on one failure time",
                self.case.name()
            ))),
            (Model::Triple(_), Given::One(_)) => Err(PredictorError::CaseMismatch(
                "case III conditions on two failure times".into(),
            )),
        }
    }

    /// Survival at level `z ≤ level()`, before the II.a rescaling.
    fn raw(&self, p: &Prepared, z: f64) -> f64 {
        match (&self.model, *p) {
            (
                Model::Pair(d),
                Prepared::Pair {
                    u, offset, denom, ..
                },
            ) => (d.d1(u, z) - offset) / denom,
            (
                Model::Triple(d),
                Prepared::Triple {
                    u1,
                    v2,
                    offset,
                    denom,
                    ..
                },
            ) => {
                // z ≤ v2 ≤ u1 keeps the point in the ordered region
                (d.d12(u1, v2, z).unwrap_or(f64::NAN) - offset) / denom
            }
            _ => unreachable!("prepare pairs models with conditioning"),
        }
    }

    /// Survival in `z`-space for `z ∈ [0, level]`.
    fn survival_z(&self, p: &Prepared, z: f64) -> f64 {
        let s = match (self.case, *p) {
            (Case::IIa, Prepared::Pair { alpha, .. }) => self.raw(p, z) / alpha,
            _ => self.raw(p, z),
        };
        s.clamp(0.0, 1.0)
    }

    fn check_alpha(&self, p: &Prepared) -> Result<(), PredictorError> {
        if let (Case::IIa, Prepared::Pair { t, alpha, .. }) = (self.case, *p) {
            if alpha <= f64::EPSILON {
                return Err(PredictorError::ZeroAlpha(t));
            }
        }
        Ok(())
    }

    /// `Pr(T > y | given)`.
    ///
    /// Equal to 1 for `y` before the last conditioning time, except that in
    /// case II.b the value at `y = t` is `α(t)` (right-continuous at the atom).
    pub fn survival(&self, given: Given, y: f64) -> Result<f64, PredictorError> {
        let p = self.prepare(given)?;
        self.check_alpha(&p)?;
        let t = p.time();
        if y < t || (y == t && self.case != Case::IIb) {
            return Ok(1.0);
        }
        let z = self.marginal.sf(y)?;
        Ok(self.survival_z(&p, z))
    }

    /// `α(t) = Pr(T > t | T₁ = t)`.
    pub fn alpha(&self, t: f64) -> Result<f64, PredictorError> {
        match self.prepare(Given::One(t))? {
            Prepared::Pair { alpha, .. } => Ok(alpha.clamp(0.0, 1.0)),
            Prepared::Triple { .. } => unreachable!(),
        }
    }

    fn shape(&self, p: &Prepared) -> Option<Shape> {
        let level = p.level();
        let probes = [0.13, 0.37, 0.61, 0.89].map(|f| f * level);
        let fits = |shape: Shape| {
            probes
                .iter()
                .all(|&z| (self.survival_z(p, z) - shape.eval(level, z)).abs() <= 1e-12)
        };
        let candidates: &[Shape] = match self.case {
            Case::I => &[Shape::FirstOfParallelSeries],
            Case::IIa => &[Shape::Quadratic(1.0)],
            Case::IIb => &[Shape::Quadratic(2.0 / 3.0)],
            Case::III => {
                // fit the tilt from one probe, then confirm on the others
                let z = probes[0];
                let s = self.survival_z(p, z);
                let lhs = s * level / z - 1.0;
                let slope = (1.0 - z) - s * level * (1.0 - level) / z;
                if slope.abs() < 1e-8 {
                    return None;
                }
                let c = lhs / slope;
                return fits(Shape::Tilted(c)).then_some(Shape::Tilted(c));
            }
        };
        candidates.iter().copied().find(|&s| fits(s))
    }

    /// The `w`-quantile, `inf{y ≥ t : S(y) ≤ w}`.
    pub fn quantile(&self, given: Given, w: f64) -> Result<f64, PredictorError> {
        self.quantile_with(given, w, Inversion::Auto)
    }

    pub fn quantile_with(
        &self,
        given: Given,
        w: f64,
        how: Inversion,
    ) -> Result<f64, PredictorError> {
        if !(w > 0.0 && w < 1.0) {
            return Err(PredictorError::InvalidLevel(w));
        }
        let p = self.prepare(given)?;
        self.check_alpha(&p)?;
        self.quantile_prepared(&p, w, how)
    }

    fn quantile_prepared(
        &self,
        p: &Prepared,
        w: f64,
        how: Inversion,
    ) -> Result<f64, PredictorError> {
        let level = p.level();
        if let (Case::IIb, Prepared::Pair { t, alpha, .. }) = (self.case, *p) {
            if alpha <= w {
                return Ok(t);
            }
        }
        let z = match (how, self.shape(p)) {
            (Inversion::Auto, Some(shape)) => shape.invert(level, w),
            _ => {
                let opts = BisectOptions {
                    abs_tol: 1e-15 * level,
                    rel_tol: 0.0,
                    max_iter: 200,
                };
                let top = self.survival_z(p, level);
                if top <= w {
                    // flat at or below w from the start; only reachable through rounding
                    return Ok(p.time());
                }
                let (lo, hi) = bisect(|z| self.survival_z(p, z) <= w, 0.0, level, opts)
                    .map_err(|_| PredictorError::NotInvertible { w })?;
                0.5 * (lo + hi)
            }
        };
        if z.is_nan() || z <= 0.0 {
            return Err(PredictorError::NotInvertible { w });
        }
        Ok(self.marginal.inv_sf(z.min(level))?.max(p.time()))
    }

    /// Median regression value `m = G⁻¹(0.5)`.
    pub fn median(&self, given: Given) -> Result<f64, PredictorError> {
        self.quantile(given, 0.5)
    }

    /// Mean regression value `E(T | given) = t + ∫_t^∞ S(y) dy`.
    pub fn mean(&self, given: Given) -> Result<f64, PredictorError> {
        let p = self.prepare(given)?;
        self.check_alpha(&p)?;
        let level = p.level();
        if level <= TAIL_CUTOFF {
            return Ok(p.time());
        }
        let m = self.marginal;
        let tail = integrate(
            |z| self.survival_z(&p, z) / m.pdf_at_level(z),
            TAIL_CUTOFF,
            level,
            QuadOptions::default(),
        )?;
        Ok(p.time() + tail)
    }

    pub fn band(&self, given: Given, band: PredictionBand) -> Result<Interval, PredictorError> {
        let p = self.prepare(given)?;
        self.check_alpha(&p)?;
        match band.kind {
            BandKind::Centered => Ok(Interval {
                lower: self.quantile_prepared(&p, 0.5 * (1.0 + band.level), Inversion::Auto)?,
                upper: self.quantile_prepared(&p, 0.5 * (1.0 - band.level), Inversion::Auto)?,
            }),
            BandKind::Bottom => Ok(Interval {
                lower: p.time(),
                upper: self.quantile_prepared(&p, 1.0 - band.level, Inversion::Auto)?,
            }),
        }
    }

    /// Median, mean and bands at each conditioning point, evaluated in
    /// parallel; the output order follows `points`.
    pub fn curves(
        &self,
        points: &[Given],
        bands: &[PredictionBand],
    ) -> Result<Vec<CurvePoint>, PredictorError> {
        points
            .par_iter()
            .map(|&given| {
                Ok(CurvePoint {
                    given,
                    median: self.median(given)?,
                    mean: self.mean(given)?,
                    bands: bands
                        .iter()
                        .map(|&b| self.band(given, b))
                        .collect::<Result<_, _>>()?,
                })
            })
            .collect()
    }
}

/// One row of [`ConditionalPredictor::curves`].
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub given: Given,
    pub median: f64,
    pub mean: f64,
    pub bands: Vec<Interval>,
}

/// `E(T) = ∫₀^∞ q̄(F̄(t)) dt`.
pub fn mean_lifetime(q: &UnivariateDistortion, marginal: &Marginal) -> Result<f64, PredictorError> {
    Ok(integrate(
        |z| q.eval(z) / marginal.pdf_at_level(z),
        TAIL_CUTOFF,
        1.0,
        QuadOptions::default(),
    )?)
}

/// Expected system lifetime for a structure, copula and marginal.
pub fn system_mean(
    s: &SystemStructure,
    c: Arc<dyn Copula>,
    m: &Marginal,
) -> Result<f64, PredictorError> {
    mean_lifetime(&build_univariate(s, c)?, m)
}

fn check_order(n: usize, r: usize, s: usize) -> Result<(), PredictorError> {
    if r < 1 || r >= s || s > n {
        return Err(PredictorError::InvalidOrder { n, r, s });
    }
    Ok(())
}

/// `w`-quantile of Beta(n−s+1, s−r): the factor `β` with
/// `Pr(X_{s:n} > F̄⁻¹(β F̄(t)) | X_{r:n} = t) = w` for IID components.
pub fn kofn_quantile_factor(n: usize, r: usize, s: usize, w: f64) -> Result<f64, PredictorError> {
    check_order(n, r, s)?;
    if !(w > 0.0 && w < 1.0) {
        return Err(PredictorError::InvalidLevel(w));
    }
    Ok(beta_quantile((n - s + 1) as f64, (s - r) as f64, w, 1e-13)?)
}

/// `Pr(X_{s:n} > y | X_{r:n} = t)` for IID components: the survival of the
/// (s−r)-th order statistic of n−r lifetimes at ratio `ρ = F̄(y)/F̄(t)`.
pub fn kofn_survival(
    n: usize,
    r: usize,
    s: usize,
    t: f64,
    y: f64,
    m: &Marginal,
) -> Result<f64, PredictorError> {
    check_order(n, r, s)?;
    if y < t {
        return Err(PredictorError::InvalidConditioning(format!(
            "y = {y} precedes t = {t}"
        )));
    }
    let base = m.sf(t)?;
    if base <= 0.0 {
        return Err(PredictorError::DegenerateDenominator(Given::One(t)));
    }
    let rho = m.sf(y)? / base;
    let k = n - r;
    let mut binom = 1.0;
    let mut acc = 0.0;
    for j in 0..(s - r) {
        acc += binom * (1.0 - rho).powi(j as i32) * rho.powi((k - j) as i32);
        binom *= (k - j) as f64 / (j + 1) as f64;
    }
    Ok(acc.clamp(0.0, 1.0))
}
