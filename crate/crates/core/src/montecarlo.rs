//! Sampling from survival copulas, simulated system lifetimes, empirical
//! checks of conditional laws, and plug-in coverage experiments.
//!
//! `V_i = F̄(X_i)` has distribution function `Ĉ`, so components are drawn by
//! sequential conditional inversion of `Ĉ` in uniform space and mapped back
//! with `F̄⁻¹`. Every chunk of rows and every replication owns its own
//! ChaCha20 stream, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::copula::Copula;
use crate::distortion::{build_bivariate, OrderingMode};
use crate::marginal::{Marginal, MarginalError};
use crate::numeric::{bisect, BisectOptions, CompensatedSum};
use crate::predictor::{Case, ConditionalPredictor, Given, PredictorError};
use crate::structure::{StructureError, SystemStructure};
use crate::SurvivalCopula;

use std::sync::Arc;

/// Rows drawn from one random stream in [`simulate`].
pub const CHUNK_ROWS: usize = 4096;

/// Minimum number of rows in a conditioning bin.
pub const MIN_BIN_ROWS: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("no sampler for a {0}-dimensional copula without a closed-form conditional inverse")]
    UnsupportedCopula(usize),
    #[error("structure has {structure} components but the copula has dimension {copula}")]
    DimensionMismatch { structure: usize, copula: usize },
    #[error("sample size must be positive")]
    EmptySample,
    #[error("bin holds {found} rows, at least {required} are needed")]
    InsufficientBinCount { found: usize, required: usize },
    #[error("sample has no second early lifetime")]
    MissingSecondLifetime,
    #[error("estimation sample size k must be at least 1")]
    InvalidK,
    #[error("need at least 2 replications, got {0}")]
    InvalidReplications(usize),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Marginal(#[from] MarginalError),
}

/// How conditional laws are inverted when sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerMethod {
    /// Closed-form conditional inverse where the copula provides one.
    #[default]
    Analytic,
    /// Bisection on the ratio of mixed partials (dimension ≤ 4).
    Numeric,
}

/// Seeded stream: `seed` fixes the key, `stream` selects an independent sequence.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform in `(0, 1]`.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn numeric_conditional_inverse(
    c: &dyn Copula,
    prefix: &[f64],
    p: f64,
) -> Result<f64, MonteCarloError> {
    let k = prefix.len();
    if k == 0 {
        return Ok(p);
    }
    if k > 3 {
        return Err(MonteCarloError::UnsupportedCopula(c.dim()));
    }
    let indices: Vec<usize> = (0..k).collect();
    let mut point = vec![1.0; c.dim()];
    point[..k].copy_from_slice(prefix);
    let den = c.mixed_partial(&indices, &point);
    if den.is_nan() || den <= 0.0 {
        return Ok(p);
    }
    let mut cdf = |v: f64| {
        point[k] = v;
        c.mixed_partial(&indices, &point) / den
    };
    if cdf(1.0) <= p {
        return Ok(1.0);
    }
    let opts = BisectOptions {
        abs_tol: 1e-12,
        rel_tol: 0.0,
        max_iter: 200,
    };
    let (lo, hi) = bisect(|v| cdf(v) <= p, 0.0, 1.0, opts)
        .map_err(|_| MonteCarloError::UnsupportedCopula(c.dim()))?;
    Ok(0.5 * (lo + hi))
}

/// One draw of `V` with distribution function `Ĉ`, written into `out`.
pub fn sample_uniforms<R: Rng + ?Sized>(
    c: &dyn Copula,
    method: SamplerMethod,
    rng: &mut R,
    out: &mut [f64],
) -> Result<(), MonteCarloError> {
    let n = c.dim();
    if out.len() != n {
        return Err(MonteCarloError::DimensionMismatch {
            structure: out.len(),
            copula: n,
        });
    }
    for k in 0..n {
        let p = open_uniform(rng);
        let (prefix, rest) = out.split_at_mut(k);
        let analytic = match method {
            SamplerMethod::Analytic => c.conditional_inverse(prefix, p),
            SamplerMethod::Numeric => None,
        };
        rest[0] = match analytic {
            Some(v) => v,
            None => numeric_conditional_inverse(c, prefix, p)?,
        };
    }
    Ok(())
}

/// One draw of the component lifetimes.
pub fn sample_components<R: Rng + ?Sized>(
    c: &dyn Copula,
    m: &Marginal,
    method: SamplerMethod,
    rng: &mut R,
    out: &mut [f64],
) -> Result<(), MonteCarloError> {
    sample_uniforms(c, method, rng, out)?;
    for x in out.iter_mut() {
        *x = m.inv_sf(x.max(f64::MIN_POSITIVE))?;
    }
    Ok(())
}

/// Early and final structures whose lifetimes are recorded per row.
#[derive(Debug, Clone)]
pub struct Roles {
    pub t1: SystemStructure,
    pub t2: Option<SystemStructure>,
    pub t: SystemStructure,
}

/// Simulated component lifetimes with the system lifetimes they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    n: usize,
    seed: u64,
    xs: Vec<f64>,
    t1: Vec<f64>,
    t2: Option<Vec<f64>>,
    t: Vec<f64>,
}

/// Borrowed view of one simulated row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow<'a> {
    pub x: &'a [f64],
    pub t1: f64,
    pub t2: Option<f64>,
    pub t: f64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn t1(&self) -> &[f64] {
        &self.t1
    }

    pub fn t2(&self) -> Option<&[f64]> {
        self.t2.as_deref()
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn row(&self, i: usize) -> SampleRow<'_> {
        SampleRow {
            x: &self.xs[i * self.n..(i + 1) * self.n],
            t1: self.t1[i],
            t2: self.t2.as_ref().map(|v| v[i]),
            t: self.t[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SampleRow<'_>> {
        (0..self.len()).map(|i| self.row(i))
    }

    /// Column `i` (0-based) of the component lifetimes.
    pub fn component(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.xs.iter().skip(i).step_by(self.n).copied()
    }
}

/// Draws `size` systems and records `T₁`, optionally `T₂`, and `T`.
pub fn simulate(
    roles: &Roles,
    c: &dyn Copula,
    m: &Marginal,
    size: usize,
    seed: u64,
    method: SamplerMethod,
) -> Result<SampleSet, MonteCarloError> {
    let n = c.dim();
    let structures = std::iter::once(&roles.t1)
        .chain(roles.t2.as_ref())
        .chain(std::iter::once(&roles.t));
    for s in structures {
        if s.n() != n {
            return Err(MonteCarloError::DimensionMismatch {
                structure: s.n(),
                copula: n,
            });
        }
    }
    if size == 0 {
        return Err(MonteCarloError::EmptySample);
    }
    let mut xs = vec![0.0; size * n];
    xs.par_chunks_mut(CHUNK_ROWS * n)
        .enumerate()
        .try_for_each(|(chunk, block)| {
            let mut rng = stream_rng(seed, chunk as u64);
            block
                .chunks_mut(n)
                .try_for_each(|row| sample_components(c, m, method, &mut rng, row))
        })?;
    let life = |s: &SystemStructure| -> Vec<f64> {
        xs.par_chunks(n).map(|r| s.lifetime_unchecked(r)).collect()
    };
    Ok(SampleSet {
        n,
        seed,
        t1: life(&roles.t1),
        t2: roles.t2.as_ref().map(life),
        t: life(&roles.t),
        xs,
    })
}

/// Rows contradicting the assumed ordering of `T₁` and `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingReport {
    pub rows: usize,
    pub violations: usize,
}

impl OrderingReport {
    pub fn fraction(&self) -> f64 {
        self.violations as f64 / self.rows.max(1) as f64
    }
}

/// Counts rows with `T₁ ≥ T` (strict) or `T₁ > T` (weak).
pub fn verify_ordering(sample: &SampleSet, mode: OrderingMode) -> OrderingReport {
    let violations = sample
        .t1
        .iter()
        .zip(&sample.t)
        .filter(|&(&a, &b)| match mode {
            OrderingMode::Strict => a >= b,
            OrderingMode::Weak => a > b,
        })
        .count();
    OrderingReport {
        rows: sample.len(),
        violations,
    }
}

/// Conditioning window for [`empirical_conditional_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bin {
    /// `T₁ ∈ [lo, hi]`.
    Single { lo: f64, hi: f64 },
    /// `T₁ ∈ [t1.0, t1.1]` and `T₂ ∈ [t2.0, t2.1]`.
    Pair { t1: (f64, f64), t2: (f64, f64) },
}

impl Bin {
    fn center(&self) -> Given {
        match *self {
            Bin::Single { lo, hi } => Given::One(0.5 * (lo + hi)),
            Bin::Pair { t1, t2 } => Given::Two(0.5 * (t1.0 + t1.1), 0.5 * (t2.0 + t2.1)),
        }
    }
}

/// Largest gap between the empirical survival of `T` over rows in `bin` and
/// the predictor's survival at the bin centre, over `y_grid`.
///
/// For case II.a only rows with `T > T₁` enter, matching its conditioning.
pub fn empirical_conditional_check(
    sample: &SampleSet,
    predictor: &ConditionalPredictor,
    bin: Bin,
    y_grid: &[f64],
) -> Result<f64, MonteCarloError> {
    let inside = |a: f64, (lo, hi): (f64, f64)| lo <= a && a <= hi;
    let mut ts = Vec::new();
    for r in sample.rows() {
        let hit = match bin {
            Bin::Single { lo, hi } => inside(r.t1, (lo, hi)),
            Bin::Pair { t1, t2 } => {
                let second = r.t2.ok_or(MonteCarloError::MissingSecondLifetime)?;
                inside(r.t1, t1) && inside(second, t2)
            }
        };
        if hit && (predictor.case() != Case::IIa || r.t > r.t1) {
            ts.push(r.t);
        }
    }
    if ts.len() < MIN_BIN_ROWS {
        return Err(MonteCarloError::InsufficientBinCount {
            found: ts.len(),
            required: MIN_BIN_ROWS,
        });
    }
    ts.sort_by(f64::total_cmp);
    let center = bin.center();
    let mut worst: f64 = 0.0;
    for &y in y_grid {
        let above = ts.len() - ts.partition_point(|&x| x <= y);
        let empirical = above as f64 / ts.len() as f64;
        worst = worst.max((empirical - predictor.survival(center, y)?).abs());
    }
    Ok(worst)
}

/// Which systems score the plug-in intervals in a coverage replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// The same `k` systems used to estimate `μ`.
    Same,
    /// `eval_draws` new systems per replication.
    Fresh { eval_draws: usize },
}

/// Plug-in coverage setup: `T₁` is the first failure of `n` independent
/// exponential components with mean `μ`, so `μ̂ = n · mean(T₁)`.
#[derive(Debug, Clone)]
pub struct CoverageSetup {
    pub structure: SystemStructure,
    pub case: Case,
    pub mu: f64,
}

impl Default for CoverageSetup {
    fn default() -> Self {
        Self {
            structure: SystemStructure::new(3, [vec![1], vec![2, 3]]).expect("valid structure"),
            case: Case::I,
            mu: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub k: usize,
    pub replications: usize,
    pub coverage50: f64,
    pub se50: f64,
    pub coverage90: f64,
    pub se90: f64,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .value();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

/// Average coverage of the centered 50% and 90% intervals built with `μ̂`
/// (or the true `μ` when `known_mu`), over `replications` independent runs.
pub fn coverage_experiment(
    setup: &CoverageSetup,
    k: usize,
    replications: usize,
    protocol: Protocol,
    known_mu: bool,
    seed: u64,
) -> Result<CoverageReport, MonteCarloError> {
    if k == 0 {
        return Err(MonteCarloError::InvalidK);
    }
    if replications < 2 {
        return Err(MonteCarloError::InvalidReplications(replications));
    }
    if let Protocol::Fresh { eval_draws: 0 } = protocol {
        return Err(MonteCarloError::EmptySample);
    }
    let n = setup.structure.n();
    let series = SystemStructure::series(n)?;
    let copula = SurvivalCopula::product(n).expect("positive dimension");
    let mode = match setup.case {
        Case::I => OrderingMode::Strict,
        _ => OrderingMode::Weak,
    };
    // Exponential quantiles are t + μ·offset; offsets are read at μ = 1, t = 0.
    let unit = Marginal::exponential(1.0)?;
    let d = build_bivariate(&series, &setup.structure, Arc::new(copula.clone()), mode)
        .map_err(PredictorError::from)?;
    let predictor = ConditionalPredictor::pair(setup.case, d, unit)?;
    let offset = |w: f64| predictor.quantile(Given::One(0.0), w);
    let o50 = (offset(0.75)?, offset(0.25)?);
    let o90 = (offset(0.95)?, offset(0.05)?);
    let truth = Marginal::exponential(setup.mu)?;

    let per_rep: Vec<(f64, f64)> = (0..replications)
        .into_par_iter()
        .map(|rep| -> Result<(f64, f64), MonteCarloError> {
            let mut rng = stream_rng(seed, rep as u64);
            let mut x = vec![0.0; n];
            let mut draw = |rng: &mut ChaCha20Rng| -> Result<(f64, f64), MonteCarloError> {
                sample_components(&copula, &truth, SamplerMethod::Analytic, rng, &mut x)?;
                Ok((
                    series.lifetime_unchecked(&x),
                    setup.structure.lifetime_unchecked(&x),
                ))
            };
            let fit: Vec<(f64, f64)> = (0..k).map(|_| draw(&mut rng)).collect::<Result<_, _>>()?;
            let mu_hat = if known_mu {
                setup.mu
            } else {
                n as f64 * fit.iter().map(|p| p.0).collect::<CompensatedSum>().value() / k as f64
            };
            let scored = match protocol {
                Protocol::Same => fit,
                Protocol::Fresh { eval_draws } => (0..eval_draws)
                    .map(|_| draw(&mut rng))
                    .collect::<Result<_, _>>()?,
            };
            let hit = |(t1, t): (f64, f64), (a, b): (f64, f64)| {
                (t1 + mu_hat * a <= t && t <= t1 + mu_hat * b) as u32
            };
            let c50 = scored.iter().map(|&p| hit(p, o50)).sum::<u32>() as f64 / scored.len() as f64;
            let c90 = scored.iter().map(|&p| hit(p, o90)).sum::<u32>() as f64 / scored.len() as f64;
            Ok((c50, c90))
        })
        .collect::<Result<_, _>>()?;
    let (coverage50, se50) = mean_and_se(&per_rep.iter().map(|p| p.0).collect::<Vec<_>>());
    let (coverage90, se90) = mean_and_se(&per_rep.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(CoverageReport {
        k,
        replications,
        coverage50,
        se50,
        coverage90,
        se90,
    })
}
