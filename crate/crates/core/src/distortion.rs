//! Distortion functions built from minimal path sets and a survival copula.
//!
//! With identically distributed components (`F̄` common), the joint survival
//! of system lifetimes is a fixed function of `F̄` evaluated at each time:
//!
//! * univariate: `Pr(T > t) = q̄(F̄(t))`;
//! * bivariate: `Pr(T₁ > x, T > y) = D̂(F̄(x), F̄(y))`;
//! * trivariate: `Pr(T₁ > t₁, T₂ > t₂, T > t) = D̂(F̄(t₁), F̄(t₂), F̄(t))`.
//!
//! Each is expanded by inclusion–exclusion over the path sets of every
//! structure involved. A term is a copula slice: for `x ≤ y` the event
//! `{X_{P*} > x, X_P > y}` only constrains components of `P* − P` at `x`,
//! so coordinates in `P` read `v = F̄(y)`, those in `P* − P` read `u = F̄(x)`,
//! and the rest are 1. Partial derivatives follow term by term by the chain
//! rule over every coordinate carrying the differentiated variable.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::copula::{Copula, Slot};
use crate::structure::{SignedTermList, SystemStructure};

/// Cap on the product of expansion sizes in one build.
pub const MAX_TERMS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistortionError {
    #[error("structure has {structure} components but the copula has dimension {copula}")]
    DimensionMismatch { structure: usize, copula: usize },
    #[error("expansion would need {0} terms (limit {MAX_TERMS})")]
    TooManyTerms(usize),
    #[error("point ({u}, {v}, {w}) is outside the region where this distortion is defined")]
    RegionError { u: f64, v: f64, w: f64 },
}

/// Whether the early lifetime strictly precedes the system lifetime (`T₁ < T`
/// almost surely) or may coincide with it (`T₁ ≤ T`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingMode {
    Strict,
    Weak,
}

/// Side of the `u = v` kink used when differentiating on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `v ≤ u`, i.e. `x ≤ y`.
    Below,
    /// `u < v`, i.e. `y < x`, where `D̂(u, v) = q̄_{T₁}(u)`.
    Above,
}

/// `coeff · Ĉ(slots evaluated at (u, v, w))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceTerm {
    pub coeff: i64,
    pub slots: Vec<Slot>,
}

/// A merged list of signed copula slices over a shared copula.
#[derive(Debug, Clone)]
pub struct SliceSum {
    copula: Arc<dyn Copula>,
    terms: Vec<SliceTerm>,
}

impl SliceSum {
    fn from_map(copula: Arc<dyn Copula>, merged: BTreeMap<Vec<Slot>, i64>) -> Self {
        let terms = merged
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|(slots, coeff)| SliceTerm { coeff, slots })
            .collect();
        Self { copula, terms }
    }

    pub fn terms(&self) -> &[SliceTerm] {
        &self.terms
    }

    fn point(slots: &[Slot], u: f64, v: f64, w: f64, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(slots.iter().map(|s| match s {
            Slot::U => u,
            Slot::V => v,
            Slot::W => w,
            Slot::One => 1.0,
        }));
    }

    pub fn eval(&self, u: f64, v: f64, w: f64) -> f64 {
        let mut buf = Vec::with_capacity(self.copula.dim());
        let mut acc = 0.0;
        for t in &self.terms {
            Self::point(&t.slots, u, v, w, &mut buf);
            acc += t.coeff as f64 * self.copula.value(&buf);
        }
        acc
    }

    /// Mixed partial with respect to the distinct variables in `vars`.
    pub fn partial(&self, vars: &[Slot], u: f64, v: f64, w: f64) -> f64 {
        let mut buf = Vec::with_capacity(self.copula.dim());
        let mut idx = Vec::with_capacity(vars.len());
        let mut acc = 0.0;
        for t in &self.terms {
            Self::point(&t.slots, u, v, w, &mut buf);
            let mut term = 0.0;
            self.chain_rule(&t.slots, vars, &buf, &mut idx, &mut term);
            acc += t.coeff as f64 * term;
        }
        acc
    }

    fn chain_rule(
        &self,
        slots: &[Slot],
        vars: &[Slot],
        point: &[f64],
        idx: &mut Vec<usize>,
        acc: &mut f64,
    ) {
        match vars.split_first() {
            None => *acc += self.copula.mixed_partial(idx, point),
            Some((&var, rest)) => {
                for (i, &s) in slots.iter().enumerate() {
                    if s == var {
                        idx.push(i);
                        self.chain_rule(slots, rest, point, idx, acc);
                        idx.pop();
                    }
                }
            }
        }
    }
}

fn check_dims(
    structures: &[&SystemStructure],
    copula: &dyn Copula,
) -> Result<usize, DistortionError> {
    let n = copula.dim();
    for s in structures {
        if s.n() != n {
            return Err(DistortionError::DimensionMismatch {
                structure: s.n(),
                copula: n,
            });
        }
    }
    Ok(n)
}

fn check_size(lists: &[&SignedTermList]) -> Result<(), DistortionError> {
    let total = lists
        .iter()
        .try_fold(1usize, |acc, l| acc.checked_mul(l.len().max(1)))
        .unwrap_or(usize::MAX);
    if total > MAX_TERMS {
        return Err(DistortionError::TooManyTerms(total));
    }
    Ok(())
}

/// `q̄(u)` with `Pr(T > t) = q̄(F̄(t))`.
#[derive(Debug, Clone)]
pub struct UnivariateDistortion {
    sum: SliceSum,
}

impl UnivariateDistortion {
    pub fn eval(&self, u: f64) -> f64 {
        self.sum.eval(u, 0.0, 0.0)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        self.sum.partial(&[Slot::U], u, 0.0, 0.0)
    }

    pub fn terms(&self) -> &[SliceTerm] {
        self.sum.terms()
    }
}

/// `q̄(u) = Σ sign · Ĉ(u on the union set, 1 elsewhere)`.
pub fn build_univariate(
    s: &SystemStructure,
    copula: Arc<dyn Copula>,
) -> Result<UnivariateDistortion, DistortionError> {
    let n = check_dims(&[s], copula.as_ref())?;
    let mut merged = BTreeMap::new();
    for t in s.inclusion_exclusion().iter() {
        let slots = (0..n)
            .map(|i| {
                if t.set.contains_zero_based(i) {
                    Slot::U
                } else {
                    Slot::One
                }
            })
            .collect();
        *merged.entry(slots).or_insert(0) += t.coeff;
    }
    Ok(UnivariateDistortion {
        sum: SliceSum::from_map(copula, merged),
    })
}

/// Joint survival distortion of `(T₁, T)`.
///
/// On `v ≤ u` it is the double inclusion–exclusion sum; on `u < v` it is
/// `q̄_{T₁}(u)` because `T₁ ≤ T`.
#[derive(Debug, Clone)]
pub struct BivariateDistortion {
    below: SliceSum,
    first: UnivariateDistortion,
    mode: OrderingMode,
}

impl BivariateDistortion {
    pub fn mode(&self) -> OrderingMode {
        self.mode
    }

    /// Distortion of the early lifetime `T₁`.
    pub fn first(&self) -> &UnivariateDistortion {
        &self.first
    }

    /// Signed slices of the `v ≤ u` branch.
    pub fn terms(&self) -> &[SliceTerm] {
        self.below.terms()
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        if v <= u {
            self.below.eval(u, v, 0.0)
        } else {
            self.first.eval(u)
        }
    }

    /// `∂₁D̂(u, v)`; on the diagonal the `v ≤ u` branch is used.
    pub fn d1(&self, u: f64, v: f64) -> f64 {
        if v <= u {
            self.below.partial(&[Slot::U], u, v, 0.0)
        } else {
            self.first.derivative(u)
        }
    }

    /// `∂₁D̂(u, v)` on an explicit side of the kink.
    pub fn d1_sided(&self, u: f64, v: f64, side: Side) -> Result<f64, DistortionError> {
        match side {
            Side::Below if v <= u => Ok(self.below.partial(&[Slot::U], u, v, 0.0)),
            Side::Above if u <= v => Ok(self.first.derivative(u)),
            _ => Err(DistortionError::RegionError { u, v, w: f64::NAN }),
        }
    }

    /// `lim_{v→0⁺} ∂₁D̂(u, v)`, taken term by term.
    pub fn d1_at_zero_plus(&self, u: f64) -> f64 {
        self.below.partial(&[Slot::U], u, 0.0, 0.0)
    }

    /// `∂₂D̂(u, v)`.
    pub fn d2(&self, u: f64, v: f64) -> f64 {
        if v <= u {
            self.below.partial(&[Slot::V], u, v, 0.0)
        } else {
            0.0
        }
    }

    /// `∂₁₂D̂(u, v)`; zero on `u < v`.
    pub fn d12(&self, u: f64, v: f64) -> f64 {
        if v <= u {
            self.below.partial(&[Slot::U, Slot::V], u, v, 0.0)
        } else {
            0.0
        }
    }
}

/// Builds `D̂` for `(T₁, T)`.
///
/// The ordering `T₁ < T` (strict) or `T₁ ≤ T` (weak) is taken on trust; it
/// can be checked on simulated data with
/// [`verify_ordering`](crate::montecarlo::verify_ordering).
pub fn build_bivariate(
    t1: &SystemStructure,
    t: &SystemStructure,
    copula: Arc<dyn Copula>,
    mode: OrderingMode,
) -> Result<BivariateDistortion, DistortionError> {
    let n = check_dims(&[t1, t], copula.as_ref())?;
    let early = t1.inclusion_exclusion();
    let late = t.inclusion_exclusion();
    check_size(&[&early, &late])?;
    let mut merged = BTreeMap::new();
    for p in late.iter() {
        for q in early.iter() {
            let slots = (0..n)
                .map(|i| {
                    if p.set.contains_zero_based(i) {
                        Slot::V
                    } else if q.set.contains_zero_based(i) {
                        Slot::U
                    } else {
                        Slot::One
                    }
                })
                .collect();
            *merged.entry(slots).or_insert(0) += p.coeff * q.coeff;
        }
    }
    Ok(BivariateDistortion {
        below: SliceSum::from_map(copula.clone(), merged),
        first: build_univariate(t1, copula)?,
        mode,
    })
}

/// Joint survival distortion of `(T₁, T₂, T)` with `T₁ < T₂ < T`.
///
/// Defined on the ordered region `u ≥ v ≥ w` (times `t₁ ≤ t₂ ≤ t`) and on the
/// face `w = 1`, where it is the bivariate distortion of `(T₁, T₂)`.
#[derive(Debug, Clone)]
pub struct TrivariateDistortion {
    ordered: SliceSum,
    boundary: BivariateDistortion,
}

impl TrivariateDistortion {
    pub fn terms(&self) -> &[SliceTerm] {
        self.ordered.terms()
    }

    /// `D̂(u, v, 1)`, the distortion of `(T₁, T₂)`.
    pub fn boundary(&self) -> &BivariateDistortion {
        &self.boundary
    }

    fn in_ordered(u: f64, v: f64, w: f64) -> bool {
        u >= v && v >= w
    }

    pub fn eval(&self, u: f64, v: f64, w: f64) -> Result<f64, DistortionError> {
        if w == 1.0 {
            Ok(self.boundary.eval(u, v))
        } else if Self::in_ordered(u, v, w) {
            Ok(self.ordered.eval(u, v, w))
        } else {
            Err(DistortionError::RegionError { u, v, w })
        }
    }

    /// `∂₁₂D̂(u, v, w)`.
    pub fn d12(&self, u: f64, v: f64, w: f64) -> Result<f64, DistortionError> {
        if w == 1.0 {
            Ok(self.boundary.d12(u, v))
        } else if Self::in_ordered(u, v, w) {
            Ok(self.ordered.partial(&[Slot::U, Slot::V], u, v, w))
        } else {
            Err(DistortionError::RegionError { u, v, w })
        }
    }

    /// `∂₁₂₃D̂(u, v, w)` on the ordered region.
    pub fn d123(&self, u: f64, v: f64, w: f64) -> Result<f64, DistortionError> {
        if Self::in_ordered(u, v, w) {
            Ok(self.ordered.partial(&[Slot::U, Slot::V, Slot::W], u, v, w))
        } else {
            Err(DistortionError::RegionError { u, v, w })
        }
    }

    /// `lim_{w→0⁺} ∂₁₂D̂(u, v, w)`, term by term.
    pub fn d12_at_zero_plus(&self, u: f64, v: f64) -> f64 {
        self.ordered.partial(&[Slot::U, Slot::V], u, v, 0.0)
    }
}

/// Builds `D̂` for `(T₁, T₂, T)` by triple inclusion–exclusion.
///
/// A coordinate reads `w` if it lies in the union drawn from `t`'s paths,
/// otherwise `v` if in the union from `t2`, otherwise `u` if in the union
/// from `t1`, otherwise 1.
pub fn build_trivariate(
    t1: &SystemStructure,
    t2: &SystemStructure,
    t: &SystemStructure,
    copula: Arc<dyn Copula>,
) -> Result<TrivariateDistortion, DistortionError> {
    let n = check_dims(&[t1, t2, t], copula.as_ref())?;
    let l1 = t1.inclusion_exclusion();
    let l2 = t2.inclusion_exclusion();
    let l3 = t.inclusion_exclusion();
    check_size(&[&l1, &l2, &l3])?;
    let mut merged = BTreeMap::new();
    for p in l3.iter() {
        for p2 in l2.iter() {
            for p1 in l1.iter() {
                let slots = (0..n)
                    .map(|i| {
                        if p.set.contains_zero_based(i) {
                            Slot::W
                        } else if p2.set.contains_zero_based(i) {
                            Slot::V
                        } else if p1.set.contains_zero_based(i) {
                            Slot::U
                        } else {
                            Slot::One
                        }
                    })
                    .collect();
                *merged.entry(slots).or_insert(0) += p.coeff * p2.coeff * p1.coeff;
            }
        }
    }
    Ok(TrivariateDistortion {
        ordered: SliceSum::from_map(copula.clone(), merged),
        boundary: build_bivariate(t1, t2, copula, OrderingMode::Strict)?,
    })
}
