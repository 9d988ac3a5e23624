//! Coherent system structures given by their minimal path sets.
//!
//! Component indices are 1-based at the API boundary (`1..=n`) and stored as
//! bitmasks internally. The system lifetime is
//! `T = max over paths P of min over j ∈ P of X_j`, and the inclusion–exclusion
//! expansion over the path sets turns the system survival into a signed sum
//! of series-system survivals.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Upper bound on the component count.
pub const MAX_COMPONENTS: usize = 24;
/// Upper bound on the number of minimal path sets (2^r expansion terms).
pub const MAX_PATHS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("structure has no path sets (or an empty path set)")]
    EmptyPaths,
    #[error("component index {index} is outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("path set {inner:?} is contained in path set {outer:?}")]
    NonMinimalPath {
        inner: Vec<usize>,
        outer: Vec<usize>,
    },
    #[error("component {0} appears in no path set")]
    UncoveredComponent(usize),
    #[error("expected {expected} component times, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("system too large: n = {n}, paths = {paths} (limits {MAX_COMPONENTS} components, {MAX_PATHS} paths)")]
    TooLarge { n: usize, paths: usize },
    #[error("invalid order-statistic system: {0}")]
    InvalidOrder(String),
}

/// A set of components stored as a bitmask (bit `i` = component `i + 1`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ComponentSet(u64);

impl ComponentSet {
    pub const EMPTY: ComponentSet = ComponentSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ComponentSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// Builds a set from 1-based indices.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        ComponentSet(
            indices
                .into_iter()
                .fold(0u64, |acc, i| acc | (1u64 << (i - 1))),
        )
    }

    /// Contains 1-based component `i`.
    pub fn contains(self, i: usize) -> bool {
        (1..=64).contains(&i) && self.0 & (1u64 << (i - 1)) != 0
    }

    pub fn contains_zero_based(self, i: usize) -> bool {
        self.0 & (1u64 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        ComponentSet(self.0 | other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ComponentSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// 1-based indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64)
            .filter(move |i| bits & (1u64 << i) != 0)
            .map(|i| i + 1)
    }
}

impl fmt::Debug for ComponentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.indices()).finish()
    }
}

/// One term of an inclusion–exclusion expansion: `coeff · Pr(X_set > t)`.
///
/// Coefficients are integers because identical unions are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedTerm {
    pub coeff: i64,
    pub set: ComponentSet,
}

/// Signed union terms, merged by set, zero coefficients dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SignedTermList {
    pub terms: Vec<SignedTerm>,
}

impl SignedTermList {
    pub fn iter(&self) -> impl Iterator<Item = &SignedTerm> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of all coefficients; always 1 for a nonempty structure.
    pub fn coefficient_sum(&self) -> i64 {
        self.terms.iter().map(|t| t.coeff).sum()
    }
}

/// A validated coherent system over `n` components.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SystemStructure {
    n: usize,
    paths: Vec<ComponentSet>,
}

impl fmt::Debug for SystemStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemStructure")
            .field("n", &self.n)
            .field("paths", &self.paths)
            .finish()
    }
}

impl SystemStructure {
    /// Validates and normalizes a structure from 1-based path sets.
    ///
    /// Indices inside each path are sorted and deduplicated and the paths are
    /// stored in canonical (sorted) order. Minimality and relevance violations
    /// are errors.
    pub fn new<P, I>(n: usize, paths: P) -> Result<Self, StructureError>
    where
        P: IntoIterator<Item = I>,
        I: IntoIterator<Item = usize>,
    {
        let mut sets = Vec::new();
        let mut raw_paths = Vec::new();
        for path in paths {
            let mut idx: Vec<usize> = path.into_iter().collect();
            idx.sort_unstable();
            idx.dedup();
            if idx.is_empty() {
                return Err(StructureError::EmptyPaths);
            }
            if let Some(&bad) = idx.iter().find(|&&i| i == 0 || i > n) {
                return Err(StructureError::IndexOutOfRange { index: bad, n });
            }
            raw_paths.push(idx);
        }
        if raw_paths.is_empty() || n == 0 {
            return Err(StructureError::EmptyPaths);
        }
        if n > MAX_COMPONENTS || raw_paths.len() > MAX_PATHS {
            return Err(StructureError::TooLarge {
                n,
                paths: raw_paths.len(),
            });
        }
        for idx in &raw_paths {
            sets.push(ComponentSet::from_indices(idx.iter().copied()));
        }
        for (i, &a) in sets.iter().enumerate() {
            for (j, &b) in sets.iter().enumerate() {
                if i != j && a.is_subset(b) {
                    return Err(StructureError::NonMinimalPath {
                        inner: a.indices().collect(),
                        outer: b.indices().collect(),
                    });
                }
            }
        }
        let covered = sets
            .iter()
            .fold(ComponentSet::EMPTY, |acc, &s| acc.union(s));
        if let Some(missing) = (1..=n).find(|&i| !covered.contains(i)) {
            return Err(StructureError::UncoveredComponent(missing));
        }
        sets.sort_by_key(|s| (s.len(), s.indices().collect::<Vec<_>>()));
        Ok(Self { n, paths: sets })
    }

    /// Series system: fails at the first component failure.
    pub fn series(n: usize) -> Result<Self, StructureError> {
        Self::new(n, [1..=n])
    }

    /// Parallel system: fails at the last component failure.
    pub fn parallel(n: usize) -> Result<Self, StructureError> {
        Self::new(n, (1..=n).map(|i| [i]))
    }

    /// The system whose lifetime is the `r`-th order statistic `X_{r:n}`.
    ///
    /// It works while at least `n - r + 1` components work, so its minimal
    /// path sets are all subsets of that size.
    pub fn order_statistic(r: usize, n: usize) -> Result<Self, StructureError> {
        if r == 0 || r > n {
            return Err(StructureError::InvalidOrder(format!("r = {r}, n = {n}")));
        }
        let size = n - r + 1;
        let mut paths = Vec::new();
        for mask in 0u64..(1u64 << n) {
            if mask.count_ones() as usize == size {
                paths.push(ComponentSet(mask).indices().collect::<Vec<_>>());
            }
        }
        Self::new(n, paths)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn paths(&self) -> &[ComponentSet] {
        &self.paths
    }

    /// Path sets as sorted 1-based index lists.
    pub fn path_indices(&self) -> Vec<Vec<usize>> {
        self.paths.iter().map(|p| p.indices().collect()).collect()
    }

    /// `max_P min_{j ∈ P} times[j]`.
    pub fn lifetime(&self, times: &[f64]) -> Result<f64, StructureError> {
        if times.len() != self.n {
            return Err(StructureError::LengthMismatch {
                expected: self.n,
                got: times.len(),
            });
        }
        Ok(self.lifetime_unchecked(times))
    }

    pub(crate) fn lifetime_unchecked(&self, times: &[f64]) -> f64 {
        self.paths
            .iter()
            .map(|p| {
                p.indices()
                    .map(|i| times[i - 1])
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Structure function on a binary state vector (bit `i` = component `i + 1` works).
    pub fn works(&self, state: ComponentSet) -> bool {
        self.paths.iter().any(|p| p.is_subset(state))
    }

    /// Inclusion–exclusion expansion over nonempty subsets of the path sets.
    ///
    /// Each subset `S` contributes `(-1)^{|S|+1}` to the union of its paths;
    /// identical unions are merged and cancelled terms removed.
    pub fn inclusion_exclusion(&self) -> SignedTermList {
        let mut merged: BTreeMap<ComponentSet, i64> = BTreeMap::new();
        for (set, sign) in subset_unions(&self.paths) {
            *merged.entry(set).or_insert(0) += sign;
        }
        SignedTermList {
            terms: merged
                .into_iter()
                .filter(|&(_, c)| c != 0)
                .map(|(set, coeff)| SignedTerm { coeff, set })
                .collect(),
        }
    }
}

/// All nonempty subsets of `paths` as (union, sign) pairs, unmerged.
pub(crate) fn subset_unions(paths: &[ComponentSet]) -> Vec<(ComponentSet, i64)> {
    let r = paths.len();
    let mut out = Vec::with_capacity((1usize << r) - 1);
    for mask in 1u64..(1u64 << r) {
        let mut set = ComponentSet::EMPTY;
        for (k, p) in paths.iter().enumerate() {
            if mask & (1u64 << k) != 0 {
                set = set.union(*p);
            }
        }
        let sign = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
        out.push((set, sign));
    }
    out
}
