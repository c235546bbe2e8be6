//! Exhaustive search for the entropy-optimal generalized regulator inside an
//! STBR envelope.
//!
//! Given an envelope `(N, r, B)`, the search space is every pair of
//! sequences meeting the resource-parity constraints: token increments
//! summing to `N*r` with each `r_k <= B`, and bucket depths summing to
//! `(N-1)*B` (equality mode — entropy never decreases in any single `B_k`,
//! so spending the whole budget loses nothing; inequality mode keeps sums
//! `<= (N-1)*B` for probing small horizons). An optional *depth window* `w`
//! restricts each `B_k` to `[max(0, B-w), B+w]`, shrinking the space for
//! longer horizons where the optimum is known to stay near-uniform.
//!
//! Candidates are compared by the exact integer weight `g_0(0)`, so ties are
//! genuine ties, and every tied optimum is reported (sorted ascending for a
//! stable presentation).
//!
//! The enumeration exploits that the backward recursion for stages `>= k`
//! depends only on the parameter suffix `(r_k.., B_k..)`: candidates are
//! walked in an order that keeps suffixes maximally shared (descending
//! lexicographic, so neighbouring candidates differ in a short prefix), and
//! each stage column is fetched from an LRU cache keyed by
//! [`suffix_memo_key`]. Work is split into one unit per increment sequence;
//! units run independently (optionally in parallel) with their own caches,
//! which keeps every statistic deterministic regardless of scheduling.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::entropy::{self, log2_biguint, stage_column, EntropyError};
use crate::regulator::{validate_comparison, RegulatorError, RegulatorSpec, StbrSpec};

/// Default capacity (entries) of each work unit's suffix-column cache.
pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 18;

/// Horizon above which the depth window defaults to [`DEFAULT_DEPTH_WINDOW`]
/// instead of unbounded.
pub const WINDOWED_HORIZON: usize = 5;

/// Default depth window for horizons `>= WINDOWED_HORIZON`.
pub const DEFAULT_DEPTH_WINDOW: u64 = 3;

/// Errors from constructing or running a search.
#[derive(Debug, Error)]
pub enum SearchError {
    /// The envelope itself is malformed.
    #[error(transparent)]
    Regulator(#[from] RegulatorError),
    /// Solving a candidate (or the baseline) hit an entropy-solver limit.
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    /// The envelope's depth lies outside the comparison band `2r <= B <= 5r`.
    #[error("envelope depth/rate band violated: {0}")]
    RatioViolation(String),
    /// A resource cap tripped. The partial outcome (flagged
    /// non-authoritative) covers the candidates examined before the trip.
    #[error("search resource limit: {what}")]
    ResourceLimit {
        /// Which cap tripped.
        what: String,
        /// Best-so-far results over the examined prefix of the space.
        partial: Box<SearchOutcome>,
    },
}

/// How the aggregate depth budget is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMode {
    /// `sum(B_k) = (N-1) * B` exactly (optimal sequences always spend the
    /// whole budget, so this is the default).
    Equality,
    /// `sum(B_k) <= (N-1) * B`.
    Inequality,
}

/// Resource caps for one search run. Setting either cap forces sequential
/// execution so the examined prefix of the candidate space is deterministic.
#[derive(Debug, Clone)]
pub struct SearchCaps {
    /// Abort after this many candidates.
    pub max_candidates: Option<u64>,
    /// Abort once this much wall-clock time has elapsed.
    pub max_elapsed: Option<Duration>,
    /// Suffix-column cache capacity per work unit.
    pub cache_capacity: usize,
}

impl Default for SearchCaps {
    fn default() -> Self {
        SearchCaps {
            max_candidates: None,
            max_elapsed: None,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
        }
    }
}

/// A fully specified search: envelope, depth handling, window, caps.
#[derive(Debug, Clone)]
pub struct SearchProblem {
    /// The STBR envelope defining the budgets.
    pub envelope: StbrSpec,
    /// Aggregate-depth handling.
    pub depth_mode: DepthMode,
    /// Depth window `w` (`None` = unbounded). Defaults to unbounded for
    /// `N < 5` and to `3` for longer horizons.
    pub depth_window: Option<u64>,
    /// Resource caps.
    pub caps: SearchCaps,
    /// Whether the depth/rate band check was waived at construction.
    pub relaxed: bool,
}

impl SearchProblem {
    /// Builds a search over `envelope`, enforcing the comparison band
    /// `2r <= B <= 5r`.
    pub fn new(envelope: StbrSpec) -> Result<Self, SearchError> {
        let problem = Self::new_relaxed(envelope)?;
        if !(2 * envelope.r <= envelope.b && envelope.b <= 5 * envelope.r) {
            return Err(SearchError::RatioViolation(format!(
                "need 2r = {} <= B = {} <= 5r = {}",
                2 * envelope.r,
                envelope.b,
                5 * envelope.r
            )));
        }
        Ok(Self {
            relaxed: false,
            ..problem
        })
    }

    /// Like [`SearchProblem::new`] but without the depth/rate band check,
    /// for sweeps that deliberately step outside the comparison band.
    pub fn new_relaxed(envelope: StbrSpec) -> Result<Self, SearchError> {
        envelope.to_gtbr()?;
        let depth_window = if envelope.horizon < WINDOWED_HORIZON {
            None
        } else {
            Some(DEFAULT_DEPTH_WINDOW)
        };
        Ok(SearchProblem {
            envelope,
            depth_mode: DepthMode::Equality,
            depth_window,
            caps: SearchCaps::default(),
            relaxed: true,
        })
    }

    /// Replaces the depth mode.
    pub fn with_depth_mode(mut self, mode: DepthMode) -> Self {
        self.depth_mode = mode;
        self
    }

    /// Replaces the depth window (`None` = unbounded).
    pub fn with_depth_window(mut self, window: Option<u64>) -> Self {
        self.depth_window = window;
        self
    }

    /// Replaces the resource caps.
    pub fn with_caps(mut self, caps: SearchCaps) -> Self {
        self.caps = caps;
        self
    }

    /// Inclusive per-entry depth range `[lo, hi]` implied by the window.
    fn depth_range(&self) -> (u64, u64) {
        let budget = self.depth_budget();
        match self.depth_window {
            Some(w) => (self.envelope.b.saturating_sub(w), self.envelope.b + w),
            None => (0, budget),
        }
    }

    /// Aggregate depth budget `(N-1) * B`.
    fn depth_budget(&self) -> u64 {
        (self.envelope.horizon as u64 - 1) * self.envelope.b
    }
}

/// One optimal parameter assignment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Candidate {
    /// Token increments `r*_0..r*_{N-1}`.
    pub increments: Vec<u64>,
    /// Bucket depths `B*_0..B*_{N-2}`.
    pub depths: Vec<u64>,
}

impl Candidate {
    /// Expands into a full regulator spec.
    pub fn to_spec(&self) -> RegulatorSpec {
        RegulatorSpec::new(self.increments.clone(), self.depths.clone())
            .expect("search candidates are well-formed")
    }
}

/// Deterministic counters from one search run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SearchStats {
    /// Candidates whose `g_0(0)` was evaluated.
    pub candidates: u64,
    /// Suffix-column cache hits across all work units.
    pub cache_hits: u64,
    /// Suffix-column cache misses (columns actually computed).
    pub cache_misses: u64,
    /// Wall-clock seconds. The only scheduling-dependent field.
    pub elapsed_seconds: f64,
}

fn ser_biguint_dec<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Result of a search: the exact optimum, every tie, and the baseline.
#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    /// The envelope searched.
    pub envelope: StbrSpec,
    /// Depth handling used.
    pub depth_mode: DepthMode,
    /// Depth window used (`None` = unbounded).
    pub depth_window: Option<u64>,
    /// Exact best weight `g*_0(0)` over all candidates.
    #[serde(serialize_with = "ser_biguint_dec")]
    pub best_weight: BigUint,
    /// `H_g* = log2` of the best weight, in bits.
    pub best_bits: f64,
    /// Exact weight of the envelope itself.
    #[serde(serialize_with = "ser_biguint_dec")]
    pub baseline_weight: BigUint,
    /// `H_s`, the envelope's own utility in bits.
    pub baseline_bits: f64,
    /// `(H_g* - H_s) / H_s * 100`.
    pub improvement_percent: f64,
    /// All candidates attaining the best weight, ascending.
    pub optima: Vec<Candidate>,
    /// Deterministic run counters.
    pub stats: SearchStats,
    /// `false` when a resource cap cut the run short.
    pub authoritative: bool,
}

/// Canonical cache key: the parameter suffix `(r_k.., B_k..)` that the
/// backward recursion's stage-`k` column depends on. The full-sequence key
/// is the candidate itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuffixKey {
    /// Increment suffix `r_k..r_{N-1}`.
    pub increments: Vec<u64>,
    /// Depth suffix `B_k..B_{N-2}`.
    pub depths: Vec<u64>,
}

/// Builds the canonical suffix cache key.
pub fn suffix_memo_key(increment_suffix: &[u64], depth_suffix: &[u64]) -> SuffixKey {
    SuffixKey {
        increments: increment_suffix.to_vec(),
        depths: depth_suffix.to_vec(),
    }
}

/// Streams all compositions of `N*r` into `N` parts, each `<= cap`
/// (default: the envelope depth `B`), in descending lexicographic order.
pub fn enumerate_increments(envelope: &StbrSpec, cap_per_entry: Option<u64>) -> Compositions {
    let total = envelope.horizon as u64 * envelope.r;
    Compositions::exact(
        total,
        envelope.horizon,
        0,
        cap_per_entry.unwrap_or(envelope.b),
    )
}

/// Streams depth sequences for `envelope` under `mode` and window `w`:
/// `N-1` parts, each in `[max(0, B-w), B+w]`, summing to `(N-1)*B` exactly
/// (equality) or at most (inequality). Descending lexicographic order.
pub fn enumerate_depths(envelope: &StbrSpec, mode: DepthMode, window: Option<u64>) -> Compositions {
    let budget = (envelope.horizon as u64 - 1) * envelope.b;
    let (lo, hi) = match window {
        Some(w) => (envelope.b.saturating_sub(w), envelope.b + w),
        None => (0, budget),
    };
    let parts = envelope.horizon - 1;
    match mode {
        DepthMode::Equality => Compositions::exact(budget, parts, lo, hi),
        DepthMode::Inequality => Compositions::bounded(budget, parts, lo, hi),
    }
}

/// Iterator over integer compositions in descending lexicographic order.
///
/// Each item has `parts` entries, every entry in `[lo, hi]`, and a sum that
/// either equals `total` exactly or is bounded by it (see constructors).
/// Zero parts yield a single empty composition when `total` permits
/// (`total == 0` for exact, always for bounded).
#[derive(Debug, Clone)]
pub struct Compositions {
    total: u64,
    parts: usize,
    lo: u64,
    hi: u64,
    exact: bool,
    current: Option<Vec<u64>>,
    started: bool,
}

impl Compositions {
    /// Compositions with sum exactly `total`.
    pub fn exact(total: u64, parts: usize, lo: u64, hi: u64) -> Self {
        Compositions {
            total,
            parts,
            lo,
            hi,
            exact: true,
            current: None,
            started: false,
        }
    }

    /// Compositions with sum at most `total`.
    pub fn bounded(total: u64, parts: usize, lo: u64, hi: u64) -> Self {
        Compositions {
            total,
            parts,
            lo,
            hi,
            exact: false,
            current: None,
            started: false,
        }
    }

    /// Greedily fills positions `from..` with the largest feasible values,
    /// given `budget` left to place. Returns false when infeasible.
    fn refill(&self, seq: &mut [u64], from: usize, mut budget: u64) -> bool {
        let n = self.parts;
        for (i, slot) in seq.iter_mut().enumerate().skip(from) {
            let after = (n - 1 - i) as u64;
            // Every later position needs at least `lo`.
            if budget < self.lo * (after + 1) {
                return false;
            }
            let v = self.hi.min(budget - self.lo * after);
            // In exact mode the rest must be able to absorb the remainder.
            if self.exact && budget - v > self.hi * after {
                return false;
            }
            *slot = v;
            budget -= v;
        }
        !self.exact || budget == 0
    }

    /// Computes the descending-lex successor of `seq`, in place.
    ///
    /// The largest strictly-smaller composition decrements the rightmost
    /// position that can afford it by exactly one and refills everything
    /// after it greedily. (Decrementing by more than one, or at a position
    /// further left, is always lexicographically smaller; in exact mode a
    /// deeper decrement only grows the remainder the suffix must absorb, so
    /// if `seq[j] - 1` fails at `j`, every other value fails there too.)
    fn advance(&self, seq: &mut [u64]) -> bool {
        let n = self.parts;
        if n == 0 {
            return false;
        }
        let mut prefix: u64 = seq.iter().sum();
        for j in (0..n).rev() {
            prefix -= seq[j];
            if seq[j] == self.lo {
                continue;
            }
            let after = (n - 1 - j) as u64;
            let budget = self.total - prefix;
            let v = seq[j] - 1;
            if self.exact && budget - v > self.hi * after {
                continue;
            }
            seq[j] = v;
            let refilled = self.refill(seq, j + 1, budget - v);
            debug_assert!(refilled, "refill after a feasible decrement");
            if refilled {
                return true;
            }
            seq[j] = v + 1;
        }
        false
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if !self.started {
            self.started = true;
            if self.parts == 0 {
                if !self.exact || self.total == 0 {
                    self.current = None;
                    return Some(Vec::new());
                }
                return None;
            }
            let mut first = vec![0u64; self.parts];
            if self.refill(&mut first, 0, self.total) {
                self.current = Some(first.clone());
                return Some(first);
            }
            return None;
        }
        let mut seq = self.current.take()?;
        if self.parts > 0 && self.advance(&mut seq) {
            self.current = Some(seq.clone());
            Some(seq)
        } else {
            None
        }
    }
}

/// Minimal LRU cache used for suffix columns. Eviction follows exact
/// least-recent-use order via a monotone tick, so hit/miss counts are a
/// deterministic function of the access sequence.
struct LruCache<V> {
    map: HashMap<SuffixKey, (u64, V)>,
    order: BTreeMap<u64, SuffixKey>,
    tick: u64,
    capacity: usize,
    hits: u64,
    misses: u64,
}

impl<V: Clone> LruCache<V> {
    fn new(capacity: usize) -> Self {
        LruCache {
            map: HashMap::new(),
            order: BTreeMap::new(),
            tick: 0,
            capacity: capacity.max(1),
            hits: 0,
            misses: 0,
        }
    }

    fn get(&mut self, key: &SuffixKey) -> Option<V> {
        let tick = self.tick;
        self.tick += 1;
        match self.map.get_mut(key) {
            Some((t, v)) => {
                self.order.remove(&*t);
                *t = tick;
                self.order.insert(tick, key.clone());
                self.hits += 1;
                Some(v.clone())
            }
            None => {
                self.misses += 1;
                None
            }
        }
    }

    fn insert(&mut self, key: SuffixKey, value: V) {
        let tick = self.tick;
        self.tick += 1;
        if let Some((old, _)) = self.map.insert(key.clone(), (tick, value)) {
            self.order.remove(&old);
        }
        self.order.insert(tick, key);
        while self.map.len() > self.capacity {
            let (_, oldest) = self.order.pop_first().expect("cache is non-empty");
            self.map.remove(&oldest);
        }
    }
}

/// Per-unit search state: one increment sequence crossed with every depth
/// sequence, sharing suffix columns through a unit-local cache.
struct Unit<'p> {
    problem: &'p SearchProblem,
    increments: Vec<u64>,
    /// State bound per stage `k >= 1`: `min(prefix token budget, window hi)`.
    bounds: Vec<u64>,
    ones: Arc<Vec<BigUint>>,
}

struct UnitResult {
    best: BigUint,
    ties: Vec<Candidate>,
    candidates: u64,
    cache_hits: u64,
    cache_misses: u64,
}

impl<'p> Unit<'p> {
    fn new(problem: &'p SearchProblem, increments: Vec<u64>) -> Self {
        let n = increments.len();
        let (_, hi) = problem.depth_range();
        let mut bounds = vec![0u64; n];
        let mut prefix = 0u64;
        for k in 1..n {
            prefix += increments[k - 1];
            bounds[k] = prefix.min(hi);
        }
        // Shared terminal column: g_N = 1, sized for the last stage's reach.
        let last_bound = if n >= 2 { bounds[n - 1] } else { 0 };
        let last_reach = last_bound + increments[n - 1];
        let ones = Arc::new(vec![num_traits::One::one(); last_reach as usize + 1]);
        Unit {
            problem,
            increments,
            bounds,
            ones,
        }
    }

    /// Evaluates `g_0(0)` for one depth sequence.
    fn evaluate(&self, depths: &[u64], cache: &mut LruCache<Arc<Vec<BigUint>>>) -> BigUint {
        let n = self.increments.len();
        let mut child = Arc::clone(&self.ones);
        for k in (1..n).rev() {
            let key = suffix_memo_key(&self.increments[k..], &depths[k..]);
            child = match cache.get(&key) {
                Some(col) => col,
                None => {
                    let depth = if k + 1 < n { Some(depths[k]) } else { None };
                    let col = Arc::new(stage_column(
                        self.increments[k],
                        depth,
                        self.bounds[k],
                        &child,
                    ));
                    cache.insert(key, Arc::clone(&col));
                    col
                }
            };
        }
        let depth0 = if n >= 2 { Some(depths[0]) } else { None };
        stage_column(self.increments[0], depth0, 0, &child)
            .pop()
            .expect("stage-0 column has exactly one state")
    }

    fn run(&self, budget: Option<&mut u64>) -> (UnitResult, bool) {
        let problem = self.problem;
        let mut cache = LruCache::new(problem.caps.cache_capacity);
        let mut best = BigUint::zero();
        let mut ties: Vec<Candidate> = Vec::new();
        let mut count = 0u64;
        let mut tripped = false;
        let mut remaining = budget;
        for depths in enumerate_depths(&problem.envelope, problem.depth_mode, problem.depth_window)
        {
            if let Some(rem) = remaining.as_deref_mut() {
                if *rem == 0 {
                    tripped = true;
                    break;
                }
                *rem -= 1;
            }
            let weight = self.evaluate(&depths, &mut cache);
            count += 1;
            if weight > best {
                best = weight;
                ties.clear();
                ties.push(Candidate {
                    increments: self.increments.clone(),
                    depths,
                });
            } else if weight == best {
                ties.push(Candidate {
                    increments: self.increments.clone(),
                    depths,
                });
            }
        }
        (
            UnitResult {
                best,
                ties,
                candidates: count,
                cache_hits: cache.hits,
                cache_misses: cache.misses,
            },
            tripped,
        )
    }
}

/// Runs the exhaustive search. Every candidate's exact weight is compared;
/// all ties at the maximum are returned in ascending order. With default
/// caps the candidate space is always fully examined; a tripped cap returns
/// [`SearchError::ResourceLimit`] carrying the partial, non-authoritative
/// outcome.
pub fn search(problem: &SearchProblem) -> Result<SearchOutcome, SearchError> {
    let start = Instant::now();
    let envelope = problem.envelope;
    let baseline = entropy::solve(&envelope.to_gtbr()?)?;

    let units: Vec<Unit> = enumerate_increments(&envelope, None)
        .map(|increments| Unit::new(problem, increments))
        .collect();

    let sequential = problem.caps.max_candidates.is_some() || problem.caps.max_elapsed.is_some();
    let mut tripped: Option<String> = None;
    let results: Vec<UnitResult> = if sequential {
        let mut remaining = problem.caps.max_candidates.unwrap_or(u64::MAX);
        let mut out = Vec::with_capacity(units.len());
        for unit in &units {
            if let Some(deadline) = problem.caps.max_elapsed {
                if start.elapsed() > deadline {
                    tripped = Some(format!("elapsed cap {deadline:?} reached"));
                    break;
                }
            }
            let (result, cut) = unit.run(Some(&mut remaining));
            out.push(result);
            if cut {
                tripped = Some(format!(
                    "candidate cap {} reached",
                    problem.caps.max_candidates.unwrap_or(u64::MAX)
                ));
                break;
            }
        }
        out
    } else {
        units.par_iter().map(|unit| unit.run(None).0).collect()
    };

    let mut stats = SearchStats::default();
    let mut best = BigUint::zero();
    let mut optima: Vec<Candidate> = Vec::new();
    for result in results {
        stats.candidates += result.candidates;
        stats.cache_hits += result.cache_hits;
        stats.cache_misses += result.cache_misses;
        if result.best > best {
            best = result.best;
            optima = result.ties;
        } else if result.best == best && !result.best.is_zero() {
            optima.extend(result.ties);
        }
    }
    optima.sort();
    stats.elapsed_seconds = start.elapsed().as_secs_f64();

    let best_bits = log2_biguint(&best);
    let baseline_bits = baseline.information_utility();
    let improvement_percent = if baseline_bits > 0.0 {
        (best_bits - baseline_bits) / baseline_bits * 100.0
    } else {
        0.0
    };
    let outcome = SearchOutcome {
        envelope,
        depth_mode: problem.depth_mode,
        depth_window: problem.depth_window,
        best_bits,
        baseline_weight: baseline.root_weight().clone(),
        baseline_bits,
        improvement_percent,
        best_weight: best,
        optima,
        stats,
        authoritative: tripped.is_none(),
    };

    if !problem.relaxed {
        debug_assert!(outcome.optima.iter().all(|c| {
            validate_comparison(&c.to_spec(), &envelope)
                .map(|rep| rep.all_satisfied())
                .unwrap_or(false)
        }));
    }

    match tripped {
        Some(what) => Err(SearchError::ResourceLimit {
            what,
            partial: Box::new(outcome),
        }),
        None => Ok(outcome),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{oracle_utility_with, solve};
    use crate::regulator::reachability;
    use proptest::prelude::*;

    fn envelope(n: usize, r: u64, b: u64) -> StbrSpec {
        StbrSpec::new(n, r, b).unwrap()
    }

    /// Brute-force composition reference: odometer enumeration + filter.
    fn brute_compositions(total: u64, parts: usize, lo: u64, hi: u64, exact: bool) -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        let mut seq = vec![lo; parts];
        if parts == 0 {
            if !exact || total == 0 {
                out.push(Vec::new());
            }
            return out;
        }
        loop {
            let sum: u64 = seq.iter().sum();
            if (exact && sum == total) || (!exact && sum <= total) {
                out.push(seq.clone());
            }
            let mut i = parts;
            loop {
                if i == 0 {
                    out.sort_by(|a, b| b.cmp(a));
                    return out;
                }
                i -= 1;
                if seq[i] < hi {
                    seq[i] += 1;
                    for v in &mut seq[i + 1..] {
                        *v = lo;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn composition_counts_and_membership() {
        // The (4,3,6) increment space: 231 sequences (verified brute-force,
        // and by inclusion-exclusion C(15,3) - 4*C(8,3) = 455 - 224).
        let seqs: Vec<_> = enumerate_increments(&envelope(4, 3, 6), None).collect();
        assert_eq!(seqs.len(), 231);
        assert_eq!(
            seqs.len(),
            brute_compositions(12, 4, 0, 6, true).len()
        );
        assert!(seqs.contains(&vec![6, 3, 3, 0]));
        assert!(seqs.contains(&vec![3, 3, 3, 3]));
        assert_eq!(seqs[0], vec![6, 6, 0, 0]);

        let seqs: Vec<_> = enumerate_increments(&envelope(4, 3, 12), None).collect();
        assert!(seqs.contains(&vec![12, 0, 0, 0]));

        let seqs: Vec<_> = enumerate_increments(&envelope(1, 5, 10), None).collect();
        assert_eq!(seqs, vec![vec![5]]);
    }

    #[test]
    fn depth_enumeration_membership() {
        let seqs: Vec<_> =
            enumerate_depths(&envelope(4, 3, 6), DepthMode::Equality, None).collect();
        assert_eq!(seqs.len(), 190); // compositions of 18 into 3 parts
        assert!(seqs.contains(&vec![6, 6, 6]));
        assert!(seqs.contains(&vec![8, 10, 0]));

        let seqs: Vec<_> =
            enumerate_depths(&envelope(4, 3, 9), DepthMode::Equality, Some(3)).collect();
        assert_eq!(seqs.len(), 37); // parts in [6,12] summing 27
        assert!(seqs.contains(&vec![8, 10, 9]));
        assert!(seqs.contains(&vec![9, 10, 8]));

        // One-slot regulators have no depths: exactly the empty sequence.
        let seqs: Vec<_> =
            enumerate_depths(&envelope(1, 3, 7), DepthMode::Equality, None).collect();
        assert_eq!(seqs, vec![Vec::<u64>::new()]);
        let seqs: Vec<_> =
            enumerate_depths(&envelope(1, 3, 7), DepthMode::Inequality, None).collect();
        assert_eq!(seqs, vec![Vec::<u64>::new()]);

        // Inequality mode includes under-budget sequences.
        let seqs: Vec<_> =
            enumerate_depths(&envelope(3, 1, 2), DepthMode::Inequality, None).collect();
        assert_eq!(
            seqs,
            brute_compositions(4, 2, 0, 4, false)
        );
    }

    proptest! {
        /// The successor algorithm agrees with odometer enumeration for both
        /// sum-exact and sum-bounded modes, including the ordering.
        #[test]
        fn compositions_match_brute_force(
            total in 0u64..12,
            parts in 0usize..5,
            lo in 0u64..3,
            span in 0u64..5,
            exact in proptest::bool::ANY,
        ) {
            let hi = lo + span;
            let fast: Vec<_> = if exact {
                Compositions::exact(total, parts, lo, hi).collect()
            } else {
                Compositions::bounded(total, parts, lo, hi).collect()
            };
            prop_assert_eq!(fast, brute_compositions(total, parts, lo, hi, exact));
        }

        /// Raising any single depth never decreases the root weight.
        #[test]
        fn depth_monotonicity(
            params in proptest::collection::vec((0u64..5, 0u64..7), 2..5),
            which in 0usize..4,
        ) {
            let n = params.len();
            let increments: Vec<u64> = params.iter().map(|p| p.0).collect();
            let mut depths: Vec<u64> = params.iter().take(n - 1).map(|p| p.1).collect();
            let spec = RegulatorSpec::new(increments.clone(), depths.clone()).unwrap();
            let before = solve(&spec).unwrap().root_weight().clone();
            let k = which % (n - 1);
            depths[k] += 1;
            let spec = RegulatorSpec::new(increments, depths).unwrap();
            let after = solve(&spec).unwrap().root_weight().clone();
            prop_assert!(after >= before);
        }

        /// Binding-cap mechanism: if some stage has phi_i = B_{i-1} strictly
        /// below the unclamped inflow, raising that depth strictly increases
        /// the root weight; with no binding cap anywhere, raising any depth
        /// changes nothing.
        #[test]
        fn binding_cap_mechanism(
            params in proptest::collection::vec((0u64..5, 0u64..7), 2..5),
        ) {
            let n = params.len();
            let increments: Vec<u64> = params.iter().map(|p| p.0).collect();
            let depths: Vec<u64> = params.iter().take(n - 1).map(|p| p.1).collect();
            let spec = RegulatorSpec::new(increments.clone(), depths.clone()).unwrap();
            let phi = reachability(&spec);
            let before = solve(&spec).unwrap().root_weight().clone();

            let binding: Vec<usize> = (1..n)
                .filter(|&i| phi[i] == depths[i - 1] && depths[i - 1] < phi[i - 1] + increments[i - 1])
                .collect();
            if binding.is_empty() {
                for k in 0..n - 1 {
                    let mut d = depths.clone();
                    d[k] += 1;
                    let after = solve(&RegulatorSpec::new(increments.clone(), d).unwrap())
                        .unwrap()
                        .root_weight()
                        .clone();
                    prop_assert_eq!(&after, &before);
                }
            } else {
                for &i in &binding {
                    let mut d = depths.clone();
                    d[i - 1] += 1;
                    let after = solve(&RegulatorSpec::new(increments.clone(), d).unwrap())
                        .unwrap()
                        .root_weight()
                        .clone();
                    prop_assert!(after > before);
                }
            }
        }
    }

    /// Naive reference search: full cross product, each candidate evaluated
    /// by the schedule-enumeration oracle.
    fn naive_search(problem: &SearchProblem) -> (BigUint, Vec<Candidate>) {
        let mut best = BigUint::zero();
        let mut optima = Vec::new();
        for increments in enumerate_increments(&problem.envelope, None) {
            for depths in
                enumerate_depths(&problem.envelope, problem.depth_mode, problem.depth_window)
            {
                let spec = RegulatorSpec::new(increments.clone(), depths.clone()).unwrap();
                let weight = oracle_utility_with(&spec, 1_000_000).unwrap().weight;
                let cand = Candidate {
                    increments: increments.clone(),
                    depths,
                };
                if weight > best {
                    best = weight;
                    optima = vec![cand];
                } else if weight == best {
                    optima.push(cand);
                }
            }
        }
        optima.sort();
        (best, optima)
    }

    #[test]
    fn search_matches_naive_reference_at_small_scale() {
        // Every N <= 3, N*r <= 6 envelope within the comparison band, plus
        // both depth modes.
        for n in 1..=3usize {
            for r in 0..=(6 / n as u64) {
                for b in (2 * r)..=(5 * r) {
                    for mode in [DepthMode::Equality, DepthMode::Inequality] {
                        let problem = SearchProblem::new(envelope(n, r, b))
                            .unwrap()
                            .with_depth_mode(mode);
                        let outcome = search(&problem).unwrap();
                        let (best, optima) = naive_search(&problem);
                        assert_eq!(outcome.best_weight, best, "envelope ({n},{r},{b})");
                        assert_eq!(outcome.optima, optima, "envelope ({n},{r},{b})");
                        assert!(outcome.authoritative);
                    }
                }
            }
        }
    }

    #[test]
    fn reference_search_four_three_six() {
        let problem = SearchProblem::new(envelope(4, 3, 6)).unwrap();
        let outcome = search(&problem).unwrap();
        assert_eq!(outcome.optima.len(), 1);
        assert_eq!(outcome.optima[0].increments, vec![6, 3, 3, 0]);
        assert_eq!(outcome.optima[0].depths, vec![6, 6, 6]);
        assert_eq!((outcome.best_bits * 100.0).round() / 100.0, 20.92);
        assert_eq!((outcome.baseline_bits * 100.0).round() / 100.0, 20.04);
        assert!((outcome.improvement_percent - 4.4).abs() < 0.1);
        assert_eq!(outcome.stats.candidates, 231 * 190);
        assert!(outcome.stats.cache_hits > 0);
        // Equality mode: every optimum spends the whole depth budget.
        for opt in &outcome.optima {
            assert_eq!(opt.depths.iter().sum::<u64>(), 18);
            let report = validate_comparison(&opt.to_spec(), &problem.envelope).unwrap();
            assert!(report.all_satisfied());
            assert!(report.aggregate_depth_equality);
        }
    }

    #[test]
    fn reference_search_reports_both_ties() {
        let outcome = search(&SearchProblem::new(envelope(4, 3, 9)).unwrap()).unwrap();
        assert_eq!(outcome.optima.len(), 2);
        assert_eq!(outcome.optima[0].increments, vec![8, 3, 1, 0]);
        assert_eq!(outcome.optima[0].depths, vec![8, 10, 9]);
        assert_eq!(outcome.optima[1].increments, vec![9, 2, 1, 0]);
        assert_eq!(outcome.optima[1].depths, vec![9, 10, 8]);
        assert_eq!((outcome.best_bits * 100.0).round() / 100.0, 21.44);
    }

    #[test]
    fn caps_trip_with_partial_outcome() {
        let problem = SearchProblem::new(envelope(4, 3, 6)).unwrap().with_caps(SearchCaps {
            max_candidates: Some(100),
            ..SearchCaps::default()
        });
        match search(&problem) {
            Err(SearchError::ResourceLimit { partial, .. }) => {
                assert!(!partial.authoritative);
                assert_eq!(partial.stats.candidates, 100);
            }
            other => panic!("expected ResourceLimit, got {other:?}"),
        }
    }

    #[test]
    fn ratio_band_is_enforced_unless_relaxed() {
        assert!(matches!(
            SearchProblem::new(envelope(4, 3, 16)),
            Err(SearchError::RatioViolation(_))
        ));
        assert!(SearchProblem::new_relaxed(envelope(4, 3, 16)).is_ok());
        assert!(SearchProblem::new(envelope(4, 3, 5)).is_err());
    }

    #[test]
    fn default_window_depends_on_horizon() {
        assert_eq!(
            SearchProblem::new(envelope(4, 3, 6)).unwrap().depth_window,
            None
        );
        assert_eq!(
            SearchProblem::new(envelope(5, 3, 6)).unwrap().depth_window,
            Some(3)
        );
    }

    #[test]
    fn determinism_across_runs() {
        let problem = SearchProblem::new(envelope(3, 2, 5)).unwrap();
        let a = search(&problem).unwrap();
        let b = search(&problem).unwrap();
        assert_eq!(a.best_weight, b.best_weight);
        assert_eq!(a.optima, b.optima);
        assert_eq!(a.stats.candidates, b.stats.candidates);
        assert_eq!(a.stats.cache_hits, b.stats.cache_hits);
        assert_eq!(a.stats.cache_misses, b.stats.cache_misses);
    }
}
