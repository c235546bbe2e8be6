//! Backward-induction computation of a regulator's information utility.
//!
//! For each stage `k` and token state `u`, let `H*_k(u)` be the largest
//! entropy any conforming flow can emit from slot `k` onward. Writing
//! `g_k(u) = 2^{H*_k(u)}` turns the dynamic program into integer arithmetic:
//!
//! ```text
//! g_N(u) = 1
//! g_k(u) = sum_{l=0}^{u+r_k} 2^l * g_{k+1}(next(u, l))
//! next(u, l) = min(u + r_k - l, B_k)   (unclamped at k = N-1)
//! ```
//!
//! Every `g_k(u)` is an exact non-negative integer — it counts conforming
//! schedule suffixes weighted by `2^(payload bits)` — so the whole table is
//! kept in arbitrary-precision integers and `H*_k(u) = log2 g_k(u)` is
//! derived only at report time. The *information utility* of the regulator
//! is `H*_0(0)`.
//!
//! The maximizing packet-length distribution at `(k, u)` follows in closed
//! form: `p*_l = 2^l * g_{k+1}(next(u, l)) / g_k(u)`, an exact rational
//! whose numerators sum to the denominator by construction ([`StagePmf`]).
//! Two consequences that the tests lean on heavily: every outcome of `p*`
//! has the same per-stage score `l - log2 p*_l + H*_{k+1}(next)`, and
//! therefore *every* conforming schedule's total information
//! `sum(l_k - log2 p*_{l_k})` telescopes to exactly `H*_0(0)`.
//!
//! [`oracle_utility`] is the independent check: it enumerates conforming
//! schedules one by one via the regulator semantics and accumulates
//! `2^(total bits)`, which must equal `g_0(0)` bit for bit.
//!
//! The inner sum is evaluated with a running prefix recurrence
//! (`S(t) = 2 S(t-1) + g_{k+1}(min(t, B_k))`, `g_k(u) = S(u + r_k)`), so a
//! stage column costs `O(U_k + r_k)` big-integer additions instead of a
//! quadratic double loop.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use crate::regulator::{evolve, RegulatorError, RegulatorSpec, Schedule};

/// Default cap on the total number of tabulated `(stage, state)` entries.
pub const DEFAULT_MAX_TABLE_ENTRIES: u64 = 4_000_000;

/// Default cap on the bit length of any single weight.
pub const DEFAULT_MAX_WEIGHT_BITS: u64 = 1 << 22;

/// Default cap on the number of schedules [`oracle_utility`] may visit.
pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

/// Horizon limit for the recursive oracle (keeps its stack depth trivial).
const ORACLE_MAX_HORIZON: usize = 4096;

/// Errors from solving, querying, or cross-checking a weight table.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    /// The underlying regulator rejected the spec or a schedule.
    #[error(transparent)]
    Regulator(#[from] RegulatorError),
    /// A configured table-size or weight-size cap was exceeded.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    /// A query addressed a state outside the tabulated range.
    #[error("stage {stage} tabulates states 0..={bound}, state {state} is out of range")]
    StateOutOfRange {
        /// Queried stage.
        stage: usize,
        /// Queried state.
        state: u64,
        /// Largest tabulated state at that stage.
        bound: u64,
    },
    /// The brute-force oracle would visit more schedules than its budget.
    #[error("conforming-schedule enumeration exceeded the budget of {budget} schedules")]
    EnumerationTooLarge {
        /// Configured schedule budget.
        budget: u64,
    },
}

/// Resource caps for [`solve_with`]. The defaults comfortably cover every
/// instance in the bundled reference table.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Cap on the total number of tabulated entries across all stages.
    pub max_table_entries: u64,
    /// Cap on the bit length of any single weight.
    pub max_weight_bits: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_table_entries: DEFAULT_MAX_TABLE_ENTRIES,
            max_weight_bits: DEFAULT_MAX_WEIGHT_BITS,
        }
    }
}

/// `log2` of an arbitrary-precision unsigned integer.
///
/// Values with at most 53 bits convert exactly to `f64` first; larger values
/// use `(bits - 64) + log2(top 64 bits)`, whose relative error is below
/// `1e-12` (truncating below the top 64 bits perturbs the argument by less
/// than `2^-64` relative). Returns negative infinity for zero.
pub fn log2_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 53 {
        n.to_f64().expect("<= 53 bits fits f64").log2()
    } else {
        let top = (n >> (bits - 64)).to_u64().expect("top has 64 bits");
        (bits - 64) as f64 + (top as f64).log2()
    }
}

/// The exact optimal packet-length distribution at one `(stage, state)`.
///
/// Probabilities are the rationals `numerator(l) / denominator` with
/// `numerator(l) = 2^l * g_{k+1}(next(u, l))` and `denominator = g_k(u)`;
/// the recursion guarantees the numerators sum to the denominator exactly,
/// so no normalization ever happens in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePmf {
    stage: usize,
    state: u64,
    numerators: Vec<BigUint>,
    denominator: BigUint,
}

impl StagePmf {
    /// Stage this distribution belongs to.
    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Token state this distribution is conditioned on.
    pub fn state(&self) -> u64 {
        self.state
    }

    /// Largest packet length with positive probability (`u + r_k`).
    pub fn max_len(&self) -> u64 {
        self.numerators.len() as u64 - 1
    }

    /// Exact numerators, indexed by packet length.
    pub fn numerators(&self) -> &[BigUint] {
        &self.numerators
    }

    /// Shared exact denominator `g_k(u)`.
    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    /// `p*_l` as a float (exact rational evaluated via one log).
    pub fn prob(&self, len: u64) -> Option<f64> {
        Some(self.log2_prob(len)?.exp2())
    }

    /// `log2 p*_l`, the (negated) covert information of choosing `len`.
    pub fn log2_prob(&self, len: u64) -> Option<f64> {
        let num = self.numerators.get(len as usize)?;
        Some(log2_biguint(num) - log2_biguint(&self.denominator))
    }
}

/// Exhaustive-enumeration result from [`oracle_utility`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `sum over conforming schedules of 2^(total bits)`; equals `g_0(0)`.
    pub weight: BigUint,
    /// `log2` of the weight.
    pub bits: f64,
    /// Number of conforming schedules visited.
    pub schedules: u64,
}

/// Structured export of a weight table (decimal strings), for debugging and
/// golden-file comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct WeightDump {
    /// The solved regulator.
    pub spec: RegulatorSpec,
    /// `H*_0(0)` in bits.
    pub utility_bits: f64,
    /// Per-stage weight columns.
    pub stages: Vec<StageWeights>,
}

/// One stage of a [`WeightDump`].
#[derive(Debug, Clone, Serialize)]
pub struct StageWeights {
    /// Stage index `k`.
    pub stage: usize,
    /// Largest tabulated state.
    pub state_bound: u64,
    /// `g_k(u)` for `u = 0..=state_bound`, as decimal strings.
    pub weights: Vec<String>,
}

/// A fully tabulated weight table `g_k(u)` for one regulator.
///
/// Stage `k` tabulates states `0..=U_k` with `U_0 = 0`, `U_k = B_{k-1}` for
/// `1 <= k <= N-1` (the clamp guarantees no larger state is ever queried,
/// and making the bound independent of earlier slots lets parameter searches
/// reuse suffix columns), and `U_N = U_{N-1} + r_{N-1}` for the unclamped
/// final state. All queries on a solved table are pure; independent solves
/// share nothing and may run concurrently.
#[derive(Debug, Clone)]
pub struct EntropySolution {
    spec: RegulatorSpec,
    bounds: Vec<u64>,
    weights: Vec<Vec<BigUint>>,
}

/// Solves the backward recursion with default [`SolveOptions`].
pub fn solve(spec: &RegulatorSpec) -> Result<EntropySolution, EntropyError> {
    solve_with(spec, &SolveOptions::default())
}

/// Solves the backward recursion under explicit resource caps.
pub fn solve_with(
    spec: &RegulatorSpec,
    options: &SolveOptions,
) -> Result<EntropySolution, EntropyError> {
    let n = spec.horizon();
    let mut bounds = Vec::with_capacity(n + 1);
    bounds.push(0u64);
    for k in 1..n {
        bounds.push(spec.depth(k - 1));
    }
    bounds.push(bounds[n - 1] + spec.increment(n - 1));

    let entries: u64 = bounds.iter().map(|b| b + 1).sum();
    if entries > options.max_table_entries {
        return Err(EntropyError::ResourceLimit(format!(
            "table would hold {entries} entries, cap is {}",
            options.max_table_entries
        )));
    }

    let mut weights: Vec<Vec<BigUint>> = vec![Vec::new(); n + 1];
    weights[n] = vec![BigUint::one(); bounds[n] as usize + 1];
    for k in (0..n).rev() {
        let column = {
            let child = &weights[k + 1];
            stage_column(
                spec.increment(k),
                if k + 1 < n { Some(spec.depth(k)) } else { None },
                bounds[k],
                child,
            )
        };
        let top_bits = column.last().expect("column is never empty").bits();
        if top_bits > options.max_weight_bits {
            return Err(EntropyError::ResourceLimit(format!(
                "stage {k} weight reached {top_bits} bits, cap is {}",
                options.max_weight_bits
            )));
        }
        weights[k] = column;
    }

    Ok(EntropySolution {
        spec: spec.clone(),
        bounds,
        weights,
    })
}

/// Computes one stage column `g_k(u)` for `u = 0..=state_bound` from the
/// next stage's column, via the prefix recurrence
/// `S(t) = 2 S(t-1) + child(min(t, depth))`, `g_k(u) = S(u + r)`.
///
/// `depth` is `None` for the final stage, whose leftover is unclamped.
/// Shared with the optimizer, which feeds it suffix-cached child columns.
pub(crate) fn stage_column(
    r: u64,
    depth: Option<u64>,
    state_bound: u64,
    child: &[BigUint],
) -> Vec<BigUint> {
    let child_at = |t: u64| -> &BigUint {
        let next = match depth {
            Some(b) => t.min(b),
            None => t,
        };
        &child[next as usize]
    };
    let t_max = state_bound + r;
    let mut column = Vec::with_capacity(state_bound as usize + 1);
    let mut s = BigUint::zero();
    for t in 0..=t_max {
        if t == 0 {
            s = child_at(0).clone();
        } else {
            s <<= 1;
            s += child_at(t);
        }
        if t >= r {
            column.push(s.clone());
        }
    }
    column
}

impl EntropySolution {
    /// The solved regulator.
    pub fn spec(&self) -> &RegulatorSpec {
        &self.spec
    }

    /// Per-stage state bounds `U_0..U_N`.
    pub fn state_bounds(&self) -> &[u64] {
        &self.bounds
    }

    /// Largest tabulated state at `stage`.
    ///
    /// # Panics
    /// If `stage > N`.
    pub fn state_bound(&self, stage: usize) -> u64 {
        self.bounds[stage]
    }

    /// `g_k(u)`, or `None` outside the tabulated range.
    pub fn weight(&self, stage: usize, state: u64) -> Option<&BigUint> {
        self.weights.get(stage)?.get(state as usize)
    }

    /// `g_0(0)`, the exact weight whose `log2` is the information utility.
    pub fn root_weight(&self) -> &BigUint {
        &self.weights[0][0]
    }

    /// The information utility `H*_0(0)` in bits.
    pub fn information_utility(&self) -> f64 {
        log2_biguint(self.root_weight())
    }

    /// `H*_k(u) = log2 g_k(u)`, or `None` outside the tabulated range.
    pub fn stage_entropy(&self, stage: usize, state: u64) -> Option<f64> {
        Some(log2_biguint(self.weight(stage, state)?))
    }

    /// The exact optimal packet-length distribution at `(stage, state)`.
    pub fn optimal_pmf(&self, stage: usize, state: u64) -> Result<StagePmf, EntropyError> {
        let n = self.spec.horizon();
        if stage >= n || state > self.bounds[stage] {
            return Err(EntropyError::StateOutOfRange {
                stage,
                state,
                bound: self.bounds.get(stage).copied().unwrap_or(0),
            });
        }
        let support = state + self.spec.increment(stage);
        let child = &self.weights[stage + 1];
        let mut numerators = Vec::with_capacity(support as usize + 1);
        for len in 0..=support {
            let leftover = support - len;
            let next = if stage + 1 < n {
                leftover.min(self.spec.depth(stage))
            } else {
                leftover
            };
            numerators.push(&child[next as usize] << len);
        }
        let denominator = self.weights[stage][state as usize].clone();
        debug_assert_eq!(
            numerators.iter().sum::<BigUint>(),
            denominator,
            "pmf numerators must sum to g_k(u) exactly"
        );
        Ok(StagePmf {
            stage,
            state,
            numerators,
            denominator,
        })
    }

    /// Total information carried by one conforming schedule: overt payload
    /// bits plus the covert information of each length choice,
    /// `sum_k [l_k - log2 p*_{l_k}(u_k)]`.
    ///
    /// Under the optimal law the per-stage scores telescope, so this equals
    /// `H*_0(0)` (up to float rounding) for *every* conforming schedule, not
    /// merely in expectation.
    pub fn per_schedule_information(&self, lengths: &[u64]) -> Result<f64, EntropyError> {
        let sched = evolve(&self.spec, lengths)?;
        let n = self.spec.horizon();
        let mut total = 0.0f64;
        for k in 0..n {
            // l - log2 p*_l = l - (l + log2 g_{k+1}(next) - log2 g_k(u)),
            // so each stage contributes log2 g_k(u_k) - log2 g_{k+1}(u_{k+1}).
            let here = &self.weights[k][sched.states[k] as usize];
            let next = &self.weights[k + 1][sched.states[k + 1] as usize];
            total += log2_biguint(here) - log2_biguint(next);
        }
        Ok(total)
    }

    /// A reusable sampler of schedules under the optimal law, seeded
    /// deterministically.
    pub fn sampler(&self, seed: u64) -> Sampler<'_> {
        Sampler::new(self, seed)
    }

    /// Exports the full table with decimal-string weights.
    pub fn weight_dump(&self) -> WeightDump {
        WeightDump {
            spec: self.spec.clone(),
            utility_bits: self.information_utility(),
            stages: self
                .weights
                .iter()
                .enumerate()
                .map(|(k, col)| StageWeights {
                    stage: k,
                    state_bound: self.bounds[k],
                    weights: col.iter().map(|w| w.to_string()).collect(),
                })
                .collect(),
        }
    }
}

/// Draws one schedule from the optimal law. Convenience wrapper around
/// [`EntropySolution::sampler`] for single draws.
pub fn sample_schedule(solution: &EntropySolution, seed: u64) -> Schedule {
    solution.sampler(seed).sample()
}

/// Samples schedules from the optimal packet-length law.
///
/// Construction precomputes exact cumulative numerator tables for every
/// reachable `(stage, state)`. Each draw inverts the exact CDF with an
/// integer uniform variate carrying 64 guard bits, so the per-symbol
/// sampling bias is below `2^-64` and ties with the exact boundaries cannot
/// occur.
pub struct Sampler<'a> {
    solution: &'a EntropySolution,
    // cumulative[k][u][i] = sum of the first i pmf numerators at (k, u);
    // the last entry equals g_k(u).
    cumulative: Vec<Vec<Vec<BigUint>>>,
    rng: ChaCha12Rng,
}

impl<'a> Sampler<'a> {
    /// Builds the cumulative tables and seeds the generator.
    pub fn new(solution: &'a EntropySolution, seed: u64) -> Self {
        let n = solution.spec.horizon();
        let mut cumulative = Vec::with_capacity(n);
        for k in 0..n {
            let mut per_state = Vec::with_capacity(solution.bounds[k] as usize + 1);
            for u in 0..=solution.bounds[k] {
                let pmf = solution
                    .optimal_pmf(k, u)
                    .expect("tabulated states always have a pmf");
                let mut cum = Vec::with_capacity(pmf.numerators.len() + 1);
                let mut acc = BigUint::zero();
                cum.push(acc.clone());
                for num in &pmf.numerators {
                    acc += num;
                    cum.push(acc.clone());
                }
                per_state.push(cum);
            }
            cumulative.push(per_state);
        }
        Sampler {
            solution,
            cumulative,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Draws one schedule; always conforms by construction.
    pub fn sample(&mut self) -> Schedule {
        let spec = &self.solution.spec;
        let n = spec.horizon();
        let mut lengths = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n + 1);
        let mut u = 0u64;
        states.push(u);
        for k in 0..n {
            let cum = &self.cumulative[k][u as usize];
            let total = cum.last().expect("cumulative table has a total");
            let target = uniform_below(&mut self.rng, total);
            // Largest i with cum[i] <= target; valid because cum[0] = 0 and
            // target < total = cum[last].
            let idx = cum.partition_point(|c| *c <= target) - 1;
            let len = idx as u64;
            let leftover = u + spec.increment(k) - len;
            u = if k + 1 < n {
                leftover.min(spec.depth(k))
            } else {
                leftover
            };
            lengths.push(len);
            states.push(u);
        }
        Schedule { lengths, states }
    }
}

/// Uniform integer in `[0, bound)` via a scaled draw with 64 guard bits.
fn uniform_below(rng: &mut ChaCha12Rng, bound: &BigUint) -> BigUint {
    debug_assert!(!bound.is_zero());
    let words = (bound.bits() + 64).div_ceil(64);
    let mut digits = Vec::with_capacity(words as usize * 2);
    for _ in 0..words {
        let w = rng.next_u64();
        digits.push(w as u32);
        digits.push((w >> 32) as u32);
    }
    let x = BigUint::new(digits);
    (x * bound) >> (words * 64)
}

/// Independent brute-force evaluation of `g_0(0)` with default budget.
pub fn oracle_utility(spec: &RegulatorSpec) -> Result<OracleResult, EntropyError> {
    oracle_utility_with(spec, DEFAULT_ORACLE_BUDGET)
}

/// Enumerates every conforming schedule depth-first via the evolution rule,
/// accumulating `2^(total bits)`. Must equal [`solve`]'s `g_0(0)` exactly.
/// Intended for small instances: errors once more than `budget` schedules
/// have been visited.
pub fn oracle_utility_with(
    spec: &RegulatorSpec,
    budget: u64,
) -> Result<OracleResult, EntropyError> {
    let n = spec.horizon();
    if n > ORACLE_MAX_HORIZON {
        return Err(EntropyError::ResourceLimit(format!(
            "oracle enumeration is limited to horizons <= {ORACLE_MAX_HORIZON}, got {n}"
        )));
    }

    struct Walk<'s> {
        spec: &'s RegulatorSpec,
        budget: u64,
        weight: BigUint,
        schedules: u64,
    }

    impl Walk<'_> {
        fn go(&mut self, stage: usize, state: u64, bits: u64) -> Result<(), EntropyError> {
            let n = self.spec.horizon();
            if stage == n {
                if self.schedules == self.budget {
                    return Err(EntropyError::EnumerationTooLarge {
                        budget: self.budget,
                    });
                }
                self.schedules += 1;
                self.weight += BigUint::one() << bits;
                return Ok(());
            }
            let avail = state + self.spec.increment(stage);
            for len in 0..=avail {
                let leftover = avail - len;
                let next = if stage + 1 < n {
                    leftover.min(self.spec.depth(stage))
                } else {
                    leftover
                };
                self.go(stage + 1, next, bits + len)?;
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        spec,
        budget,
        weight: BigUint::zero(),
        schedules: 0,
    };
    walk.go(0, 0, 0)?;
    Ok(OracleResult {
        bits: log2_biguint(&walk.weight),
        weight: walk.weight,
        schedules: walk.schedules,
    })
}
