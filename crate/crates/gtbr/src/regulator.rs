//! Regulator parameter types, conformance checking, and comparison
//! constraints.
//!
//! A regulator observes a flow of `N` packets, one per slot. At the start of
//! slot `k` the bucket holds `u_k` tokens (`u_0 = 0`); the regulator adds
//! `r_k` tokens, the packet may spend any `len_k <= u_k + r_k` of them, and —
//! except after the final slot, where clamping would be pointless — the
//! leftover is capped at the bucket depth `B_k`:
//!
//! ```text
//! u_{k+1} = min(u_k + r_k - len_k, B_k)   for k < N-1
//! u_N     =     u_{N-1} + r_{N-1} - len_{N-1}
//! ```
//!
//! [`RegulatorSpec`] carries per-slot `r` and `B` sequences (a GTBR);
//! [`StbrSpec`] is the constant-parameter special case. [`evolve`] replays a
//! packet-length schedule through a regulator, [`reachability`] computes the
//! maximal attainable token state per slot, and [`validate_comparison`]
//! checks the resource-parity constraints under which a GTBR may be compared
//! against an STBR envelope.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted per-slot token increment or bucket depth. Keeping the
/// per-slot parameters below 2^32 (and the horizon below 2^20) guarantees
/// that token arithmetic never overflows a `u64`.
pub const MAX_TOKEN_PARAM: u64 = 1 << 32;

/// Largest accepted horizon.
pub const MAX_HORIZON: usize = 1 << 20;

/// Errors produced by regulator construction, evolution, and comparison.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegulatorError {
    /// Parameters are structurally invalid (wrong sequence lengths, zero
    /// horizon, or out-of-range values).
    #[error("invalid regulator parameters: {0}")]
    InvalidSpec(String),
    /// A schedule asked for more bits than the bucket could supply.
    #[error("slot {slot}: requested {requested} bits but only {available} tokens are available")]
    NonConforming {
        /// Slot at which the violation occurred.
        slot: usize,
        /// Tokens available in that slot (`u_k + r_k`).
        available: u64,
        /// Bits the schedule tried to send.
        requested: u64,
    },
    /// A schedule has the wrong number of packet lengths for the horizon.
    #[error("schedule supplies {got} packet lengths for a {expected}-slot regulator")]
    LengthCountMismatch {
        /// Horizon of the regulator.
        expected: usize,
        /// Number of lengths supplied.
        got: usize,
    },
    /// Comparison requires both regulators to cover the same horizon.
    #[error("cannot compare regulators with different horizons ({gtbr} vs {stbr} slots)")]
    HorizonMismatch {
        /// Horizon of the generalized regulator.
        gtbr: usize,
        /// Horizon of the envelope.
        stbr: usize,
    },
}

fn check_token_params(label: &str, values: &[u64]) -> Result<(), RegulatorError> {
    if let Some(v) = values.iter().find(|&&v| v > MAX_TOKEN_PARAM) {
        return Err(RegulatorError::InvalidSpec(format!(
            "{label} value {v} exceeds the supported maximum {MAX_TOKEN_PARAM}"
        )));
    }
    Ok(())
}

/// A generalized token bucket regulator: per-slot token increments
/// `r_0..r_{N-1}` and bucket depths `B_0..B_{N-2}`.
///
/// There are only `N - 1` depths because the bucket state is never clamped
/// after the final slot. The JSON form uses the field names `N`, `r`, and
/// `B`:
///
/// ```json
/// {"N": 4, "r": [6, 3, 3, 0], "B": [6, 6, 6]}
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "RawGtbr", try_from = "RawGtbr")]
pub struct RegulatorSpec {
    increments: Vec<u64>,
    depths: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawGtbr {
    #[serde(rename = "N")]
    n: usize,
    r: Vec<u64>,
    #[serde(rename = "B", default)]
    b: Vec<u64>,
}

impl From<RegulatorSpec> for RawGtbr {
    fn from(spec: RegulatorSpec) -> Self {
        RawGtbr {
            n: spec.increments.len(),
            r: spec.increments,
            b: spec.depths,
        }
    }
}

impl TryFrom<RawGtbr> for RegulatorSpec {
    type Error = RegulatorError;

    fn try_from(raw: RawGtbr) -> Result<Self, Self::Error> {
        if raw.n != raw.r.len() {
            return Err(RegulatorError::InvalidSpec(format!(
                "N is {} but {} increments were given",
                raw.n,
                raw.r.len()
            )));
        }
        RegulatorSpec::new(raw.r, raw.b)
    }
}

impl RegulatorSpec {
    /// Builds a regulator from `N` per-slot increments and `N - 1` depths.
    pub fn new(increments: Vec<u64>, depths: Vec<u64>) -> Result<Self, RegulatorError> {
        let n = increments.len();
        if n == 0 {
            return Err(RegulatorError::InvalidSpec(
                "horizon must be at least one slot".into(),
            ));
        }
        if n > MAX_HORIZON {
            return Err(RegulatorError::InvalidSpec(format!(
                "horizon {n} exceeds the supported maximum {MAX_HORIZON}"
            )));
        }
        if depths.len() + 1 != n {
            return Err(RegulatorError::InvalidSpec(format!(
                "a {n}-slot regulator needs {} bucket depths, got {}",
                n - 1,
                depths.len()
            )));
        }
        check_token_params("increment", &increments)?;
        check_token_params("depth", &depths)?;
        Ok(RegulatorSpec { increments, depths })
    }

    /// Number of slots `N`.
    pub fn horizon(&self) -> usize {
        self.increments.len()
    }

    /// Per-slot token increments `r_0..r_{N-1}`.
    pub fn increments(&self) -> &[u64] {
        &self.increments
    }

    /// Per-slot bucket depths `B_0..B_{N-2}`.
    pub fn depths(&self) -> &[u64] {
        &self.depths
    }

    /// Token increment for slot `k`.
    pub fn increment(&self, k: usize) -> u64 {
        self.increments[k]
    }

    /// Bucket depth applied after slot `k` (defined for `k < N - 1`).
    pub fn depth(&self, k: usize) -> u64 {
        self.depths[k]
    }

    /// Total tokens issued over the horizon.
    pub fn total_tokens(&self) -> u64 {
        self.increments.iter().sum()
    }
}

impl std::fmt::Display for RegulatorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |xs: &[u64]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "N={} r=({}) B=({})",
            self.horizon(),
            join(&self.increments),
            join(&self.depths)
        )
    }
}

/// A single-parameter token bucket regulator: constant increment `r` and
/// depth `B` over an `N`-slot horizon. JSON form:
///
/// ```json
/// {"N": 4, "r": 3, "B": 6}
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StbrSpec {
    /// Number of slots.
    #[serde(rename = "N")]
    pub horizon: usize,
    /// Per-slot token increment.
    pub r: u64,
    /// Bucket depth.
    #[serde(rename = "B")]
    pub b: u64,
}

impl StbrSpec {
    /// Builds a constant-parameter regulator, validating ranges.
    pub fn new(horizon: usize, r: u64, b: u64) -> Result<Self, RegulatorError> {
        let spec = StbrSpec { horizon, r, b };
        spec.to_gtbr()?;
        Ok(spec)
    }

    /// Expands to the equivalent generalized regulator (`r_k = r`,
    /// `B_k = B` for every slot).
    pub fn to_gtbr(&self) -> Result<RegulatorSpec, RegulatorError> {
        if self.horizon == 0 {
            return Err(RegulatorError::InvalidSpec(
                "horizon must be at least one slot".into(),
            ));
        }
        RegulatorSpec::new(vec![self.r; self.horizon], vec![self.b; self.horizon - 1])
    }
}

impl std::fmt::Display for StbrSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(N={}, r={}, B={})", self.horizon, self.r, self.b)
    }
}

/// A packet-length schedule together with the token states it induces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    /// Packet lengths `len_0..len_{N-1}` in bits.
    pub lengths: Vec<u64>,
    /// Token states `u_0..u_N` (one more entry than `lengths`; `u_0 = 0`).
    pub states: Vec<u64>,
}

impl Schedule {
    /// Total bits carried by the schedule's packets.
    pub fn total_bits(&self) -> u64 {
        self.lengths.iter().sum()
    }
}

/// Replays `lengths` through the regulator, returning the full token-state
/// trajectory, or [`RegulatorError::NonConforming`] at the first slot whose
/// packet exceeds the available tokens.
pub fn evolve(spec: &RegulatorSpec, lengths: &[u64]) -> Result<Schedule, RegulatorError> {
    let n = spec.horizon();
    if lengths.len() != n {
        return Err(RegulatorError::LengthCountMismatch {
            expected: n,
            got: lengths.len(),
        });
    }
    let mut states = Vec::with_capacity(n + 1);
    let mut u = 0u64;
    states.push(u);
    for (k, &len) in lengths.iter().enumerate() {
        let available = u + spec.increment(k);
        if len > available {
            return Err(RegulatorError::NonConforming {
                slot: k,
                available,
                requested: len,
            });
        }
        let leftover = available - len;
        u = if k + 1 < n {
            leftover.min(spec.depth(k))
        } else {
            leftover
        };
        states.push(u);
    }
    Ok(Schedule {
        lengths: lengths.to_vec(),
        states,
    })
}

/// Returns `true` when `lengths` conforms to the regulator.
pub fn conforms(spec: &RegulatorSpec, lengths: &[u64]) -> bool {
    evolve(spec, lengths).is_ok()
}

/// Maximal reachable token state at the start of each slot: `phi_0 = 0`,
/// `phi_k = min(phi_{k-1} + r_{k-1}, B_{k-1})`.
///
/// The maximum is attained by the all-zero schedule, so `phi_k` bounds every
/// reachable `u_k`. A depth `B_{k-1}` strictly above `phi_{k-1} + r_{k-1}`
/// can never bind in slot `k`.
pub fn reachability(spec: &RegulatorSpec) -> Vec<u64> {
    let n = spec.horizon();
    let mut phi = Vec::with_capacity(n);
    phi.push(0u64);
    for k in 1..n {
        phi.push((phi[k - 1] + spec.increment(k - 1)).min(spec.depth(k - 1)));
    }
    phi
}

/// Outcome of checking one comparison constraint.
#[derive(Debug, Clone, Serialize)]
pub struct ConstraintVerdict {
    /// Stable identifier for the constraint.
    pub name: &'static str,
    /// Whether the constraint holds.
    pub satisfied: bool,
    /// Human-readable account of the two sides of the comparison.
    pub detail: String,
}

/// Resource-parity verdicts for a GTBR measured against an STBR envelope.
///
/// A comparison is fair only when the generalized regulator commits the same
/// aggregate token budget and no more aggregate bucket capacity than the
/// envelope, the envelope's depth sits in the moderate band relative to its
/// rate, and no single-slot increment exceeds the envelope depth.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// `sum(r_k) == N * r`.
    pub aggregate_tokens: ConstraintVerdict,
    /// `sum(B_k) <= (N - 1) * B`.
    pub aggregate_depth: ConstraintVerdict,
    /// `2 r <= B <= 5 r`.
    pub depth_rate_ratio: ConstraintVerdict,
    /// `r_k <= B` for every slot.
    pub increment_bound: ConstraintVerdict,
    /// Whether the aggregate depth budget is spent exactly
    /// (`sum(B_k) == (N - 1) * B`). Entropy never decreases in any single
    /// `B_k`, so optimal sequences meet this with equality; searching with
    /// the equality restriction loses nothing.
    pub aggregate_depth_equality: bool,
}

impl ComparisonReport {
    /// `true` when all four constraints hold.
    pub fn all_satisfied(&self) -> bool {
        self.verdicts().iter().all(|v| v.satisfied)
    }

    /// The four constraint verdicts in documentation order.
    pub fn verdicts(&self) -> [&ConstraintVerdict; 4] {
        [
            &self.aggregate_tokens,
            &self.aggregate_depth,
            &self.depth_rate_ratio,
            &self.increment_bound,
        ]
    }
}

/// Checks the resource-parity constraints for comparing `gtbr` against the
/// `envelope`. Errors only when the horizons differ; individual constraint
/// failures are reported in the [`ComparisonReport`].
pub fn validate_comparison(
    gtbr: &RegulatorSpec,
    envelope: &StbrSpec,
) -> Result<ComparisonReport, RegulatorError> {
    let n = gtbr.horizon();
    if n != envelope.horizon {
        return Err(RegulatorError::HorizonMismatch {
            gtbr: n,
            stbr: envelope.horizon,
        });
    }
    let n64 = n as u64;
    let token_sum = gtbr.total_tokens();
    let token_budget = n64 * envelope.r;
    let depth_sum: u64 = gtbr.depths().iter().sum();
    let depth_budget = (n64 - 1) * envelope.b;
    let worst_increment = gtbr.increments().iter().copied().max().unwrap_or(0);

    Ok(ComparisonReport {
        aggregate_tokens: ConstraintVerdict {
            name: "aggregate_tokens",
            satisfied: token_sum == token_budget,
            detail: format!("sum(r_k) = {token_sum}, budget N*r = {token_budget}"),
        },
        aggregate_depth: ConstraintVerdict {
            name: "aggregate_depth",
            satisfied: depth_sum <= depth_budget,
            detail: format!("sum(B_k) = {depth_sum}, budget (N-1)*B = {depth_budget}"),
        },
        depth_rate_ratio: ConstraintVerdict {
            name: "depth_rate_ratio",
            satisfied: 2 * envelope.r <= envelope.b && envelope.b <= 5 * envelope.r,
            detail: format!(
                "2r = {} <= B = {} <= 5r = {}",
                2 * envelope.r,
                envelope.b,
                5 * envelope.r
            ),
        },
        increment_bound: ConstraintVerdict {
            name: "increment_bound",
            satisfied: worst_increment <= envelope.b,
            detail: format!("max(r_k) = {worst_increment}, bound B = {}", envelope.b),
        },
        aggregate_depth_equality: depth_sum == depth_budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gtbr(r: &[u64], b: &[u64]) -> RegulatorSpec {
        RegulatorSpec::new(r.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(matches!(
            RegulatorSpec::new(vec![], vec![]),
            Err(RegulatorError::InvalidSpec(_))
        ));
        assert!(matches!(
            RegulatorSpec::new(vec![3, 3], vec![6, 6]),
            Err(RegulatorError::InvalidSpec(_))
        ));
        assert!(matches!(
            RegulatorSpec::new(vec![3, 3, 3], vec![6]),
            Err(RegulatorError::InvalidSpec(_))
        ));
        assert!(RegulatorSpec::new(vec![5], vec![]).is_ok());
    }

    #[test]
    fn evolve_tracks_states_and_clamps() {
        let spec = gtbr(&[6, 3, 3, 0], &[6, 6, 6]);
        let sched = evolve(&spec, &[6, 3, 3, 0]).unwrap();
        assert_eq!(sched.states, vec![0, 0, 0, 0, 0]);

        // Saving everything exercises the clamp in every slot.
        let sched = evolve(&spec, &[0, 0, 0, 0]).unwrap();
        assert_eq!(sched.states, vec![0, 6, 6, 6, 6]);

        // A two-slot regulator with depth 1: slot 0 saves its token, slot 1
        // spends both.
        let spec = gtbr(&[1, 1], &[1]);
        let sched = evolve(&spec, &[0, 2]).unwrap();
        assert_eq!(sched.states, vec![0, 1, 0]);
        assert_eq!(sched.total_bits(), 2);
    }

    #[test]
    fn evolve_final_slot_is_unclamped() {
        // Depth 1 everywhere, but the state after the last slot may exceed it.
        let spec = gtbr(&[5, 5], &[1]);
        let sched = evolve(&spec, &[0, 0]).unwrap();
        assert_eq!(sched.states, vec![0, 1, 6]);
    }

    #[test]
    fn evolve_reports_first_violation() {
        let spec = gtbr(&[6, 3, 3, 0], &[6, 6, 6]);
        let err = evolve(&spec, &[7, 0, 0, 0]).unwrap_err();
        assert_eq!(
            err,
            RegulatorError::NonConforming {
                slot: 0,
                available: 6,
                requested: 7
            }
        );
        let err = evolve(&spec, &[6, 4, 0, 0]).unwrap_err();
        assert_eq!(
            err,
            RegulatorError::NonConforming {
                slot: 1,
                available: 3,
                requested: 4
            }
        );
        assert!(matches!(
            evolve(&spec, &[1, 2, 3]),
            Err(RegulatorError::LengthCountMismatch {
                expected: 4,
                got: 3
            })
        ));
    }

    #[test]
    fn reachability_matches_hand_computation() {
        assert_eq!(reachability(&gtbr(&[6, 3, 3, 0], &[6, 6, 6])), [0, 6, 6, 6]);
        assert_eq!(
            reachability(&gtbr(&[12, 0, 0, 0], &[12, 12, 12])),
            [0, 12, 12, 12]
        );
        // Depth below the inflow binds immediately.
        assert_eq!(reachability(&gtbr(&[5, 1, 1], &[2, 9])), [0, 2, 3]);
        assert_eq!(reachability(&gtbr(&[4], &[])), [0]);
    }

    #[test]
    fn comparison_verdicts() {
        let envelope = StbrSpec::new(4, 3, 6).unwrap();
        let report = validate_comparison(&gtbr(&[6, 3, 3, 0], &[6, 6, 6]), &envelope).unwrap();
        assert!(report.all_satisfied());
        assert!(report.aggregate_depth_equality);

        let envelope = StbrSpec::new(4, 3, 12).unwrap();
        let report = validate_comparison(&gtbr(&[12, 0, 0, 0], &[12, 12, 12]), &envelope).unwrap();
        assert!(report.all_satisfied());
        assert!(report.aggregate_depth_equality);

        // Token budget overspent.
        let report = validate_comparison(&gtbr(&[9, 3, 3, 0], &[6, 6, 6]), &envelope).unwrap();
        assert!(!report.aggregate_tokens.satisfied);

        // Single increment above the envelope depth.
        let envelope = StbrSpec::new(4, 3, 6).unwrap();
        let report = validate_comparison(&gtbr(&[7, 3, 2, 0], &[6, 6, 6]), &envelope).unwrap();
        assert!(!report.increment_bound.satisfied);
        assert!(report.aggregate_tokens.satisfied);

        // Depth/rate band violated on both sides.
        let low = StbrSpec::new(4, 3, 5).unwrap();
        let report = validate_comparison(&low.to_gtbr().unwrap(), &low).unwrap();
        assert!(!report.depth_rate_ratio.satisfied);
        let high = StbrSpec::new(4, 3, 16).unwrap();
        let report = validate_comparison(&high.to_gtbr().unwrap(), &high).unwrap();
        assert!(!report.depth_rate_ratio.satisfied);

        // Horizon mismatch is an error, not a verdict.
        assert!(matches!(
            validate_comparison(&gtbr(&[3, 3], &[6]), &StbrSpec::new(4, 3, 6).unwrap()),
            Err(RegulatorError::HorizonMismatch { gtbr: 2, stbr: 4 })
        ));
    }

    #[test]
    fn envelope_expands_to_its_own_valid_comparison() {
        let envelope = StbrSpec::new(5, 4, 9).unwrap();
        let expanded = envelope.to_gtbr().unwrap();
        assert_eq!(expanded.increments(), &[4, 4, 4, 4, 4]);
        assert_eq!(expanded.depths(), &[9, 9, 9, 9]);
        let report = validate_comparison(&expanded, &envelope).unwrap();
        assert!(report.all_satisfied());
        assert!(report.aggregate_depth_equality);
    }

    #[test]
    fn json_round_trips() {
        let spec = gtbr(&[6, 3, 3, 0], &[6, 6, 6]);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"N":4,"r":[6,3,3,0],"B":[6,6,6]}"#);
        let back: RegulatorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);

        // N disagreeing with the increment count is rejected.
        assert!(serde_json::from_str::<RegulatorSpec>(r#"{"N":3,"r":[1,2],"B":[5]}"#).is_err());
        // Wrong depth count is rejected.
        assert!(serde_json::from_str::<RegulatorSpec>(r#"{"N":2,"r":[1,2],"B":[5,5]}"#).is_err());

        let stbr: StbrSpec = serde_json::from_str(r#"{"N":4,"r":3,"B":6}"#).unwrap();
        assert_eq!(stbr, StbrSpec::new(4, 3, 6).unwrap());

        // A single-slot regulator has no depths; "B" may be omitted.
        let one: RegulatorSpec = serde_json::from_str(r#"{"N":1,"r":[2]}"#).unwrap();
        assert_eq!(one, gtbr(&[2], &[]));
    }

    proptest! {
        /// Every intermediate state a schedule reaches is capped by the
        /// preceding slot's depth, and never exceeds the tokens issued so far.
        #[test]
        fn states_respect_depths(
            params in proptest::collection::vec((0u64..8, 0u64..10), 1..7),
            seed_lens in proptest::collection::vec(0u64..20, 1..7),
        ) {
            let n = params.len();
            let increments: Vec<u64> = params.iter().map(|p| p.0).collect();
            let depths: Vec<u64> = params.iter().take(n - 1).map(|p| p.1).collect();
            let spec = RegulatorSpec::new(increments.clone(), depths.clone()).unwrap();

            // Clip an arbitrary length vector into a conforming schedule.
            let mut lens = vec![0u64; n];
            let mut u = 0u64;
            for k in 0..n {
                let avail = u + increments[k];
                lens[k] = seed_lens.get(k).copied().unwrap_or(0).min(avail);
                let left = avail - lens[k];
                u = if k + 1 < n { left.min(depths[k]) } else { left };
            }

            let sched = evolve(&spec, &lens).unwrap();
            prop_assert_eq!(sched.states[0], 0);
            for k in 1..n {
                prop_assert!(sched.states[k] <= depths[k - 1]);
                prop_assert!(sched.states[k] <= increments[..k].iter().sum::<u64>());
            }
        }

        /// `phi` obeys its recurrence: each step either adds the increment or
        /// clamps to the depth, and the all-zero schedule attains it exactly.
        #[test]
        fn reachability_is_attained_by_hoarding(
            params in proptest::collection::vec((0u64..8, 0u64..10), 1..7),
        ) {
            let n = params.len();
            let increments: Vec<u64> = params.iter().map(|p| p.0).collect();
            let depths: Vec<u64> = params.iter().take(n - 1).map(|p| p.1).collect();
            let spec = RegulatorSpec::new(increments, depths).unwrap();

            let phi = reachability(&spec);
            let sched = evolve(&spec, &vec![0; n]).unwrap();
            prop_assert_eq!(&phi[..], &sched.states[..n]);
        }
    }
}
