//! Exact flow-entropy analysis of generalized token bucket regulators.
//!
//! A token bucket regulator releases one packet per slot, spending one token
//! per bit. A *generalized* regulator (GTBR) may change its token increment
//! `r_k` and bucket depth `B_k` from slot to slot over a finite horizon of
//! `N` slots; the classical single-parameter regulator (STBR) is the special
//! case of constant `r` and `B`. The set of packet-length sequences a
//! regulator admits carries information, and the largest achievable entropy
//! over that set — the regulator's *information utility* — is attained by a
//! specific product distribution that this crate computes exactly.
//!
//! The crate is organised around four layers:
//!
//! * [`regulator`] — parameter types, conformance checking, token-state
//!   evolution, reachability, and the constraint set used when comparing a
//!   GTBR against an STBR envelope.
//! * [`entropy`] — the backward-induction solver. It tabulates the integer
//!   schedule-tree weights `g_k(u)` (so `H*_k(u) = log2 g_k(u)` is exact up
//!   to one floating-point log), the induced optimal packet-length
//!   distributions, sampling, and per-schedule information content.
//! * [`optimizer`] — exhaustive search over `(r_0..r_{N-1}, B_0..B_{N-2})`
//!   sequences meeting the comparison constraints, returning the
//!   entropy-optimal parameter sequences for an STBR envelope.
//! * [`codec`] — an arithmetic-coding construction that realises the optimal
//!   distribution: it maps payload bits onto conforming packet-length
//!   schedules (and packet contents) and back, demonstrating that the
//!   information utility is operationally achievable.
//!
//! [`reference`] bundles the golden optimal-parameter table used by the
//! `reproduce-table` subcommand and the regression suite, and [`bits`] is the
//! small MSB-first bit-string type shared by the codec and the CLI.

pub mod bits;
pub mod codec;
pub mod entropy;
pub mod optimizer;
pub mod reference;
pub mod regulator;

pub use bits::Bits;
pub use codec::{
    decode, decode_chained, encode, encode_chained, frames_from_bytes, frames_to_bytes,
    CodecError, CodecFrame, Decoded,
};
pub use entropy::{log2_biguint, solve, solve_with, EntropyError, EntropySolution, SolveOptions};
pub use optimizer::{search, DepthMode, SearchError, SearchOutcome, SearchProblem};
pub use reference::{agrees_with_reference, ReferenceOptimum, ReferenceRow, REFERENCE_ROWS};
pub use regulator::{
    evolve, reachability, validate_comparison, ComparisonReport, RegulatorError, RegulatorSpec,
    Schedule, StbrSpec,
};
