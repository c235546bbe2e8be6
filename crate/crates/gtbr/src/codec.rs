//! Packet-length source codec that realizes a regulator's information
//! utility.
//!
//! A conforming packet-length schedule carries information on two channels at
//! once: the *choice* of each length (covert — visible to anyone who can see
//! packet sizes) and the packet *contents* (overt). Driving the length
//! choices with an arithmetic coder matched to the optimal per-stage
//! distributions of an [`EntropySolution`] makes a frame convey, on average,
//! the solution's full information utility.
//!
//! # Construction
//!
//! [`encode`] runs an exact arithmetic decoder over the payload bit stream:
//! at stage `k` in state `u` it splits the current code interval in
//! proportion to the exact rational pmf `p*(l | k, u)` and selects the packet
//! length whose subinterval contains the payload's code point. Payload bits
//! "consumed" by interval renormalization are the covert bits; the packet
//! contents are then filled with the following payload bits in order.
//! [`decode`] replays the observed lengths through the mirror-image
//! arithmetic *encoder*, which re-emits exactly the consumed covert bits,
//! then splices the overt contents back in.
//!
//! All interval arithmetic is exact: bounds are `BigUint` numerators over a
//! power-of-two denominator, and pmf splits use the exact stage weights, so
//! encode and decode replay bit-identical trajectories with no rounding
//! drift. Payloads shorter than a frame's capacity are implicitly
//! zero-extended; the true delivered length rides in each frame's 16-bit
//! header, so decoding never needs out-of-band length information.
//!
//! # Rate accounting
//!
//! A single frame ends with up to a few bits of information stranded in the
//! coder's final interval (the standard arithmetic-coding termination cost),
//! so a standalone frame delivers slightly *less* than the utility bound and
//! never more. [`encode_chained`] carries the coder state across frames,
//! amortizing that debt: the per-frame average approaches the bound as the
//! chain grows. Frame boundaries themselves are out-of-band (the wire format
//! is self-delimiting), so no in-band terminator spends information.
//!
//! # Wire format
//!
//! ```text
//! frame := payload_bits:u16be            delivered payload bits
//!          repeat horizon times:
//!            length:u16be                packet length in bits
//!            content:ceil(length/8) bytes  MSB-first, zero-padded
//! ```
//!
//! Frames concatenate with no separator; [`frames_from_bytes`] re-splits
//! them with the regulator's horizon. Padding bits must be zero.

use crate::bits::Bits;
use crate::entropy::{EntropyError, EntropySolution};
use crate::regulator::{evolve, RegulatorError, RegulatorSpec, Schedule};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

/// Bits appended to the code register whenever precision grows.
const GROW_STEP: u64 = 64;
/// Minimum headroom (in bits) between the interval width and a pmf's total
/// weight before a refinement is allowed; keeps every subinterval nonempty.
const GUARD_BITS: u64 = 32;
/// Chained encoding admits this many frames of slack beyond the expected
/// count before concluding it is stalled.
const CHAIN_SLACK_FRAMES: usize = 64;

/// Errors from encoding, decoding, or (de)serializing frames.
#[derive(Debug, Error)]
pub enum CodecError {
    /// The schedule violates the regulator (or has the wrong slot count).
    #[error(transparent)]
    Regulator(#[from] RegulatorError),
    /// The entropy solver rejected a pmf query.
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    /// A frame would deliver more bits than the 16-bit header can record.
    #[error("frame delivers {bits} payload bits, exceeding the 16-bit header")]
    FrameTooLarge {
        /// Bits the frame would have to account for.
        bits: u64,
    },
    /// A frame's fields or wire bytes are inconsistent.
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    /// The regulator admits exactly one schedule, which carries no bits, so
    /// a nonempty payload can never be delivered.
    #[error("regulator has zero information utility; payload can never be delivered")]
    ZeroCapacity,
    /// Chained encoding exceeded its frame budget without delivering the
    /// payload.
    #[error("chained encoding stalled after {frames} frames")]
    ChainStalled {
        /// Frames emitted before giving up.
        frames: usize,
    },
}

/// One encoded frame: a conforming schedule plus packet contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodecFrame {
    /// Payload bits this frame delivers (wire header). At most the frame's
    /// capacity (covert bits consumed + total packet bits).
    pub payload_bits: u16,
    /// The conforming packet-length schedule, with its state trajectory.
    pub schedule: Schedule,
    /// Per-slot packet contents; `contents[k]` holds exactly
    /// `schedule.lengths[k]` bits.
    pub contents: Vec<Bits>,
}

/// Result of decoding one frame or a chain of frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    /// The delivered payload prefix (length = sum of frame headers).
    pub payload: Bits,
    /// Covert bits recovered from the length choices alone.
    pub covert_bits_consumed: u64,
    /// Overt bits carried inside packets.
    pub overt_bits: u64,
}

/// A dyadic subinterval of `[0, 1)`: `[low, low + range) / 2^e`, with
/// `range >= 1` and `low + range <= 2^e`.
///
/// `refine` narrows it in proportion to exact pmf weights; `try_emit` peels
/// off one fully determined leading bit and rescales; `grow` raises the
/// precision `e` when the interval gets too narrow to split safely.
#[derive(Debug, Clone)]
struct Interval {
    e: u64,
    low: BigUint,
    range: BigUint,
}

impl Interval {
    fn new() -> Self {
        Interval {
            e: GROW_STEP,
            low: BigUint::zero(),
            range: BigUint::one() << GROW_STEP,
        }
    }

    /// Whether the interval is too narrow to refine against `total` without
    /// risking an empty subinterval.
    fn needs_grow(&self, total: &BigUint) -> bool {
        self.range < (total << GUARD_BITS)
    }

    /// Doubles the precision denominator `GROW_STEP` bits at a time.
    fn grow(&mut self) {
        self.low <<= GROW_STEP;
        self.range <<= GROW_STEP;
        self.e += GROW_STEP;
    }

    /// Narrows to the subinterval spanned by cumulative weights
    /// `[cum_lo, cum_hi)` out of `total`.
    fn refine(&mut self, cum_lo: &BigUint, cum_hi: &BigUint, total: &BigUint) {
        let lo_off = (&self.range * cum_lo) / total;
        let hi_off = (&self.range * cum_hi) / total;
        self.low += &lo_off;
        self.range = hi_off - lo_off;
    }

    /// If the interval lies entirely in one half of `[0, 2^e)`, emits that
    /// half's bit and rescales the interval by two; otherwise `None`.
    fn try_emit(&mut self) -> Option<bool> {
        let half = BigUint::one() << (self.e - 1);
        if &self.low + &self.range <= half {
            self.low <<= 1u32;
            self.range <<= 1u32;
            Some(false)
        } else if self.low >= half {
            self.low -= half;
            self.low <<= 1u32;
            self.range <<= 1u32;
            Some(true)
        } else {
            None
        }
    }

    /// Shortest bit string that pins a dyadic cell inside the interval: a
    /// code point starting `emitted ++ seal()` stays inside it under *any*
    /// continuation. Used to make a replayed schedule re-encodable.
    #[cfg(test)]
    fn seal(&self) -> Bits {
        for k in 0..=self.e {
            let step = BigUint::one() << (self.e - k);
            let cell = (&self.low + &step - 1u32) / &step; // ceil(low / step)
            if (&cell + 1u32) * &step <= &self.low + &self.range {
                let mut out = Bits::with_capacity(k as usize);
                for i in (0..k).rev() {
                    out.push(cell.bit(i));
                }
                return out;
            }
        }
        unreachable!("a unit cell always fits because range >= 1");
    }
}

/// Payload-driven side of the coder: holds the code register (the next `e`
/// payload bits after the `consumed` renormalized ones) and picks, at each
/// stage, the symbol whose subinterval contains the code point.
struct Coder<'a> {
    interval: Interval,
    code: BigUint,
    consumed: u64,
    payload: &'a Bits,
}

impl<'a> Coder<'a> {
    fn new(payload: &'a Bits) -> Self {
        let mut coder = Coder {
            interval: Interval::new(),
            code: BigUint::zero(),
            consumed: 0,
            payload,
        };
        for i in 0..GROW_STEP {
            coder.code <<= 1u32;
            if coder.payload_bit(i) {
                coder.code += 1u32;
            }
        }
        coder
    }

    /// Payload bit `i`, zero-extended past the end.
    fn payload_bit(&self, i: u64) -> bool {
        self.payload.get(i as usize).unwrap_or(false)
    }

    /// Grows precision until `total` fits, pulling fresh payload bits into
    /// the code register to match.
    fn ensure(&mut self, total: &BigUint) {
        while self.interval.needs_grow(total) {
            let base = self.consumed + self.interval.e;
            self.interval.grow();
            let mut chunk = 0u64;
            for j in 0..GROW_STEP {
                chunk = (chunk << 1) | u64::from(self.payload_bit(base + j));
            }
            self.code = (&self.code << GROW_STEP) | BigUint::from(chunk);
        }
    }

    /// Selects the symbol whose subinterval of `cum` contains the code
    /// point, refines onto it, and renormalizes (consuming payload bits).
    ///
    /// `cum` is a cumulative weight table: `cum[s] <= code position <
    /// cum[s+1]` selects symbol `s`; `cum[0] = 0` and `*cum.last()` is the
    /// total weight.
    fn select(&mut self, cum: &[BigUint]) -> usize {
        let total = cum.last().expect("cumulative table is nonempty");
        self.ensure(total);
        debug_assert!(self.interval.low <= self.code);
        let offset = &self.code - &self.interval.low;
        debug_assert!(offset < self.interval.range);
        // Largest cumulative position guaranteed to be covered by the code
        // point's cell: symbol s satisfies cum[s] <= target < cum[s+1].
        let target = ((offset + 1u32) * total - 1u32) / &self.interval.range;
        debug_assert!(&target < total);
        let symbol = cum.partition_point(|c| c <= &target) - 1;
        self.interval.refine(&cum[symbol], &cum[symbol + 1], total);
        while let Some(bit) = self.interval.try_emit() {
            let msb = BigUint::one() << (self.interval.e - 1);
            debug_assert_eq!(self.code.bit(self.interval.e - 1), bit);
            if bit {
                self.code -= msb;
            }
            self.code <<= 1u32;
            if self.payload_bit(self.consumed + self.interval.e) {
                self.code += 1u32;
            }
            self.consumed += 1;
        }
        debug_assert!(self.interval.low <= self.code);
        debug_assert!(&self.code - &self.interval.low < self.interval.range);
        symbol
    }
}

/// Schedule-driven side of the coder: replays observed symbols through the
/// identical interval trajectory and collects the renormalization bits,
/// which are exactly the payload bits the encoder consumed.
struct Mirror {
    interval: Interval,
    emitted: Bits,
}

impl Mirror {
    fn new() -> Self {
        Mirror {
            interval: Interval::new(),
            emitted: Bits::new(),
        }
    }

    fn push(&mut self, cum: &[BigUint], symbol: usize) {
        let total = cum.last().expect("cumulative table is nonempty");
        while self.interval.needs_grow(total) {
            self.interval.grow();
        }
        self.interval.refine(&cum[symbol], &cum[symbol + 1], total);
        while let Some(bit) = self.interval.try_emit() {
            self.emitted.push(bit);
        }
    }
}

/// Cumulative weight table for stage `stage` in state `state`:
/// `cum[l]..cum[l+1]` is length `l`'s exact probability mass.
fn cumulative(
    solution: &EntropySolution,
    stage: usize,
    state: u64,
) -> Result<Vec<BigUint>, CodecError> {
    let pmf = solution.optimal_pmf(stage, state)?;
    let mut cum = Vec::with_capacity(pmf.numerators().len() + 1);
    let mut acc = BigUint::zero();
    cum.push(acc.clone());
    for weight in pmf.numerators() {
        acc += weight;
        cum.push(acc.clone());
    }
    debug_assert_eq!(&acc, pmf.denominator());
    Ok(cum)
}

/// Runs one frame's worth of length selections through `coder`.
fn select_frame(solution: &EntropySolution, coder: &mut Coder<'_>) -> Result<Vec<u64>, CodecError> {
    let spec = solution.spec();
    let n = spec.horizon();
    let mut state = 0u64;
    let mut lengths = Vec::with_capacity(n);
    for stage in 0..n {
        let cum = cumulative(solution, stage, state)?;
        let len = coder.select(&cum) as u64;
        let leftover = state + spec.increment(stage) - len;
        state = if stage + 1 < n {
            leftover.min(spec.depth(stage))
        } else {
            leftover
        };
        lengths.push(len);
    }
    Ok(lengths)
}

/// Replays a schedule's length choices into `mirror`.
fn replay(
    solution: &EntropySolution,
    schedule: &Schedule,
    mirror: &mut Mirror,
) -> Result<(), CodecError> {
    for (stage, (&len, &state)) in schedule.lengths.iter().zip(&schedule.states).enumerate() {
        let cum = cumulative(solution, stage, state)?;
        debug_assert!((len as usize) + 1 < cum.len(), "evolve bounds the length");
        mirror.push(&cum, len as usize);
    }
    Ok(())
}

/// Checks that a frame's contents agree slot-by-slot with its schedule.
fn check_contents(schedule: &Schedule, contents: &[Bits]) -> Result<(), CodecError> {
    if contents.len() != schedule.lengths.len() {
        return Err(CodecError::MalformedFrame(format!(
            "expected {} packet contents, found {}",
            schedule.lengths.len(),
            contents.len()
        )));
    }
    for (slot, (content, &len)) in contents.iter().zip(&schedule.lengths).enumerate() {
        if content.len() as u64 != len {
            return Err(CodecError::MalformedFrame(format!(
                "slot {slot} holds {} content bits but its length field says {len}",
                content.len()
            )));
        }
    }
    Ok(())
}

/// Fills per-slot contents from `payload` starting at bit `pos`,
/// zero-extending past the payload's end. Returns the advanced cursor.
fn fill_contents(payload: &Bits, mut pos: usize, lengths: &[u64]) -> (Vec<Bits>, usize) {
    let mut contents = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let mut packet = Bits::with_capacity(len as usize);
        for _ in 0..len {
            packet.push(payload.get(pos).unwrap_or(false));
            pos += 1;
        }
        contents.push(packet);
    }
    (contents, pos)
}

/// Encodes one frame: payload bits choose a conforming schedule (covert)
/// and fill the packets (overt).
///
/// The payload is zero-extended if the frame needs more bits than it has;
/// the frame header records how many real payload bits were delivered,
/// `min(payload.len(), covert + overt)`.
pub fn encode(solution: &EntropySolution, payload: &Bits) -> Result<CodecFrame, CodecError> {
    let mut coder = Coder::new(payload);
    let lengths = select_frame(solution, &mut coder)?;
    let covert = coder.consumed;
    let overt: u64 = lengths.iter().sum();
    let (contents, _) = fill_contents(payload, covert as usize, &lengths);
    let delivered = (payload.len() as u64).min(covert + overt);
    let payload_bits =
        u16::try_from(delivered).map_err(|_| CodecError::FrameTooLarge { bits: delivered })?;
    let schedule = evolve(solution.spec(), &lengths)?;
    Ok(CodecFrame {
        payload_bits,
        schedule,
        contents,
    })
}

/// Decodes one frame back into the delivered payload prefix.
///
/// The schedule is re-validated against the solution's regulator, the
/// covert bits are recovered by replaying the length choices, and the
/// contents are spliced in after them.
pub fn decode(solution: &EntropySolution, frame: &CodecFrame) -> Result<Decoded, CodecError> {
    let schedule = evolve(solution.spec(), &frame.schedule.lengths)?;
    check_contents(&schedule, &frame.contents)?;
    let mut mirror = Mirror::new();
    replay(solution, &schedule, &mut mirror)?;
    assemble(
        mirror,
        &frame.contents,
        u64::from(frame.payload_bits),
        schedule.total_bits(),
    )
}

/// Splices covert and overt bits together and truncates to the delivered
/// length, validating the header against capacity.
fn assemble(
    mirror: Mirror,
    contents: &[Bits],
    delivered: u64,
    overt_bits: u64,
) -> Result<Decoded, CodecError> {
    let covert = mirror.emitted.len() as u64;
    if delivered > covert + overt_bits {
        return Err(CodecError::MalformedFrame(format!(
            "header claims {delivered} payload bits but capacity is {}",
            covert + overt_bits
        )));
    }
    let mut payload = mirror.emitted;
    for content in contents {
        payload.extend(content);
    }
    payload.truncate(delivered as usize);
    Ok(Decoded {
        payload,
        covert_bits_consumed: covert,
        overt_bits,
    })
}

/// Encodes a payload as a chain of frames sharing one coder state, emitting
/// frames until every payload bit is delivered.
///
/// Chaining amortizes the per-frame termination debt, so the average bits
/// conveyed per frame approaches the solution's information utility. All
/// frames' covert bits sit at the front of the payload (the coder consumes
/// them in selection order across the whole chain); overt content bits
/// follow. Per-frame headers record each frame's delivered-bit delta, so
/// they sum to `payload.len()`.
///
/// Errors with [`CodecError::ZeroCapacity`] if the regulator admits only
/// the empty schedule, and [`CodecError::ChainStalled`] if far more frames
/// than the utility predicts fail to finish the job.
pub fn encode_chained(
    solution: &EntropySolution,
    payload: &Bits,
) -> Result<Vec<CodecFrame>, CodecError> {
    if payload.is_empty() {
        return Ok(Vec::new());
    }
    let per_frame = solution.information_utility();
    if per_frame <= 0.0 {
        return Err(CodecError::ZeroCapacity);
    }
    let target = payload.len() as u64;
    let max_frames =
        CHAIN_SLACK_FRAMES.saturating_add(((target as f64 / per_frame).ceil() as usize) * 4);

    // First pass: run the selections, recording each frame's lengths and the
    // cumulative covert consumption after it.
    let mut coder = Coder::new(payload);
    let mut picks: Vec<Vec<u64>> = Vec::new();
    let mut covert_marks: Vec<u64> = Vec::new();
    let mut overt_total = 0u64;
    while coder.consumed + overt_total < target {
        if picks.len() >= max_frames {
            return Err(CodecError::ChainStalled {
                frames: picks.len(),
            });
        }
        let lengths = select_frame(solution, &mut coder)?;
        overt_total += lengths.iter().sum::<u64>();
        covert_marks.push(coder.consumed);
        picks.push(lengths);
    }
    let covert_total = coder.consumed;
    // Real payload bits available to the overt channel (the rest is covert
    // or zero padding).
    let overt_real_total = target.saturating_sub(covert_total);

    // Second pass: fill contents (overt bits start after *all* covert bits)
    // and attribute delivered-bit deltas to frames.
    let mut frames = Vec::with_capacity(picks.len());
    let mut pos = covert_total as usize;
    let mut overt_after = 0u64;
    let mut delivered_prev = 0u64;
    for (lengths, &mark) in picks.iter().zip(&covert_marks) {
        let (contents, next_pos) = fill_contents(payload, pos, lengths);
        pos = next_pos;
        overt_after += lengths.iter().sum::<u64>();
        let delivered_after = mark.min(target) + overt_after.min(overt_real_total);
        let delta = delivered_after - delivered_prev;
        delivered_prev = delivered_after;
        let payload_bits =
            u16::try_from(delta).map_err(|_| CodecError::FrameTooLarge { bits: delta })?;
        frames.push(CodecFrame {
            payload_bits,
            schedule: evolve(solution.spec(), lengths)?,
            contents,
        });
    }
    debug_assert_eq!(delivered_prev, target, "chain delivers the whole payload");
    Ok(frames)
}

/// Decodes a chain of frames produced by [`encode_chained`].
pub fn decode_chained(
    solution: &EntropySolution,
    frames: &[CodecFrame],
) -> Result<Decoded, CodecError> {
    let mut mirror = Mirror::new();
    let mut overt = Vec::new();
    let mut delivered = 0u64;
    for frame in frames {
        let schedule = evolve(solution.spec(), &frame.schedule.lengths)?;
        check_contents(&schedule, &frame.contents)?;
        replay(solution, &schedule, &mut mirror)?;
        overt.extend(frame.contents.iter().cloned());
        delivered += u64::from(frame.payload_bits);
    }
    let overt_bits: u64 = overt.iter().map(|c| c.len() as u64).sum();
    assemble(mirror, &overt, delivered, overt_bits)
}

impl CodecFrame {
    /// Total packet bits (the overt channel's width).
    pub fn overt_bits(&self) -> u64 {
        self.schedule.total_bits()
    }

    /// Serializes the frame to the wire format (see the module docs).
    pub fn to_bytes(&self) -> Result<Vec<u8>, CodecError> {
        let mut out = Vec::with_capacity(2 + self.contents.len() * 2);
        out.extend_from_slice(&self.payload_bits.to_be_bytes());
        for content in &self.contents {
            let len = u16::try_from(content.len()).map_err(|_| CodecError::FrameTooLarge {
                bits: content.len() as u64,
            })?;
            out.extend_from_slice(&len.to_be_bytes());
            out.extend_from_slice(content.as_bytes());
        }
        Ok(out)
    }

    /// Parses one frame from the front of `bytes`, validating schedule
    /// conformance against `spec`. Returns the frame and the bytes consumed.
    pub fn from_bytes(
        spec: &RegulatorSpec,
        bytes: &[u8],
    ) -> Result<(CodecFrame, usize), CodecError> {
        fn take<'b>(
            bytes: &'b [u8],
            pos: &mut usize,
            count: usize,
            what: &str,
        ) -> Result<&'b [u8], CodecError> {
            let end = pos
                .checked_add(count)
                .filter(|&end| end <= bytes.len())
                .ok_or_else(|| CodecError::MalformedFrame(format!("truncated at {what}")))?;
            let chunk = &bytes[*pos..end];
            *pos = end;
            Ok(chunk)
        }
        let mut pos = 0usize;
        let payload_bits =
            u16::from_be_bytes(take(bytes, &mut pos, 2, "header")?.try_into().expect("2 bytes"));
        let n = spec.horizon();
        let mut lengths = Vec::with_capacity(n);
        let mut contents = Vec::with_capacity(n);
        for slot in 0..n {
            let len = u16::from_be_bytes(
                take(bytes, &mut pos, 2, &format!("slot {slot} length"))?
                    .try_into()
                    .expect("2 bytes"),
            ) as usize;
            let raw = take(
                bytes,
                &mut pos,
                len.div_ceil(8),
                &format!("slot {slot} content"),
            )?;
            let content = Bits::from_bytes(raw, len);
            if content.as_bytes() != raw {
                return Err(CodecError::MalformedFrame(format!(
                    "slot {slot} has nonzero padding bits"
                )));
            }
            lengths.push(len as u64);
            contents.push(content);
        }
        let schedule = evolve(spec, &lengths)?;
        Ok((
            CodecFrame {
                payload_bits,
                schedule,
                contents,
            },
            pos,
        ))
    }
}

/// Serializes consecutive frames with no separator.
pub fn frames_to_bytes(frames: &[CodecFrame]) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    for frame in frames {
        out.extend_from_slice(&frame.to_bytes()?);
    }
    Ok(out)
}

/// Splits a byte stream back into frames, consuming it entirely.
pub fn frames_from_bytes(
    spec: &RegulatorSpec,
    bytes: &[u8],
) -> Result<Vec<CodecFrame>, CodecError> {
    let mut frames = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        let (frame, used) = CodecFrame::from_bytes(spec, &bytes[pos..])?;
        frames.push(frame);
        pos += used;
    }
    Ok(frames)
}
