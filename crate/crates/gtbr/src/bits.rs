//! Growable MSB-first bit string.
//!
//! [`Bits`] stores bits packed into bytes, most significant bit first, with
//! an explicit bit length. Unused trailing bits of the last byte are kept at
//! zero, so two equal-length bit strings compare equal exactly when their
//! byte buffers do; that canonical form also makes [`Bits::as_bytes`] directly
//! usable as a wire representation.

use std::fmt;
use std::ops::Range;

/// A bit string with MSB-first packing and canonical zero padding.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits {
    bytes: Vec<u8>,
    len: usize,
}

impl Bits {
    /// Creates an empty bit string.
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates an empty bit string with room for `bits` bits.
    pub fn with_capacity(bits: usize) -> Self {
        Bits {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Builds a bit string from packed bytes, keeping the first `len` bits.
    ///
    /// Bits beyond `len` in the final byte are masked to zero, so the result
    /// is canonical regardless of the padding in `bytes`.
    ///
    /// # Panics
    /// Panics if `bytes` is shorter than `len` bits.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        assert!(
            len <= bytes.len() * 8,
            "bit length {len} exceeds {} available bits",
            bytes.len() * 8
        );
        let mut bytes = bytes[..len.div_ceil(8)].to_vec();
        if let Some(last) = bytes.last_mut() {
            let used = len - (len - 1) / 8 * 8; // bits used in the final byte, 1..=8
            *last &= 0xffu8 << (8 - used);
        }
        Bits { bytes, len }
    }

    /// Number of bits.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Whether the string holds no bits.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Packed bytes, MSB-first, trailing pad bits zero.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Appends one bit.
    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[self.len / 8] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Returns bit `index`, or `None` past the end.
    pub fn get(&self, index: usize) -> Option<bool> {
        (index < self.len).then(|| self.bytes[index / 8] & (0x80 >> (index % 8)) != 0)
    }

    /// Appends all bits of `other`.
    pub fn extend(&mut self, other: &Bits) {
        if self.len.is_multiple_of(8) {
            // Byte-aligned fast path: the tail of `other` is already canonical.
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
        } else {
            for bit in other.iter() {
                self.push(bit);
            }
        }
    }

    /// Copies the bits in `range` into a new string.
    ///
    /// # Panics
    /// Panics if the range is out of bounds or decreasing.
    pub fn slice(&self, range: Range<usize>) -> Bits {
        assert!(range.start <= range.end && range.end <= self.len);
        let mut out = Bits::with_capacity(range.len());
        for i in range {
            out.push(self.get(i).expect("index checked above"));
        }
        out
    }

    /// Shortens the string to `len` bits; a no-op if already that short.
    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        self.bytes.truncate(len.div_ceil(8));
        if !len.is_multiple_of(8) {
            let last = self.bytes.last_mut().expect("len > 0 so a byte remains");
            *last &= 0xffu8 << (8 - len % 8);
        }
        self.len = len;
    }

    /// Iterates over the bits front to back.
    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i).expect("index in range"))
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut out = Bits::new();
        for bit in iter {
            out.push(bit);
        }
        out
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits[{}]", self.len)?;
        let shown = self.len.min(64);
        write!(f, " ")?;
        for i in 0..shown {
            write!(f, "{}", u8::from(self.get(i).expect("in range")))?;
        }
        if shown < self.len {
            write!(f, "…")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_str(s: &str) -> Bits {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn push_and_get_round_trip() {
        let pattern = "1011001110001111010";
        let bits = from_str(pattern);
        assert_eq!(bits.len(), pattern.len());
        for (i, c) in pattern.chars().enumerate() {
            assert_eq!(bits.get(i), Some(c == '1'), "bit {i}");
        }
        assert_eq!(bits.get(pattern.len()), None);
    }

    #[test]
    fn packing_is_msb_first() {
        let bits = from_str("10000001" /* 0x81 */);
        assert_eq!(bits.as_bytes(), &[0x81]);
        let bits = from_str("101"); // 101 padded to 1010_0000
        assert_eq!(bits.as_bytes(), &[0xa0]);
    }

    #[test]
    fn from_bytes_masks_padding() {
        // 0xff with only 3 bits kept must canonicalize to 1110_0000.
        let bits = Bits::from_bytes(&[0xff], 3);
        assert_eq!(bits.as_bytes(), &[0xe0]);
        assert_eq!(bits, from_str("111"));
        // Extra bytes beyond the bit length are dropped.
        let bits = Bits::from_bytes(&[0xab, 0xcd, 0xef], 8);
        assert_eq!(bits.as_bytes(), &[0xab]);
    }

    #[test]
    #[should_panic(expected = "exceeds")]
    fn from_bytes_rejects_short_buffer() {
        Bits::from_bytes(&[0xff], 9);
    }

    #[test]
    fn truncate_rezeroes_padding() {
        let mut bits = from_str("11111111");
        bits.truncate(3);
        assert_eq!(bits, from_str("111"));
        assert_eq!(bits.as_bytes(), &[0xe0]);
        // Equality with a freshly built string requires canonical padding.
        let mut again = from_str("111");
        again.truncate(10); // longer than current length: no-op
        assert_eq!(bits, again);
    }

    #[test]
    fn extend_handles_unaligned_boundaries() {
        let mut a = from_str("101");
        a.extend(&from_str("0110011"));
        assert_eq!(a, from_str("1010110011"));

        let mut b = from_str("10110011"); // aligned fast path
        b.extend(&from_str("01"));
        assert_eq!(b, from_str("1011001101"));
    }

    #[test]
    fn slice_extracts_ranges() {
        let bits = from_str("110100111000101");
        assert_eq!(bits.slice(0..4), from_str("1101"));
        assert_eq!(bits.slice(4..11), from_str("0011100"));
        assert_eq!(bits.slice(7..7), Bits::new());
        assert_eq!(bits.slice(0..bits.len()), bits);
    }

    #[test]
    fn iterator_round_trip() {
        let bits = from_str("100101110101");
        let copy: Bits = bits.iter().collect();
        assert_eq!(copy, bits);
        assert_eq!(bits.iter().filter(|&b| b).count(), 7);
    }
}
