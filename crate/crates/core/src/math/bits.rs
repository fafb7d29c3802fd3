/// Ordered bit sequence with a read cursor; the secret payload carrier.
///
/// Byte serialization is MSB-first within each byte.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitStream {
    bits: Vec<u8>,
    cursor: usize,
}

impl BitStream {
    pub fn new() -> Self {
        BitStream {
            bits: Vec::new(),
            cursor: 0,
        }
    }

    pub fn from_bits(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        BitStream { bits, cursor: 0 }
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut bits = Vec::with_capacity(bytes.len() * 8);
        for &byte in bytes {
            for i in 0..8 {
                bits.push((byte >> (7 - i)) & 1);
            }
        }
        BitStream { bits, cursor: 0 }
    }

    /// Pack to bytes, zero-padding the final partial byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            out[i / 8] |= b << (7 - (i % 8));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.cursor
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn push(&mut self, bit: u8) {
        debug_assert!(bit <= 1);
        self.bits.push(bit);
    }

    /// Read one bit and advance the cursor; `None` once exhausted.
    pub fn read_bit(&mut self) -> Option<u8> {
        let b = self.bits.get(self.cursor).copied();
        if b.is_some() {
            self.cursor += 1;
        }
        b
    }

    /// Read one bit, treating exhaustion as a zero padding bit. Returns
    /// `(bit, was_real)`; padding bits do not advance the cursor.
    pub fn read_bit_padded(&mut self) -> (u8, bool) {
        match self.read_bit() {
            Some(b) => (b, true),
            None => (0, false),
        }
    }

    pub fn rewind(&mut self) {
        self.cursor = 0;
    }

    /// True when `self` starts with the first `n` bits of `prefix`.
    pub fn starts_with(&self, prefix: &BitStream, n: usize) -> bool {
        if n > self.bits.len() || n > prefix.bits.len() {
            return false;
        }
        self.bits[..n] == prefix.bits[..n]
    }
}

impl Default for BitStream {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_round_trip_msb_first() {
        let s = BitStream::from_bytes(&[0b1010_0001, 0xFF]);
        assert_eq!(&s.bits()[..8], &[1, 0, 1, 0, 0, 0, 0, 1]);
        assert_eq!(s.to_bytes(), vec![0b1010_0001, 0xFF]);
    }

    #[test]
    fn partial_byte_zero_padded() {
        let s = BitStream::from_bits(vec![1, 1, 1]);
        assert_eq!(s.to_bytes(), vec![0b1110_0000]);
    }

    #[test]
    fn cursor_advances_monotonically() {
        let mut s = BitStream::from_bits(vec![1, 0, 1]);
        assert_eq!(s.read_bit(), Some(1));
        assert_eq!(s.cursor(), 1);
        assert_eq!(s.read_bit(), Some(0));
        assert_eq!(s.read_bit(), Some(1));
        assert_eq!(s.read_bit(), None);
        assert_eq!(s.cursor(), 3);
    }

    #[test]
    fn padded_reads_do_not_advance() {
        let mut s = BitStream::from_bits(vec![1]);
        assert_eq!(s.read_bit_padded(), (1, true));
        assert_eq!(s.read_bit_padded(), (0, false));
        assert_eq!(s.read_bit_padded(), (0, false));
        assert_eq!(s.cursor(), 1);
    }
}
