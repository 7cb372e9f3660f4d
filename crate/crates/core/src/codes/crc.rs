//! CRC-32 tags over bit strings.
//!
//! Standard CRC-32 (polynomial `0x04C11DB7`, reflected, init and final xor
//! `0xFFFFFFFF`). Bits are packed least-significant-bit first into bytes, so
//! the tag of the bits of a byte string (LSB first within each byte) equals
//! the usual CRC-32 of those bytes. A trailing partial byte is processed bit
//! by bit, which keeps every bit significant regardless of length.

/// A 32-bit CRC of an information bit string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CrcTag(pub u32);

impl CrcTag {
    pub const WIDTH: u32 = 32;

    pub fn value(self) -> u32 {
        self.0
    }
}

const REFLECTED_POLY: u32 = 0xEDB8_8320;

pub fn crc_tag(bits: &[u8]) -> CrcTag {
    let whole = bits.len() / 8;
    let bytes: Vec<u8> = bits[..whole * 8]
        .chunks_exact(8)
        .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << i)))
        .collect();
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&bytes);
    let mut reg = !hasher.finalize();
    for &b in &bits[whole * 8..] {
        let feedback = (reg ^ u32::from(b & 1)) & 1;
        reg >>= 1;
        if feedback == 1 {
            reg ^= REFLECTED_POLY;
        }
    }
    CrcTag(!reg)
}

pub fn crc_verify(bits: &[u8], tag: CrcTag) -> bool {
    crc_tag(bits) == tag
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_of(bytes: &[u8]) -> Vec<u8> {
        bytes.iter().flat_map(|&b| (0..8).map(move |i| (b >> i) & 1)).collect()
    }

    /// Bitwise reference implementation.
    fn reference(bits: &[u8]) -> u32 {
        let mut reg = 0xFFFF_FFFFu32;
        for &b in bits {
            let fb = (reg ^ u32::from(b)) & 1;
            reg >>= 1;
            if fb == 1 {
                reg ^= REFLECTED_POLY;
            }
        }
        !reg
    }

    #[test]
    fn check_value() {
        assert_eq!(crc_tag(&bits_of(b"123456789")), CrcTag(0xCBF4_3926));
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(crc_tag(&[]).value(), 0);
    }

    #[test]
    fn matches_bitwise_reference_for_ragged_lengths() {
        let bits: Vec<u8> = (0..203u32).map(|i| ((i * 7 + i / 3) % 5 % 2) as u8).collect();
        for len in [1, 7, 8, 9, 63, 64, 65, 203] {
            assert_eq!(crc_tag(&bits[..len]).value(), reference(&bits[..len]), "len={len}");
        }
    }

    #[test]
    fn detects_every_single_bit_flip() {
        let bits: Vec<u8> = (0..2048u32).map(|i| (i.wrapping_mul(2654435761) >> 31) as u8).collect();
        let tag = crc_tag(&bits);
        assert!(crc_verify(&bits, tag));
        let mut flipped = bits.clone();
        for i in 0..bits.len() {
            flipped[i] ^= 1;
            assert!(!crc_verify(&flipped, tag), "flip at {i}");
            flipped[i] ^= 1;
        }
    }
}
