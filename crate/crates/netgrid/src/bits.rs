//! Small helpers for arbitrary-width values represented as `BigUint`.

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// `2^width - 1`.
pub fn mask(width: u32) -> BigUint {
    (BigUint::one() << width) - BigUint::one()
}

/// Truncate `v` to `width` bits.
pub fn trunc(v: &BigUint, width: u32) -> BigUint {
    v & mask(width)
}

/// Number of 16-bit words needed for `width` bits.
pub fn nwords(width: u32) -> usize {
    ((width + 15) / 16) as usize
}

/// Split a value into little-endian 16-bit words, `nwords(width)` of them.
pub fn to_words(v: &BigUint, width: u32) -> Vec<u16> {
    let n = nwords(width);
    let digits = v.to_u32_digits();
    let mut out = vec![0u16; n];
    for (i, w) in out.iter_mut().enumerate() {
        let d = digits.get(i / 2).copied().unwrap_or(0);
        *w = if i % 2 == 0 { d as u16 } else { (d >> 16) as u16 };
    }
    out
}

/// Reassemble a value from little-endian 16-bit words.
pub fn from_words(words: &[u16]) -> BigUint {
    let mut v = BigUint::zero();
    for (i, w) in words.iter().enumerate() {
        v |= BigUint::from(*w) << (16 * i);
    }
    v
}

/// Mask for the top word of a `width`-bit value (0xffff when the width is a
/// word multiple).
pub fn top_word_mask(width: u32) -> u16 {
    let r = width % 16;
    if r == 0 {
        0xffff
    } else {
        ((1u32 << r) - 1) as u16
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_round_trip() {
        let v = BigUint::from(0xdead_beef_1234u64);
        let words = to_words(&v, 48);
        assert_eq!(words, vec![0x1234, 0xbeef, 0xdead]);
        assert_eq!(from_words(&words), v);
    }

    #[test]
    fn top_mask() {
        assert_eq!(top_word_mask(16), 0xffff);
        assert_eq!(top_word_mask(20), 0x000f);
        assert_eq!(top_word_mask(1), 0x0001);
    }
}
