//! Bitstring helpers.
//!
//! Throughout the crate a bitstring over `n` bits is stored as the low `n`
//! bits of a `u64`. Bit `q` of the integer is qubit/feature `q`, so qubit 0
//! is the least significant bit of a basis-state index. Text renderings put
//! the most significant bit first, i.e. `format_bits(1, 3) == "001"`.

use crate::error::{Error, Result};

pub const MAX_BITS: usize = 63;

/// Render the low `n` bits of `x`, most significant bit first.
pub fn format_bits(x: u64, n: usize) -> String {
    debug_assert!(n <= MAX_BITS);
    (0..n).rev().map(|q| if x >> q & 1 == 1 { '1' } else { '0' }).collect()
}

/// Parse a bitstring written most significant bit first.
pub fn parse_bits(s: &str) -> Result<(u64, usize)> {
    let s = s.trim();
    if s.is_empty() || s.len() > MAX_BITS {
        return Err(Error::validation(format!(
            "bitstring must have between 1 and {MAX_BITS} characters, got {}",
            s.len()
        )));
    }
    let mut x = 0u64;
    for c in s.chars() {
        x <<= 1;
        match c {
            '0' => {}
            '1' => x |= 1,
            _ => return Err(Error::validation(format!("invalid bitstring character {c:?}"))),
        }
    }
    Ok((x, s.len()))
}

/// Number of differing bits between two bitstrings.
#[inline]
pub fn hamming(x: u64, y: u64) -> u32 {
    (x ^ y).count_ones()
}

/// Derive an independent RNG seed from a master seed and a context path.
///
/// Used wherever work is fanned out (per iteration, per parameter, per run)
/// so results do not depend on evaluation order. SplitMix64-style mixing.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut z = master;
    for &p in parts {
        z ^= p.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = splitmix64(z);
    }
    splitmix64(z)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_is_msb_first() {
        assert_eq!(format_bits(1, 3), "001");
        assert_eq!(format_bits(0b110, 3), "110");
        assert_eq!(format_bits(0, 2), "00");
    }

    #[test]
    fn parse_inverts_format() {
        for x in [0u64, 1, 5, 0b101101, 511] {
            let s = format_bits(x, 9);
            assert_eq!(parse_bits(&s).unwrap(), (x, 9));
        }
        assert!(parse_bits("01x").is_err());
        assert!(parse_bits("").is_err());
    }

    #[test]
    fn derived_seeds_differ_by_path() {
        let a = derive_seed(42, &[1, 2]);
        let b = derive_seed(42, &[2, 1]);
        let c = derive_seed(42, &[1, 2]);
        assert_eq!(a, c);
        assert_ne!(a, b);
    }
}
