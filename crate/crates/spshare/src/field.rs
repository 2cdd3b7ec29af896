//! Finite fields used for share values.
//!
//! Only addition, negation and uniform sampling are needed. Elements are
//! canonical `u64` values: residues `0..q` for prime fields, coefficient bit
//! vectors for binary extension fields GF(2^m), where addition is XOR.
//!
//! Order 2 is rejected everywhere: with a single nonzero value the padded
//! share cannot hide whether it cancelled the source, so the scheme needs at
//! least three elements.

use crate::error::{Error, Result};
use crate::rng::EntryRng;
use std::fmt;

/// Order of a supported finite field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldOrder {
    /// Prime field of odd prime order `q >= 3`.
    Prime(u64),
    /// Binary extension field GF(2^m) with `2 <= m <= 64`.
    Binary(u32),
}

impl FieldOrder {
    pub fn prime(q: u64) -> Result<Self> {
        if q < 3 {
            return Err(Error::InvalidFieldOrder {
                reason: format!("order {q} is below the minimum of 3"),
            });
        }
        if !is_prime_u64(q) {
            return Err(Error::InvalidFieldOrder {
                reason: format!("{q} is not prime"),
            });
        }
        Ok(FieldOrder::Prime(q))
    }

    pub fn binary(m: u32) -> Result<Self> {
        if !(2..=64).contains(&m) {
            return Err(Error::InvalidFieldOrder {
                reason: format!("binary extension degree {m} outside 2..=64"),
            });
        }
        Ok(FieldOrder::Binary(m))
    }

    /// Accepts a decimal order (`"257"`, `"256"`) or an explicit power
    /// (`"2^20"`). Powers of two become binary extension fields, everything
    /// else must be an odd prime.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(exp) = text.strip_prefix("2^") {
            let m: u32 = exp.parse().map_err(|_| Error::InvalidFieldOrder {
                reason: format!("bad exponent in {text:?}"),
            })?;
            return FieldOrder::binary(m);
        }
        let q: u128 = text.parse().map_err(|_| Error::InvalidFieldOrder {
            reason: format!("{text:?} is not an integer or 2^m"),
        })?;
        if q.is_power_of_two() {
            let m = q.trailing_zeros();
            return FieldOrder::binary(m);
        }
        let q: u64 = q.try_into().map_err(|_| Error::InvalidFieldOrder {
            reason: format!("prime order {q} does not fit in 64 bits"),
        })?;
        FieldOrder::prime(q)
    }

    /// Number of elements.
    pub fn order(&self) -> u128 {
        match *self {
            FieldOrder::Prime(q) => q as u128,
            FieldOrder::Binary(m) => 1u128 << m,
        }
    }

    pub fn order_f64(&self) -> f64 {
        match *self {
            FieldOrder::Prime(q) => q as f64,
            FieldOrder::Binary(m) => (m as f64).exp2(),
        }
    }

    /// Bits needed to store one element, `ceil(log2 q)`.
    pub fn value_bits(&self) -> u32 {
        match *self {
            FieldOrder::Prime(q) => 64 - (q - 1).leading_zeros(),
            FieldOrder::Binary(m) => m,
        }
    }

    pub fn contains(&self, v: u64) -> bool {
        (v as u128) < self.order()
    }

    pub fn check_element(&self, v: u64) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::ElementOutOfRange {
                value: v,
                order: self.order(),
            })
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(self.contains(a) && self.contains(b));
        match *self {
            FieldOrder::Prime(q) => ((a as u128 + b as u128) % q as u128) as u64,
            FieldOrder::Binary(_) => a ^ b,
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        debug_assert!(self.contains(a));
        match *self {
            FieldOrder::Prime(q) => {
                if a == 0 {
                    0
                } else {
                    q - a
                }
            }
            FieldOrder::Binary(_) => a,
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    /// Uniform over all q elements.
    pub fn sample_uniform(&self, rng: &mut EntryRng) -> u64 {
        match *self {
            FieldOrder::Prime(q) => rng.next_below(q),
            FieldOrder::Binary(64) => rng.next_u64(),
            FieldOrder::Binary(m) => rng.next_u64() >> (64 - m),
        }
    }

    /// Uniform over the q-1 nonzero elements, by rejection.
    pub fn sample_nonzero(&self, rng: &mut EntryRng) -> u64 {
        loop {
            let v = self.sample_uniform(rng);
            if v != 0 {
                return v;
            }
        }
    }

    /// Uniform over the field minus `avoid`, by rejection. The avoid set must
    /// leave at least one admissible element.
    pub fn sample_avoiding(&self, rng: &mut EntryRng, avoid: &[u64]) -> u64 {
        debug_assert!((avoid.len() as u128) < self.order());
        loop {
            let v = self.sample_uniform(rng);
            if !avoid.contains(&v) {
                return v;
            }
        }
    }

    /// Irreducible polynomial backing GF(2^m), as the coefficient mask of
    /// terms below x^m (the leading x^m coefficient is implicit). Fixed
    /// low-weight choices, recorded for interoperability; addition never
    /// uses them. `None` for prime fields.
    pub fn irreducible_poly(&self) -> Option<u64> {
        match *self {
            FieldOrder::Prime(_) => None,
            FieldOrder::Binary(m) => Some(low_weight_poly(m)),
        }
    }
}

impl fmt::Display for FieldOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FieldOrder::Prime(q) => write!(f, "{q}"),
            FieldOrder::Binary(m) => write!(f, "2^{m}"),
        }
    }
}

/// Low-weight irreducible polynomials for GF(2^m), m in 2..=64, from the
/// standard table (trinomial x^m + x^k + 1 where one exists, otherwise a
/// pentanomial). Encoded as the low coefficient mask including the constant
/// term, e.g. m=8 gives x^8+x^4+x^3+x+1 -> 0x1b.
fn low_weight_poly(m: u32) -> u64 {
    const fn t(k: u32) -> u64 {
        (1 << k) | 1
    }
    const fn p(k3: u32, k2: u32, k1: u32) -> u64 {
        (1 << k3) | (1 << k2) | (1 << k1) | 1
    }
    match m {
        2 => t(1),
        3 => t(1),
        4 => t(1),
        5 => t(2),
        6 => t(1),
        7 => t(1),
        8 => p(4, 3, 1),
        9 => t(1),
        10 => t(3),
        11 => t(2),
        12 => t(3),
        13 => p(4, 3, 1),
        14 => t(5),
        15 => t(1),
        16 => p(5, 3, 1),
        17 => t(3),
        18 => t(3),
        19 => p(5, 2, 1),
        20 => t(3),
        21 => t(2),
        22 => t(1),
        23 => t(5),
        24 => p(4, 3, 1),
        25 => t(3),
        26 => p(4, 3, 1),
        27 => p(5, 2, 1),
        28 => t(1),
        29 => t(2),
        30 => t(1),
        31 => t(3),
        32 => p(7, 3, 2),
        33 => t(10),
        34 => t(7),
        35 => t(2),
        36 => t(9),
        37 => p(6, 4, 1),
        38 => p(6, 5, 1),
        39 => t(4),
        40 => p(5, 4, 3),
        41 => t(3),
        42 => t(7),
        43 => p(6, 4, 3),
        44 => t(5),
        45 => p(4, 3, 1),
        46 => t(1),
        47 => t(5),
        48 => p(5, 3, 2),
        49 => t(9),
        50 => p(4, 3, 2),
        51 => p(6, 3, 1),
        52 => t(3),
        53 => p(6, 2, 1),
        54 => t(9),
        55 => t(7),
        56 => p(7, 4, 2),
        57 => t(4),
        58 => t(19),
        59 => p(7, 4, 2),
        60 => t(1),
        61 => p(5, 2, 1),
        62 => t(29),
        63 => t(1),
        64 => p(4, 3, 1),
        _ => unreachable!("degree outside 2..=64"),
    }
}

/// Deterministic Miller-Rabin for u64. The fixed witness set decides
/// primality exactly for all 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}
