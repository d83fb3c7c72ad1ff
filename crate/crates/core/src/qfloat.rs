//! Bit-accurate 18-bit floating-point arithmetic.
//!
//! Layout: `sign(1) | exponent(6, bias 31) | mantissa(11)` with an implicit
//! leading 1 for normal numbers. An all-zeros exponent field encodes zero and
//! subnormals (quantum 2^-41); an all-ones field encodes infinity/NaN, which
//! the arithmetic rejects. Every operation computes the exact result in
//! integer arithmetic and rounds once, nearest-even: the reference meaning
//! of an 18-bit multiply/add rather than a model of any particular datapath.
//!
//! Zero-sign conventions: multiplication canonicalizes zero results to +0;
//! addition returns +0 on exact cancellation and for (+0)+(-0), and -0 only
//! for (-0)+(-0).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::util::exp2i;

const SIGN_SHIFT: u32 = 17;
const EXP_SHIFT: u32 = 11;
const EXP_FIELD_MASK: u32 = 0x3f;
const MAN_MASK: u32 = 0x7ff;
const BITS_MASK: u32 = 0x3ffff;

/// Exponent bias.
pub const BIAS: i32 = 31;
/// Largest unbiased exponent of a normal number (field 62).
pub const MAX_EXP: i32 = 31;
/// Unbiased exponent of the smallest normal number (field 1).
pub const MIN_NORMAL_EXP: i32 = -30;
/// Exponent of the subnormal quantum: values below 2^-30 step by 2^-41.
pub const SUBNORMAL_QUANTUM_EXP: i32 = -41;

/// An 18-bit floating-point value, stored in the low 18 bits of a `u32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Q18(u32);

impl Q18 {
    /// Positive zero (the all-zero pattern).
    pub const ZERO: Q18 = Q18(0);
    /// Exactly 1.0: sign 0, exponent field 31, mantissa 0.
    pub const ONE: Q18 = Q18(31 << EXP_SHIFT);
    /// Largest finite value, (2 - 2^-11) * 2^31.
    pub const MAX_FINITE: Q18 = Q18((62 << EXP_SHIFT) | MAN_MASK);
    /// Smallest positive subnormal, 2^-41.
    pub const MIN_SUBNORMAL: Q18 = Q18(1);

    /// Reinterpret the low 18 bits as a value. Bits above 17 must be clear.
    pub fn from_bits(bits: u32) -> Result<Self> {
        if bits & !BITS_MASK != 0 {
            return Err(Error::InvalidInput(format!(
                "Q18 pattern must fit in 18 bits, got {bits:#x}"
            )));
        }
        Ok(Q18(bits))
    }

    pub fn to_bits(self) -> u32 {
        self.0
    }

    pub fn is_sign_negative(self) -> bool {
        self.0 >> SIGN_SHIFT != 0
    }

    fn exp_field(self) -> u32 {
        (self.0 >> EXP_SHIFT) & EXP_FIELD_MASK
    }

    fn mantissa_field(self) -> u32 {
        self.0 & MAN_MASK
    }

    pub fn is_zero(self) -> bool {
        self.0 & !(1 << SIGN_SHIFT) == 0
    }

    /// True for the infinity/NaN patterns (exponent field all ones).
    pub fn is_special(self) -> bool {
        self.exp_field() == EXP_FIELD_MASK
    }

    pub fn is_finite(self) -> bool {
        !self.is_special()
    }

    pub fn is_subnormal(self) -> bool {
        self.exp_field() == 0 && self.mantissa_field() != 0
    }

    /// Exact significand and scale: the value is `±sig * 2^exp2`.
    /// Zero and special patterns have no such decomposition.
    fn parts(self) -> (u64, i32) {
        debug_assert!(!self.is_zero() && !self.is_special());
        let man = self.mantissa_field() as u64;
        if self.exp_field() == 0 {
            (man, SUBNORMAL_QUANTUM_EXP)
        } else {
            let e = self.exp_field() as i32 - BIAS;
            (2048 + man, e - 11)
        }
    }

    fn assemble(negative: bool, exp_field: u32, mantissa: u32) -> Q18 {
        debug_assert!(exp_field <= EXP_FIELD_MASK && mantissa <= MAN_MASK);
        Q18(((negative as u32) << SIGN_SHIFT) | (exp_field << EXP_SHIFT) | mantissa)
    }
}

/// Round `±sig * 2^exp2` (with `sig > 0`) into the format, nearest-even,
/// as a single rounding of the exact value.
fn round_from_parts(negative: bool, sig: u128, exp2: i32) -> Result<Q18> {
    debug_assert!(sig > 0);
    let bitlen = 128 - sig.leading_zeros() as i32;
    let e = exp2 + bitlen - 1;

    if e >= MIN_NORMAL_EXP {
        // normal path: reduce to a 12-bit significand
        let shift = bitlen - 12;
        let (mut q, mut e) = if shift <= 0 {
            ((sig << (-shift) as u32) as u32, e)
        } else {
            let top = (sig >> shift as u32) as u32;
            let rem = sig & ((1u128 << shift as u32) - 1);
            let half = 1u128 << (shift as u32 - 1);
            let up = rem > half || (rem == half && top & 1 == 1);
            (top + up as u32, e)
        };
        if q == 4096 {
            q = 2048;
            e += 1;
        }
        if e > MAX_EXP {
            return Err(Error::Range(format!(
                "value {}2^{e} overflows the 18-bit format",
                if negative { "-" } else { "" }
            )));
        }
        Ok(Q18::assemble(negative, (e + BIAS) as u32, q - 2048))
    } else {
        // subnormal path: round at the fixed quantum 2^-41
        let sh = exp2 - SUBNORMAL_QUANTUM_EXP;
        let k = if sh >= 0 {
            (sig << sh as u32) as u32
        } else {
            let d = (-sh) as u32;
            if d >= 127 {
                0
            } else {
                let top = (sig >> d) as u32;
                let rem = sig & ((1u128 << d) - 1);
                let half = 1u128 << (d - 1);
                let up = rem > half || (rem == half && top & 1 == 1);
                top + up as u32
            }
        };
        if k == 0 {
            return Ok(Q18::ZERO); // underflow to canonical +0
        }
        if k == 2048 {
            // rounded up to the smallest normal
            return Ok(Q18::assemble(negative, 1, 0));
        }
        debug_assert!(k < 2048);
        Ok(Q18::assemble(negative, 0, k))
    }
}

/// Convert a real value into the format with one nearest-even rounding.
///
/// Exact when the value is representable. NaN is invalid input; values at or
/// beyond the overflow threshold (~2^32) are range errors.
pub fn q18_from_real(x: f64) -> Result<Q18> {
    if x.is_nan() {
        return Err(Error::InvalidInput("cannot encode NaN".into()));
    }
    if x == 0.0 {
        return Ok(Q18::assemble(x.is_sign_negative(), 0, 0));
    }
    if x.is_infinite() {
        return Err(Error::Range(format!("{x} overflows the 18-bit format")));
    }
    let bits = x.to_bits();
    let negative = bits >> 63 != 0;
    let exp_field = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (sig, exp2) = if exp_field == 0 {
        (frac, -1074)
    } else {
        ((1u64 << 52) | frac, exp_field - 1023 - 52)
    };
    round_from_parts(negative, sig as u128, exp2)
}

/// Exact real value of a finite pattern.
pub fn q18_to_real(q: Q18) -> Result<f64> {
    if q.is_special() {
        return Err(Error::InvalidInput(
            "infinity/NaN patterns have no real value".into(),
        ));
    }
    if q.is_zero() {
        return Ok(if q.is_sign_negative() { -0.0 } else { 0.0 });
    }
    let (sig, exp2) = q.parts();
    let mag = sig as f64 * exp2i(exp2);
    Ok(if q.is_sign_negative() { -mag } else { mag })
}

/// Correctly rounded product: the exact product rounded once, nearest-even.
/// Zero results are canonicalized to +0.
pub fn q18_mul(a: Q18, b: Q18) -> Result<Q18> {
    if a.is_special() || b.is_special() {
        return Err(Error::InvalidInput(
            "multiplication requires finite operands".into(),
        ));
    }
    if a.is_zero() || b.is_zero() {
        return Ok(Q18::ZERO);
    }
    let (sa, ea) = a.parts();
    let (sb, eb) = b.parts();
    let negative = a.is_sign_negative() != b.is_sign_negative();
    round_from_parts(negative, sa as u128 * sb as u128, ea + eb)
}

/// Correctly rounded sum: the exact sum rounded once, nearest-even.
pub fn q18_add(a: Q18, b: Q18) -> Result<Q18> {
    if a.is_special() || b.is_special() {
        return Err(Error::InvalidInput(
            "addition requires finite operands".into(),
        ));
    }
    if a.is_zero() && b.is_zero() {
        // -0 only when both operands are -0
        let neg = a.is_sign_negative() && b.is_sign_negative();
        return Ok(Q18::assemble(neg, 0, 0));
    }
    if a.is_zero() {
        return Ok(b);
    }
    if b.is_zero() {
        return Ok(a);
    }
    let (sa, ea) = a.parts();
    let (sb, eb) = b.parts();
    // align on the smaller scale; the worst shift is 61 bits, well inside i128
    let common = ea.min(eb);
    let va = (sa as i128) << (ea - common) as u32;
    let vb = (sb as i128) << (eb - common) as u32;
    let va = if a.is_sign_negative() { -va } else { va };
    let vb = if b.is_sign_negative() { -vb } else { vb };
    let sum = va + vb;
    if sum == 0 {
        return Ok(Q18::ZERO); // exact cancellation
    }
    round_from_parts(sum < 0, sum.unsigned_abs(), common)
}

/// Rounding mode of the format. Only nearest-even exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoundingMode {
    #[default]
    NearestEven,
}

/// Conversion options. Arithmetic always keeps subnormals; flushing only
/// applies to [`q18_from_real_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Q18Config {
    pub rounding: RoundingMode,
    pub flush_subnormals: bool,
}

/// [`q18_from_real`] honoring the config's subnormal handling.
pub fn q18_from_real_with(x: f64, config: &Q18Config) -> Result<Q18> {
    let q = q18_from_real(x)?;
    if config.flush_subnormals && q.is_subnormal() {
        return Ok(Q18::assemble(q.is_sign_negative(), 0, 0));
    }
    Ok(q)
}

impl fmt::Display for Q18 {
    /// Textual bit-pattern form: `s_eeeeee_mmmmmmmmmmm`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}_{:06b}_{:011b}",
            self.0 >> SIGN_SHIFT,
            self.exp_field(),
            self.mantissa_field()
        )
    }
}

impl FromStr for Q18 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = || Error::InvalidInput(format!("not a Q18 bit pattern: {s:?}"));
        let mut parts = s.split('_');
        let sign = parts.next().ok_or_else(parse_err)?;
        let exp = parts.next().ok_or_else(parse_err)?;
        let man = parts.next().ok_or_else(parse_err)?;
        if parts.next().is_some() || sign.len() != 1 || exp.len() != 6 || man.len() != 11 {
            return Err(parse_err());
        }
        let sign = u32::from_str_radix(sign, 2).map_err(|_| parse_err())?;
        let exp = u32::from_str_radix(exp, 2).map_err(|_| parse_err())?;
        let man = u32::from_str_radix(man, 2).map_err(|_| parse_err())?;
        Ok(Q18::assemble(sign != 0, exp, man))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(x: f64) -> Q18 {
        q18_from_real(x).unwrap()
    }

    #[test]
    fn one_encodes_with_bias_31_and_zero_mantissa() {
        let one = q(1.0);
        assert_eq!(one, Q18::ONE);
        assert_eq!(one.to_bits(), 31 << 11);
        assert_eq!(one.to_string(), "0_011111_00000000000");
    }

    #[test]
    fn zero_is_the_all_zero_pattern() {
        assert_eq!(q(0.0).to_bits(), 0);
        assert_eq!(q18_to_real(Q18::ZERO).unwrap(), 0.0);
    }

    #[test]
    fn null_voltage_rounds_within_half_ulp() {
        let enc = q(0.001);
        let dec = q18_to_real(enc).unwrap();
        assert!((dec - 0.001).abs() <= 0.001 * 2f64.powi(-12));
    }

    #[test]
    fn negative_endpoint_rounds_within_half_ulp() {
        let enc = q(-5.185);
        let dec = q18_to_real(enc).unwrap();
        assert!((dec - (-5.185)).abs() <= 5.185 * 2f64.powi(-12));
        assert!(enc.is_sign_negative());
    }

    #[test]
    fn representable_values_round_trip_exactly() {
        for x in [1.0, -1.0, 0.5, 0.125, 51.0, -2.0, 0.001953125] {
            assert_eq!(q18_to_real(q(x)).unwrap(), x, "{x} should be exact");
        }
    }

    #[test]
    fn every_finite_pattern_survives_decode_encode() {
        for bits in 0..=BITS_MASK {
            let p = Q18::from_bits(bits).unwrap();
            if p.is_special() {
                assert!(q18_to_real(p).is_err());
                continue;
            }
            let back = q18_from_real(q18_to_real(p).unwrap()).unwrap();
            assert_eq!(back, p, "pattern {p} did not round-trip");
        }
    }

    #[test]
    fn nan_and_overflow_are_rejected() {
        assert!(matches!(q18_from_real(f64::NAN), Err(Error::InvalidInput(_))));
        assert!(matches!(q18_from_real(f64::INFINITY), Err(Error::Range(_))));
        assert!(matches!(q18_from_real(2f64.powi(33)), Err(Error::Range(_))));
        // values just under the rounding boundary still fit
        let max = q18_to_real(Q18::MAX_FINITE).unwrap();
        assert_eq!(q(max), Q18::MAX_FINITE);
    }

    #[test]
    fn mul_by_one_is_identity() {
        for x in [0.37, -2.5, 0.001, 5.276, -0.125] {
            let a = q(x);
            assert_eq!(q18_mul(a, Q18::ONE).unwrap(), a);
        }
    }

    #[test]
    fn mul_by_zero_is_canonical_positive_zero() {
        for x in [0.37, -2.5, -0.001] {
            assert_eq!(q18_mul(q(x), Q18::ZERO).unwrap(), Q18::ZERO);
        }
    }

    #[test]
    fn powers_of_two_multiply_exactly() {
        assert_eq!(q18_mul(q(0.5), q(0.25)).unwrap(), q(0.125));
        assert_eq!(q18_to_real(q18_mul(q(0.5), q(0.25)).unwrap()).unwrap(), 0.125);
    }

    #[test]
    fn add_zero_is_identity_with_ieee_zero_signs() {
        let a = q(1.5);
        assert_eq!(q18_add(a, Q18::ZERO).unwrap(), a);
        assert_eq!(q18_add(Q18::ZERO, a).unwrap(), a);
        let neg_zero = q(-0.0);
        assert_eq!(q18_add(Q18::ZERO, neg_zero).unwrap(), Q18::ZERO);
        assert_eq!(q18_add(neg_zero, neg_zero).unwrap(), neg_zero);
    }

    #[test]
    fn exact_cancellation_gives_positive_zero() {
        assert_eq!(q18_add(q(1.0), q(-1.0)).unwrap(), Q18::ZERO);
    }

    #[test]
    fn half_ulp_below_one_ties_to_even() {
        // 1.0 + 2^-12 sits exactly between 1.0 and the next value up;
        // the even mantissa wins.
        let tiny = q(2f64.powi(-12));
        assert_eq!(q18_to_real(tiny).unwrap(), 2f64.powi(-12));
        assert_eq!(q18_add(q(1.0), tiny).unwrap(), q(1.0));
    }

    #[test]
    fn specials_are_rejected_by_arithmetic() {
        let inf = Q18::from_bits(63 << 11).unwrap();
        assert!(inf.is_special());
        assert!(q18_to_real(inf).is_err());
        assert!(q18_mul(inf, Q18::ONE).is_err());
        assert!(q18_add(inf, Q18::ZERO).is_err());
    }

    #[test]
    fn addition_overflow_is_a_range_error() {
        assert!(matches!(
            q18_add(Q18::MAX_FINITE, Q18::MAX_FINITE),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            q18_mul(Q18::MAX_FINITE, q(2.0)),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn subnormals_encode_and_survive() {
        let tiny = q18_to_real(Q18::MIN_SUBNORMAL).unwrap();
        assert_eq!(tiny, 2f64.powi(-41));
        assert!(Q18::MIN_SUBNORMAL.is_subnormal());
        assert_eq!(q(tiny), Q18::MIN_SUBNORMAL);
        // halfway below the smallest subnormal rounds to zero (tie to even)
        assert_eq!(q(2f64.powi(-42)), Q18::ZERO);
        assert_eq!(q(2f64.powi(-43)), Q18::ZERO);
    }

    #[test]
    fn flush_subnormals_config() {
        let cfg = Q18Config {
            flush_subnormals: true,
            ..Q18Config::default()
        };
        assert_eq!(q18_from_real_with(2f64.powi(-41), &cfg).unwrap(), Q18::ZERO);
        assert_eq!(q18_from_real_with(1.0, &cfg).unwrap(), Q18::ONE);
        // default keeps them
        assert_eq!(
            q18_from_real_with(2f64.powi(-41), &Q18Config::default()).unwrap(),
            Q18::MIN_SUBNORMAL
        );
    }

    #[test]
    fn display_parse_round_trip() {
        for bits in [0u32, 1, 31 << 11, (62 << 11) | 0x7ff, 1 << 17, 0x2ffff & BITS_MASK] {
            let p = Q18::from_bits(bits & BITS_MASK).unwrap();
            let s = p.to_string();
            assert_eq!(s.len(), 20);
            assert_eq!(s.parse::<Q18>().unwrap(), p);
        }
        assert!("0_1111_000".parse::<Q18>().is_err());
        assert!("0_011111_0000000000x".parse::<Q18>().is_err());
    }

    fn arbitrary_finite() -> impl Strategy<Value = Q18> {
        (0u32..=BITS_MASK)
            .prop_filter("finite patterns only", |b| (b >> 11) & 0x3f != 0x3f)
            .prop_map(|b| Q18::from_bits(b).unwrap())
    }

    proptest! {
        #[test]
        fn add_commutes_bit_exactly(a in arbitrary_finite(), b in arbitrary_finite()) {
            let ab = q18_add(a, b);
            let ba = q18_add(b, a);
            match (ab, ba) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "one direction overflowed, the other did not"),
            }
        }

        #[test]
        fn mul_commutes_bit_exactly(a in arbitrary_finite(), b in arbitrary_finite()) {
            let ab = q18_mul(a, b);
            let ba = q18_mul(b, a);
            match (ab, ba) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "one direction overflowed, the other did not"),
            }
        }

        #[test]
        fn rounding_is_monotone(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            let a = q18_to_real(q18_from_real(lo).unwrap()).unwrap();
            let b = q18_to_real(q18_from_real(hi).unwrap()).unwrap();
            prop_assert!(a <= b);
        }

        #[test]
        fn encode_is_within_half_ulp(x in -1e6f64..1e6) {
            prop_assume!(x != 0.0);
            let dec = q18_to_real(q18_from_real(x).unwrap()).unwrap();
            // relative half-ulp bound for an 11-bit mantissa (normal range)
            if x.abs() >= 2f64.powi(-30) {
                prop_assert!((dec - x).abs() <= x.abs() * 2f64.powi(-12));
            }
        }
    }
}
