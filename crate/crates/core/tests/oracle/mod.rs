//! Exact-arithmetic reference for the 18-bit format, independent of the
//! library's implementation path.
//!
//! Values are treated as exact dyadic rationals (i128 magnitude times a
//! power of two). Sums and products are computed exactly; rounding picks
//! between the two neighbouring representable values by exact remainder
//! comparison, ties to the even mantissa. Zero-sign conventions mirror the
//! library contract: products round to +0, sums cancel to +0, and
//! (-0)+(-0) keeps its sign.

use lvdt_flann::qfloat::Q18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleResult {
    Bits(u32),
    Overflow,
}

/// Decode a finite nonzero pattern straight from its bits.
fn parts(q: Q18) -> (bool, i128, i32) {
    let bits = q.to_bits();
    let negative = bits >> 17 != 0;
    let exp_field = (bits >> 11) & 0x3f;
    let man = (bits & 0x7ff) as i128;
    assert_ne!(exp_field, 0x3f, "oracle only handles finite patterns");
    if exp_field == 0 {
        (negative, man, -41)
    } else {
        (negative, 2048 + man, exp_field as i32 - 31 - 11)
    }
}

fn is_zero(q: Q18) -> bool {
    q.to_bits() & 0x1ffff == 0
}

fn sign_bit(q: Q18) -> bool {
    q.to_bits() >> 17 != 0
}

/// Round the exact value `±mag * 2^exp2` (mag > 0) to the format.
fn round_exact(negative: bool, mag: i128, exp2: i32) -> OracleResult {
    assert!(mag > 0);
    let msb = 127 - mag.leading_zeros() as i32;
    let e_msb = exp2 + msb;
    // quantum of the destination: ulp of the binade, or the subnormal step
    let qe = if e_msb >= -30 { e_msb - 11 } else { -41 };

    let d = exp2 - qe;
    let mut n = if d >= 0 {
        mag << d // exact multiple of the quantum
    } else {
        let shift = (-d) as u32;
        if shift >= 127 {
            return OracleResult::Bits(0); // far below half the quantum
        }
        let lo = mag >> shift;
        let rem = mag - (lo << shift);
        if rem == 0 {
            lo
        } else {
            let double = rem << 1; // rem < 2^126, no overflow
            let divisor = 1i128 << shift;
            if double > divisor || (double == divisor && lo & 1 == 1) {
                lo + 1
            } else {
                lo
            }
        }
    };
    let mut qe = qe;
    if n == 0 {
        return OracleResult::Bits(0);
    }
    if n == 4096 {
        n = 2048;
        qe += 1;
    }
    assert!(n < 4096);
    let sign = (negative as u32) << 17;
    if n >= 2048 {
        let e_unb = qe + 11;
        if e_unb > 31 {
            return OracleResult::Overflow;
        }
        let exp_field = (e_unb + 31) as u32;
        OracleResult::Bits(sign | (exp_field << 11) | (n as u32 - 2048))
    } else {
        assert_eq!(qe, -41, "subnormal results sit on the fixed quantum");
        OracleResult::Bits(sign | n as u32)
    }
}

pub fn oracle_mul(a: Q18, b: Q18) -> OracleResult {
    if is_zero(a) || is_zero(b) {
        return OracleResult::Bits(0); // canonical +0
    }
    let (na, ma, ea) = parts(a);
    let (nb, mb, eb) = parts(b);
    round_exact(na != nb, ma * mb, ea + eb)
}

pub fn oracle_add(a: Q18, b: Q18) -> OracleResult {
    if is_zero(a) && is_zero(b) {
        let neg = sign_bit(a) && sign_bit(b);
        return OracleResult::Bits((neg as u32) << 17);
    }
    if is_zero(a) {
        return OracleResult::Bits(b.to_bits());
    }
    if is_zero(b) {
        return OracleResult::Bits(a.to_bits());
    }
    let (na, ma, ea) = parts(a);
    let (nb, mb, eb) = parts(b);
    let common = ea.min(eb);
    let va = (if na { -ma } else { ma }) << (ea - common) as u32;
    let vb = (if nb { -mb } else { mb }) << (eb - common) as u32;
    let sum = va + vb;
    if sum == 0 {
        return OracleResult::Bits(0);
    }
    round_exact(sum < 0, sum.abs(), common)
}

/// Round a finite, non-NaN `f64` to the format.
#[allow(dead_code)] // shared by path; not every including test uses it
pub fn oracle_from_f64(x: f64) -> OracleResult {
    assert!(x.is_finite());
    if x == 0.0 {
        return OracleResult::Bits((x.is_sign_negative() as u32) << 17);
    }
    let bits = x.to_bits();
    let negative = bits >> 63 != 0;
    let exp_field = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    let (mag, exp2) = if exp_field == 0 {
        (frac, -1074)
    } else {
        (frac + (1i128 << 52), exp_field - 1023 - 52)
    };
    round_exact(negative, mag, exp2)
}

/// A structured operand set: zeros, subnormal and normal boundaries, powers
/// of two across the exponent range, dense mantissas, both signs.
pub fn structured_grid() -> Vec<Q18> {
    let mut bits: Vec<u32> = vec![
        0,          // +0
        1 << 17,    // -0
        1,          // min subnormal
        0x7ff,      // max subnormal
        1 << 11,    // min normal
        (62 << 11) | 0x7ff, // max finite
        31 << 11,   // 1.0
        (31 << 11) | 1,
        (31 << 11) | 0x7ff,
        (32 << 11) | 0x400,
    ];
    for exp_field in [1u32, 2, 15, 30, 31, 32, 45, 61, 62] {
        bits.push(exp_field << 11);
        bits.push((exp_field << 11) | 0x7ff);
        bits.push((exp_field << 11) | 0x001);
    }
    for man in [3u32, 0x2aa, 0x555, 0x700] {
        bits.push(man); // subnormals
        bits.push((31 << 11) | man);
    }
    let mut all = Vec::with_capacity(bits.len() * 2);
    for b in bits {
        all.push(Q18::from_bits(b & 0x1ffff).unwrap());
        all.push(Q18::from_bits((b & 0x1ffff) | (1 << 17)).unwrap());
    }
    all.sort_by_key(|q| q.to_bits());
    all.dedup();
    all
}
