//! Small numeric helpers shared across modules.

/// Exact `2^e` for any exponent representable in `f64`, including subnormals.
///
/// Built from the bit pattern directly so the result is exact rather than
/// routed through `powi`.
pub(crate) fn exp2i(e: i32) -> f64 {
    debug_assert!((-1074..=1023).contains(&e), "exp2i exponent out of range: {e}");
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        // subnormal: 2^e = 2^(e+1074) * 2^-1074
        f64::from_bits(1u64 << (e + 1074))
    }
}
