//! The functional-link forward model: input normalization, trigonometric
//! expansion, and the weighted-sum output.
//!
//! One scalar input `u` expands into `P = 2K + 1` basis values laid out as
//! `[u, sin(πu), cos(πu), sin(2πu), cos(2πu), ..., sin(Kπu), cos(Kπu)]`,
//! and the model output is the dot product of that row with the weight
//! vector, denormalized back to millimetres. The same layout is used by the
//! quantized pipeline, lane for lane.

use std::f64::consts::PI;

use crate::dataset::CalibrationDataset;
use crate::error::{Error, Result};
use crate::util::exp2i;

/// Trigonometric basis configuration: `K` harmonics on top of the identity
/// term, giving width `P = 2K + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionSpec {
    harmonics: usize,
}

impl ExpansionSpec {
    pub fn new(harmonics: usize) -> Result<Self> {
        if harmonics == 0 {
            return Err(Error::InvalidInput(
                "expansion needs at least one harmonic".into(),
            ));
        }
        Ok(Self { harmonics })
    }

    /// Maximum harmonic index `K`.
    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    /// Basis width `P = 2K + 1`: identity plus a sine and a cosine per harmonic.
    pub fn width(&self) -> usize {
        2 * self.harmonics + 1
    }
}

/// One expanded input row: the basis values for a single normalized input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Expand a normalized input into its basis row.
///
/// Layout: `values[0] = u`, `values[2m-1] = sin(mπu)`, `values[2m] = cos(mπu)`
/// for `m = 1..=K`.
pub fn expand(u: f64, spec: &ExpansionSpec) -> Result<FeatureVector> {
    if !u.is_finite() {
        return Err(Error::InvalidInput(format!(
            "expansion input must be finite, got {u}"
        )));
    }
    let mut values = Vec::with_capacity(spec.width());
    values.push(u);
    for m in 1..=spec.harmonics {
        let arg = m as f64 * PI * u;
        values.push(arg.sin());
        values.push(arg.cos());
    }
    Ok(FeatureVector { values })
}

#[cfg(test)]
pub(crate) fn test_feature_vector(values: Vec<f64>) -> FeatureVector {
    FeatureVector { values }
}

/// Scales a raw value into the unit interval: `u = w / scale`.
///
/// Fitted scales are the smallest power of two at or above the largest
/// training magnitude, so that the quantized pipeline can apply the same
/// scaling as an exact exponent shift and integer-millimetre targets stay
/// exactly representable. Hand-built normalizers may use any positive scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    scale: f64,
}

impl Normalizer {
    pub fn new(scale: f64) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "normalizer scale must be a positive finite number, got {scale}"
            )));
        }
        Ok(Self { scale })
    }

    /// Fit a power-of-two envelope over the values: the smallest `2^k` with
    /// `2^k >= max |value|`.
    pub fn fit<I: IntoIterator<Item = f64>>(values: I) -> Result<Self> {
        let max_abs = values
            .into_iter()
            .map(f64::abs)
            .fold(0.0f64, f64::max);
        if max_abs == 0.0 || !max_abs.is_finite() {
            return Err(Error::DegenerateData(format!(
                "cannot fit a normalizer: max |value| is {max_abs}"
            )));
        }
        Self::new(pow2_envelope(max_abs))
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn normalize(&self, value: f64) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cannot normalize non-finite value {value}"
            )));
        }
        Ok(value / self.scale)
    }

    pub fn denormalize(&self, value: f64) -> f64 {
        value * self.scale
    }
}

/// Smallest power of two at or above `x` (exact bit-level computation).
fn pow2_envelope(x: f64) -> f64 {
    debug_assert!(x.is_finite() && x > 0.0);
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (e, exact_pow2) = if exp_field == 0 {
        // subnormal: value = frac * 2^-1074, msb at position p
        let p = 63 - frac.leading_zeros() as i32;
        (p - 1074, frac == (1u64 << p))
    } else {
        (exp_field - 1023, frac == 0)
    };
    if exact_pow2 {
        exp2i(e)
    } else {
        exp2i(e + 1)
    }
}

/// The trained compensator: expansion spec, weight vector, and the two
/// normalizers that make inference self-contained.
#[derive(Debug, Clone, PartialEq)]
pub struct FlannModel {
    spec: ExpansionSpec,
    weights: Vec<f64>,
    input_norm: Normalizer,
    output_norm: Normalizer,
}

impl FlannModel {
    pub fn new(
        spec: ExpansionSpec,
        weights: Vec<f64>,
        input_norm: Normalizer,
        output_norm: Normalizer,
    ) -> Result<Self> {
        if weights.len() != spec.width() {
            return Err(Error::DimensionMismatch {
                expected: spec.width(),
                got: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "model weights must be finite, got {w}"
            )));
        }
        Ok(Self {
            spec,
            weights,
            input_norm,
            output_norm,
        })
    }

    pub fn spec(&self) -> &ExpansionSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn input_norm(&self) -> &Normalizer {
        &self.input_norm
    }

    pub fn output_norm(&self) -> &Normalizer {
        &self.output_norm
    }

    /// Compensated output in millimetres for a raw sensor voltage.
    pub fn forward(&self, voltage_v: f64) -> Result<f64> {
        let u = self.input_norm.normalize(voltage_v)?;
        let features = expand(u, &self.spec)?;
        let y: f64 = features
            .values()
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| s * w)
            .sum();
        Ok(self.output_norm.denormalize(y))
    }

    /// Element-wise forward over a dataset's voltages, paired with the
    /// ground-truth displacements.
    pub fn forward_batch(&self, dataset: &CalibrationDataset) -> Result<Vec<(f64, f64)>> {
        dataset
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let out = self.forward(s.voltage_v()).map_err(|e| {
                    Error::InvalidInput(format!("sample {i}: {e}"))
                })?;
                Ok((s.displacement_mm(), out))
            })
            .collect()
    }
}
