//! Software-emulated equivalent of the three-stage hardware inference:
//! lookup-table input fetch, functional expansion into 51 lanes across five
//! sub-blocks, per-lane weight multiplication, and a 50-node sequential adder
//! reduction, all in 18-bit floating point.
//!
//! The emulated design is fixed at K = 25 (51 lanes, sub-block partition
//! [10, 10, 10, 10, 11]). Trig lanes are computed exactly and rounded once,
//! modeling precomputed function units. The reduction order is a strict
//! left fold and is part of the external contract: permuting it changes
//! results (the arithmetic is not associative), so golden traces pin it.

use std::collections::BTreeMap;

use crate::dataset::CalibrationDataset;
use crate::error::{Error, Result};
use crate::model::{expand, FlannModel};
use crate::qfloat::{q18_add, q18_from_real, q18_mul, q18_to_real, Q18};

/// Lane count of the emulated design (P = 51, K = 25).
pub const LANES: usize = 51;
/// Adder nodes in the reduction stage.
pub const ADDER_NODES: usize = LANES - 1;
/// Lanes produced by each expansion sub-block E1..E5.
pub const SUB_BLOCK_PARTITION: [usize; 5] = [10, 10, 10, 10, 11];
/// Harmonic count of the emulated design.
pub const PIPELINE_HARMONICS: usize = 25;

/// Input stage: maps the few supported voltages to their 18-bit patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupTable {
    entries: BTreeMap<u64, Q18>,
}

impl LookupTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fetch the pattern for an exact voltage key.
    pub fn get(&self, voltage_v: f64) -> Option<Q18> {
        self.entries.get(&voltage_v.to_bits()).copied()
    }
}

/// Build the lookup table from a dataset: one entry per voltage,
/// nearest-even encoded. Repeated voltages are an error.
pub fn build_lookup(dataset: &CalibrationDataset) -> Result<LookupTable> {
    let mut entries = BTreeMap::new();
    for s in dataset.iter() {
        let v = s.voltage_v();
        if entries.insert(v.to_bits(), q18_from_real(v)?).is_some() {
            return Err(Error::DuplicateKey { voltage: v });
        }
    }
    Ok(LookupTable { entries })
}

/// The staged inference description: quantized weights and scales.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    weights_q18: Vec<Q18>,
    input_recip_q: Q18,
    output_scale_q: Q18,
}

impl PipelineConfig {
    /// Quantize a trained full-width model: each weight rounded once,
    /// plus the reciprocal input scale and the output scale.
    pub fn from_model(model: &FlannModel) -> Result<Self> {
        if model.spec().harmonics() != PIPELINE_HARMONICS {
            return Err(Error::InvalidInput(format!(
                "the emulated pipeline is fixed at {PIPELINE_HARMONICS} harmonics ({LANES} lanes), \
                 model has {}",
                model.spec().harmonics()
            )));
        }
        let weights_q18 = model
            .weights()
            .iter()
            .map(|w| q18_from_real(*w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            weights_q18,
            input_recip_q: q18_from_real(1.0 / model.input_norm().scale())?,
            output_scale_q: q18_from_real(model.output_norm().scale())?,
        })
    }

    pub fn weights_q18(&self) -> &[Q18] {
        &self.weights_q18
    }

    pub fn input_recip_q(&self) -> Q18 {
        self.input_recip_q
    }

    pub fn output_scale_q(&self) -> Q18 {
        self.output_scale_q
    }
}

/// Every intermediate value of one inference, in stage order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineTrace {
    /// 51 expanded lane values.
    pub expanded: Vec<Q18>,
    /// 51 lane-by-weight products.
    pub products: Vec<Q18>,
    /// 50 adder-node outputs in fold order.
    pub partial_sums: Vec<Q18>,
    /// The reduction output; equals the last partial sum bit-exactly.
    pub output: Q18,
}

/// Stage 1: expand the normalized input into 51 lanes,
/// `[u, sin(πu), cos(πu), ..., sin(25πu), cos(25πu)]`,
/// each trig value computed exactly and rounded once.
pub fn stage_expand(u_q: Q18, _config: &PipelineConfig) -> Result<Vec<Q18>> {
    let u = q18_to_real(u_q)?;
    let spec = crate::model::ExpansionSpec::new(PIPELINE_HARMONICS)?;
    let basis = expand(u, &spec)?;
    basis
        .values()
        .iter()
        .enumerate()
        .map(|(j, b)| {
            q18_from_real(*b)
                .map_err(|e| Error::Range(format!("expansion lane {j}: {e}")))
        })
        .collect()
}

/// Stage 2: multiply each lane by its weight.
pub fn stage_multiply(lanes: &[Q18], config: &PipelineConfig) -> Result<Vec<Q18>> {
    if lanes.len() != config.weights_q18.len() {
        return Err(Error::DimensionMismatch {
            expected: config.weights_q18.len(),
            got: lanes.len(),
        });
    }
    lanes
        .iter()
        .zip(&config.weights_q18)
        .enumerate()
        .map(|(j, (lane, w))| {
            q18_mul(*lane, *w).map_err(|e| Error::Range(format!("multiplier lane {j}: {e}")))
        })
        .collect()
}

/// Stage 3: strict sequential left fold over the products, exactly 50
/// two-input adders, every node output recorded in order.
pub fn stage_reduce(products: &[Q18]) -> Result<(Q18, Vec<Q18>)> {
    if products.len() != LANES {
        return Err(Error::DimensionMismatch {
            expected: LANES,
            got: products.len(),
        });
    }
    let mut partials = Vec::with_capacity(ADDER_NODES);
    let mut acc = products[0];
    for (node, p) in products[1..].iter().enumerate() {
        acc = q18_add(acc, *p).map_err(|e| Error::Range(format!("adder node {node}: {e}")))?;
        partials.push(acc);
    }
    Ok((acc, partials))
}

/// Full quantized inference for one supported voltage: lookup fetch,
/// normalize in 18-bit arithmetic, expand, multiply, reduce, denormalize.
pub fn pipeline_infer(
    v_raw: f64,
    config: &PipelineConfig,
    lut: &LookupTable,
) -> Result<(f64, PipelineTrace)> {
    let v_q = lut.get(v_raw).ok_or(Error::LookupMiss { voltage: v_raw })?;
    let u_q = q18_mul(v_q, config.input_recip_q)?;
    let expanded = stage_expand(u_q, config)?;
    let products = stage_multiply(&expanded, config)?;
    let (output, partial_sums) = stage_reduce(&products)?;
    let denormalized = q18_mul(output, config.output_scale_q)?;
    let output_mm = q18_to_real(denormalized)?;
    Ok((
        output_mm,
        PipelineTrace {
            expanded,
            products,
            partial_sums,
            output,
        },
    ))
}

/// The same staged dataflow with exact real arithmetic in every stage:
/// reciprocal-multiply normalization, per-lane products, sequential fold.
/// Differs from the quantized pipeline only by quantization, and from
/// [`FlannModel::forward`] only by rounding noise well below 1e-9.
pub fn pipeline_infer_exact(v_raw: f64, model: &FlannModel) -> Result<f64> {
    if model.spec().harmonics() != PIPELINE_HARMONICS {
        return Err(Error::InvalidInput(format!(
            "the emulated pipeline is fixed at {PIPELINE_HARMONICS} harmonics, model has {}",
            model.spec().harmonics()
        )));
    }
    let u = v_raw * (1.0 / model.input_norm().scale());
    let basis = expand(u, model.spec())?;
    let products: Vec<f64> = basis
        .values()
        .iter()
        .zip(model.weights())
        .map(|(s, w)| s * w)
        .collect();
    let mut acc = products[0];
    for p in &products[1..] {
        acc += p;
    }
    Ok(acc * model.output_norm().scale())
}
