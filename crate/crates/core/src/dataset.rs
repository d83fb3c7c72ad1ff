//! Calibration data: (displacement, voltage) pairs swept across the sensor range.

use crate::error::{Error, Result};

/// One measured calibration point: actuator ground truth and the demodulated
/// sensor reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    displacement_mm: f64,
    voltage_v: f64,
}

impl CalibrationSample {
    pub fn new(displacement_mm: f64, voltage_v: f64) -> Result<Self> {
        if !displacement_mm.is_finite() {
            return Err(Error::InvalidInput(format!(
                "displacement must be finite, got {displacement_mm}"
            )));
        }
        if !voltage_v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "voltage must be finite, got {voltage_v}"
            )));
        }
        Ok(Self {
            displacement_mm,
            voltage_v,
        })
    }

    pub fn displacement_mm(&self) -> f64 {
        self.displacement_mm
    }

    pub fn voltage_v(&self) -> f64 {
        self.voltage_v
    }
}

/// An ordered calibration sweep.
///
/// Invariants enforced at construction: at least two samples, and
/// displacements strictly increasing (the order the actuator swept them).
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationDataset {
    samples: Vec<CalibrationSample>,
}

impl CalibrationDataset {
    pub fn new(samples: Vec<CalibrationSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a calibration dataset needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for pair in samples.windows(2) {
            if pair[1].displacement_mm <= pair[0].displacement_mm {
                return Err(Error::InvalidInput(format!(
                    "displacements must be strictly increasing ({} then {})",
                    pair[0].displacement_mm, pair[1].displacement_mm
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[CalibrationSample] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = &CalibrationSample> {
        self.samples.iter()
    }

    pub fn displacements(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.displacement_mm).collect()
    }

    pub fn voltages(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.voltage_v).collect()
    }
}

/// The bundled 13-row measured sweep used as the canonical fixture.
pub fn lvdt_table1() -> CalibrationDataset {
    crate::io::parse_dataset_str(include_str!("../data/lvdt_table1.csv"))
        .expect("bundled fixture is valid")
}
