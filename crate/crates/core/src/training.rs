//! Weight learning: the per-sample LMS rule, and a direct least-squares
//! solve that serves as its independent oracle.
//!
//! Training runs in normalized units. Each epoch presents every sample once
//! (sequentially by default, optionally in a seeded shuffled order) and
//! records the epoch's summed squared error; training stops when that sum
//! falls below the threshold or the epoch budget runs out.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::CalibrationDataset;
use crate::error::{Error, Result};
use crate::model::{expand, ExpansionSpec, FeatureVector, FlannModel, Normalizer};

/// Default learning rate. Per-sample stability needs eta < 2 / (K + 1) for
/// this basis (row norm² ≈ K + u²), so 0.05 is stable for every swept width
/// up to P = 61 and converges P = 51 on the bundled fixture in ~31 epochs.
pub const DEFAULT_ETA: f64 = 0.05;
/// Default epoch budget.
pub const DEFAULT_MAX_EPOCHS: usize = 50;
/// Default stop threshold on the epoch's summed squared error.
pub const DEFAULT_MSE_THRESHOLD: f64 = 1e-6;

/// LMS hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    /// Learning rate, in (0, 1].
    pub eta: f64,
    pub max_epochs: usize,
    /// Stop once an epoch's summed squared error falls below this.
    pub mse_threshold: f64,
    /// Present samples in a freshly shuffled order each epoch.
    pub shuffle: bool,
    pub rng_seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            max_epochs: DEFAULT_MAX_EPOCHS,
            mse_threshold: DEFAULT_MSE_THRESHOLD,
            shuffle: false,
            rng_seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta <= 0.0 || self.eta > 1.0 {
            return Err(Error::InvalidInput(format!(
                "eta must be in (0, 1], got {}",
                self.eta
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidInput("max_epochs must be at least 1".into()));
        }
        if !self.mse_threshold.is_finite() || self.mse_threshold < 0.0 {
            return Err(Error::InvalidInput(format!(
                "mse_threshold must be a finite non-negative number, got {}",
                self.mse_threshold
            )));
        }
        Ok(())
    }
}

/// Convergence evidence: the per-epoch cost and the weights it ended on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    /// Summed squared error per epoch, in normalized units.
    pub mse_per_epoch: Vec<f64>,
    pub epochs_run: usize,
    pub converged: bool,
    pub final_weights: Vec<f64>,
}

/// Unity initialization: every weight starts at exactly 1.
pub fn init_weights(spec: &ExpansionSpec) -> Vec<f64> {
    vec![1.0; spec.width()]
}

/// One LMS update: `error = desired - s·w`, `w'[p] = w[p] + eta·error·s[p]`.
pub fn lms_step(
    weights: &[f64],
    feature: &FeatureVector,
    desired: f64,
    eta: f64,
) -> Result<(Vec<f64>, f64)> {
    if weights.len() != feature.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: feature.len(),
        });
    }
    if !desired.is_finite() || !eta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lms_step needs finite desired/eta, got {desired}/{eta}"
        )));
    }
    let prediction: f64 = feature
        .values()
        .iter()
        .zip(weights)
        .map(|(s, w)| s * w)
        .sum();
    let error = desired - prediction;
    let step = eta * error;
    let new_weights = weights
        .iter()
        .zip(feature.values())
        .map(|(w, s)| w + step * s)
        .collect();
    Ok((new_weights, error))
}

/// Normalizers, expanded rows, and normalized targets for a dataset.
fn prepare(
    dataset: &CalibrationDataset,
    spec: &ExpansionSpec,
) -> Result<(Normalizer, Normalizer, Vec<FeatureVector>, Vec<f64>)> {
    let input_norm = Normalizer::fit(dataset.voltages()).map_err(|_| {
        Error::DegenerateData("all voltages are zero; nothing to normalize".into())
    })?;
    let output_norm = Normalizer::fit(dataset.displacements()).map_err(|_| {
        Error::DegenerateData("all displacements are zero; nothing to learn".into())
    })?;
    let mut features = Vec::with_capacity(dataset.len());
    let mut targets = Vec::with_capacity(dataset.len());
    for s in dataset.iter() {
        features.push(expand(input_norm.normalize(s.voltage_v())?, spec)?);
        targets.push(output_norm.normalize(s.displacement_mm())?);
    }
    Ok((input_norm, output_norm, features, targets))
}

/// Train by repeated per-sample LMS updates from unity initialization.
pub fn train_lms(
    dataset: &CalibrationDataset,
    spec: &ExpansionSpec,
    config: &TrainingConfig,
) -> Result<(FlannModel, TrainingTrace)> {
    config.validate()?;
    let (input_norm, output_norm, features, targets) = prepare(dataset, spec)?;

    let mut weights = init_weights(spec);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut mse_per_epoch = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut sse = 0.0;
        for &j in &order {
            let (next, error) = lms_step(&weights, &features[j], targets[j], config.eta)?;
            weights = next;
            sse += error * error;
        }
        if !sse.is_finite() {
            return Err(Error::InvalidInput(format!(
                "training diverged (epoch error became {sse}); lower eta"
            )));
        }
        mse_per_epoch.push(sse);
        if sse < config.mse_threshold {
            converged = true;
            break;
        }
    }

    let epochs_run = mse_per_epoch.len();
    let model = FlannModel::new(*spec, weights.clone(), input_norm, output_norm)?;
    Ok((
        model,
        TrainingTrace {
            mse_per_epoch,
            epochs_run,
            converged,
            final_weights: weights,
        },
    ))
}

/// Direct weight solve: minimum-norm least squares of `S·Wᵀ = Y` through a
/// rank-revealing SVD. This is the oracle the LMS route is checked against.
pub fn solve_least_squares(
    dataset: &CalibrationDataset,
    spec: &ExpansionSpec,
) -> Result<FlannModel> {
    let (input_norm, output_norm, features, targets) = prepare(dataset, spec)?;
    let n = dataset.len();
    let p = spec.width();
    let s = DMatrix::from_fn(n, p, |i, j| features[i].values()[j]);
    let y = DVector::from_vec(targets);

    let svd = s.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let weights = svd
        .solve(&y, max_sv * 1e-12)
        .map_err(|e| Error::DegenerateData(format!("SVD solve failed: {e}")))?;

    FlannModel::new(
        *spec,
        weights.iter().cloned().collect(),
        input_norm,
        output_norm,
    )
}

/// Summed squared residual of a model over a dataset, in normalized units,
/// the same quantity the training trace records per epoch.
pub fn normalized_residual_sse(dataset: &CalibrationDataset, model: &FlannModel) -> Result<f64> {
    let mut sse = 0.0;
    for s in dataset.iter() {
        let predicted = model.forward(s.voltage_v())?;
        let err = model
            .output_norm()
            .normalize(s.displacement_mm() - predicted)?;
        sse += err * err;
    }
    Ok(sse)
}
