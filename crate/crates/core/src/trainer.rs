//! Variational training: ⟨Z⟩ prediction head, MSE loss, parameter-shift
//! gradients and mini-batch Adam.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};
use core::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::CircuitGenome;
use crate::data::Sample;
use crate::metrics;
use crate::seed;
use crate::sim::{self, Kernel, QuantumState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Qubits whose mean ⟨Z⟩ is the prediction.
    pub measurement_qubits: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 256,
            learning_rate: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            measurement_qubits: vec![0],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.measurement_qubits.is_empty() {
            return Err(Error::EmptyQubitSet);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub params: Vec<f64>,
    /// Mean training loss per epoch, accumulated over the epoch's batches
    /// before each update.
    pub loss_trace: Vec<f64>,
    /// Filled in by callers that have a clock.
    pub wall_time: Option<Duration>,
}

/// Decision rule for ±1 labels.
pub fn classify(prediction: f64) -> f64 {
    if prediction >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Mean ⟨Z⟩ over `measurement` after running the circuit.
pub fn predict(genome: &CircuitGenome, params: &[f64], features: &[f64], measurement: &[usize]) -> Result<f64> {
    sim::check_measurement(measurement, genome.n_qubits)?;
    let state = sim::run_circuit(genome, params, features)?;
    sim::expectation_z(&state, measurement)
}

pub fn mse_loss(preds: &[f64], targets: &[f64]) -> Result<f64> {
    metrics::mse(preds, targets)
}

fn head(state: &QuantumState, measurement: &[usize]) -> f64 {
    let total: f64 = measurement.iter().map(|&q| sim::z_expectation(state.amplitudes(), q)).sum();
    total / measurement.len() as f64
}

/// Prediction and ∂prediction/∂θ for one sample. For every trainable gate the
/// circuit is re-run from the cached state before that gate with the angle
/// shifted by ±π/2; occurrences of a shared slot add up.
fn prediction_and_shifts(
    genome: &CircuitGenome,
    params: &[f64],
    features: &[f64],
    measurement: &[usize],
) -> Result<(f64, Vec<f64>)> {
    let kernels = sim::compile(genome, params, features)?;
    let mut grad = vec![0.0; genome.n_params];
    let mut prefixes: Vec<(usize, usize, QuantumState)> = Vec::new();
    let mut state = QuantumState::zero(genome.n_qubits);
    for (index, (gate, kernel)) in genome.gates.iter().zip(&kernels).enumerate() {
        if let Some(slot) = gate.param_slot() {
            prefixes.push((index, slot, state.clone()));
        }
        state.apply_kernel(kernel);
    }
    let value = head(&state, measurement);
    for (index, slot, prefix) in prefixes {
        let gate = &genome.gates[index];
        let mut shifted = [0.0; 2];
        for (out, shift) in shifted.iter_mut().zip([FRAC_PI_2, -FRAC_PI_2]) {
            let mut s = prefix.clone();
            s.apply_kernel(&Kernel::lower(gate, Some(params[slot] + shift)));
            kernels[index + 1..].iter().for_each(|k| s.apply_kernel(k));
            *out = head(&s, measurement);
        }
        grad[slot] += (shifted[0] - shifted[1]) / 2.0;
    }
    Ok((value, grad))
}

/// Batch MSE and its gradient, summed in sample order.
fn loss_and_grad(
    genome: &CircuitGenome,
    params: &[f64],
    batch: &[&Sample],
    measurement: &[usize],
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    sim::check_measurement(measurement, genome.n_qubits)?;
    if params.len() < genome.n_params {
        return Err(Error::MissingParam { slot: genome.n_params - 1, len: params.len() });
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; genome.n_params];
    for sample in batch {
        let (f, df) = prediction_and_shifts(genome, params, &sample.features, measurement)?;
        let residual = f - sample.target;
        loss += residual * residual;
        for (g, d) in grad.iter_mut().zip(df) {
            *g += 2.0 * residual * d;
        }
    }
    let n = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

/// Gradient of the batch MSE with respect to every parameter slot via the
/// parameter-shift rule ∂⟨Z⟩/∂θ = [E(θ + π/2) − E(θ − π/2)] / 2.
pub fn param_shift_grad(
    genome: &CircuitGenome,
    params: &[f64],
    batch: &[Sample],
    measurement: &[usize],
) -> Result<Vec<f64>> {
    let refs: Vec<&Sample> = batch.iter().collect();
    loss_and_grad(genome, params, &refs, measurement).map(|(_, g)| g)
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, config: &TrainConfig) -> Adam {
        Adam {
            learning_rate: config.learning_rate,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_eps,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
    }
}

/// Trains `genome` on `train`. Parameters start uniform in [0, 2π); every
/// epoch reshuffles the rows and walks them in batches (the last one may be
/// short), taking one Adam step per batch.
pub fn train(genome: &CircuitGenome, train: &[Sample], config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training split".into()));
    }
    if let Some(s) = train.iter().find(|s| !(-1.0..=1.0).contains(&s.target)) {
        return Err(Error::InvalidInput(alloc::format!("training target {} outside [-1, 1]", s.target)));
    }
    let mut rng = seed::derived_rng(config.seed, &[seed::stream::TRAIN]);
    let mut params: Vec<f64> = (0..genome.n_params).map(|_| rng.random_range(0.0..TAU)).collect();
    let mut adam = Adam::new(params.len(), config);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train[i]).collect();
            let (loss, grad) = loss_and_grad(genome, &params, &batch, &config.measurement_qubits)?;
            epoch_loss += loss * batch.len() as f64;
            if !params.is_empty() {
                adam.step(&mut params, &grad);
            }
        }
        loss_trace.push(epoch_loss / train.len() as f64);
    }
    Ok(TrainReport { params, loss_trace, wall_time: None })
}

/// Predictions for every sample.
pub fn predict_all(genome: &CircuitGenome, params: &[f64], samples: &[Sample], measurement: &[usize]) -> Result<Vec<f64>> {
    samples.iter().map(|s| predict(genome, params, &s.features, measurement)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Split;
    use crate::sim::{AngleSource, GateKind, GateSpec};
    use core::f64::consts::{FRAC_PI_4, PI};

    fn rx_genome() -> CircuitGenome {
        CircuitGenome::new(1, vec![GateSpec::rotation(GateKind::Rx, 0, AngleSource::Trainable(0))])
    }

    fn sample(target: f64) -> Sample {
        Sample { split: Split::Train, target, features: Vec::new() }
    }

    #[test]
    fn defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.epochs, c.batch_size, c.learning_rate), (200, 256, 0.01));
        assert_eq!((c.adam_beta1, c.adam_beta2, c.adam_eps), (0.9, 0.999, 1e-8));
        assert_eq!(c.measurement_qubits, vec![0]);
    }

    #[test]
    fn predict_examples() {
        let empty = CircuitGenome::new(2, Vec::new());
        assert_eq!(predict(&empty, &[], &[], &[0]).unwrap(), 1.0);
        for theta in [0.0, 0.3, 1.7, PI, 5.0] {
            let p = predict(&rx_genome(), &[theta], &[], &[0]).unwrap();
            assert!((p - libm::cos(theta)).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_gradient_of_cos_squared() {
        let g = param_shift_grad(&rx_genome(), &[FRAC_PI_4], &[sample(0.0)], &[0]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-12);
        let g = param_shift_grad(&rx_genome(), &[FRAC_PI_2], &[sample(0.0)], &[0]).unwrap();
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn shared_slot_gradients_add() {
        // RX(θ) twice is RX(2θ): d/dθ cos(2θ) = −2 sin(2θ).
        let g = CircuitGenome::new(
            1,
            vec![
                GateSpec::rotation(GateKind::Rx, 0, AngleSource::Trainable(0)),
                GateSpec::rotation(GateKind::Rx, 0, AngleSource::Trainable(0)),
            ],
        );
        let theta = 0.4;
        let (f, df) = prediction_and_shifts(&g, &[theta], &[], &[0]).unwrap();
        assert!((f - libm::cos(2.0 * theta)).abs() < 1e-12);
        assert!((df[0] + 2.0 * libm::sin(2.0 * theta)).abs() < 1e-12);
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut params = vec![0.3, -1.2, 4.0];
        let mut adam = Adam::new(3, &TrainConfig::default());
        for _ in 0..10 {
            adam.step(&mut params, &[0.0; 3]);
        }
        assert_eq!(params, vec![0.3, -1.2, 4.0]);
    }

    #[test]
    fn converges_on_cos_squared() {
        let report = train(&rx_genome(), &[sample(0.0)], &TrainConfig { seed: 1, ..Default::default() }).unwrap();
        assert_eq!(report.loss_trace.len(), 200);
        let final_loss = libm::cos(report.params[0]).powi(2);
        assert!(final_loss < 1e-3, "final loss {final_loss}");
    }

    #[test]
    fn seeded_training_is_bitwise_reproducible() {
        let g = CircuitGenome::new(
            2,
            vec![
                GateSpec::rotation(GateKind::Ry, 0, AngleSource::Embedding(0)),
                GateSpec::rotation(GateKind::Rx, 1, AngleSource::Trainable(0)),
                GateSpec::two(GateKind::Cx, 1, 0),
                GateSpec::rotation(GateKind::Ry, 0, AngleSource::Trainable(1)),
            ],
        );
        let data: Vec<Sample> = (0..12)
            .map(|i| {
                let x = i as f64 / 6.0 - 1.0;
                Sample { split: Split::Train, target: if x > 0.0 { 1.0 } else { -1.0 }, features: vec![x] }
            })
            .collect();
        let config = TrainConfig { epochs: 5, batch_size: 5, seed: 42, ..Default::default() };
        let a = train(&g, &data, &config).unwrap();
        let b = train(&g, &data, &config).unwrap();
        assert_eq!(a.params.iter().map(|p| p.to_bits()).collect::<Vec<_>>(), b.params.iter().map(|p| p.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn parameter_free_genome_has_flat_trace() {
        let g = CircuitGenome::new(1, vec![GateSpec::single(GateKind::H, 0)]);
        let report = train(&g, &[sample(0.5)], &TrainConfig { epochs: 4, ..Default::default() }).unwrap();
        assert!(report.params.is_empty());
        assert!(report.loss_trace.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn train_errors() {
        assert!(train(&rx_genome(), &[], &TrainConfig::default()).is_err());
        assert!(train(&rx_genome(), &[sample(2.0)], &TrainConfig::default()).is_err());
        assert!(train(&rx_genome(), &[sample(0.0)], &TrainConfig { epochs: 0, ..Default::default() }).is_err());
    }
}
