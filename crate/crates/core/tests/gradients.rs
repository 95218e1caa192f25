mod common;

use common::*;
use qcs_core::data::{Sample, Split};
use qcs_core::seed;
use qcs_core::trainer::{self, TrainConfig};
use rand::Rng;

fn batch_loss(genome: &qcs_core::circuit::CircuitGenome, params: &[f64], batch: &[Sample], m: &[usize]) -> f64 {
    let preds = trainer::predict_all(genome, params, batch, m).unwrap();
    let targets: Vec<f64> = batch.iter().map(|s| s.target).collect();
    trainer::mse_loss(&preds, &targets).unwrap()
}

#[test]
fn parameter_shift_matches_central_differences() {
    let mut rng = seed::rng(21);
    let h = 1e-4;
    let mut checked = 0;
    while checked < 50 {
        let n = rng.random_range(1..=4);
        let len = rng.random_range(2..20);
        let genome = random_genome(&mut rng, n, len, 3);
        if genome.n_params == 0 {
            continue;
        }
        let params = random_params(&mut rng, &genome);
        let batch: Vec<Sample> = (0..rng.random_range(1..5))
            .map(|_| Sample {
                split: Split::Train,
                target: rng.random_range(-1.0..1.0),
                features: random_features(&mut rng, 3),
            })
            .collect();
        let measurement: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        let measurement = if measurement.is_empty() { vec![0] } else { measurement };
        let grad = trainer::param_shift_grad(&genome, &params, &batch, &measurement).unwrap();
        for slot in 0..genome.n_params {
            let mut up = params.clone();
            let mut down = params.clone();
            up[slot] += h;
            down[slot] -= h;
            let fd = (batch_loss(&genome, &up, &batch, &measurement) - batch_loss(&genome, &down, &batch, &measurement))
                / (2.0 * h);
            assert!((grad[slot] - fd).abs() < 1e-5, "slot {slot}: shift {} vs fd {fd}", grad[slot]);
        }
        checked += 1;
    }
}

#[test]
fn smoothed_loss_decreases_on_a_learnable_task() {
    use qcs_core::circuit::CircuitGenome;
    use qcs_core::sim::{AngleSource, GateKind, GateSpec};
    let genome = CircuitGenome::new(
        2,
        vec![
            GateSpec::rotation(GateKind::Ry, 0, AngleSource::Embedding(0)),
            GateSpec::rotation(GateKind::Ry, 1, AngleSource::Embedding(1)),
            GateSpec::rotation(GateKind::Ry, 0, AngleSource::Trainable(0)),
            GateSpec::two(GateKind::Cx, 1, 0),
            GateSpec::rotation(GateKind::Ry, 0, AngleSource::Trainable(1)),
        ],
    );
    let mut rng = seed::rng(5);
    let data: Vec<Sample> = (0..40)
        .map(|_| {
            let features = random_features(&mut rng, 2);
            let target = if features[0] > 0.5 { 1.0 } else { -1.0 };
            Sample { split: Split::Train, target, features }
        })
        .collect();
    let config = TrainConfig { epochs: 60, batch_size: 8, learning_rate: 0.05, seed: 3, ..Default::default() };
    let trace = trainer::train(&genome, &data, &config).unwrap().loss_trace;
    let window = |r: std::ops::Range<usize>| trace[r.clone()].iter().sum::<f64>() / r.len() as f64;
    assert!(window(50..60) < window(0..10), "trace {trace:?}");
}

#[test]
fn adam_ignores_zero_gradients() {
    let config = TrainConfig::default();
    let mut adam = trainer::Adam::new(4, &config);
    let mut params = vec![0.1, 0.2, 0.3, 0.4];
    adam.step(&mut params, &[0.0; 4]);
    assert_eq!(params, vec![0.1, 0.2, 0.3, 0.4]);
}
