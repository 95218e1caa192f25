//! Random circuit generation and independent reference implementations.
#![allow(dead_code)]

use num_complex::Complex64;
use qcs_core::circuit::CircuitGenome;
use qcs_core::sim::{AngleSource, GateKind, GateSpec, Targets};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const ONE_QUBIT_KINDS: [GateKind; 9] = [
    GateKind::Rx,
    GateKind::Ry,
    GateKind::Rz,
    GateKind::H,
    GateKind::S,
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::I,
];

/// Any gate kind on any qubit pair; angles mix fixed, trainable and embedded sources.
pub fn random_genome(rng: &mut ChaCha8Rng, n_qubits: usize, n_gates: usize, n_features: usize) -> CircuitGenome {
    let mut gates = Vec::with_capacity(n_gates);
    let mut next_slot = 0;
    for _ in 0..n_gates {
        let two = n_qubits > 1 && rng.random_bool(0.3);
        if two {
            let a = rng.random_range(0..n_qubits);
            let mut b = rng.random_range(0..n_qubits - 1);
            if b >= a {
                b += 1;
            }
            let kind = if rng.random_bool(0.5) { GateKind::Cx } else { GateKind::Cz };
            gates.push(GateSpec::two(kind, a, b));
            continue;
        }
        let kind = ONE_QUBIT_KINDS[rng.random_range(0..ONE_QUBIT_KINDS.len())];
        let q = rng.random_range(0..n_qubits);
        if kind.is_rotation() {
            let source = match rng.random_range(0..3) {
                0 => AngleSource::Fixed(rng.random_range(-7.0..7.0)),
                1 if n_features > 0 => AngleSource::Embedding(rng.random_range(0..n_features)),
                _ => {
                    // Occasionally reuse a slot so shared parameters are exercised.
                    let slot = if next_slot > 0 && rng.random_bool(0.2) {
                        rng.random_range(0..next_slot)
                    } else {
                        next_slot += 1;
                        next_slot - 1
                    };
                    AngleSource::Trainable(slot)
                }
            };
            gates.push(GateSpec::rotation(kind, q, source));
        } else {
            gates.push(GateSpec::single(kind, q));
        }
    }
    CircuitGenome::new(n_qubits, gates)
}

pub fn random_params(rng: &mut ChaCha8Rng, genome: &CircuitGenome) -> Vec<f64> {
    (0..genome.n_params).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
}

pub fn random_features(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
}

pub fn random_state(rng: &mut ChaCha8Rng, n_qubits: usize) -> Vec<Complex64> {
    let raw: Vec<Complex64> =
        (0..1 << n_qubits).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|a| a / norm).collect()
}

// Dense reference simulator: textbook 2×2 matrices, embedded into the full
// 2^n space as explicit matrices and multiplied.

pub type Dense = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn gate_matrix(kind: GateKind, theta: f64) -> [[Complex64; 2]; 2] {
    let (h_c, h_s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::Rx => [[c(h_c, 0.0), c(0.0, -h_s)], [c(0.0, -h_s), c(h_c, 0.0)]],
        GateKind::Ry => [[c(h_c, 0.0), c(-h_s, 0.0)], [c(h_s, 0.0), c(h_c, 0.0)]],
        GateKind::Rz => [[c(h_c, -h_s), c(0.0, 0.0)], [c(0.0, 0.0), c(h_c, h_s)]],
        GateKind::H => [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]],
        GateKind::S => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        GateKind::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        GateKind::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        GateKind::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        GateKind::I => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        GateKind::Cx | GateKind::Cz => panic!("two-qubit kind has no 2x2 matrix"),
    }
}

fn bit(i: usize, q: usize) -> usize {
    (i >> q) & 1
}

/// Full-space matrix of one gate, entry by entry.
pub fn full_matrix(n_qubits: usize, gate: &GateSpec, theta: f64) -> Dense {
    let dim = 1 << n_qubits;
    let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
    for row in 0..dim {
        for col in 0..dim {
            m[row][col] = match gate.targets {
                Targets::One(q) => {
                    if (row & !(1 << q)) == (col & !(1 << q)) {
                        gate_matrix(gate.kind, theta)[bit(row, q)][bit(col, q)]
                    } else {
                        c(0.0, 0.0)
                    }
                }
                Targets::Two(a, b) => match gate.kind {
                    GateKind::Cx => {
                        let image = if bit(col, a) == 1 { col ^ (1 << b) } else { col };
                        if row == image {
                            c(1.0, 0.0)
                        } else {
                            c(0.0, 0.0)
                        }
                    }
                    GateKind::Cz => {
                        if row != col {
                            c(0.0, 0.0)
                        } else if bit(col, a) == 1 && bit(col, b) == 1 {
                            c(-1.0, 0.0)
                        } else {
                            c(1.0, 0.0)
                        }
                    }
                    _ => panic!("not a two-qubit kind"),
                },
            };
        }
    }
    m
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

pub fn identity(dim: usize) -> Dense {
    (0..dim).map(|i| (0..dim).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()).collect()
}

pub fn resolve(gate: &GateSpec, params: &[f64], features: &[f64]) -> f64 {
    match gate.angle {
        Some(AngleSource::Fixed(t)) => t,
        Some(AngleSource::Trainable(s)) => params[s],
        Some(AngleSource::Embedding(f)) => features[f] * std::f64::consts::PI,
        None => 0.0,
    }
}

/// U = G_k ⋯ G_1 as a dense matrix.
pub fn circuit_unitary(genome: &CircuitGenome, params: &[f64], features: &[f64]) -> Dense {
    genome.gates.iter().fold(identity(1 << genome.n_qubits), |acc, gate| {
        matmul(&full_matrix(genome.n_qubits, gate, resolve(gate, params, features)), &acc)
    })
}

/// Adjoint gate sequence: reversed order, negated angles, S becomes S³.
pub fn inverse_gates(genome: &CircuitGenome, params: &[f64], features: &[f64]) -> Vec<(GateSpec, Option<f64>)> {
    let mut out = Vec::new();
    for gate in genome.gates.iter().rev() {
        match gate.kind {
            k if k.is_rotation() => out.push((*gate, Some(-resolve(gate, params, features)))),
            GateKind::S => out.extend(std::iter::repeat((*gate, None)).take(3)),
            _ => out.push((*gate, None)),
        }
    }
    out
}

// Metric oracles written from definitions, O(n²) where convenient.

/// Rank of x_i = #{x_j < x_i} + (#{x_j = x_i} + 1) / 2.
pub fn brute_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let below = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn brute_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

pub fn brute_spearman(xs: &[f64], ys: &[f64]) -> f64 {
    brute_pearson(&brute_ranks(xs), &brute_ranks(ys))
}

/// Average precision from its step definition: for each distinct threshold,
/// from high to low, add (recall gain) × precision at that threshold.
pub fn brute_average_precision(scores: &[f64], labels: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let positives = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let mut ap = 0.0;
    let mut previous_recall = 0.0;
    for t in thresholds {
        let selected: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = selected.iter().filter(|&&i| labels[i] > 0.0).count() as f64;
        let recall = tp / positives;
        ap += (recall - previous_recall) * (tp / selected.len() as f64);
        previous_recall = recall;
    }
    ap
}

pub fn brute_accuracy_f1(scores: &[f64], labels: &[f64]) -> (f64, f64) {
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= 0.0).collect();
    let actual: Vec<bool> = labels.iter().map(|&y| y > 0.0).collect();
    let n = scores.len() as f64;
    let correct = predicted.iter().zip(&actual).filter(|(p, a)| p == a).count() as f64;
    let tp = predicted.iter().zip(&actual).filter(|(p, a)| **p && **a).count() as f64;
    let predicted_pos = predicted.iter().filter(|&&p| p).count() as f64;
    let actual_pos = actual.iter().filter(|&&a| a).count() as f64;
    let f1 = if predicted_pos + actual_pos == 0.0 { 0.0 } else { 2.0 * tp / (predicted_pos + actual_pos) };
    (correct / n, f1)
}
