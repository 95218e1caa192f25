//! Clifford noise resilience.
//!
//! Every rotation of a genome is snapped to a random multiple of π/2, giving a
//! Clifford replica whose noiseless outcome distribution is flat over a
//! power-of-two support. The replica is then evolved as a density matrix under
//! the device's depolarizing and readout noise, and CNR is the mean classical
//! fidelity between the two distributions over all replicas.
//!
//! A density matrix over n qubits is stored row-major as a vector over 2n
//! index bits: column qubit q lives at bit q, row qubit q at bit q + n. Left
//! multiplication by U acts on the row bits and right multiplication by U†
//! acts on the column bits with conj(U).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{CircuitGenome, DeviceModel};
use crate::seed;
use crate::sim::{self, AngleSource, GateSpec, Kernel, Targets};
use crate::tolerance;
use crate::{Error, Result};

/// Largest register evolved as a dense density matrix.
pub const MAX_DENSITY_QUBITS: usize = 12;

pub const DEFAULT_REPLICAS: usize = 32;

/// Mixed state over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    n_qubits: usize,
    entries: Vec<Complex64>,
}

impl DensityState {
    pub fn zero(n_qubits: usize) -> Result<DensityState> {
        if n_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::TooManyQubits { n_qubits, max: MAX_DENSITY_QUBITS });
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); 1 << (2 * n_qubits)];
        entries[0] = Complex64::new(1.0, 0.0);
        Ok(DensityState { n_qubits, entries })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row << self.n_qubits) | col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    /// Largest |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.entry(r, c) - self.entry(c, r).conj()).norm());
            }
        }
        worst
    }

    pub(crate) fn apply_kernel(&mut self, kernel: &Kernel) {
        kernel.apply_shifted(&mut self.entries, self.n_qubits, false);
        kernel.apply_shifted(&mut self.entries, 0, true);
    }

    /// ρ → (1 − p)ρ + p · Tr_q(ρ) ⊗ I/2 on each qubit of `qubits` jointly,
    /// i.e. the joint register is replaced by the maximally mixed state with
    /// probability p.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let n = self.n_qubits;
        let col_mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
        let row_mask = col_mask << n;
        let flips: Vec<usize> = subsets(qubits).map(|m| m | (m << n)).collect();
        let share = p / flips.len() as f64;
        let old = self.entries.clone();
        for (index, entry) in self.entries.iter_mut().enumerate() {
            let diagonal_block = ((index & row_mask) >> n) == (index & col_mask);
            let mut value = old[index] * (1.0 - p);
            if diagonal_block {
                let mixed: Complex64 = flips.iter().map(|&f| old[index ^ f]).sum();
                value += mixed * share;
            }
            *entry = value;
        }
    }

    /// Diagonal of ρ, clamped at zero against rounding.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entry(i, i).re.max(0.0)).collect()
    }
}

/// All bitmasks formed from subsets of `qubits`.
fn subsets(qubits: &[usize]) -> impl Iterator<Item = usize> + '_ {
    (0..1usize << qubits.len()).map(move |pick| {
        qubits
            .iter()
            .enumerate()
            .filter(|(i, _)| pick >> i & 1 == 1)
            .map(|(_, &q)| 1usize << q)
            .sum()
    })
}

/// Computational-basis outcome probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<OutcomeDistribution> {
        if let Some(&p) = probabilities.iter().find(|&&p| !(p >= -tolerance::NEGATIVE_PROBABILITY)) {
            return Err(Error::InvalidInput(alloc::format!("negative probability {p}")));
        }
        let total: f64 = probabilities.iter().sum();
        if libm::fabs(total - 1.0) > tolerance::PROBABILITY {
            return Err(Error::InvalidInput(alloc::format!("probabilities sum to {total}")));
        }
        Ok(OutcomeDistribution { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Applies an independent bit flip with probability `flip` to each of
    /// `n_qubits` outcome bits.
    pub fn with_readout_flips(mut self, n_qubits: usize, flip: f64) -> OutcomeDistribution {
        if flip == 0.0 {
            return self;
        }
        for q in 0..n_qubits {
            let mask = 1usize << q;
            let old = self.probabilities.clone();
            for (i, p) in self.probabilities.iter_mut().enumerate() {
                *p = (1.0 - flip) * old[i] + flip * old[i ^ mask];
            }
        }
        self
    }
}

/// Replaces every rotation angle with an independent uniform draw from
/// {0, π/2, π, 3π/2}. Non-rotation gates are kept as is.
pub fn snap_to_clifford(genome: &CircuitGenome, seed: u64) -> CircuitGenome {
    let mut rng = seed::rng(seed);
    let gates = genome
        .gates
        .iter()
        .map(|gate| match gate.angle {
            Some(_) => {
                let quarter = rng.random_range(0..4u32);
                GateSpec { angle: Some(AngleSource::Fixed(quarter as f64 * FRAC_PI_2)), ..*gate }
            }
            None => *gate,
        })
        .collect();
    CircuitGenome::new(genome.n_qubits, gates)
}

fn fixed_kernels(genome: &CircuitGenome) -> Result<Vec<Kernel>> {
    genome
        .gates
        .iter()
        .map(|gate| {
            gate.check(genome.n_qubits)?;
            match gate.angle {
                Some(AngleSource::Trainable(_)) | Some(AngleSource::Embedding(_)) => Err(Error::UnresolvedSlots),
                Some(AngleSource::Fixed(theta)) => Ok(Kernel::lower(gate, Some(theta))),
                None => Ok(Kernel::lower(gate, None)),
            }
        })
        .collect()
}

/// Exact noiseless outcome distribution of a fully fixed circuit.
pub fn run_noiseless_dist(genome: &CircuitGenome) -> Result<OutcomeDistribution> {
    let kernels = fixed_kernels(genome)?;
    let mut state = sim::QuantumState::zero(genome.n_qubits);
    for kernel in &kernels {
        state.apply_kernel(kernel);
    }
    Ok(OutcomeDistribution { probabilities: state.probabilities() })
}

/// Density-matrix evolution with depolarizing noise after every gate and
/// readout flips on the final distribution.
pub fn run_noisy_state(genome: &CircuitGenome, device: &DeviceModel) -> Result<DensityState> {
    device.validate()?;
    if genome.n_qubits > device.n_qubits {
        return Err(Error::QubitMismatch { expected: device.n_qubits, found: genome.n_qubits });
    }
    let kernels = fixed_kernels(genome)?;
    let mut rho = DensityState::zero(genome.n_qubits)?;
    for (gate, kernel) in genome.gates.iter().zip(&kernels) {
        rho.apply_kernel(kernel);
        match gate.targets {
            Targets::One(q) => rho.depolarize(&[q], device.p1),
            Targets::Two(a, b) => rho.depolarize(&[a, b], device.p2),
        }
    }
    Ok(rho)
}

pub fn run_noisy_dist(genome: &CircuitGenome, device: &DeviceModel) -> Result<OutcomeDistribution> {
    let rho = run_noisy_state(genome, device)?;
    let dist = OutcomeDistribution::new(normalized(rho.diagonal()))?;
    Ok(dist.with_readout_flips(genome.n_qubits, device.readout_flip))
}

fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

/// Classical (Bhattacharyya) fidelity (Σ √(p_i q_i))².
pub fn dist_fidelity(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
    if p.probabilities.len() != q.probabilities.len() {
        return Err(Error::DimensionMismatch { left: p.probabilities.len(), right: q.probabilities.len() });
    }
    let overlap: f64 = p
        .probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(&a, &b)| libm::sqrt(a.max(0.0) * b.max(0.0)))
        .sum();
    Ok((overlap * overlap).min(1.0))
}

/// Mean replica fidelity. Replica r is snapped with a seed derived from
/// `(seed, r)`, so the value does not depend on evaluation order.
pub fn cnr(genome: &CircuitGenome, device: &DeviceModel, n_replicas: usize, seed: u64) -> Result<f64> {
    if n_replicas == 0 {
        return Err(Error::InvalidConfig("CNR needs at least one replica".into()));
    }
    let mut total = 0.0;
    for r in 0..n_replicas {
        total += replica_fidelity(genome, device, seed, r)?;
    }
    Ok(total / n_replicas as f64)
}

/// Fidelity of replica `r`; exposed for callers that fan replicas out.
pub fn replica_fidelity(genome: &CircuitGenome, device: &DeviceModel, seed: u64, r: usize) -> Result<f64> {
    let replica = snap_to_clifford(genome, seed::derive(seed, &[seed::stream::REPLICA, r as u64]));
    let ideal = run_noiseless_dist(&replica)?;
    let noisy = run_noisy_dist(&replica, device)?;
    dist_fidelity(&ideal, &noisy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::GateKind;

    fn dist(p: &[f64]) -> OutcomeDistribution {
        OutcomeDistribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn snapping_without_rotations_is_identity() {
        let g = CircuitGenome::new(2, vec![GateSpec::single(GateKind::H, 0), GateSpec::two(GateKind::Cx, 0, 1)]);
        assert_eq!(snap_to_clifford(&g, 5), g);
    }

    #[test]
    fn snapped_angles_are_quarter_turns() {
        let g = CircuitGenome::new(
            2,
            vec![
                GateSpec::rotation(GateKind::Rx, 0, AngleSource::Trainable(0)),
                GateSpec::rotation(GateKind::Rz, 1, AngleSource::Embedding(3)),
                GateSpec::rotation(GateKind::Ry, 1, AngleSource::Fixed(0.3)),
            ],
        );
        let quarters = [0.0, FRAC_PI_2, 2.0 * FRAC_PI_2, 3.0 * FRAC_PI_2];
        for seed in 0..20 {
            let r = snap_to_clifford(&g, seed);
            assert_eq!(r.n_params, 0);
            assert!(r.feature_indices.is_empty());
            for gate in &r.gates {
                match gate.angle {
                    Some(AngleSource::Fixed(theta)) => assert!(quarters.contains(&theta)),
                    other => panic!("unsnapped angle {other:?}"),
                }
            }
            assert_eq!(snap_to_clifford(&g, seed), r);
        }
    }

    #[test]
    fn noiseless_examples() {
        let empty = CircuitGenome::new(2, Vec::new());
        assert_eq!(run_noiseless_dist(&empty).unwrap().probabilities(), &[1.0, 0.0, 0.0, 0.0]);
        let h = CircuitGenome::new(1, vec![GateSpec::single(GateKind::H, 0)]);
        let p = run_noiseless_dist(&h).unwrap();
        assert!((p.probabilities()[0] - 0.5).abs() < 1e-12 && (p.probabilities()[1] - 0.5).abs() < 1e-12);
        let unresolved = CircuitGenome::new(1, vec![GateSpec::rotation(GateKind::Rx, 0, AngleSource::Trainable(0))]);
        assert_eq!(run_noiseless_dist(&unresolved), Err(Error::UnresolvedSlots));
    }

    #[test]
    fn noisy_examples() {
        let x = CircuitGenome::new(1, vec![GateSpec::single(GateKind::X, 0)]);
        let full = DeviceModel::line(1).with_noise(1.0, 0.0, 0.0);
        let p = run_noisy_dist(&x, &full).unwrap();
        assert!((p.probabilities()[0] - 0.5).abs() < 1e-12);

        let empty = CircuitGenome::new(1, Vec::new());
        let readout = DeviceModel::line(1).with_noise(0.0, 0.0, 0.1);
        let p = run_noisy_dist(&empty, &readout).unwrap();
        assert!((p.probabilities()[0] - 0.9).abs() < 1e-12 && (p.probabilities()[1] - 0.1).abs() < 1e-12);

        let big = CircuitGenome::new(13, Vec::new());
        assert!(matches!(
            run_noisy_dist(&big, &DeviceModel::line(13)),
            Err(Error::TooManyQubits { n_qubits: 13, max: 12 })
        ));
    }

    #[test]
    fn two_qubit_full_depolarization_is_uniform() {
        let g = CircuitGenome::new(2, vec![GateSpec::single(GateKind::X, 0), GateSpec::two(GateKind::Cx, 0, 1)]);
        let device = DeviceModel::line(2).with_noise(0.0, 1.0, 0.0);
        let p = run_noisy_dist(&g, &device).unwrap();
        for &x in p.probabilities() {
            assert!((x - 0.25).abs() < 1e-12);
        }
        // Deterministic noiseless outcome |11⟩ against uniform noise: F = 1/4.
        let ideal = run_noiseless_dist(&g).unwrap();
        assert!((dist_fidelity(&ideal, &p).unwrap() - 0.25).abs() < 1e-12);
        assert!((cnr(&g, &device, 8, 1).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        assert!((dist_fidelity(&dist(&[0.3, 0.7]), &dist(&[0.3, 0.7])).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(dist_fidelity(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(), 0.0);
        assert!((dist_fidelity(&dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])).unwrap() - 0.5).abs() < 1e-12);
        assert!(dist_fidelity(&dist(&[1.0]), &dist(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn cnr_defaults_and_errors() {
        assert_eq!(DEFAULT_REPLICAS, 32);
        let g = CircuitGenome::new(1, vec![GateSpec::rotation(GateKind::Rx, 0, AngleSource::Trainable(0))]);
        assert!(cnr(&g, &DeviceModel::line(1), 0, 0).is_err());
        assert!((cnr(&g, &DeviceModel::line(1), 4, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarize_preserves_trace_and_hermiticity() {
        let g = CircuitGenome::new(
            3,
            vec![
                GateSpec::single(GateKind::H, 0),
                GateSpec::two(GateKind::Cx, 0, 2),
                GateSpec::single(GateKind::S, 2),
                GateSpec::rotation(GateKind::Ry, 1, AngleSource::Fixed(0.7)),
                GateSpec::two(GateKind::Cz, 1, 2),
            ],
        );
        let rho = run_noisy_state(&g, &DeviceModel::line(3).with_noise(0.3, 0.4, 0.0)).unwrap();
        assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(rho.hermiticity_error() < 1e-12);
    }
}
