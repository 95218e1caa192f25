mod common;

use common::*;
use proptest::prelude::*;
use qcs_core::seed;
use qcs_core::sim::{self, QuantumState};
use rand::Rng;

fn max_diff(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn matches_dense_matrix_product_on_small_registers() {
    let mut rng = seed::rng(11);
    for case in 0..200 {
        let n = 1 + case % 3;
        let len = rng.random_range(0..25);
        let genome = random_genome(&mut rng, n, len, 4);
        let params = random_params(&mut rng, &genome);
        let features = random_features(&mut rng, 4);
        let fast = sim::run_circuit(&genome, &params, &features).unwrap();
        let u = circuit_unitary(&genome, &params, &features);
        let dense: Vec<_> = (0..1 << n).map(|row| u[row][0]).collect();
        assert!(max_diff(fast.amplitudes(), &dense) < 1e-9, "case {case}");
    }
}

#[test]
fn dense_unitaries_are_unitary() {
    let mut rng = seed::rng(12);
    for _ in 0..20 {
        let genome = random_genome(&mut rng, 3, 15, 2);
        let u = circuit_unitary(&genome, &random_params(&mut rng, &genome), &random_features(&mut rng, 2));
        let udag: Dense = (0..8).map(|i| (0..8).map(|j| u[j][i].conj()).collect()).collect();
        let product = matmul(&udag, &u);
        let eye = identity(8);
        for i in 0..8 {
            assert!(max_diff(&product[i], &eye[i]) < 1e-12);
        }
    }
}

#[test]
fn inverse_circuit_round_trips_arbitrary_states() {
    let mut rng = seed::rng(13);
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let len = rng.random_range(1..40);
        let genome = random_genome(&mut rng, n, len, 3);
        let params = random_params(&mut rng, &genome);
        let features = random_features(&mut rng, 3);
        let start = QuantumState::from_amplitudes(random_state(&mut rng, n)).unwrap();
        let mut state = start.clone();
        for gate in &genome.gates {
            state.apply_gate_mut(gate, sim::resolve_angle(gate, &params, &features).unwrap()).unwrap();
        }
        for (gate, angle) in inverse_gates(&genome, &params, &features) {
            state.apply_gate_mut(&gate, angle).unwrap();
        }
        assert!(max_diff(state.amplitudes(), start.amplitudes()) < 1e-9);
    }
}

#[test]
fn expectation_matches_dense_diagonal() {
    let mut rng = seed::rng(14);
    for _ in 0..50 {
        let genome = random_genome(&mut rng, 3, 12, 2);
        let params = random_params(&mut rng, &genome);
        let features = random_features(&mut rng, 2);
        let state = sim::run_circuit(&genome, &params, &features).unwrap();
        let probs = state.probabilities();
        for q in 0..3 {
            let oracle: f64 = probs.iter().enumerate().map(|(i, p)| if (i >> q) & 1 == 0 { *p } else { -*p }).sum();
            assert!((sim::expectation_z(&state, &[q]).unwrap() - oracle).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_conserved(seed_value in any::<u64>(), n in 1usize..=7, len in 0usize..60) {
        let mut rng = seed::rng(seed_value);
        let genome = random_genome(&mut rng, n, len, 5);
        let params = random_params(&mut rng, &genome);
        let features = random_features(&mut rng, 5);
        let state = sim::run_circuit(&genome, &params, &features).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn runs_are_deterministic(seed_value in any::<u64>(), n in 1usize..=5) {
        let mut rng = seed::rng(seed_value);
        let genome = random_genome(&mut rng, n, 30, 5);
        let params = random_params(&mut rng, &genome);
        let features = random_features(&mut rng, 5);
        let a = sim::run_circuit(&genome, &params, &features).unwrap();
        let b = sim::run_circuit(&genome, &params, &features).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed_value in any::<u64>(), n in 1usize..=5) {
        let mut rng = seed::rng(seed_value);
        let a = QuantumState::from_amplitudes(random_state(&mut rng, n)).unwrap();
        let b = QuantumState::from_amplitudes(random_state(&mut rng, n)).unwrap();
        let ab = sim::state_fidelity(&a, &b).unwrap();
        let ba = sim::state_fidelity(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-14);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
        prop_assert!((sim::state_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }
}
