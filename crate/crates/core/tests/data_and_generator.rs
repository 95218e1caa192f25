use proptest::prelude::*;
use qcs_core::circuit::{generate_candidates, validate_genome, DeviceModel, GeneratorConfig};
use qcs_core::data::*;
use qcs_core::scoring::select_subset;
use qcs_core::sim::GateKind;

fn heavy_hex_like() -> DeviceModel {
    DeviceModel {
        n_qubits: 7,
        coupling_edges: vec![(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)],
        native_two_qubit: GateKind::Cz,
        p1: 0.001,
        p2: 0.01,
        readout_flip: 0.02,
    }
}

#[test]
fn generated_candidates_respect_the_device() {
    let device = heavy_hex_like();
    let config = GeneratorConfig { n_candidates: 50, ..Default::default() };
    let pool = generate_candidates(&device, &config).unwrap();
    assert_eq!(pool.len(), 50);
    let [embed, trainable, entangle] = config.category_counts();
    for genome in &pool {
        assert!(validate_genome(genome, &device).is_empty());
        assert_eq!(genome.gates.len(), config.gate_budget);
        assert_eq!(genome.n_trainable_gates(), trainable);
        assert_eq!(genome.n_params, trainable);
        assert_eq!(genome.n_two_qubit_gates(), entangle);
        assert!(embed >= config.n_features);
        assert_eq!(genome.feature_indices.len(), config.n_features);
    }
}

#[test]
fn distinct_seeds_give_distinct_pools() {
    let device = heavy_hex_like();
    let pools: Vec<_> = (0..10)
        .map(|seed| {
            let config = GeneratorConfig { n_candidates: 3, gate_budget: 30, n_features: 8, seed, ..Default::default() };
            generate_candidates(&device, &config).unwrap()
        })
        .collect();
    for i in 0..pools.len() {
        for j in i + 1..pools.len() {
            assert_ne!(pools[i], pools[j]);
        }
    }
}

#[test]
fn synthetic_classification_has_requested_shape() {
    let spec = SyntheticSpec { seed: 9, ..Default::default() };
    let data = make_synthetic(&spec).unwrap();
    data.validate().unwrap();
    assert_eq!(data.samples.len(), 210);
    let positives = data.samples.iter().filter(|s| s.target == 1.0).count();
    assert_eq!((positives, 210 - positives), class_counts(210, 6.0));
    assert_eq!(make_synthetic(&spec).unwrap(), data);
    let test = data.split(Split::Test);
    assert!(test.iter().any(|s| s.target == -1.0));
}

#[test]
fn subset_is_stratified() {
    let data = make_synthetic(&SyntheticSpec { seed: 2, ..Default::default() }).unwrap();
    let train = data.split(Split::Train);
    let picked = select_subset(&train, TaskKind::Classification, 32, 7);
    assert_eq!(picked.len(), 32);
    let minority = picked.iter().filter(|&&i| train[i].target == -1.0).count();
    assert!((4..=5).contains(&minority), "minority {minority}");
    assert_eq!(picked, select_subset(&train, TaskKind::Classification, 32, 7));
}

proptest! {
    #[test]
    fn normalization_inverts(
        train in prop::collection::vec(-100.0f64..100.0, 2..30),
        test in prop::collection::vec(-100.0f64..100.0, 0..10),
    ) {
        prop_assume!(train.iter().any(|&y| y != train[0]));
        let n = normalize_targets(&train, &test).unwrap();
        for (&raw, &z) in train.iter().zip(&n.train) {
            prop_assert!((-1.0..=1.0).contains(&z));
            prop_assert!((n.scaler.inverse(z) - raw).abs() < 1e-9);
        }
        for (&raw, &z) in test.iter().zip(&n.test) {
            let inside = (n.scaler.min..=n.scaler.max).contains(&raw);
            if inside {
                prop_assert!((n.scaler.inverse(z) - raw).abs() < 1e-9);
            }
        }
        let outside = test.iter().filter(|&&y| y < n.scaler.min || y > n.scaler.max).count();
        prop_assert_eq!(n.clamped, outside);
    }
}
