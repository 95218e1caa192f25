//! Circuit genomes, device models and device-aware candidate generation.
//!
//! The generator is topology-aware only: noise enters later through CNR.
//! Each candidate is built from a fixed gate budget split between embedding,
//! trainable and entangling gates. Category counts are apportioned exactly
//! from the mixture weights and then placed in a seeded random order, which
//! keeps the embedding count (and therefore feature coverage) predictable.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::seed;
use crate::sim::{AngleSource, GateKind, GateSpec, Targets};
use crate::tolerance;
use crate::{Error, Result};

const ROTATIONS: [GateKind; 3] = [GateKind::Rx, GateKind::Ry, GateKind::Rz];

/// Topology and error rates of the target device.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DeviceModel {
    pub n_qubits: usize,
    /// Unordered coupling pairs.
    #[cfg_attr(feature = "serde", serde(rename = "edges"))]
    pub coupling_edges: Vec<(usize, usize)>,
    /// CX or CZ.
    pub native_two_qubit: GateKind,
    /// Depolarizing probability after each one-qubit gate.
    pub p1: f64,
    /// Depolarizing probability after each two-qubit gate.
    pub p2: f64,
    /// Per-qubit bit-flip probability at measurement.
    pub readout_flip: f64,
}

impl DeviceModel {
    /// Noiseless device on a linear chain.
    pub fn line(n_qubits: usize) -> DeviceModel {
        DeviceModel {
            n_qubits,
            coupling_edges: (1..n_qubits).map(|q| (q - 1, q)).collect(),
            native_two_qubit: GateKind::Cx,
            p1: 0.0,
            p2: 0.0,
            readout_flip: 0.0,
        }
    }

    pub fn with_noise(mut self, p1: f64, p2: f64, readout_flip: f64) -> DeviceModel {
        self.p1 = p1;
        self.p2 = p2;
        self.readout_flip = readout_flip;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidDevice("device has no qubits".into()));
        }
        for (name, p) in [("p1", self.p1), ("p2", self.p2), ("readout_flip", self.readout_flip)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDevice(format!("{name} = {p} is not a probability")));
            }
        }
        if !matches!(self.native_two_qubit, GateKind::Cx | GateKind::Cz) {
            return Err(Error::InvalidDevice(format!(
                "native two-qubit gate must be CX or CZ, got {}",
                self.native_two_qubit
            )));
        }
        for &(a, b) in &self.coupling_edges {
            if a == b {
                return Err(Error::InvalidDevice(format!("self-loop on qubit {a}")));
            }
            if a >= self.n_qubits || b >= self.n_qubits {
                return Err(Error::InvalidDevice(format!(
                    "edge ({a}, {b}) references a qubit outside 0..{}",
                    self.n_qubits
                )));
            }
        }
        Ok(())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.coupling_edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    }

    /// Returns a copy with every error probability multiplied by `factor`.
    pub fn scaled_noise(&self, factor: f64) -> DeviceModel {
        self.clone().with_noise(self.p1 * factor, self.p2 * factor, self.readout_flip * factor)
    }
}

/// The searchable unit: an ordered gate list over `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGenome {
    pub n_qubits: usize,
    pub gates: Vec<GateSpec>,
    /// One past the largest trainable slot.
    pub n_params: usize,
    /// Embedding indices in use, ascending.
    pub feature_indices: BTreeSet<usize>,
}

impl CircuitGenome {
    /// Builds a genome and derives `n_params` and `feature_indices` from the gates.
    pub fn new(n_qubits: usize, gates: Vec<GateSpec>) -> CircuitGenome {
        let n_params = gates.iter().filter_map(GateSpec::param_slot).max().map_or(0, |m| m + 1);
        let feature_indices = gates.iter().filter_map(GateSpec::feature_index).collect();
        CircuitGenome { n_qubits, gates, n_params, feature_indices }
    }

    pub fn n_trainable_gates(&self) -> usize {
        self.gates.iter().filter(|g| g.param_slot().is_some()).count()
    }

    pub fn n_two_qubit_gates(&self) -> usize {
        self.gates.iter().filter(|g| g.kind.arity() == 2).count()
    }

    /// Smallest feature-vector length the genome can run on.
    pub fn min_features(&self) -> usize {
        self.feature_indices.iter().next_back().map_or(0, |m| m + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GeneratorConfig {
    pub n_candidates: usize,
    pub gate_budget: usize,
    pub embed_fraction: f64,
    pub trainable_fraction: f64,
    pub entangle_fraction: f64,
    /// Width F of the feature vectors the candidates will embed.
    pub n_features: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_candidates: 250,
            gate_budget: 160,
            embed_fraction: 0.8,
            trainable_fraction: 0.15,
            entangle_fraction: 0.05,
            n_features: 128,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fractions = [self.embed_fraction, self.trainable_fraction, self.entangle_fraction];
        if fractions.iter().any(|&f| !(f >= 0.0)) {
            return Err(Error::InvalidConfig("mixture fractions must be non-negative".into()));
        }
        let sum: f64 = fractions.iter().sum();
        if libm::fabs(sum - 1.0) > tolerance::FRACTION_SUM {
            return Err(Error::InvalidConfig(format!("mixture fractions sum to {sum}, not 1")));
        }
        if self.gate_budget == 0 {
            return Err(Error::InvalidConfig("gate_budget must be at least 1".into()));
        }
        if self.embed_fraction > 0.0 && self.n_features == 0 {
            return Err(Error::InvalidConfig("embedding gates need n_features >= 1".into()));
        }
        Ok(())
    }

    /// Exact (embed, trainable, entangle) counts by largest remainder.
    pub fn category_counts(&self) -> [usize; 3] {
        let weights = [self.embed_fraction, self.trainable_fraction, self.entangle_fraction];
        let budget = self.gate_budget as f64;
        let mut counts = weights.map(|w| libm::floor(w * budget) as usize);
        let mut order = [0usize, 1, 2];
        let remainder = |i: usize| weights[i] * budget - counts[i] as f64;
        order.sort_by(|&a, &b| remainder(b).total_cmp(&remainder(a)).then(a.cmp(&b)));
        let mut left = self.gate_budget - counts.iter().sum::<usize>();
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            if weights[i] > 0.0 {
                counts[i] += 1;
                left -= 1;
            }
        }
        counts
    }
}

#[derive(Clone, Copy)]
enum Category {
    Embed,
    Trainable,
    Entangle,
}

/// Generates `config.n_candidates` genomes for `device`. Candidate `i` uses a
/// random stream derived from `(config.seed, i)`.
pub fn generate_candidates(device: &DeviceModel, config: &GeneratorConfig) -> Result<Vec<CircuitGenome>> {
    device.validate()?;
    config.validate()?;
    let counts = config.category_counts();
    if counts[2] > 0 && device.coupling_edges.is_empty() {
        return Err(Error::InvalidConfig("entangling gates requested on a device without coupling edges".into()));
    }
    Ok((0..config.n_candidates)
        .map(|i| generate_one(device, config, counts, seed::derive(config.seed, &[seed::stream::GENERATOR, i as u64])))
        .collect())
}

fn generate_one(device: &DeviceModel, config: &GeneratorConfig, counts: [usize; 3], seed: u64) -> CircuitGenome {
    let mut rng = seed::rng(seed);
    let mut categories: Vec<Category> = Vec::with_capacity(config.gate_budget);
    for (category, &n) in [Category::Embed, Category::Trainable, Category::Entangle].iter().zip(&counts) {
        categories.extend(core::iter::repeat(*category).take(n));
    }
    categories.shuffle(&mut rng);

    let mut features: Vec<usize> = (0..config.n_features).collect();
    features.shuffle(&mut rng);
    let mut next_feature = 0usize;
    let mut next_slot = 0usize;

    let gates = categories
        .into_iter()
        .map(|category| match category {
            Category::Embed => {
                let axis = ROTATIONS[rng.random_range(0..3)];
                let qubit = rng.random_range(0..device.n_qubits);
                let index = features[next_feature % features.len()];
                next_feature += 1;
                GateSpec::rotation(axis, qubit, AngleSource::Embedding(index))
            }
            Category::Trainable => {
                let axis = ROTATIONS[rng.random_range(0..3)];
                let qubit = rng.random_range(0..device.n_qubits);
                next_slot += 1;
                GateSpec::rotation(axis, qubit, AngleSource::Trainable(next_slot - 1))
            }
            Category::Entangle => {
                let (a, b) = device.coupling_edges[rng.random_range(0..device.coupling_edges.len())];
                let (a, b) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
                GateSpec::two(device.native_two_qubit, a, b)
            }
        })
        .collect();
    CircuitGenome::new(device.n_qubits, gates)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    QubitCount { genome: usize, device: usize },
    BadGate { gate: usize, reason: Error },
    OffEdge { gate: usize, a: usize, b: usize },
    NonNativeTwoQubit { gate: usize, kind: GateKind },
    ParamGap { slot: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::QubitCount { genome, device } => {
                write!(f, "genome has {genome} qubits, device has {device}")
            }
            Violation::BadGate { gate, reason } => write!(f, "gate {gate}: {reason}"),
            Violation::OffEdge { gate, a, b } => write!(f, "gate {gate}: ({a}, {b}) is not a coupling edge"),
            Violation::NonNativeTwoQubit { gate, kind } => {
                write!(f, "gate {gate}: {kind} is not the device's native two-qubit gate")
            }
            Violation::ParamGap { slot } => write!(f, "parameter slot {slot} is never used"),
        }
    }
}

/// Reports every violation of `genome` against `device`; empty means valid.
pub fn validate_genome(genome: &CircuitGenome, device: &DeviceModel) -> Vec<Violation> {
    let mut out = Vec::new();
    if genome.n_qubits != device.n_qubits {
        out.push(Violation::QubitCount { genome: genome.n_qubits, device: device.n_qubits });
    }
    let mut used_slots = BTreeSet::new();
    for (index, gate) in genome.gates.iter().enumerate() {
        if let Err(reason) = gate.check(genome.n_qubits.min(device.n_qubits)) {
            out.push(Violation::BadGate { gate: index, reason });
            continue;
        }
        if let Targets::Two(a, b) = gate.targets {
            if !device.has_edge(a, b) {
                out.push(Violation::OffEdge { gate: index, a, b });
            }
            if gate.kind != device.native_two_qubit {
                out.push(Violation::NonNativeTwoQubit { gate: index, kind: gate.kind });
            }
        }
        used_slots.extend(gate.param_slot());
    }
    let n_params = used_slots.iter().next_back().map_or(0, |m| m + 1);
    out.extend((0..n_params).filter(|s| !used_slots.contains(s)).map(|slot| Violation::ParamGap { slot }));
    out
}

/// Renders violations one per line.
pub fn describe_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| format!("{v}\n")).collect()
}
