//! Training-free scoring: state-similarity matrices, reference and weight
//! matrices, RepCap variants and the combined CNR × RepCap score.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::{CircuitGenome, DeviceModel};
use crate::data::{Sample, TaskKind};
use crate::noise;
use crate::seed;
use crate::sim::{self, QuantumState};
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.25;
pub const DEFAULT_SUBSET_SIZE: usize = 32;
pub const DEFAULT_PARAM_DRAWS: usize = 4;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> SquareMatrix {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SquareMatrix { n, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<SquareMatrix> {
        let n = rows.len();
        if let Some(row) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { left: n, right: row.len() });
        }
        Ok(SquareMatrix::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn filled(n: usize, value: f64) -> SquareMatrix {
        SquareMatrix { n, data: vec![value; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| libm::fabs(self.get(i, j) - self.get(j, i)) <= tol))
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        check_dims(self.n, other.n)?;
        Ok(SquareMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect() })
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: a, right: b })
    }
}

/// R_c: averaged pairwise state fidelities over the scoring subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix(pub SquareMatrix);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Classification,
    Regression,
}

/// R_ref: the ideal similarity pattern implied by the labels or targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMatrix {
    pub matrix: SquareMatrix,
    pub kind: ReferenceKind,
}

/// R_w: per-pair class weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub matrix: SquareMatrix,
    /// Set when only one class was present and uniform weights were returned.
    pub single_class: bool,
}

/// Mean over `n_param_draws` uniform parameter vectors in [0, 2π) of the
/// pairwise fidelities |⟨ψ_i|ψ_j⟩|² between the states of `features`.
pub fn similarity_matrix(
    genome: &CircuitGenome,
    features: &[&[f64]],
    n_param_draws: usize,
    seed: u64,
) -> Result<SimilarityMatrix> {
    if features.is_empty() {
        return Err(Error::InvalidInput("similarity matrix needs a nonempty subset".into()));
    }
    if n_param_draws == 0 {
        return Err(Error::InvalidConfig("similarity matrix needs at least one parameter draw".into()));
    }
    let d = features.len();
    let mut sum = SquareMatrix::filled(d, 0.0);
    for draw in 0..n_param_draws {
        let mut rng = seed::derived_rng(seed, &[seed::stream::DRAWS, draw as u64]);
        let params: Vec<f64> = (0..genome.n_params).map(|_| rng.random_range(0.0..TAU)).collect();
        let states = features
            .iter()
            .map(|x| sim::run_circuit(genome, &params, x))
            .collect::<Result<Vec<QuantumState>>>()?;
        for i in 0..d {
            sum.set(i, i, sum.get(i, i) + 1.0);
            for j in i + 1..d {
                let f = sim::overlap_sqr(states[i].amplitudes(), states[j].amplitudes());
                sum.set(i, j, sum.get(i, j) + f);
                sum.set(j, i, sum.get(j, i) + f);
            }
        }
    }
    let scale = 1.0 / n_param_draws as f64;
    Ok(SimilarityMatrix(SquareMatrix::from_fn(d, |i, j| sum.get(i, j) * scale)))
}

fn check_labels(labels: &[f64]) -> Result<()> {
    match labels.iter().position(|&y| y != 1.0 && y != -1.0) {
        Some(index) => Err(Error::InvalidLabel { index, value: labels[index] }),
        None => Ok(()),
    }
}

/// 1 where two samples share a label, 0 otherwise.
pub fn reference_classification(labels: &[f64]) -> Result<ReferenceMatrix> {
    check_labels(labels)?;
    Ok(ReferenceMatrix {
        matrix: SquareMatrix::from_fn(labels.len(), |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 }),
        kind: ReferenceKind::Classification,
    })
}

/// Inverse-frequency class weights w_k = d / (2 · count_k), combined per pair
/// as √(w_{y_i} · w_{y_j}). Uniform when the classes are balanced; a single
/// class yields all ones with `single_class` set.
pub fn class_weight_matrix(labels: &[f64]) -> Result<WeightMatrix> {
    check_labels(labels)?;
    let d = labels.len();
    let positives = labels.iter().filter(|&&y| y == 1.0).count();
    let negatives = d - positives;
    if positives == 0 || negatives == 0 {
        return Ok(WeightMatrix { matrix: SquareMatrix::filled(d, 1.0), single_class: true });
    }
    let n_classes = 2.0;
    let w_pos = d as f64 / (n_classes * positives as f64);
    let w_neg = d as f64 / (n_classes * negatives as f64);
    let weight = |y: f64| if y == 1.0 { w_pos } else { w_neg };
    Ok(WeightMatrix {
        matrix: SquareMatrix::from_fn(d, |i, j| libm::sqrt(weight(labels[i]) * weight(labels[j]))),
        single_class: false,
    })
}

/// Gaussian similarity exp(−(y_i − y_j)² / (2σ²)).
pub fn reference_regression(targets: &[f64], sigma: f64) -> Result<ReferenceMatrix> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidConfig(format!("bandwidth must be positive, got {sigma}")));
    }
    let denom = 2.0 * sigma * sigma;
    Ok(ReferenceMatrix {
        matrix: SquareMatrix::from_fn(targets.len(), |i, j| {
            let diff = targets[i] - targets[j];
            libm::exp(-(diff * diff) / denom)
        }),
        kind: ReferenceKind::Regression,
    })
}

/// Median of all pairwise |y_i − y_j|, i < j.
pub fn median_sigma(targets: &[f64]) -> Result<f64> {
    let mut distances: Vec<f64> = Vec::with_capacity(targets.len() * targets.len().saturating_sub(1) / 2);
    for i in 0..targets.len() {
        for j in i + 1..targets.len() {
            distances.push(libm::fabs(targets[i] - targets[j]));
        }
    }
    if distances.is_empty() {
        return Err(Error::InvalidInput("median bandwidth needs at least two targets".into()));
    }
    distances.sort_by(f64::total_cmp);
    let m = distances.len();
    let median = if m % 2 == 1 { distances[m / 2] } else { 0.5 * (distances[m / 2 - 1] + distances[m / 2]) };
    if median == 0.0 {
        return Err(Error::InvalidInput("median pairwise target distance is zero".into()));
    }
    Ok(median)
}

/// 1 − ‖R_c − R_w ⊙ R_ref‖² / (2 · n_c · d_c²), with the squared norm taken
/// entrywise. With all-ones weights this is the unweighted RepCap.
pub fn repcap_classification(
    similarity: &SimilarityMatrix,
    reference: &ReferenceMatrix,
    weights: &WeightMatrix,
    n_classes: usize,
    d: usize,
) -> Result<f64> {
    check_dims(similarity.0.dim(), d)?;
    check_dims(reference.matrix.dim(), d)?;
    check_dims(weights.matrix.dim(), d)?;
    let deviation: f64 = similarity
        .0
        .entries()
        .iter()
        .zip(reference.matrix.entries())
        .zip(weights.matrix.entries())
        .map(|((&rc, &rref), &w)| {
            let e = rc - w * rref;
            e * e
        })
        .sum();
    Ok(1.0 - deviation / (2.0 * n_classes as f64 * (d * d) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RegressionMode {
    /// 1 − ‖R_c − R_ref‖² / (2 · d²).
    Plain,
    /// 1 − Σ R_ref·(R_c − R_ref)² / (2 · Σ R_ref).
    GaussianWeighted,
}

pub fn repcap_regression(
    similarity: &SimilarityMatrix,
    reference: &ReferenceMatrix,
    mode: RegressionMode,
    d: usize,
) -> Result<f64> {
    check_dims(similarity.0.dim(), d)?;
    check_dims(reference.matrix.dim(), d)?;
    let pairs = similarity.0.entries().iter().zip(reference.matrix.entries());
    Ok(match mode {
        RegressionMode::Plain => {
            let deviation: f64 = pairs.map(|(&rc, &rref)| (rc - rref) * (rc - rref)).sum();
            1.0 - deviation / (2.0 * (d * d) as f64)
        }
        RegressionMode::GaussianWeighted => {
            let (weighted, mass) = pairs.fold((0.0, 0.0), |(num, den), (&rc, &rref)| {
                (num + rref * (rc - rref) * (rc - rref), den + rref)
            });
            1.0 - weighted / (2.0 * mass)
        }
    })
}

/// CNR^α × RepCap.
pub fn final_score(cnr: f64, repcap: f64, alpha: f64) -> f64 {
    libm::pow(cnr, alpha) * repcap
}

/// The four scoring variants the pipeline can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScoringVariant {
    /// Unweighted classification RepCap.
    Eq1,
    /// Class-weighted classification RepCap.
    Eq2Weighted,
    RegressionPlain,
    RegressionGaussian,
}

impl ScoringVariant {
    pub const ALL: [ScoringVariant; 4] = [
        ScoringVariant::Eq1,
        ScoringVariant::Eq2Weighted,
        ScoringVariant::RegressionPlain,
        ScoringVariant::RegressionGaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScoringVariant::Eq1 => "eq1",
            ScoringVariant::Eq2Weighted => "eq2_weighted",
            ScoringVariant::RegressionPlain => "regression_plain",
            ScoringVariant::RegressionGaussian => "regression_gaussian",
        }
    }

    pub fn task(self) -> TaskKind {
        match self {
            ScoringVariant::Eq1 | ScoringVariant::Eq2Weighted => TaskKind::Classification,
            ScoringVariant::RegressionPlain | ScoringVariant::RegressionGaussian => TaskKind::Regression,
        }
    }

    pub fn defaults_for(task: TaskKind) -> Vec<ScoringVariant> {
        ScoringVariant::ALL.into_iter().filter(|v| v.task() == task).collect()
    }
}

impl fmt::Display for ScoringVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoringVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScoringVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scoring variant '{s}'")))
    }
}

/// How the Gaussian bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SigmaPolicy {
    /// Median pairwise target distance on the scoring subset.
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ScoringConfig {
    pub subset_size: usize,
    pub n_param_draws: usize,
    pub n_replicas: usize,
    pub alpha: f64,
    pub sigma: SigmaPolicy,
    pub variants: Vec<ScoringVariant>,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            subset_size: DEFAULT_SUBSET_SIZE,
            n_param_draws: DEFAULT_PARAM_DRAWS,
            n_replicas: noise::DEFAULT_REPLICAS,
            alpha: DEFAULT_ALPHA,
            sigma: SigmaPolicy::Median,
            variants: vec![ScoringVariant::Eq1, ScoringVariant::Eq2Weighted],
        }
    }
}

/// One circuit's proxy scores under one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCard {
    pub circuit_id: usize,
    pub variant: ScoringVariant,
    pub cnr: f64,
    pub repcap: f64,
    pub final_score: f64,
    pub config_digest: String,
}

/// Picks scoring-subset row indices from `samples`. Classification draws are
/// stratified in proportion to class counts (largest remainder, at least one
/// per present class); regression draws are uniform without replacement.
/// Returned indices are sorted.
pub fn select_subset(samples: &[Sample], task: TaskKind, size: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    let mut picked = if size >= samples.len() {
        (0..samples.len()).collect()
    } else {
        match task {
            TaskKind::Regression => {
                let mut all: Vec<usize> = (0..samples.len()).collect();
                all.shuffle(&mut rng);
                all.truncate(size);
                all
            }
            TaskKind::Classification => {
                let mut pos: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].target > 0.0).collect();
                let mut neg: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].target <= 0.0).collect();
                pos.shuffle(&mut rng);
                neg.shuffle(&mut rng);
                let exact_pos = size as f64 * pos.len() as f64 / samples.len() as f64;
                let mut n_pos = libm::round(exact_pos) as usize;
                if !pos.is_empty() && !neg.is_empty() {
                    n_pos = n_pos.clamp(1, size - 1);
                }
                let n_pos = n_pos.min(pos.len());
                let n_neg = (size - n_pos).min(neg.len());
                pos.truncate(n_pos);
                neg.truncate(n_neg);
                pos.extend(neg);
                pos
            }
        }
    };
    picked.sort_unstable();
    picked
}

/// Scores every requested variant for one circuit. `subset` holds the scoring
/// samples; CNR and R_c are computed once and shared by all variants.
pub fn score_circuit(
    circuit_id: usize,
    genome: &CircuitGenome,
    device: &DeviceModel,
    subset: &[Sample],
    config: &ScoringConfig,
    circuit_seed: u64,
    config_digest: &str,
) -> Result<Vec<ScoreCard>> {
    let cnr = noise::cnr(genome, device, config.n_replicas, seed::derive(circuit_seed, &[seed::stream::CNR]))?;
    let features: Vec<&[f64]> = subset.iter().map(|s| s.features.as_slice()).collect();
    let targets: Vec<f64> = subset.iter().map(|s| s.target).collect();
    let similarity = similarity_matrix(genome, &features, config.n_param_draws, circuit_seed)?;
    let d = subset.len();
    config
        .variants
        .iter()
        .map(|&variant| {
            let repcap = match variant {
                ScoringVariant::Eq1 | ScoringVariant::Eq2Weighted => {
                    let reference = reference_classification(&targets)?;
                    let weights = if variant == ScoringVariant::Eq1 {
                        WeightMatrix { matrix: SquareMatrix::filled(d, 1.0), single_class: false }
                    } else {
                        class_weight_matrix(&targets)?
                    };
                    repcap_classification(&similarity, &reference, &weights, 2, d)?
                }
                ScoringVariant::RegressionPlain | ScoringVariant::RegressionGaussian => {
                    let sigma = match config.sigma {
                        SigmaPolicy::Median => median_sigma(&targets)?,
                        SigmaPolicy::Fixed(s) => s,
                    };
                    let reference = reference_regression(&targets, sigma)?;
                    let mode = if variant == ScoringVariant::RegressionPlain {
                        RegressionMode::Plain
                    } else {
                        RegressionMode::GaussianWeighted
                    };
                    repcap_regression(&similarity, &reference, mode, d)?
                }
            };
            Ok(ScoreCard {
                circuit_id,
                variant,
                cnr,
                repcap,
                final_score: final_score(cnr, repcap, config.alpha),
                config_digest: config_digest.into(),
            })
        })
        .collect()
}
