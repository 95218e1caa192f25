//! Datasets, preprocessing and seeded synthetic task generators.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::seed;
use crate::{Error, Result};

/// Feature columns kept from a fingerprint.
pub const MAX_FEATURES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TaskKind {
    Classification,
    Regression,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Classification => "classification",
            TaskKind::Regression => "regression",
        })
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(TaskKind::Classification),
            "regression" => Ok(TaskKind::Regression),
            other => Err(Error::InvalidConfig(format!("unknown task kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!("unknown split tag '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub split: Split,
    /// ±1 label for classification, continuous target for regression.
    pub target: f64,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: TaskKind,
    pub n_features: usize,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> Vec<Sample> {
        self.samples.iter().filter(|s| s.split == split).cloned().collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.samples.iter().filter(|s| s.split == split).count()
    }

    /// Checks the model-ready invariants: features in [−1, 1], labels ±1 or
    /// targets in [−1, 1]. Returns the first offending row.
    pub fn validate(&self) -> Result<()> {
        for (row, sample) in self.samples.iter().enumerate() {
            if sample.features.len() != self.n_features {
                return Err(Error::InvalidInput(format!(
                    "row {row} has {} features, expected {}",
                    sample.features.len(),
                    self.n_features
                )));
            }
            if let Some(index) = sample.features.iter().position(|x| !(-1.0..=1.0).contains(x)) {
                return Err(Error::FeatureOutOfRange { index, value: sample.features[index] });
            }
            let ok = match self.task {
                TaskKind::Classification => sample.target == 1.0 || sample.target == -1.0,
                TaskKind::Regression => (-1.0..=1.0).contains(&sample.target),
            };
            if !ok {
                return Err(Error::InvalidLabel { index: row, value: sample.target });
            }
        }
        Ok(())
    }
}

/// Remaps labels 0 → −1, 1 → +1 and keeps the first [`MAX_FEATURES`] bit
/// columns. Bits stay in {0, 1}: under the x·π embedding they become angles
/// {0, π}, which give orthogonal single-qubit outcomes.
pub fn preprocess_classification(raw: &Dataset) -> Result<Dataset> {
    let keep = raw.n_features.min(MAX_FEATURES);
    let samples = raw
        .samples
        .iter()
        .enumerate()
        .map(|(row, s)| {
            let target = match s.target {
                t if t == 0.0 => -1.0,
                t if t == 1.0 => 1.0,
                value => return Err(Error::InvalidLabel { index: row, value }),
            };
            if let Some(index) = s.features.iter().position(|&b| b != 0.0 && b != 1.0) {
                return Err(Error::InvalidInput(format!(
                    "row {row} feature {index} = {} is not a bit",
                    s.features[index]
                )));
            }
            Ok(Sample { split: s.split, target, features: s.features[..keep].to_vec() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { task: TaskKind::Classification, n_features: keep, samples })
}

/// Affine min–max map fitted on training targets: min → −1, max → +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetScaler {
    pub min: f64,
    pub max: f64,
}

impl TargetScaler {
    pub fn fit(train: &[f64]) -> Result<TargetScaler> {
        let min = train.iter().copied().fold(f64::INFINITY, f64::min);
        let max = train.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if train.is_empty() || !(max > min) {
            return Err(Error::InvalidInput("training targets are constant".into()));
        }
        Ok(TargetScaler { min, max })
    }

    pub fn forward(&self, y: f64) -> f64 {
        2.0 * (y - self.min) / (self.max - self.min) - 1.0
    }

    pub fn inverse(&self, z: f64) -> f64 {
        (z + 1.0) * (self.max - self.min) / 2.0 + self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub train: Vec<f64>,
    pub test: Vec<f64>,
    pub scaler: TargetScaler,
    /// Test values that fell outside [−1, 1] and were clamped.
    pub clamped: usize,
}

pub fn normalize_targets(train: &[f64], test: &[f64]) -> Result<Normalized> {
    let scaler = TargetScaler::fit(train)?;
    let train = train.iter().map(|&y| scaler.forward(y).clamp(-1.0, 1.0)).collect();
    let mut clamped = 0;
    let test = test
        .iter()
        .map(|&y| {
            let z = scaler.forward(y);
            if !(-1.0..=1.0).contains(&z) {
                clamped += 1;
            }
            z.clamp(-1.0, 1.0)
        })
        .collect();
    Ok(Normalized { train, test, scaler, clamped })
}

/// Applies [`normalize_targets`] to a regression dataset in place of its targets.
pub fn normalize_dataset(raw: &Dataset) -> Result<(Dataset, Normalized)> {
    let pick = |split| raw.samples.iter().filter(move |s: &&Sample| s.split == split).map(|s| s.target);
    let train: Vec<f64> = pick(Split::Train).collect();
    let test: Vec<f64> = pick(Split::Test).collect();
    let normalized = normalize_targets(&train, &test)?;
    let (mut tr, mut te) = (normalized.train.iter(), normalized.test.iter());
    let samples = raw
        .samples
        .iter()
        .map(|s| {
            let target = match s.split {
                Split::Train => *tr.next().expect("train count"),
                Split::Test => *te.next().expect("test count"),
            };
            Sample { target, ..s.clone() }
        })
        .collect();
    Ok((Dataset { task: TaskKind::Regression, n_features: raw.n_features, samples }, normalized))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SyntheticSpec {
    pub task: TaskKind,
    pub d: usize,
    pub n_features: usize,
    /// Majority : minority count ratio (classification only).
    pub imbalance_ratio: f64,
    pub noise_level: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            task: TaskKind::Classification,
            d: 210,
            n_features: 16,
            imbalance_ratio: 6.0,
            noise_level: 0.3,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Class sizes for `d` rows at `ratio : 1`; the positive class is the majority.
pub fn class_counts(d: usize, ratio: f64) -> (usize, usize) {
    let negatives = (libm::round(d as f64 / (ratio + 1.0)) as usize).clamp(1, d - 1);
    (d - negatives, negatives)
}

/// Seeded desk-scale stand-in for a fingerprint task.
///
/// Classification: every feature sits at `y · s_f · 0.5` plus uniform jitter
/// of ±0.25 and Gaussian noise of scale `noise_level / 2`, clamped to
/// [−1, 1], where `s_f` is a random sign per feature. The two classes are
/// boxes around `±s/2` that overlap only through the Gaussian term, so with
/// `noise_level = 0` every single feature separates them with margin 0.25.
///
/// Regression: features uniform on [−1, 1]; target
/// `tanh(2 z₁) + 0.5 cos(π z₂)` over two random unit directions, plus Gaussian
/// noise of scale `noise_level / 4`, min–max normalized over all rows.
///
/// The test split takes `test_fraction` of each class (of all rows for
/// regression), chosen at random.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.d < 10 {
        return Err(Error::InvalidConfig(format!("synthetic d = {} is below 10", spec.d)));
    }
    if spec.n_features < 2 {
        return Err(Error::InvalidConfig(format!("synthetic F = {} is below 2", spec.n_features)));
    }
    if !(spec.imbalance_ratio >= 1.0) || !spec.imbalance_ratio.is_finite() {
        return Err(Error::InvalidConfig(format!("imbalance ratio {} must be >= 1", spec.imbalance_ratio)));
    }
    if !(spec.noise_level >= 0.0) || !(0.0..1.0).contains(&spec.test_fraction) {
        return Err(Error::InvalidConfig("noise_level must be >= 0 and test_fraction in [0, 1)".into()));
    }
    let mut rng = seed::derived_rng(spec.seed, &[seed::stream::DATASET]);
    let f = spec.n_features;
    let mut samples = match spec.task {
        TaskKind::Classification => synthetic_classification(spec, &mut rng),
        TaskKind::Regression => synthetic_regression(spec, &mut rng),
    };
    assign_splits(&mut samples, spec, &mut rng);
    Ok(Dataset { task: spec.task, n_features: f, samples })
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn synthetic_classification(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<Sample> {
    let f = spec.n_features;
    let (positives, negatives) = class_counts(spec.d, spec.imbalance_ratio);
    let signs: Vec<f64> = (0..f).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let labels = core::iter::repeat(1.0).take(positives).chain(core::iter::repeat(-1.0).take(negatives));
    labels
        .map(|y| {
            let features = signs
                .iter()
                .map(|&sign| {
                    let jitter = rng.random_range(-0.25..=0.25);
                    let noise = spec.noise_level * 0.5 * gaussian(rng);
                    (y * sign * 0.5 + jitter + noise).clamp(-1.0, 1.0)
                })
                .collect();
            Sample { split: Split::Train, target: y, features }
        })
        .collect()
}

fn unit_direction(f: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..f).map(|_| gaussian(rng)).collect();
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    v.into_iter().map(|x| x / norm).collect()
}

fn synthetic_regression(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<Sample> {
    let f = spec.n_features;
    let w1 = unit_direction(f, rng);
    let w2 = unit_direction(f, rng);
    let dot = |w: &[f64], x: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let mut samples: Vec<Sample> = (0..spec.d)
        .map(|_| {
            let features: Vec<f64> = (0..f).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let (z1, z2) = (dot(&w1, &features), dot(&w2, &features));
            let target = libm::tanh(2.0 * z1)
                + 0.5 * libm::cos(core::f64::consts::PI * z2)
                + spec.noise_level * 0.25 * gaussian(rng);
            Sample { split: Split::Train, target, features }
        })
        .collect();
    let min = samples.iter().map(|s| s.target).fold(f64::INFINITY, f64::min);
    let max = samples.iter().map(|s| s.target).fold(f64::NEG_INFINITY, f64::max);
    let scaler = TargetScaler { min, max };
    for s in &mut samples {
        s.target = scaler.forward(s.target).clamp(-1.0, 1.0);
    }
    samples
}

fn assign_splits(samples: &mut [Sample], spec: &SyntheticSpec, rng: &mut impl Rng) {
    let groups: Vec<Vec<usize>> = match spec.task {
        TaskKind::Classification => [1.0, -1.0]
            .iter()
            .map(|&y| (0..samples.len()).filter(|&i| samples[i].target == y).collect())
            .collect(),
        TaskKind::Regression => alloc::vec![(0..samples.len()).collect()],
    };
    for mut group in groups {
        group.shuffle(rng);
        let n_test = libm::round(group.len() as f64 * spec.test_fraction) as usize;
        for &i in &group[..n_test] {
            samples[i].split = Split::Test;
        }
    }
}

/// Describes a dataset's shape on one line, e.g. for logs.
pub fn summary(dataset: &Dataset) -> String {
    format!(
        "{} task, {} features, {} train / {} test rows",
        dataset.task,
        dataset.n_features,
        dataset.count(Split::Train),
        dataset.count(Split::Test)
    )
}
