//! Run configuration, device files and the config digest.
//!
//! A run is described by one TOML file:
//!
//! ```toml
//! seed = 7
//! output_dir = "out"          # relative paths resolve from this file's directory
//! device = "device.toml"
//!
//! [dataset]
//! task = "classification"     # or "regression"
//! file = "pampa.csv"          # or a [dataset.synthetic] table
//!
//! [generator]                 # GeneratorConfig fields
//! [scoring]                   # ScoringConfig fields
//! [train]                     # TrainConfig fields
//! [report]
//! metric = "pr_auc"
//! ```
//!
//! The global seed is the only seed: section-level `seed` keys must be left
//! out, and every stage derives its streams from the global value.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qcs_core::circuit::{DeviceModel, GeneratorConfig};
use qcs_core::data::{SyntheticSpec, TaskKind};
use qcs_core::metrics::Metric;
use qcs_core::scoring::{ScoringConfig, ScoringVariant};
use qcs_core::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub device: PathBuf,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub scoring: ScoringConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub report: ReportSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("qcs-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub task: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSection>,
}

/// Synthetic dataset shape; task and seed come from the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub d: usize,
    pub n_features: usize,
    pub imbalance_ratio: f64,
    pub noise_level: f64,
    pub test_fraction: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let spec = SyntheticSpec::default();
        SyntheticSection {
            d: spec.d,
            n_features: spec.n_features,
            imbalance_ratio: spec.imbalance_ratio,
            noise_level: spec.noise_level,
            test_fraction: spec.test_fraction,
        }
    }
}

impl SyntheticSection {
    pub fn spec(&self, task: TaskKind, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            task,
            d: self.d,
            n_features: self.n_features,
            imbalance_ratio: self.imbalance_ratio,
            noise_level: self.noise_level,
            test_fraction: self.test_fraction,
            seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Test metric to correlate against; defaults to pr_auc for
    /// classification and mse for regression.
    pub metric: Option<String>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub variant: Option<ScoringVariant>,
}

/// Reads a device TOML file with keys n_qubits, edges, native_two_qubit, p1,
/// p2 and readout_flip.
pub fn load_device(path: &Path) -> anyhow::Result<DeviceModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read device file {}", path.display()))?;
    let device: DeviceModel = toml::from_str(&text).with_context(|| format!("invalid device file {}", path.display()))?;
    device.validate().with_context(|| format!("invalid device file {}", path.display()))?;
    Ok(device)
}

/// A validated run: config with resolved paths, its device and digest.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: RunConfig,
    pub device: DeviceModel,
    pub metric: Metric,
    /// Hex prefix of the SHA-256 over the canonical config, device and dataset bytes.
    pub digest: String,
}

impl Run {
    /// Loads `path`, resolves relative paths against its directory and applies `overrides`.
    pub fn load(path: &Path, overrides: &Overrides) -> anyhow::Result<Run> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let variants_given = table.get("scoring").and_then(|s| s.get("variants")).is_some();
        let mut config: RunConfig = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        if !variants_given {
            config.scoring.variants = ScoringVariant::defaults_for(config.dataset.task);
        }
        let base = path.parent().unwrap_or(Path::new(""));
        config.device = base.join(&config.device);
        config.output_dir = base.join(&config.output_dir);
        if let Some(file) = &config.dataset.file {
            config.dataset.file = Some(base.join(file));
        }
        Run::new(config, overrides)
    }

    /// Validates an in-memory config whose paths are already usable as is.
    pub fn new(mut config: RunConfig, overrides: &Overrides) -> anyhow::Result<Run> {
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(dir) = &overrides.output_dir {
            config.output_dir = dir.clone();
        }
        if let Some(variant) = overrides.variant {
            config.scoring.variants = vec![variant];
        }
        ensure!(config.generator.seed == 0, "remove generator.seed: every stream derives from the global seed");
        ensure!(config.train.seed == 0, "remove train.seed: every stream derives from the global seed");
        config.generator.validate().context("invalid [generator] section")?;
        config.train.validate().context("invalid [train] section")?;
        ensure!(!config.scoring.variants.is_empty(), "[scoring] needs at least one variant");
        let task = config.dataset.task;
        for variant in &config.scoring.variants {
            ensure!(
                variant.task() == task,
                "scoring variant {} needs a {} dataset, but the run is {}",
                variant.name(),
                variant.task(),
                task
            );
        }
        let metric = match &config.report.metric {
            Some(name) => name.parse::<Metric>()?,
            None if task == TaskKind::Classification => Metric::PrAuc,
            None => Metric::Mse,
        };
        let applies = match task {
            TaskKind::Classification => !matches!(metric, Metric::SpearmanR),
            TaskKind::Regression => matches!(metric, Metric::Mse | Metric::Loss | Metric::SpearmanR),
        };
        ensure!(applies, "metric {metric} is not reported for {task} runs");

        let device = load_device(&config.device)?;
        let dataset_sha = match (&config.dataset.file, &config.dataset.synthetic) {
            (Some(file), None) => {
                let bytes = std::fs::read(file).with_context(|| format!("cannot read dataset file {}", file.display()))?;
                Some(hex::encode(Sha256::digest(&bytes)))
            }
            (None, Some(_)) => None,
            _ => bail!("[dataset] needs exactly one of `file` or a [dataset.synthetic] table"),
        };
        let digest = digest(&config, &device, dataset_sha.as_deref())?;
        Ok(Run { config, device, metric, digest })
    }

    pub fn out(&self) -> &Path {
        &self.config.output_dir
    }

    pub fn task(&self) -> TaskKind {
        self.config.dataset.task
    }
}

/// Everything that influences results, and nothing that does not (paths).
#[derive(Serialize)]
struct DigestInput<'a> {
    seed: u64,
    task: TaskKind,
    dataset_sha256: Option<&'a str>,
    synthetic: Option<&'a SyntheticSection>,
    device: &'a DeviceModel,
    generator: &'a GeneratorConfig,
    scoring: &'a ScoringConfig,
    train: &'a TrainConfig,
    metric: &'a Option<String>,
}

fn digest(config: &RunConfig, device: &DeviceModel, dataset_sha: Option<&str>) -> anyhow::Result<String> {
    let input = DigestInput {
        seed: config.seed,
        task: config.dataset.task,
        dataset_sha256: dataset_sha,
        synthetic: config.dataset.synthetic.as_ref(),
        device,
        generator: &config.generator,
        scoring: &config.scoring,
        train: &config.train,
        metric: &config.report.metric,
    };
    let canonical = serde_json::to_string(&input)?;
    Ok(hex::encode(&Sha256::digest(canonical.as_bytes())[..8]))
}
