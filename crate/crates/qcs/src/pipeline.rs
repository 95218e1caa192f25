//! Pipeline stages. Each stage reads its inputs from the output directory and
//! writes its own artifacts, so any stage can be rerun on its own:
//!
//! ```text
//! manifest.csv              circuit_id, file, seed, config_digest
//! genomes/cNNNN.genome
//! dataset.csv               model-ready dataset (labels ±1, targets in [-1, 1])
//! scaler.csv                regression only: fitted target range and clamp count
//! scores/<variant>.csv      circuit_id, cnr, repcap, final_score, config_digest
//! metrics.csv               per-circuit test metrics or failure status
//! traces/cNNNN.csv          epoch, loss
//! params/cNNNN.csv          slot, value
//! correlation.csv           variant, metric, n_circuits, rho
//! scatter_<variant>.csv/.svg
//! ```
//!
//! Circuit-level work fans out over a rayon pool; results are collected in
//! circuit order and written by the calling thread, and every random stream
//! is derived from the global seed and circuit id, so the schedule never
//! changes a byte of output.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, ensure, Context};
use rayon::prelude::*;

use qcs_core::circuit::{self, CircuitGenome};
use qcs_core::data::{self, Dataset, Sample, Split, TaskKind};
use qcs_core::metrics::{self, MetricReport};
use qcs_core::scoring::{self, ScoreCard, ScoringVariant};
use qcs_core::seed;
use qcs_core::trainer::{self, TrainConfig, TrainReport};

use crate::config::Run;
use crate::dataset::{format_dataset, load_dataset};
use crate::genome::{load_genome, save_genome};
use crate::plot::scatter_svg;
use crate::tables::{self, Evaluation, ManifestEntry, MetricRow, Provenance};

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
    /// Train only the k best circuits under the first scoring variant.
    pub top_k: Option<usize>,
    /// Progress lines on stderr.
    pub verbose: bool,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.join("manifest.csv")
}

pub fn genome_file(id: usize) -> String {
    format!("genomes/c{id:04}.genome")
}

pub fn scores_path(out: &Path, variant: ScoringVariant) -> PathBuf {
    out.join("scores").join(format!("{}.csv", variant.name()))
}

pub fn metrics_path(out: &Path) -> PathBuf {
    out.join("metrics.csv")
}

pub fn correlation_path(out: &Path) -> PathBuf {
    out.join("correlation.csv")
}

fn provenance(run: &Run) -> Provenance {
    Provenance { digest: run.digest.clone(), seed: run.config.seed }
}

fn pool(jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build().context("cannot start worker pool")
}

fn log(opts: &Options, stage: &str, message: impl std::fmt::Display) {
    if opts.verbose {
        eprintln!("[{stage}] {message}");
    }
}

/// Seed shared by a circuit's scoring and training streams.
pub fn circuit_seed(global: u64, circuit_id: usize) -> u64 {
    seed::derive(global, &[circuit_id as u64])
}

/// The model-ready dataset of a run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    /// Regression target normalization, when applied.
    pub normalized: Option<data::Normalized>,
}

/// Loads or synthesizes the dataset and applies task preprocessing: label
/// remapping and truncation to 128 bits for raw {0, 1} classification files,
/// train-fitted min-max scaling for regression targets.
pub fn prepare_dataset(run: &Run) -> anyhow::Result<Prepared> {
    let task = run.task();
    let raw = match (&run.config.dataset.file, &run.config.dataset.synthetic) {
        (Some(file), _) => load_dataset(file, task).with_context(|| format!("dataset {}", file.display()))?,
        (None, Some(section)) => data::make_synthetic(&section.spec(task, run.config.seed))?,
        (None, None) => bail!("no dataset configured"),
    };
    let prepared = match task {
        TaskKind::Classification => {
            let raw_bits = raw.samples.iter().any(|s| s.target == 0.0);
            let dataset = if raw_bits { data::preprocess_classification(&raw)? } else { raw };
            Prepared { dataset, normalized: None }
        }
        TaskKind::Regression => {
            let (dataset, normalized) = data::normalize_dataset(&raw)?;
            Prepared { dataset, normalized: Some(normalized) }
        }
    };
    prepared.dataset.validate().context("dataset is not model-ready")?;
    for split in [Split::Train, Split::Test] {
        ensure!(prepared.dataset.count(split) > 0, "dataset has no {} rows", split.name());
    }
    Ok(prepared)
}

/// Reads the manifest and every genome, checking each against the device.
pub fn load_genomes(run: &Run) -> anyhow::Result<Vec<(ManifestEntry, CircuitGenome)>> {
    let path = manifest_path(run.out());
    let entries = tables::read_manifest(&path).with_context(|| format!("{} (run generate first)", path.display()))?;
    entries
        .into_iter()
        .map(|entry| {
            let file = run.out().join(&entry.file);
            let text = std::fs::read_to_string(&file).with_context(|| format!("missing genome {}", file.display()))?;
            let genome = load_genome(&text).with_context(|| format!("genome {}", file.display()))?;
            let violations = circuit::validate_genome(&genome, &run.device);
            ensure!(
                violations.is_empty(),
                "genome {} does not fit the device:\n{}",
                file.display(),
                circuit::describe_violations(&violations)
            );
            Ok((entry, genome))
        })
        .collect()
}

/// Writes one genome per candidate and the manifest. Returns the count.
pub fn cmd_generate(run: &Run, opts: &Options) -> anyhow::Result<usize> {
    let prov = provenance(run);
    let config = circuit::GeneratorConfig { seed: run.config.seed, ..run.config.generator.clone() };
    let genomes = circuit::generate_candidates(&run.device, &config)?;
    let mut entries = Vec::with_capacity(genomes.len());
    for (id, genome) in genomes.iter().enumerate() {
        let file = genome_file(id);
        let text = save_genome(genome, &[prov.comment(), format!("circuit_id={id}")]);
        tables::write_atomic(&run.out().join(&file), text.as_bytes())?;
        entries.push(ManifestEntry { circuit_id: id, file, seed: circuit_seed(run.config.seed, id) });
    }
    tables::write_manifest(&manifest_path(run.out()), &prov, &entries)?;
    log(opts, "generate", format!("{} candidates -> {}", entries.len(), run.out().display()));
    Ok(entries.len())
}

fn write_dataset_artifacts(run: &Run, prepared: &Prepared) -> anyhow::Result<()> {
    let prov = provenance(run);
    let bytes = format_dataset(&prepared.dataset, Some(&prov.comment()))?;
    tables::write_atomic(&run.out().join("dataset.csv"), &bytes)?;
    if let Some(n) = &prepared.normalized {
        let row = vec![tables::num(n.scaler.min), tables::num(n.scaler.max), n.clamped.to_string()];
        tables::write_table(&run.out().join("scaler.csv"), &prov, &["train_min", "train_max", "test_clamped"], &[row])?;
    }
    Ok(())
}

/// Scores every manifest circuit under every configured variant.
pub fn cmd_score(run: &Run, opts: &Options) -> anyhow::Result<Vec<Vec<ScoreCard>>> {
    let genomes = load_genomes(run)?;
    let prepared = prepare_dataset(run)?;
    write_dataset_artifacts(run, &prepared)?;
    let dataset = &prepared.dataset;
    for (entry, genome) in &genomes {
        ensure!(
            genome.min_features() <= dataset.n_features,
            "circuit {} embeds feature {} but the dataset has {} features",
            entry.circuit_id,
            genome.min_features() - 1,
            dataset.n_features
        );
    }
    let train = dataset.split(Split::Train);
    let config = &run.config.scoring;
    let picked = scoring::select_subset(
        &train,
        run.task(),
        config.subset_size,
        seed::derive(run.config.seed, &[seed::stream::SUBSET]),
    );
    let subset: Vec<Sample> = picked.iter().map(|&i| train[i].clone()).collect();
    log(opts, "score", format!("{} circuits, {} scoring samples", genomes.len(), subset.len()));
    let cards: Vec<Vec<ScoreCard>> = pool(opts.jobs)?.install(|| {
        genomes
            .par_iter()
            .map(|(entry, genome)| {
                scoring::score_circuit(entry.circuit_id, genome, &run.device, &subset, config, entry.seed, &run.digest)
                    .with_context(|| format!("circuit {}", entry.circuit_id))
            })
            .collect::<anyhow::Result<_>>()
    })?;
    let prov = provenance(run);
    for (k, &variant) in config.variants.iter().enumerate() {
        let column: Vec<ScoreCard> = cards.iter().map(|c| c[k].clone()).collect();
        tables::write_scores(&scores_path(run.out(), variant), &prov, &column)?;
    }
    Ok(cards)
}

/// Trains one circuit and evaluates it on the test split.
pub fn train_and_evaluate(
    genome: &CircuitGenome,
    config: &TrainConfig,
    train: &[Sample],
    test: &[Sample],
    task: TaskKind,
) -> anyhow::Result<(Evaluation, TrainReport)> {
    let started = Instant::now();
    let mut report = trainer::train(genome, train, config)?;
    report.wall_time = Some(started.elapsed());
    let final_train_loss = *report.loss_trace.last().ok_or_else(|| anyhow!("empty loss trace"))?;
    ensure!(final_train_loss.is_finite(), "training produced a non-finite loss");
    let preds = trainer::predict_all(genome, &report.params, test, &config.measurement_qubits)?;
    let targets: Vec<f64> = test.iter().map(|s| s.target).collect();
    let metric_report = match task {
        TaskKind::Classification => MetricReport::Classification(metrics::classification_metrics(&preds, &targets)?),
        TaskKind::Regression => MetricReport::Regression(metrics::regression_metrics(&preds, &targets)?),
    };
    Ok((Evaluation { report: metric_report, final_train_loss }, report))
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Circuit ids to train: all manifest circuits, or the `top_k` best under
/// the first configured variant (ties broken by lower id).
pub fn select_for_training(run: &Run, manifest: &[ManifestEntry], top_k: Option<usize>) -> anyhow::Result<Vec<usize>> {
    let variant = run.config.scoring.variants[0];
    let path = scores_path(run.out(), variant);
    let mut cards =
        tables::read_scores(&path, variant).with_context(|| format!("{} (run score first)", path.display()))?;
    let Some(k) = top_k else {
        return Ok(manifest.iter().map(|e| e.circuit_id).collect());
    };
    cards.sort_by(|a, b| b.final_score.total_cmp(&a.final_score).then(a.circuit_id.cmp(&b.circuit_id)));
    let mut ids: Vec<usize> = cards.iter().take(k).map(|c| c.circuit_id).collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Trains the selected circuits and writes the metric table. A circuit that
/// fails (error or panic) gets a `failed: ...` row and the run continues.
pub fn cmd_train_eval(run: &Run, opts: &Options) -> anyhow::Result<Vec<MetricRow>> {
    let genomes = load_genomes(run)?;
    let manifest: Vec<ManifestEntry> = genomes.iter().map(|(e, _)| e.clone()).collect();
    let selected = select_for_training(run, &manifest, opts.top_k)?;
    let prepared = prepare_dataset(run)?;
    let train = prepared.dataset.split(Split::Train);
    let test = prepared.dataset.split(Split::Test);
    let task = run.task();
    let jobs: Vec<&(ManifestEntry, CircuitGenome)> =
        genomes.iter().filter(|(e, _)| selected.binary_search(&e.circuit_id).is_ok()).collect();
    log(opts, "train-eval", format!("training {} circuits on {} rows", jobs.len(), train.len()));
    let results: Vec<(usize, Result<(Evaluation, TrainReport), String>)> = pool(opts.jobs)?.install(|| {
        jobs.par_iter()
            .map(|(entry, genome)| {
                let config = TrainConfig { seed: entry.seed, ..run.config.train.clone() };
                let outcome = catch_unwind(AssertUnwindSafe(|| train_and_evaluate(genome, &config, &train, &test, task)))
                    .map_err(panic_message)
                    .and_then(|r| r.map_err(|e| format!("{e:#}")));
                (entry.circuit_id, outcome)
            })
            .collect()
    });
    let prov = provenance(run);
    let mut rows = Vec::with_capacity(results.len());
    for (id, outcome) in results {
        match outcome {
            Ok((evaluation, report)) => {
                tables::write_trace(&run.out().join(format!("traces/c{id:04}.csv")), &prov, &report.loss_trace)?;
                tables::write_params(&run.out().join(format!("params/c{id:04}.csv")), &prov, &report.params)?;
                let secs = report.wall_time.map_or(0.0, |t| t.as_secs_f64());
                log(opts, "train-eval", format!("circuit {id}: final loss {:.4} in {secs:.1}s", evaluation.final_train_loss));
                rows.push(MetricRow { circuit_id: id, outcome: Ok(evaluation) });
            }
            Err(message) => {
                log(opts, "train-eval", format!("circuit {id} failed: {message}"));
                rows.push(MetricRow { circuit_id: id, outcome: Err(message) });
            }
        }
    }
    tables::write_metrics(&metrics_path(run.out()), &prov, task, &rows)?;
    Ok(rows)
}

/// Spearman ρ between each variant's final score and the configured test
/// metric, plus scatter data and figures.
pub fn cmd_correlate(run: &Run, opts: &Options) -> anyhow::Result<Vec<metrics::CorrelationRow>> {
    let path = metrics_path(run.out());
    let metric_rows =
        tables::read_metrics(&path, run.task()).with_context(|| format!("{} (run train-eval first)", path.display()))?;
    let reports: Vec<(usize, MetricReport)> =
        metric_rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|e| (r.circuit_id, e.report))).collect();
    let variants = run
        .config
        .scoring
        .variants
        .iter()
        .map(|&v| {
            let path = scores_path(run.out(), v);
            let cards = tables::read_scores(&path, v).with_context(|| format!("{} (run score first)", path.display()))?;
            Ok((v.name().to_string(), cards.iter().map(|c| (c.circuit_id, c.final_score)).collect()))
        })
        .collect::<anyhow::Result<Vec<(String, Vec<(usize, f64)>)>>>()?;
    let rows = metrics::correlation_report(&variants, &reports, run.metric)?;
    let prov = provenance(run);
    tables::write_correlation(&correlation_path(run.out()), &prov, &rows)?;
    for row in &rows {
        tables::write_scatter_data(&run.out().join(format!("scatter_{}.csv", row.variant)), &prov, row)?;
        let points: Vec<(f64, f64)> = row.points.iter().map(|&(_, s, m)| (s, m)).collect();
        let title = format!("{} vs test {} (rho = {:.3})", row.variant, row.metric, row.rho);
        let svg = scatter_svg(&title, &format!("{} final score", row.variant), &format!("test {}", row.metric), &points);
        tables::write_atomic(&run.out().join(format!("scatter_{}.svg", row.variant)), svg.as_bytes())?;
        log(opts, "correlate", format!("{}: rho = {:.4} over {} circuits", row.variant, row.rho, row.n_circuits));
    }
    Ok(rows)
}

/// Runs generate, score, train-eval and correlate in order. Errors name the
/// failing stage.
pub fn pipeline(run: &Run, opts: &Options) -> anyhow::Result<Vec<metrics::CorrelationRow>> {
    cmd_generate(run, opts).context("stage generate")?;
    cmd_score(run, opts).context("stage score")?;
    cmd_train_eval(run, opts).context("stage train-eval")?;
    cmd_correlate(run, opts).context("stage correlate")
}
