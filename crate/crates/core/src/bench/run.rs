use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, OnceLock};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{DatasetEntry, Engine, ExperimentConfig, TargetChoice, SCHEMA_VERSION};
use super::output;
use crate::datasets::Dataset;
use crate::diffmethods::{build_jet, DiffMethodSpec, Jet};
use crate::discovery::{build_library, evolutionary_discover, sindy_fit, sindy_select_target, CandidateEquation, TermLibrary};
use crate::error::{Error, Result};
use crate::grid::{add_noise, NoiseSpec};
use crate::metrics::{coeff_stats, coefficient_runs, diff_error_report, shd, CellId, ExperimentReport, GroundTruth};

/// Seed of one cell: the first eight bytes of `sha256("{master}:{key}")`.
pub fn cell_seed(master: u64, cell: &CellId) -> u64 {
    let digest = Sha256::digest(format!("{master}:{}", cell.key()).as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell: CellId,
    pub seed: u64,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// What a run produced and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub cells: Vec<CellRecord>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn failures(&self) -> impl Iterator<Item = &CellRecord> {
        self.cells.iter().filter(|c| c.status == CellStatus::Failed)
    }

    pub fn has_failures(&self) -> bool {
        self.failures().next().is_some()
    }
}

/// Everything needed to re-plot or re-score a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    /// Ground truth per dataset name.
    pub truths: BTreeMap<String, GroundTruth>,
    pub reports: Vec<ExperimentReport>,
}

impl ReportBundle {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(output::REPORTS_JSON))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Outcome of [`run_matrix`] before anything is written.
#[derive(Debug, Clone)]
pub struct MatrixResult {
    pub bundle: ReportBundle,
    pub cells: Vec<CellRecord>,
}

struct Job<'a> {
    dataset: usize,
    method: usize,
    entry: &'a DatasetEntry,
    spec: &'a DiffMethodSpec,
    noise: f64,
    cell: CellId,
    seed: u64,
}

fn jobs(config: &ExperimentConfig) -> Vec<Job<'_>> {
    let mut out = Vec::new();
    for (di, entry) in config.datasets.iter().enumerate() {
        let name = entry.name();
        for (mi, spec) in config.methods.iter().enumerate() {
            for &noise in &config.noise {
                for repeat in 0..config.repeats {
                    let cell = CellId::new(&name, spec.method().key(), noise, repeat);
                    out.push(Job {
                        dataset: di,
                        method: mi,
                        entry,
                        spec,
                        noise,
                        seed: cell_seed(config.seed, &cell),
                        cell,
                    });
                }
            }
        }
    }
    out
}

/// Cells of the matrix in output order, with their seeds.
pub fn plan_cells(config: &ExperimentConfig) -> Vec<(CellId, u64)> {
    jobs(config).into_iter().map(|j| (j.cell, j.seed)).collect()
}

/// Runs every cell on a pool of `workers` threads and collects the results
/// in cell order. Failed cells are recorded, never propagated.
pub fn run_cells(config: &ExperimentConfig, workers: usize) -> Result<MatrixResult> {
    let diags = config.check();
    if !diags.is_empty() {
        let msg = diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ");
        return Err(Error::Format(format!("invalid config: {msg}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Format(format!("thread pool: {e}")))?;

    let jobs = jobs(config);
    let n_methods = config.methods.len();
    let datasets: Vec<OnceLock<std::result::Result<Arc<Dataset>, String>>> =
        config.datasets.iter().map(|_| OnceLock::new()).collect();
    let clean_jets: Vec<OnceLock<std::result::Result<Arc<Jet>, String>>> =
        (0..config.datasets.len() * n_methods).map(|_| OnceLock::new()).collect();

    let outcomes: Vec<std::result::Result<ExperimentReport, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let data = datasets[job.dataset]
                    .get_or_init(|| {
                        log::info!("generating dataset {}", job.entry.name());
                        job.entry
                            .spec
                            .generate_with(&job.entry.indices())
                            .map(Arc::new)
                            .map_err(|e| format!("dataset generation: {e}"))
                    })
                    .clone()?;
                let jet = if job.noise == 0.0 {
                    clean_jets[job.dataset * n_methods + job.method]
                        .get_or_init(|| {
                            build_jet(&data.field, &job.entry.max_orders(), job.spec)
                                .map(Arc::new)
                                .map_err(|e| format!("differentiation: {e}"))
                        })
                        .clone()?
                } else {
                    let noisy = NoiseSpec::from_percent(job.noise, job.seed)
                        .and_then(|n| add_noise(&data.field, n))
                        .map_err(|e| format!("noise: {e}"))?;
                    Arc::new(
                        build_jet(&noisy, &job.entry.max_orders(), job.spec).map_err(|e| format!("differentiation: {e}"))?,
                    )
                };
                score_cell(config, job.entry, &data, &jet, job.cell.clone(), job.seed).map_err(|e| e.to_string())
            })
            .collect()
    });

    let mut cells = Vec::with_capacity(jobs.len());
    let mut reports = Vec::new();
    for (job, outcome) in jobs.iter().zip(outcomes) {
        let (status, error) = match outcome {
            Ok(r) => {
                reports.push(r);
                (CellStatus::Ok, None)
            }
            Err(e) => {
                log::warn!("cell {} failed: {e}", job.cell.key());
                (CellStatus::Failed, Some(e))
            }
        };
        cells.push(CellRecord {
            cell: job.cell.clone(),
            seed: job.seed,
            status,
            error,
        });
    }
    let truths = config.datasets.iter().map(|d| (d.name(), d.truth())).collect();
    Ok(MatrixResult {
        bundle: ReportBundle {
            schema_version: SCHEMA_VERSION,
            truths,
            reports,
        },
        cells,
    })
}

/// Runs the matrix and writes reports, tables, plots and the manifest into
/// `config.output_dir`.
pub fn run_matrix(config: &ExperimentConfig, workers: usize) -> Result<RunManifest> {
    run_matrix_into(config, &config.output_dir, workers)
}

/// [`run_matrix`] with an explicit output directory.
pub fn run_matrix_into(config: &ExperimentConfig, dir: &Path, workers: usize) -> Result<RunManifest> {
    let started = now();
    let result = run_cells(config, workers)?;
    std::fs::create_dir_all(dir)?;
    let mut outputs = output::write_tables(&result.bundle, dir)?;
    outputs.extend(super::plots::emit_all(&result.bundle, dir)?);
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        master_seed: config.seed,
        started,
        finished: now(),
        cells: result.cells,
        outputs,
    };
    std::fs::write(dir.join(output::MANIFEST_JSON), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Discovery and scoring on a ready jet.
pub fn score_cell(
    config: &ExperimentConfig,
    entry: &DatasetEntry,
    data: &Dataset,
    jet: &Jet,
    cell: CellId,
    seed: u64,
) -> Result<ExperimentReport> {
    let diff_errors = diff_error_report(jet, &data.reference, config.error_strip)?;
    let library = build_library(jet, &config.discovery.library)?;
    let equations = discover(config, entry, &library, seed)?;
    let truth = entry.truth();
    let shd = equations
        .iter()
        .map(|eq| shd(eq, &truth, library.terms()))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport {
        cell,
        seed,
        equations,
        shd,
        diff_errors,
        coeff: None,
    };
    let runs = coefficient_runs(&[&report]);
    report.coeff = coeff_stats(&runs, &truth).ok();
    Ok(report)
}

fn discover(config: &ExperimentConfig, entry: &DatasetEntry, library: &TermLibrary, seed: u64) -> Result<Vec<CandidateEquation>> {
    let target = entry.target().map_err(Error::Format)?;
    match config.discovery.engine {
        Engine::Sindy => {
            let eq = match target {
                TargetChoice::Fixed(t) => sindy_fit(library, &t, &config.discovery.sindy)?,
                TargetChoice::Auto => sindy_select_target(library, &library.derivative_terms(), &config.discovery.sindy)?,
            };
            Ok(vec![eq])
        }
        Engine::Evolutionary => {
            let mut evo = config.discovery.evolutionary.clone();
            evo.seed = seed;
            if evo.targets.is_empty() && entry.target.is_some() {
                if let TargetChoice::Fixed(t) = target {
                    evo.targets = vec![t];
                }
            }
            evolutionary_discover(library, &evo)
        }
    }
}

/// Output of [`diff_demo`].
#[derive(Debug, Clone)]
pub struct DemoResult {
    pub report: ExperimentReport,
    pub jet: Jet,
    pub truth: GroundTruth,
}

/// One cell run in isolation, for inspection.
pub fn diff_demo(entry: &DatasetEntry, method: &DiffMethodSpec, noise: f64, seed: u64, config: &ExperimentConfig) -> Result<DemoResult> {
    method.validate()?;
    let data = entry.spec.generate_with(&entry.indices())?;
    let field = if noise == 0.0 {
        data.field.clone()
    } else {
        add_noise(&data.field, NoiseSpec::from_percent(noise, seed)?)?
    };
    let jet = build_jet(&field, &entry.max_orders(), method)?;
    let cell = CellId::new(&entry.name(), method.method().key(), noise, 0);
    let report = score_cell(config, entry, &data, &jet, cell, seed)?;
    Ok(DemoResult {
        report,
        jet,
        truth: entry.truth(),
    })
}
