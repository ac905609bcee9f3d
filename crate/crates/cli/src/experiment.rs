//! Experiment orchestration: repeated seeded trials per mode, parallel
//! execution with deterministic output ordering, JSON-lines trial records,
//! a summary table, and per-sweep trace files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use spsnmf::graph::{build_similarity, GraphConfig, LabeledDataset, SimilarityMatrix};
use spsnmf::metrics::{accuracy, ari, nmi};
use spsnmf::pipeline::{run_spsnmf, ClusteringResult, SpsConfig};
use spsnmf::selfpaced::SpMode;

use crate::dataset::{load_csv_dataset, LabelSelector};
use crate::error::{CliError, Result};
use crate::report::{json_escape, mean, round6, sample_std, sig6};

/// Everything one benchmark invocation needs.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub dataset: PathBuf,
    pub label_selector: LabelSelector,
    pub graph: GraphConfig,
    pub k: usize,
    pub init_fraction: f64,
    pub fraction_step: f64,
    pub sweeps_per_round: usize,
    pub conv_tol: f64,
    pub max_sweeps: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub modes: Vec<SpMode>,
    pub out_dir: PathBuf,
    /// When false, the `seconds` field is written as 0 so report files are
    /// byte-reproducible across runs.
    pub record_timing: bool,
}

impl ExperimentSpec {
    fn solver_config(&self, mode: SpMode, seed: u64) -> SpsConfig {
        SpsConfig {
            k: self.k,
            mode,
            init_fraction: self.init_fraction,
            fraction_step: self.fraction_step,
            sweeps_per_round: self.sweeps_per_round,
            conv_tol: self.conv_tol,
            max_sweeps: self.max_sweeps,
            seed,
        }
    }
}

/// One trial's metrics, or the error that sank it.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub dataset: String,
    pub mode: SpMode,
    pub trial: usize,
    pub seed: u64,
    pub outcome: std::result::Result<TrialMetrics, String>,
}

#[derive(Debug, Clone)]
pub struct TrialMetrics {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub seconds: f64,
}

/// Per-mode aggregate over successful trials.
#[derive(Debug, Clone)]
pub struct ModeAggregate {
    pub mode: SpMode,
    pub trials: usize,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
    pub ari_mean: f64,
    pub ari_std: f64,
    pub sweeps_mean: f64,
    pub converged_count: usize,
}

#[derive(Debug, Clone)]
pub struct TrialReport {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<ModeAggregate>,
}

impl TrialRecord {
    /// One JSON object per line; key order and float formatting are fixed.
    pub fn to_json_line(&self) -> String {
        match &self.outcome {
            Ok(m) => format!(
                "{{\"dataset\":\"{}\",\"mode\":\"{}\",\"seed\":{},\"acc\":{},\"nmi\":{},\"ari\":{},\"sweeps\":{},\"converged\":{},\"seconds\":{}}}",
                json_escape(&self.dataset),
                self.mode.as_str(),
                self.seed,
                sig6(m.acc),
                sig6(m.nmi),
                sig6(m.ari),
                m.sweeps,
                m.converged,
                sig6(m.seconds),
            ),
            Err(message) => format!(
                "{{\"dataset\":\"{}\",\"mode\":\"{}\",\"seed\":{},\"acc\":null,\"nmi\":null,\"ari\":null,\"sweeps\":null,\"converged\":false,\"seconds\":null,\"error\":\"{}\"}}",
                json_escape(&self.dataset),
                self.mode.as_str(),
                self.seed,
                json_escape(message),
            ),
        }
    }
}

fn aggregate(mode: SpMode, records: &[&TrialRecord]) -> ModeAggregate {
    let ok: Vec<&TrialMetrics> = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .collect();
    let col = |f: fn(&TrialMetrics) -> f64| -> Vec<f64> { ok.iter().map(|m| f(m)).collect() };
    let accs = col(|m| m.acc);
    let nmis = col(|m| m.nmi);
    let aris = col(|m| m.ari);
    let sweeps = col(|m| m.sweeps as f64);
    ModeAggregate {
        mode,
        trials: ok.len(),
        acc_mean: mean(&accs),
        acc_std: sample_std(&accs),
        nmi_mean: mean(&nmis),
        nmi_std: sample_std(&nmis),
        ari_mean: mean(&aris),
        ari_std: sample_std(&aris),
        sweeps_mean: mean(&sweeps),
        converged_count: ok.iter().filter(|m| m.converged).count(),
    }
}

/// Renders the summary table (timing excluded: it is the one
/// non-reproducible quantity).
pub fn summary_csv(aggregates: &[ModeAggregate]) -> String {
    let mut out = String::from(
        "mode,trials,acc_mean,acc_std,nmi_mean,nmi_std,ari_mean,ari_std,sweeps_mean,converged\n",
    );
    for a in aggregates {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            a.mode.as_str(),
            a.trials,
            sig6(a.acc_mean),
            sig6(a.acc_std),
            sig6(a.nmi_mean),
            sig6(a.nmi_std),
            sig6(a.ari_mean),
            sig6(a.ari_std),
            sig6(a.sweeps_mean),
            a.converged_count,
        ));
    }
    out
}

/// Writes the per-sweep trace of one run as CSV.
pub fn emit_traces(result: &ClusteringResult, path: &Path) -> Result<()> {
    let mut out = String::from("sweep,objective,active_samples,mean_weight\n");
    for r in result.trace.records() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.sweep,
            sig6(r.objective),
            r.active_samples,
            sig6(r.mean_weight)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

struct TrialOutput {
    record: TrialRecord,
    result: Option<ClusteringResult>,
}

fn run_trial(
    x: &SimilarityMatrix,
    truth: &[usize],
    dataset_name: &str,
    spec: &ExperimentSpec,
    mode: SpMode,
    trial: usize,
) -> TrialOutput {
    let seed = spec.base_seed.wrapping_add(trial as u64);
    let cfg = spec.solver_config(mode, seed);
    let start = Instant::now();
    let outcome = run_spsnmf(x, &cfg);
    let seconds = if spec.record_timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    match outcome {
        Ok(result) => {
            let metrics = TrialMetrics {
                acc: round6(accuracy(&result.labels, truth).unwrap_or(f64::NAN)),
                nmi: round6(nmi(&result.labels, truth).unwrap_or(f64::NAN)),
                ari: round6(ari(&result.labels, truth).unwrap_or(f64::NAN)),
                sweeps: result.sweeps_used,
                converged: result.converged,
                seconds: round6(seconds),
            };
            TrialOutput {
                record: TrialRecord {
                    dataset: dataset_name.to_string(),
                    mode,
                    trial,
                    seed,
                    outcome: Ok(metrics),
                },
                result: Some(result),
            }
        }
        Err(err) => TrialOutput {
            record: TrialRecord {
                dataset: dataset_name.to_string(),
                mode,
                trial,
                seed,
                outcome: Err(err.to_string()),
            },
            result: None,
        },
    }
}

/// Runs `trials` seeded runs per mode over the dataset's similarity graph.
///
/// Trials execute in parallel; records, aggregates, and files are ordered
/// by (mode, trial) regardless of completion order, so output bytes do not
/// depend on the degree of parallelism.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<TrialReport> {
    let dataset = load_csv_dataset(&spec.dataset, &spec.label_selector)?;
    let report = run_experiment_on(&dataset, spec)?;
    Ok(report)
}

/// [`run_experiment`] on an already-loaded dataset.
pub fn run_experiment_on(dataset: &LabeledDataset, spec: &ExperimentSpec) -> Result<TrialReport> {
    if spec.trials == 0 {
        return Err(CliError::Core(spsnmf::Error::InvalidConfig(
            "trials must be at least 1".into(),
        )));
    }
    if spec.modes.is_empty() {
        return Err(CliError::Core(spsnmf::Error::InvalidConfig(
            "no modes selected".into(),
        )));
    }
    // Surface configuration errors before spawning trials.
    let n = dataset.features.nrows();
    if spec.k < 2 || spec.k > n {
        return Err(CliError::Core(spsnmf::Error::InvalidK { k: spec.k, n }));
    }

    let x = build_similarity(&dataset.features.view(), &spec.graph)?;

    let jobs: Vec<(SpMode, usize)> = spec
        .modes
        .iter()
        .flat_map(|&mode| (0..spec.trials).map(move |t| (mode, t)))
        .collect();
    let outputs: Vec<TrialOutput> = jobs
        .par_iter()
        .map(|&(mode, trial)| run_trial(&x, &dataset.labels, &dataset.name, spec, mode, trial))
        .collect();

    fs::create_dir_all(&spec.out_dir)?;
    let traces_dir = spec.out_dir.join("traces");
    fs::create_dir_all(&traces_dir)?;

    let mut jsonl = fs::File::create(spec.out_dir.join("trials.jsonl"))?;
    for output in &outputs {
        writeln!(jsonl, "{}", output.record.to_json_line())?;
        if let Some(result) = &output.result {
            let name = format!(
                "{}_seed{}.csv",
                output.record.mode.as_str(),
                output.record.seed
            );
            emit_traces(result, &traces_dir.join(name))?;
        }
    }

    let records: Vec<TrialRecord> = outputs.into_iter().map(|o| o.record).collect();
    let aggregates: Vec<ModeAggregate> = spec
        .modes
        .iter()
        .map(|&mode| {
            let subset: Vec<&TrialRecord> = records.iter().filter(|r| r.mode == mode).collect();
            aggregate(mode, &subset)
        })
        .collect();
    fs::write(spec.out_dir.join("summary.csv"), summary_csv(&aggregates))?;

    if records.iter().all(|r| r.outcome.is_err()) {
        return Err(CliError::AllTrialsFailed(records.len()));
    }
    Ok(TrialReport {
        records,
        aggregates,
    })
}

/// Sweeps the starting inclusion fraction over {0.1, …, 1.0} and records
/// the mean accuracy per (mode, fraction), one CSV row each.
pub fn run_fraction_sweep(spec: &ExperimentSpec) -> Result<PathBuf> {
    let dataset = load_csv_dataset(&spec.dataset, &spec.label_selector)?;
    let x = build_similarity(&dataset.features.view(), &spec.graph)?;

    let fractions: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let jobs: Vec<(SpMode, f64, usize)> = spec
        .modes
        .iter()
        .flat_map(|&mode| {
            fractions
                .iter()
                .flat_map(move |&p| (0..spec.trials).map(move |t| (mode, p, t)))
        })
        .collect();

    let accs: Vec<(SpMode, f64, f64)> = jobs
        .par_iter()
        .map(|&(mode, p, trial)| {
            let seed = spec.base_seed.wrapping_add(trial as u64);
            let mut cfg = spec.solver_config(mode, seed);
            cfg.init_fraction = p;
            let acc = run_spsnmf(&x, &cfg)
                .ok()
                .and_then(|r| accuracy(&r.labels, &dataset.labels).ok())
                .unwrap_or(f64::NAN);
            (mode, p, acc)
        })
        .collect();

    fs::create_dir_all(&spec.out_dir)?;
    let path = spec.out_dir.join("fractions.csv");
    let mut out = String::from("mode,fraction,mean_acc\n");
    for &mode in &spec.modes {
        for &p in &fractions {
            let values: Vec<f64> = accs
                .iter()
                .filter(|&&(m, f, a)| m == mode && f == p && a.is_finite())
                .map(|&(_, _, a)| a)
                .collect();
            out.push_str(&format!(
                "{},{},{}\n",
                mode.as_str(),
                sig6(p),
                sig6(mean(&values))
            ));
        }
    }
    fs::write(&path, out)?;
    Ok(path)
}

/// Builds the similarity graph and writes it as a plain numeric CSV.
pub fn write_similarity_csv(spec: &ExperimentSpec) -> Result<PathBuf> {
    let dataset = load_csv_dataset(&spec.dataset, &spec.label_selector)?;
    let x = build_similarity(&dataset.features.view(), &spec.graph)?;
    fs::create_dir_all(&spec.out_dir)?;
    let path = spec.out_dir.join("similarity.csv");
    let m = x.matrix();
    let mut out = String::new();
    for i in 0..x.n() {
        let row: Vec<String> = (0..x.n()).map(|j| sig6(m[[i, j]])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(&path, out)?;
    Ok(path)
}
