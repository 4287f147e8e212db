//! Experiment orchestration over datasets × balancing methods × learners,
//! result persistence, and the performance gain plot.

mod config;
mod plot;
mod results;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    BalancerChoice, DatasetSource, ExperimentConfig, ExplainSettings, LearnerChoice, BASELINE,
};
pub use plot::{gain_plot_svg, render_gain_plot, Facet};
pub use results::{
    comparison_to_csv, parse_results_csv, performance_gain_table, read_results_csv,
    results_to_csv, GainRow, GridCellResult, ResultRow, COMPARISON_HEADER, RESULTS_HEADER,
};

use crate::balancing::{balance, BalancerSpec};
use crate::compare::{asdd, balanced_accuracy, compare_vi, fdr_adjust};
use crate::data::{
    fetch_openml, load_csv, lookup, scenario_grid, stratified_split, Dataset,
};
use crate::error::{Error, Result};
use crate::explain::{
    ale, background_id, importance_to_csv, make_grid, pdp, permutation_importance,
    profiles_to_csv, Grid, ImportanceVector, Profile, ProfileKind,
};
use crate::learners::{save_model, train, LearnerSpec, TrainedModel, DEFAULT_THRESHOLD};
use crate::seed::derive_seed;

/// Bumped whenever cached cell contents would change meaning.
const CACHE_VERSION: u32 = 1;

pub const RESULTS_FILE: &str = "results.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const PROFILES_FILE: &str = "profiles.csv";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const MODELS_FILE: &str = "models.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const TIMINGS_FILE: &str = "timings.json";

pub fn gain_plot_file(kind: ProfileKind) -> String {
    format!("gain_{}.svg", kind.as_str())
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub cells: Vec<GridCellResult>,
    pub output_dir: PathBuf,
}

impl RunOutput {
    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| c.failed).count()
    }
}

/// Load every dataset named by the config, in config order.
pub fn resolve_datasets(config: &ExperimentConfig) -> Result<Vec<Dataset>> {
    let mut out = Vec::new();
    for source in &config.datasets {
        match source {
            DatasetSource::Registry(name) => out.push(fetch_openml(&lookup(name)?, config.cache_dir())?),
            DatasetSource::Csv { path, target } => out.push(load_csv(path, target)?),
            DatasetSource::Simulation { n_samples } => {
                out.extend(scenario_grid(*n_samples, config.master_seed)?.into_iter().map(|(_, d)| d));
            }
        }
    }
    Ok(out)
}

/// Resolve the config's datasets and run the experiment.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let datasets = resolve_datasets(config)?;
    run_on(config, datasets)
}

/// Everything one trained model contributes to comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Evaluation {
    model_id: String,
    ba: f64,
    pdp: Vec<Profile>,
    ale: Vec<Profile>,
    vi_variables: Vec<String>,
    vi_raw: Vec<Vec<f64>>,
    warnings: Vec<String>,
}

impl Evaluation {
    fn importance(&self) -> ImportanceVector {
        let repeats = self.vi_raw.len();
        let m = self.vi_variables.len();
        let raw = ndarray::Array2::from_shape_fn((repeats, m), |(r, j)| self.vi_raw[r][j]);
        let mean = (0..m).map(|j| raw.column(j).iter().sum::<f64>() / repeats as f64).collect();
        ImportanceVector {
            model_id: self.model_id.clone(),
            variables: self.vi_variables.clone(),
            mean,
            raw,
        }
    }
}

/// An evaluation, or why it could not be produced.
type Outcome = std::result::Result<Evaluation, String>;
type Timings = BTreeMap<String, f64>;

/// Per-dataset state shared by every cell of that dataset.
struct Prepared {
    label: String,
    train: Dataset,
    test: Dataset,
    grids: Vec<Grid>,
    warnings: Vec<String>,
}

struct Job<'a> {
    prep: &'a Prepared,
    balancer: Option<BalancerSpec>,
    learner: LearnerSpec,
}

impl Job<'_> {
    fn method(&self) -> &str {
        self.balancer.as_ref().map_or(BASELINE, |b| b.method.as_str())
    }
}

/// Run on already-loaded datasets. Dataset names must be distinct.
pub fn run_on(config: &ExperimentConfig, datasets: Vec<Dataset>) -> Result<RunOutput> {
    config.validate()?;
    let balancers = config.balancer_specs()?;
    let learners = config.learner_specs()?;
    let mut names: Vec<&str> = datasets.iter().map(|d| d.name()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("dataset names must be distinct".into()));
    }
    let out_dir = config.output_dir.clone();
    let cache_dir = out_dir.join("cache");
    fs::create_dir_all(&cache_dir).map_err(|e| Error::io(&cache_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    pool.install(|| {
        let mut labelled = Vec::new();
        for d in &datasets {
            for r in 0..config.repeats {
                let label = if config.repeats == 1 {
                    d.name().to_string()
                } else {
                    format!("{}#r{}", d.name(), r + 1)
                };
                labelled.push((label, d));
            }
        }
        let prepared: Vec<std::result::Result<Prepared, (String, String)>> = labelled
            .par_iter()
            .map(|(label, d)| prepare(config, label, d).map_err(|e| (label.clone(), e.to_string())))
            .collect();

        let mut cells_by_slot: Vec<Vec<GridCellResult>> = Vec::new();
        for p in &prepared {
            match p {
                Err((label, msg)) => {
                    let mut failed = Vec::new();
                    for l in &learners {
                        for method in std::iter::once(BASELINE).chain(balancers.iter().map(|b| b.method.as_str())) {
                            failed.push(GridCellResult::failed(
                                label,
                                method,
                                l.family.as_str(),
                                vec![format!("dataset preparation failed: {msg}")],
                            ));
                        }
                    }
                    cells_by_slot.push(failed);
                }
                Ok(prep) => {
                    let baselines: Vec<(LearnerSpec, Outcome, Timings)> = learners
                        .par_iter()
                        .map(|l| {
                            let job = Job { prep, balancer: None, learner: seeded_learner(config, prep, None, l) };
                            let (eval, timings) = evaluate_cached(config, &cache_dir, &job);
                            (job.learner, eval, timings)
                        })
                        .collect();
                    let jobs: Vec<(usize, Option<&BalancerSpec>)> = (0..learners.len())
                        .flat_map(|li| std::iter::once((li, None)).chain(balancers.iter().map(move |b| (li, Some(b)))))
                        .collect();
                    let cells: Vec<GridCellResult> = jobs
                        .par_iter()
                        .map(|&(li, b)| {
                            let (base_spec, base_eval, base_timings) = &baselines[li];
                            match b {
                                None => baseline_cell(prep, base_spec, base_eval, base_timings),
                                Some(b) => {
                                    let job = Job {
                                        prep,
                                        balancer: Some(seeded_balancer(config, prep, b, &learners[li])),
                                        learner: seeded_learner(config, prep, Some(b), &learners[li]),
                                    };
                                    balanced_cell(config, &cache_dir, &job, base_eval)
                                }
                            }
                        })
                        .collect();
                    cells_by_slot.push(cells);
                }
            }
        }
        let mut cells: Vec<GridCellResult> = cells_by_slot.into_iter().flatten().collect();
        apply_run_fdr(&mut cells, config.alpha)?;
        write_outputs(config, &prepared, &cells)?;
        Ok(RunOutput { cells, output_dir: out_dir.clone() })
    })
}

fn prepare(config: &ExperimentConfig, label: &str, d: &Dataset) -> Result<Prepared> {
    let seed = derive_seed(config.master_seed, &["split", label]);
    let split = stratified_split(d, config.test_fraction, seed)?;
    let mut warnings = Vec::new();
    let mut grids = Vec::new();
    for (j, var) in d.feature_names().iter().enumerate() {
        match make_grid(&split.test, var, config.explain.grid_k, config.explain.grid) {
            Ok(g) => grids.push(g),
            Err(Error::InvalidData(_)) => {
                warnings.push(format!("pdp: `{var}` is constant on the test split, single-point grid"));
                grids.push(Grid {
                    variable: var.clone(),
                    points: vec![split.test.column(j)[0]],
                    construction: config.explain.grid,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Prepared {
        label: label.to_string(),
        train: split.train,
        test: split.test,
        grids,
        warnings,
    })
}

fn seeded_balancer(config: &ExperimentConfig, prep: &Prepared, b: &BalancerSpec, l: &LearnerSpec) -> BalancerSpec {
    let seed = derive_seed(config.master_seed, &["balance", &prep.label, b.method.as_str(), l.family.as_str()]);
    b.clone().with_seed(seed)
}

fn seeded_learner(config: &ExperimentConfig, prep: &Prepared, b: Option<&BalancerSpec>, l: &LearnerSpec) -> LearnerSpec {
    let method = b.map_or(BASELINE, |b| b.method.as_str());
    let mut spec = l.clone();
    spec.seed = derive_seed(config.master_seed, &["train", &prep.label, method, l.family.as_str()]);
    spec
}

fn cache_key(config: &ExperimentConfig, job: &Job<'_>) -> String {
    let mut h = Sha256::new();
    let mut put = |bytes: &[u8]| {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    };
    put(&CACHE_VERSION.to_le_bytes());
    put(env!("CARGO_PKG_VERSION").as_bytes());
    put(job.prep.label.as_bytes());
    put(job.prep.train.checksum().as_bytes());
    put(job.prep.test.checksum().as_bytes());
    put(&serde_json::to_vec(&job.balancer).expect("spec serializes"));
    put(&serde_json::to_vec(&job.learner).expect("spec serializes"));
    put(&serde_json::to_vec(&config.explain).expect("settings serialize"));
    put(&serde_json::to_vec(&job.prep.grids).expect("grids serialize"));
    put(&config.master_seed.to_le_bytes());
    crate::data::hex(&h.finalize())
}

/// Balance (if requested), train, and explain one model, reusing a cached
/// evaluation when the config allows it.
fn evaluate_cached(
    config: &ExperimentConfig,
    cache_dir: &Path,
    job: &Job<'_>,
) -> (Outcome, BTreeMap<String, f64>) {
    let mut timings = BTreeMap::new();
    let key = cache_key(config, job);
    let path = cache_dir.join(format!("{key}.json"));
    if config.reuse_cache {
        let t = Instant::now();
        if let Some(eval) = fs::read(&path).ok().and_then(|b| serde_json::from_slice::<Evaluation>(&b).ok()) {
            timings.insert("cache".to_string(), t.elapsed().as_secs_f64());
            return (Ok(eval), timings);
        }
    }
    let result = evaluate(config, job, &mut timings);
    if let Ok(eval) = &result {
        if let Ok(bytes) = serde_json::to_vec(eval) {
            let tmp = cache_dir.join(format!("{key}.json.tmp"));
            if fs::write(&tmp, bytes).is_ok() {
                let _ = fs::rename(&tmp, &path);
            }
        }
    }
    (result.map_err(|e| e.to_string()), timings)
}

fn evaluate(config: &ExperimentConfig, job: &Job<'_>, timings: &mut BTreeMap<String, f64>) -> Result<Evaluation> {
    let prep = job.prep;
    let mut warnings = Vec::new();
    let t = Instant::now();
    let balanced;
    let train_data = match &job.balancer {
        None => &prep.train,
        Some(spec) => {
            let b = balance(&prep.train, spec)?;
            warnings.extend(b.warnings);
            balanced = b.data;
            timings.insert("balance".into(), t.elapsed().as_secs_f64());
            &balanced
        }
    };
    let t = Instant::now();
    let model = train(&job.learner, train_data)?;
    warnings.extend(model.warnings.iter().cloned());
    timings.insert("train".into(), t.elapsed().as_secs_f64());
    if config.save_models {
        let dir = config.output_dir.join("models");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let file = dir.join(format!("{}__{}__{}.model", prep.label, job.method(), job.learner.family));
        save_model(&model, &file)?;
    }

    let t = Instant::now();
    let eval = explain_model(config, prep, &model, &mut warnings)?;
    timings.insert("explain".into(), t.elapsed().as_secs_f64());
    Ok(Evaluation { warnings, ..eval })
}

fn explain_model(
    config: &ExperimentConfig,
    prep: &Prepared,
    model: &TrainedModel,
    warnings: &mut Vec<String>,
) -> Result<Evaluation> {
    let test = &prep.test;
    let labels = model.predict_label(test.features(), DEFAULT_THRESHOLD)?;
    let ba = balanced_accuracy(test.target(), &labels)?;
    let pdp_profiles = prep.grids.iter().map(|g| pdp(model, test, g)).collect::<Result<Vec<_>>>()?;
    let mut ale_profiles = Vec::new();
    for var in test.feature_names() {
        let p = ale(model, test, var, config.explain.ale_bins)?;
        warnings.extend(p.warnings.iter().cloned());
        ale_profiles.push(p);
    }
    // Same permutations for every model of a dataset.
    let vi_seed = derive_seed(config.master_seed, &["importance", &prep.label]);
    let vi = permutation_importance(model, test, config.explain.vi_repeats, vi_seed)?;
    Ok(Evaluation {
        model_id: model.id().to_string(),
        ba,
        pdp: pdp_profiles,
        ale: ale_profiles,
        vi_variables: vi.variables.clone(),
        vi_raw: vi.raw.outer_iter().map(|r| r.to_vec()).collect(),
        warnings: Vec::new(),
    })
}

fn baseline_cell(
    prep: &Prepared,
    spec: &LearnerSpec,
    eval: &Outcome,
    timings: &BTreeMap<String, f64>,
) -> GridCellResult {
    let family = spec.family.as_str();
    let eval = match eval {
        Ok(e) => e,
        Err(msg) => {
            return GridCellResult::failed(&prep.label, BASELINE, family, vec![format!("baseline: {msg}")]);
        }
    };
    let mut cell = compare_cells(prep, family, BASELINE, eval, eval)
        .unwrap_or_else(|e| GridCellResult::failed(&prep.label, BASELINE, family, vec![e.to_string()]));
    cell.timings = timings.clone();
    cell
}

fn balanced_cell(
    config: &ExperimentConfig,
    cache_dir: &Path,
    job: &Job<'_>,
    base: &Outcome,
) -> GridCellResult {
    let family = job.learner.family.as_str();
    let (label, method) = (job.prep.label.as_str(), job.method());
    let base = match base {
        Ok(b) => b,
        Err(msg) => return GridCellResult::failed(label, method, family, vec![format!("baseline: {msg}")]),
    };
    let (eval, timings) = evaluate_cached(config, cache_dir, job);
    let eval = match eval {
        Ok(e) => e,
        Err(msg) => return GridCellResult::failed(label, method, family, vec![msg]),
    };
    let mut cell = compare_cells(job.prep, family, method, base, &eval)
        .unwrap_or_else(|e| GridCellResult::failed(label, method, family, vec![e.to_string()]));
    cell.timings = timings;
    cell
}

fn compare_cells(
    prep: &Prepared,
    family: &str,
    method: &str,
    base: &Evaluation,
    other: &Evaluation,
) -> Result<GridCellResult> {
    let pdp_cmp = asdd(&base.pdp, &other.pdp)?;
    let ale_cmp = asdd(&base.ale, &other.ale)?;
    let mut sdds = pdp_cmp.per_variable.clone();
    sdds.extend(ale_cmp.per_variable.iter().cloned());
    let vi_test = compare_vi(&base.importance(), &other.importance(), 1.0)?;
    let mut warnings = prep.warnings.clone();
    warnings.extend(other.warnings.iter().cloned());
    if vi_test.low_power {
        warnings.push(format!("vi test: only {} variables, low power", base.vi_variables.len()));
    }
    Ok(GridCellResult {
        dataset: prep.label.clone(),
        method: method.to_string(),
        model: family.to_string(),
        ba_base: base.ba,
        ba_balanced: other.ba,
        gain: other.ba - base.ba,
        asdd_pdp: pdp_cmp.asdd,
        asdd_ale: ale_cmp.asdd,
        sdd: sdds,
        vi_test: Some(vi_test),
        failed: false,
        warnings,
        timings: BTreeMap::new(),
    })
}

/// Benjamini–Hochberg over every non-baseline test of the run. Baseline
/// self-comparisons are reported with p = 1 and never rejected.
fn apply_run_fdr(cells: &mut [GridCellResult], alpha: f64) -> Result<()> {
    let family: Vec<usize> = (0..cells.len())
        .filter(|&i| !cells[i].is_baseline() && cells[i].vi_test.is_some())
        .collect();
    let p: Vec<f64> = family.iter().map(|&i| cells[i].vi_test.as_ref().unwrap().p_value).collect();
    let adjusted = fdr_adjust(&p)?;
    for (&i, a) in family.iter().zip(adjusted) {
        cells[i].vi_test.as_mut().unwrap().set_adjusted(a, alpha);
    }
    for c in cells.iter_mut().filter(|c| c.is_baseline()) {
        if let Some(t) = c.vi_test.as_mut() {
            t.set_adjusted(1.0, alpha);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DatasetMeta<'a> {
    label: &'a str,
    train_rows: usize,
    test_rows: usize,
    columns: usize,
    train_class_counts: [usize; 2],
    test_class_counts: [usize; 2],
    test_checksum: String,
    background_id: String,
    grid_checksum: String,
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    hyperparameters: BTreeMap<String, BTreeMap<String, f64>>,
    balancers: Vec<BalancerSpec>,
    datasets: Vec<DatasetMeta<'a>>,
    failed_datasets: BTreeMap<&'a str, &'a str>,
    cells: usize,
    failed_cells: usize,
}

fn grid_checksum(grids: &[Grid]) -> String {
    let mut h = Sha256::new();
    for g in grids {
        h.update(g.variable.as_bytes());
        for p in &g.points {
            h.update(p.to_le_bytes());
        }
    }
    crate::data::hex(&h.finalize())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_outputs(
    config: &ExperimentConfig,
    prepared: &[std::result::Result<Prepared, (String, String)>],
    cells: &[GridCellResult],
) -> Result<()> {
    let dir = &config.output_dir;
    let rows: Vec<ResultRow> = cells.iter().map(|c| c.row()).collect();
    write_file(&dir.join(RESULTS_FILE), &results_to_csv(&rows)?)?;
    write_file(&dir.join(COMPARISON_FILE), &comparison_to_csv(cells)?)?;

    // Profiles and importances come from the evaluation cache, which holds
    // every model the run explained.
    let cache_dir = dir.join("cache");
    let learners = config.learner_specs()?;
    let balancers = config.balancer_specs()?;
    let mut profiles = Vec::new();
    let mut importances = Vec::new();
    let mut models = csv::Writer::from_writer(Vec::new());
    models.write_record(["dataset", "model", "method", "model_id"])?;
    for prep in prepared.iter().flatten() {
        for l in &learners {
            let mut jobs = vec![Job { prep, balancer: None, learner: seeded_learner(config, prep, None, l) }];
            for b in &balancers {
                jobs.push(Job {
                    prep,
                    balancer: Some(seeded_balancer(config, prep, b, l)),
                    learner: seeded_learner(config, prep, Some(b), l),
                });
            }
            for job in jobs {
                let path = cache_dir.join(format!("{}.json", cache_key(config, &job)));
                let Some(eval) = fs::read(&path).ok().and_then(|b| serde_json::from_slice::<Evaluation>(&b).ok()) else {
                    continue;
                };
                models.write_record([prep.label.as_str(), l.family.as_str(), job.method(), &eval.model_id])?;
                profiles.extend(eval.pdp.iter().cloned());
                profiles.extend(eval.ale.iter().cloned());
                importances.push(eval.importance());
            }
        }
    }
    write_file(&dir.join(PROFILES_FILE), &profiles_to_csv(&profiles)?)?;
    write_file(&dir.join(IMPORTANCE_FILE), &importance_to_csv(&importances)?)?;
    let models = String::from_utf8(models.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?)
        .expect("csv output is utf-8");
    write_file(&dir.join(MODELS_FILE), &models)?;

    let metadata = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        config,
        hyperparameters: learners.iter().map(|l| (l.family.to_string(), l.resolved())).collect(),
        balancers: balancers.clone(),
        datasets: prepared
            .iter()
            .flatten()
            .map(|p| DatasetMeta {
                label: &p.label,
                train_rows: p.train.n_rows(),
                test_rows: p.test.n_rows(),
                columns: p.test.n_cols(),
                train_class_counts: p.train.class_counts(),
                test_class_counts: p.test.class_counts(),
                test_checksum: p.test.checksum(),
                background_id: background_id(&p.test),
                grid_checksum: grid_checksum(&p.grids),
            })
            .collect(),
        failed_datasets: prepared
            .iter()
            .filter_map(|p| p.as_ref().err())
            .map(|(l, m)| (l.as_str(), m.as_str()))
            .collect(),
        cells: cells.len(),
        failed_cells: cells.iter().filter(|c| c.failed).count(),
    };
    let meta = serde_json::to_string_pretty(&metadata)?;
    write_file(&dir.join(METADATA_FILE), &(meta + "\n"))?;

    let timings: Vec<_> = cells
        .iter()
        .map(|c| serde_json::json!({"dataset": c.dataset, "model": c.model, "method": c.method, "seconds": c.timings}))
        .collect();
    write_file(&dir.join(TIMINGS_FILE), &(serde_json::to_string_pretty(&timings)? + "\n"))?;

    for kind in [ProfileKind::Pdp, ProfileKind::Ale] {
        let table = performance_gain_table(&rows, kind);
        let path = dir.join(gain_plot_file(kind));
        if table.is_empty() {
            let _ = fs::remove_file(&path);
        } else {
            render_gain_plot(&table, Facet::Model, kind, &path)?;
        }
    }
    Ok(())
}
