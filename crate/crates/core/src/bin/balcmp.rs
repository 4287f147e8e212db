use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use balcmp_core::balancing::{balance, BalancerSpec, Method};
use balcmp_core::data::{
    fetch_openml, load_csv, lookup, registry_csv, scenario_grid, simulate, write_csv, SimulationScenario,
};
use balcmp_core::explain::{
    ale, importance_to_csv, make_grid, pdp, permutation_importance, profiles_to_csv, GridConstruction,
    ProfileKind, DEFAULT_ALE_BINS, DEFAULT_GRID_POINTS, DEFAULT_VI_REPEATS,
};
use balcmp_core::learners::{load_model, save_model, train, Family, LearnerSpec};
use balcmp_core::runner::{self, ExperimentConfig, Facet};
use balcmp_core::{Error, Result};

const DEFAULT_TARGET: &str = "target";

const EXIT_CONFIG: u8 = 1;
const EXIT_ALL_FAILED: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "balcmp", version, about = "Compare how data balancing changes model behavior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resample a CSV dataset to full class balance.
    Balance(BalanceArgs),
    /// Train a model on a CSV dataset and save it.
    Train(TrainArgs),
    /// Compute PDP, ALE or permutation importance of a saved model.
    Explain(ExplainArgs),
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Draw the performance gain plot from a results CSV.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, value_enum, default_value = "model")]
        facet: FacetArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write simulated datasets as CSV.
    Simulate(SimulateArgs),
    /// Show the benchmark dataset registry.
    Registry {
        #[arg(long, required = true)]
        list: bool,
    },
    /// Download registry datasets into the local cache.
    Fetch {
        #[arg(required = true)]
        names: Vec<String>,
        #[arg(long, default_value = "openml-cache")]
        cache_dir: PathBuf,
    },
}

#[derive(Args)]
struct BalanceArgs {
    #[arg(long)]
    method: Method,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = DEFAULT_TARGET)]
    target: String,
    /// SMOTE neighbors.
    #[arg(long)]
    k: Option<usize>,
    /// Borderline SMOTE danger neighbors.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    near_miss_k: Option<usize>,
    /// Measure distances on standardized features.
    #[arg(long)]
    standardize: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    family: Family,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = DEFAULT_TARGET)]
    target: String,
    /// Hyperparameter override, e.g. `--hp n_trees=50`.
    #[arg(long = "hp", value_parser = parse_hp)]
    hyperparameters: Vec<(String, f64)>,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    background: PathBuf,
    #[arg(long, value_enum)]
    kind: ExplainKind,
    #[arg(long, default_value = DEFAULT_TARGET)]
    target: String,
    /// Restrict to one variable; all variables by default.
    #[arg(long)]
    variable: Option<String>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_k: usize,
    #[arg(long)]
    quantile_grid: bool,
    #[arg(long, default_value_t = DEFAULT_ALE_BINS)]
    ale_bins: usize,
    #[arg(long, default_value_t = DEFAULT_VI_REPEATS)]
    vi_repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// All twelve scenarios of the simulation grid.
    #[arg(long, conflicts_with_all = ["beta0", "variance"])]
    grid: bool,
    #[arg(long, required_unless_present = "grid")]
    beta0: Option<f64>,
    #[arg(long, required_unless_present = "grid")]
    variance: Option<f64>,
    #[arg(long, default_value_t = balcmp_core::data::simulate::DEFAULT_SAMPLES)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Pdp,
    Ale,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExplainKind {
    Pdp,
    Ale,
    Vi,
}

#[derive(Clone, Copy, ValueEnum)]
enum FacetArg {
    Model,
    Dataset,
}

fn parse_hp(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io { path: p.to_path_buf(), source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_balance(a: BalanceArgs) -> Result<()> {
    let d = load_csv(&a.input, &a.target)?;
    let mut spec = BalancerSpec::new(a.method).with_seed(a.seed);
    spec.k_neighbors = a.k.unwrap_or(spec.k_neighbors);
    spec.m_neighbors = a.m.unwrap_or(spec.m_neighbors);
    spec.near_miss_k = a.near_miss_k.unwrap_or(spec.near_miss_k);
    spec.standardize = a.standardize;
    let b = balance(&d, &spec)?;
    for w in &b.warnings {
        eprintln!("warning: {w}");
    }
    let mask = b.synthetic_mask.iter().any(|&s| s).then_some(b.synthetic_mask.as_slice());
    write_csv(&b.data, &a.out, &a.target, mask)?;
    let [n0, n1] = b.data.class_counts();
    eprintln!("{}: {} rows (class 0: {n0}, class 1: {n1})", a.method, b.data.n_rows());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let d = load_csv(&a.input, &a.target)?;
    let mut spec = LearnerSpec::with_defaults(a.family, a.seed);
    for (k, v) in &a.hyperparameters {
        spec = spec.set(k, *v)?;
    }
    let model = train(&spec, &d)?;
    for w in &model.warnings {
        eprintln!("warning: {w}");
    }
    save_model(&model, &a.out)?;
    println!("{}", model.id());
    Ok(())
}

fn cmd_explain(a: ExplainArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let bg = load_csv(&a.background, &a.target)?;
    let variables: Vec<String> = match &a.variable {
        Some(v) => vec![v.clone()],
        None => bg.feature_names().to_vec(),
    };
    let text = match a.kind {
        ExplainKind::Pdp => {
            let construction = if a.quantile_grid { GridConstruction::Quantile } else { GridConstruction::Uniform };
            let mut profiles = Vec::new();
            for v in &variables {
                profiles.push(pdp(&model, &bg, &make_grid(&bg, v, a.grid_k, construction)?)?);
            }
            profiles_to_csv(&profiles)?
        }
        ExplainKind::Ale => {
            let profiles = variables.iter().map(|v| ale(&model, &bg, v, a.ale_bins)).collect::<Result<Vec<_>>>()?;
            for w in profiles.iter().flat_map(|p| &p.warnings) {
                eprintln!("warning: {w}");
            }
            profiles_to_csv(&profiles)?
        }
        ExplainKind::Vi => {
            let mut vi = permutation_importance(&model, &bg, a.vi_repeats, a.seed)?;
            if a.variable.is_some() {
                let keep: Vec<usize> = (0..vi.variables.len()).filter(|&j| variables.contains(&vi.variables[j])).collect();
                vi.variables = keep.iter().map(|&j| vi.variables[j].clone()).collect();
                vi.mean = keep.iter().map(|&j| vi.mean[j]).collect();
                vi.raw = vi.raw.select(ndarray::Axis(1), &keep);
            }
            importance_to_csv(&[vi])?
        }
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io { path: a.out_dir.clone(), source: e })?;
    let datasets = if a.grid {
        scenario_grid(a.n, a.seed)?.into_iter().map(|(_, d)| d).collect()
    } else {
        let s = SimulationScenario::new(a.beta0.unwrap(), a.variance.unwrap(), a.n, a.seed)?;
        vec![simulate(&s)?]
    };
    for d in datasets {
        let path = a.out_dir.join(format!("{}.csv", d.name()));
        write_csv(&d, &path, DEFAULT_TARGET, None)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_run(config: &Path, workers: Option<usize>) -> Result<ExitCode> {
    let mut config = ExperimentConfig::load(config)?;
    if workers.is_some() {
        config.workers = workers;
        config.validate()?;
    }
    let out = runner::run(&config)?;
    let failed = out.n_failed();
    let total = out.cells.len();
    for c in out.cells.iter().filter(|c| c.failed) {
        eprintln!("failed: {} / {} / {}: {}", c.dataset, c.method, c.model, c.warnings.join("; "));
    }
    eprintln!("{} of {total} cells failed; results in {}", failed, out.output_dir.display());
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else if failed == total {
        ExitCode::from(EXIT_ALL_FAILED)
    } else {
        ExitCode::from(EXIT_PARTIAL)
    })
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Balance(a) => cmd_balance(a)?,
        Command::Train(a) => cmd_train(a)?,
        Command::Explain(a) => cmd_explain(a)?,
        Command::Run { config, workers } => return cmd_run(&config, workers),
        Command::Plot { results, kind, facet, out } => {
            let rows = runner::read_results_csv(&results)?;
            let kind = match kind {
                KindArg::Pdp => ProfileKind::Pdp,
                KindArg::Ale => ProfileKind::Ale,
            };
            let facet = match facet {
                FacetArg::Model => Facet::Model,
                FacetArg::Dataset => Facet::Dataset,
            };
            runner::render_gain_plot(&runner::performance_gain_table(&rows, kind), facet, kind, &out)?;
        }
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Registry { .. } => print!("{}", registry_csv()?),
        Command::Fetch { names, cache_dir } => {
            for name in names {
                let d = fetch_openml(&lookup(&name)?, &cache_dir)?;
                println!("{name}: {} rows, {} columns", d.n_rows(), d.n_cols());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
