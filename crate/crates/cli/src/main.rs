mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use labelshift::eval::report::{
    aggregate_csv, confusion_summary_table, grid_methods, label_set_table, read_fold_log,
    results_from_log, summary_lines, sweep_table, write_fold_log, Table,
};
use labelshift::{
    compare, dataset_summary, delta_m, load_dataset, run_experiment, BiasTerm, Dataset,
    ExperimentConfig, ExperimentResult, Formula, Method, Registry, SvmParams, DATA_DIR_ENV,
};
use log::{info, warn};

use config::FileConfig;

const FULL_REPS: usize = 100;
const DEFAULT_REPS: usize = 10;
const DEFAULT_DATASETS: [&str; 4] = ["arrhythmia", "breast-cancer", "heart", "ionosphere"];

#[derive(Parser)]
#[command(
    name = "labelshift",
    version,
    about = "Imbalanced classification by regression on shifted targets"
)]
struct Cli {
    /// Directory holding the dataset files.
    #[arg(long, global = true, env = DATA_DIR_ENV, default_value = "data")]
    data_dir: PathBuf,

    /// Dataset registry file replacing the built-in one.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registry datasets with their loaded shape.
    #[command(alias = "summary")]
    Datasets,
    /// Cross-validate one or more methods on one dataset.
    Run(RunArgs),
    /// Run the full grid and write the three result tables.
    Tables(TablesArgs),
    /// Wilcoxon comparison of two methods from fold logs.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BiasArg {
    Free,
    Regularized,
    None,
}

impl From<BiasArg> for BiasTerm {
    fn from(b: BiasArg) -> Self {
        match b {
            BiasArg::Free => BiasTerm::Free,
            BiasArg::Regularized => BiasTerm::Regularized,
            BiasArg::None => BiasTerm::None,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Repetitions of k-fold cross validation.
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed; fold splits depend only on it and the repetition.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// TOML config file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// SVM box constraint.
    #[arg(long = "svm-c")]
    c: Option<f64>,
    /// Fixed SVR tube half-width instead of the per-fold default.
    #[arg(long)]
    epsilon: Option<f64>,
    /// KKT violation at which the solver stops
    #[arg(long)]
    tolerance: Option<f64>,
    /// Iteration budget, in passes over the training set
    #[arg(long)]
    max_epochs: Option<usize>,
    /// How the intercept enters the optimisation problem
    #[arg(long, value_enum)]
    bias: Option<BiasArg>,
    /// Neighbours considered by SMOTE.
    #[arg(long)]
    smote_k: Option<usize>,
    /// Generate SMOTE samples with x + r (x - y) instead of x + r (y - x).
    #[arg(long)]
    smote_extrapolate: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Registry dataset name.
    #[arg(long)]
    dataset: String,
    /// csvm, omega, omega-tilde, shift:<m> or smote; repeatable.
    #[arg(long = "method")]
    methods: Vec<String>,
    /// Folds per repetition (default: from the registry).
    #[arg(long)]
    folds: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TablesArgs {
    /// Comma-separated registry names.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DATASETS.map(String::from))]
    datasets: Vec<String>,
    /// Use 100 repetitions for the full-scale protocol. Takes hours.
    #[arg(long)]
    full_scale: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CompareArgs {
    /// Fold logs (JSON lines) holding both methods.
    #[arg(required = true)]
    logs: Vec<PathBuf>,
    /// First method, e.g. shift:1.0
    #[arg(long)]
    a: String,
    /// Second method, e.g. smote
    #[arg(long)]
    b: String,
    /// Dataset to compare on; needed when the logs hold several.
    #[arg(long)]
    dataset: Option<String>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let registry = match &cli.registry {
        Some(p) => Registry::load(p)?,
        None => Registry::builtin(),
    };
    match cli.command {
        Command::Datasets => cmd_datasets(&registry, &cli.data_dir),
        Command::Run(args) => cmd_run(&registry, &cli.data_dir, args),
        Command::Tables(args) => cmd_tables(&registry, &cli.data_dir, args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn cmd_datasets(registry: &Registry, data_dir: &Path) -> Result<()> {
    println!(
        "{:<16} {:>5} {:>5}  class distribution   folds  title",
        "name", "#S", "#F"
    );
    for entry in registry.entries() {
        let spec = registry.resolve(&entry.spec.name, data_dir)?;
        let folds = spec
            .folds
            .map(|k| k.to_string())
            .unwrap_or_else(|| "-".into());
        match load_dataset(&spec) {
            Ok(ds) => {
                let s = dataset_summary(&ds);
                let dist = format!("{}:{} ({}%)", s.n_minus, s.n_plus, s.minority_percent);
                println!(
                    "{:<16} {:>5} {:>5}  {dist:<19}  {folds:>5}  {}",
                    s.name, s.samples, s.features, entry.title
                );
            }
            Err(e) => println!("{:<16} unavailable: {e}", entry.spec.name),
        }
    }
    Ok(())
}

/// Everything a run needs after merging flags, config file and registry.
struct Resolved {
    config: ExperimentConfig,
    out: PathBuf,
    threads: Option<usize>,
}

fn resolve(
    common: &Common,
    file: &FileConfig,
    folds: usize,
    full_scale: bool,
) -> Result<Resolved> {
    let mut svm = SvmParams::default();
    if let Some(c) = common.c.or(file.svm.c) {
        svm.c = c;
    }
    svm.epsilon = common.epsilon.or(file.svm.epsilon);
    if let Some(t) = common.tolerance.or(file.svm.tolerance) {
        svm.tolerance = t;
    }
    if let Some(e) = common.max_epochs.or(file.svm.max_epochs) {
        svm.max_epochs = e;
    }
    svm.bias = match (common.bias, file.svm.bias.as_deref()) {
        (Some(b), _) => b.into(),
        (None, Some(s)) => BiasArg::from_str(s, true)
            .map_err(|_| anyhow!("config: unknown bias {s:?} (free, regularized, none)"))?
            .into(),
        (None, None) => BiasTerm::Free,
    };
    svm.validate()?;

    let default_reps = if full_scale {
        FULL_REPS
    } else {
        DEFAULT_REPS
    };
    let repetitions = common.reps.or(file.reps).unwrap_or(default_reps);
    if repetitions == 0 {
        bail!("--reps must be at least 1");
    }
    if folds < 2 {
        bail!("--folds must be at least 2");
    }
    let extrapolate = common.smote_extrapolate || file.smote.extrapolate.unwrap_or(false);
    Ok(Resolved {
        config: ExperimentConfig {
            repetitions,
            folds,
            base_seed: common.seed.or(file.seed).unwrap_or(0),
            svm,
            smote_k: common.smote_k.or(file.smote.k).unwrap_or(10),
            smote_formula: if extrapolate {
                Formula::Extrapolate
            } else {
                Formula::Interpolate
            },
        },
        out: common
            .out
            .clone()
            .or_else(|| file.out.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results")),
        threads: common.threads.or(file.threads),
    })
}

fn load_config(common: &Common) -> Result<FileConfig> {
    match &common.config {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

fn load_named(
    registry: &Registry,
    data_dir: &Path,
    name: &str,
) -> Result<(Dataset, Option<usize>)> {
    let spec = registry.resolve(name, data_dir)?;
    let ds = load_dataset(&spec).with_context(|| format!("loading dataset {name}"))?;
    Ok((ds, spec.folds))
}

fn parse_methods(raw: &[String]) -> Result<Vec<Method>> {
    if raw.is_empty() {
        bail!("no method given; use --method (csvm, omega, omega-tilde, shift:<m>, smote)");
    }
    raw.iter()
        .map(|s| s.parse::<Method>().map_err(Into::into))
        .collect()
}

/// Rejects shift multipliers below `n_minus / n_plus` before any work starts.
fn check_multipliers(ds: &Dataset, methods: &[Method]) -> Result<()> {
    for m in methods {
        if let Method::Shift(m) = *m {
            if delta_m(m, ds.n_minus(), ds.n_plus()) < 0.0 {
                bail!(
                    "method shift:{m} on {}: multiplier must be at least n_minus/n_plus = {}/{} = {:.4}",
                    ds.name(),
                    ds.n_minus(),
                    ds.n_plus(),
                    ds.min_multiplier()
                );
            }
        }
    }
    Ok(())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(f))
        }
    }
}

fn warn_not_converged(results: &[ExperimentResult]) {
    for r in results {
        let n = r.fold_results.iter().filter(|f| f.not_converged).count();
        if n > 0 {
            warn!(
                "{} {}: solver hit the epoch limit in {n} of {} folds",
                r.dataset,
                r.method,
                r.fold_results.len()
            );
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(registry: &Registry, data_dir: &Path, args: RunArgs) -> Result<()> {
    let file = load_config(&args.common)?;
    let raw_methods = if args.methods.is_empty() {
        file.methods.clone().unwrap_or_default()
    } else {
        args.methods.clone()
    };
    let methods = parse_methods(&raw_methods)?;
    let (ds, registry_folds) = load_named(registry, data_dir, &args.dataset)?;
    check_multipliers(&ds, &methods)?;
    let folds = args.folds.or(file.folds).or(registry_folds).unwrap_or(10);
    let run = resolve(&args.common, &file, folds, false)?;

    info!(
        "{}: {} methods, {}x{}-fold, seed {}",
        ds.name(),
        methods.len(),
        run.config.repetitions,
        folds,
        run.config.base_seed
    );
    let results = with_threads(run.threads, || {
        methods
            .iter()
            .map(|&m| run_experiment(&ds, m, &run.config))
            .collect::<labelshift::Result<Vec<_>>>()
    })??;
    warn_not_converged(&results);

    fs::create_dir_all(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    write_fold_log(&run.out.join("folds.jsonl"), &results)?;
    write(&run.out.join("aggregate.csv"), &aggregate_csv(&results))?;
    let summary = summary_lines(&results);
    write(&run.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    println!("results written to {}", run.out.display());
    Ok(())
}

fn cmd_tables(registry: &Registry, data_dir: &Path, args: TablesArgs) -> Result<()> {
    let file = load_config(&args.common)?;
    if args.full_scale {
        warn!("full scale: {FULL_REPS} repetitions per method and dataset; expect this to take hours");
        eprintln!("warning: full-scale grid ({FULL_REPS} repetitions); this takes hours");
    }
    // Load everything first so a missing file fails before any training.
    let mut loaded = Vec::new();
    for name in &args.datasets {
        let (ds, registry_folds) = load_named(registry, data_dir, name)?;
        check_multipliers(&ds, &grid_methods())?;
        let folds = file.folds.or(registry_folds).unwrap_or(10);
        loaded.push((ds, resolve(&args.common, &file, folds, args.full_scale)?));
    }
    let out = loaded
        .first()
        .map(|(_, r)| r.out.clone())
        .ok_or_else(|| anyhow!("no datasets selected"))?;
    let threads = loaded.first().and_then(|(_, r)| r.threads);

    let results = with_threads(threads, || -> labelshift::Result<Vec<ExperimentResult>> {
        let mut all = Vec::new();
        for (ds, run) in &loaded {
            for m in grid_methods() {
                info!("{} {m}", ds.name());
                all.push(run_experiment(ds, m, &run.config)?);
            }
        }
        Ok(all)
    })??;
    warn_not_converged(&results);

    let names: Vec<&str> = args.datasets.iter().map(String::as_str).collect();
    let tables: [(&str, Table); 3] = [
        ("table_label_sets", label_set_table(&results, &names)?),
        ("table_sweep", sweep_table(&results, &names)?),
        (
            "table_confusion",
            confusion_summary_table(&results, &names)?,
        ),
    ];
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_fold_log(&out.join("folds.jsonl"), &results)?;
    write(&out.join("aggregate.csv"), &aggregate_csv(&results))?;
    for (stem, table) in &tables {
        write(&out.join(format!("{stem}.txt")), &table.to_text())?;
        write(&out.join(format!("{stem}.csv")), &table.to_csv())?;
        println!("{table}");
    }
    println!("results written to {}", out.display());
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let a: Method = args.a.parse()?;
    let b: Method = args.b.parse()?;
    let mut records = Vec::new();
    for path in &args.logs {
        records.extend(read_fold_log(path)?);
    }
    let results = results_from_log(records)?;
    let pick = |m: Method| -> Result<&ExperimentResult> {
        let found: Vec<&ExperimentResult> = results
            .iter()
            .filter(|r| r.method == m && args.dataset.as_deref().is_none_or(|d| r.dataset == d))
            .collect();
        match found.as_slice() {
            [one] => Ok(one),
            [] => bail!("no results for method {m} in the given logs"),
            _ => bail!("method {m} appears for several datasets; pass --dataset"),
        }
    };
    let cmp = compare(pick(a)?, pick(b)?)?;
    print!("{cmp}");
    Ok(())
}
