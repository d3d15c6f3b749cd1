use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dephasing::datagen::{read_dataset, ClassGrid, Dataset, TimeWindow};
use dephasing::experiment::{self, RunConfig};
use dephasing::metrics::{confusion, scores};
use dephasing::nn::{train, Arch, Optimizer, SavedModel, TrainConfig};
use dephasing::qchannel::{BathConstants, NoiseKind};
use dephasing::report::{confusion_csv, confusion_svg, training_csv, Curves, ScoreRecord};
use dephasing::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dephasing",
    version,
    about = "Classify dephasing noise from two-time SIC-POVM data"
)]
struct Cli {
    /// Overrides the seed of the config or preset.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Use the full-size sample counts instead of desk scale.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Worker threads for dataset generation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/val/test dataset files.
    Gen(GenArgs),
    /// Train a classifier on a generated dataset directory.
    Train(TrainArgs),
    /// Score a trained model on a dataset file.
    Eval(EvalArgs),
    /// Export Λ(t) curves for a class grid.
    Curves(CurvesArgs),
    /// Run a preset (or config file) end to end and check its expected scores.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct Source {
    /// Named preset.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Flat JSON run config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides samples per class.
    #[arg(long)]
    samples_per_class: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: Source,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Lp,
    Nn1,
    Nn5,
}

impl From<ArchArg> for Arch {
    fn from(a: ArchArg) -> Arch {
        match a {
            ArchArg::Lp => Arch::Lp,
            ArchArg::Nn1 => Arch::Nn1,
            ArchArg::Nn5 => Arch::Nn5,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OptArg {
    Sgd,
    Adam,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory holding train.dphc and val.dphc.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "nn1")]
    arch: ArchArg,
    #[arg(long, default_value_t = 300)]
    batch_size: usize,
    #[arg(long, default_value_t = 100)]
    max_epochs: usize,
    /// Epochs without validation improvement before stopping (0 disables).
    #[arg(long, default_value_t = 1)]
    patience: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    l1: f64,
    #[arg(long, value_enum, default_value = "adam")]
    optimizer: OptArg,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset file, e.g. out/test.dphc.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Classical,
    Quantum,
}

#[derive(Args)]
struct CurvesArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Comma-separated class values; default is the 16-class grid.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Also write curves.svg.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Preset name; see --list.
    name: Option<String>,
    #[arg(long, conflicts_with = "name")]
    config: Option<PathBuf>,
    /// List presets and exit.
    #[arg(long)]
    list: bool,
    #[arg(long)]
    samples_per_class: Option<usize>,
    /// Also write the generated dataset files.
    #[arg(long)]
    save_data: bool,
}

enum Failure {
    Error(Error),
    Tolerance,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(&cli, a),
        Command::Train(a) => cmd_train(&cli, a),
        Command::Eval(a) => cmd_eval(&cli, a),
        Command::Curves(a) => cmd_curves(&cli, a),
        Command::Experiment(a) => cmd_experiment(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance) => ExitCode::from(EXIT_TOLERANCE),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn resolve(
    cli: &Cli,
    preset: Option<&str>,
    config: Option<&Path>,
    samples_per_class: Option<usize>,
) -> Outcome<RunConfig> {
    let mut cfg = match (preset, config) {
        (Some(name), None) => experiment::preset(name)?,
        (None, Some(path)) => RunConfig::load(path)?,
        _ => {
            return Err(Error::Config {
                field: "source".into(),
                message: "give a preset name or --config".into(),
            }
            .into())
        }
    };
    if cli.paper_scale {
        cfg = cfg.to_paper_scale();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = samples_per_class {
        cfg.samples_per_class = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> Outcome {
    let s = &a.source;
    let cfg = resolve(
        cli,
        s.preset.as_deref(),
        s.config.as_deref(),
        s.samples_per_class,
    )?;
    let splits = experiment::datasets(&cfg)?;
    experiment::write_splits(&splits, &cli.out)?;
    fs::write(cli.out.join("config.json"), cfg.to_json()?)?;
    println!("wrote {}", cli.out.display());
    for ds in splits.iter() {
        println!("{} ({} samples):", ds.split.name(), ds.len());
        for (name, n) in ds.class_names.iter().zip(ds.class_counts()) {
            println!("  {name}: {n}");
        }
    }
    Ok(())
}

fn load_split(dir: &Path, split: &str) -> Outcome<Dataset> {
    Ok(read_dataset(&dir.join(format!("{split}.dphc")))?)
}

fn cmd_train(cli: &Cli, a: &TrainArgs) -> Outcome {
    let train_set = load_split(&a.data, "train")?;
    let val_set = load_split(&a.data, "val")?;
    if train_set.class_names != val_set.class_names {
        return Err(Error::MalformedHeader("train and val class lists differ".into()).into());
    }
    let seed = cli
        .seed
        .or_else(|| train_set.spec.as_ref().map(|s| s.seed))
        .unwrap_or(0);
    let cfg = TrainConfig {
        batch_size: a.batch_size,
        max_epochs: a.max_epochs,
        patience: a.patience,
        learning_rate: a.learning_rate,
        l1_coeff: a.l1,
        optimizer: match a.optimizer {
            OptArg::Sgd => Optimizer::Sgd,
            OptArg::Adam => Optimizer::Adam,
        },
        seed,
    };
    cfg.validate()?;
    let arch: Arch = a.arch.into();
    let init = experiment::initial_model(arch, train_set.n_classes(), seed)?;
    let (model, report) = train(&init, &train_set.samples, &val_set.samples, &cfg)?;
    fs::create_dir_all(&cli.out)?;
    SavedModel {
        model,
        arch: Some(arch),
        class_values: train_set.class_values.clone(),
        class_names: train_set.class_names.clone(),
        train_config: Some(cfg),
    }
    .save(&cli.out.join("model.dphm"))?;
    fs::write(
        cli.out.join("train_report.json"),
        serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n",
    )?;
    fs::write(cli.out.join("training.csv"), training_csv(&report))?;
    let last = report.epochs.last().expect("at least one epoch");
    println!(
        "{}: stopped at epoch {}, best epoch {} (val loss {:.5}); last train acc {:.4}, val acc {:.4}",
        arch.name(),
        report.stopped_epoch,
        report.best_epoch,
        report.best_val_loss,
        last.train_accuracy,
        last.val_accuracy
    );
    println!("wrote {}", cli.out.join("model.dphm").display());
    Ok(())
}

fn cmd_eval(cli: &Cli, a: &EvalArgs) -> Outcome {
    let saved = SavedModel::load(&a.model)?;
    let ds = read_dataset(&a.data)?;
    if ds.class_names != saved.class_names {
        return Err(Error::MalformedHeader(format!(
            "model classes {:?} do not match dataset classes {:?}",
            saved.class_names, ds.class_names
        ))
        .into());
    }
    let preds = saved.model.predict_all(&ds.samples)?;
    let c = confusion(&preds, &ds.labels(), ds.n_classes())?;
    let s = scores(&c)?;
    let record = ScoreRecord::new(&s, &c, &ds.class_names, &ds.class_values);
    fs::create_dir_all(&cli.out)?;
    fs::write(cli.out.join("scores.json"), record.to_json()?)?;
    fs::write(
        cli.out.join("confusion.csv"),
        confusion_csv(&c, &ds.class_names),
    )?;
    let title = format!("{} split", ds.split.name());
    fs::write(
        cli.out.join("confusion.svg"),
        confusion_svg(&c, &ds.class_names, &title),
    )?;
    println!(
        "accuracy {:.4}  macro-F1 {:.4}  ({} samples)",
        s.accuracy,
        s.macro_f1,
        ds.len()
    );
    if !s.degenerate_classes.is_empty() {
        println!(
            "classes never predicted or absent: {:?}",
            s.degenerate_classes
        );
    }
    Ok(())
}

fn cmd_curves(cli: &Cli, a: &CurvesArgs) -> Outcome {
    let kind = match a.kind {
        KindArg::Classical => NoiseKind::Classical,
        KindArg::Quantum => NoiseKind::Quantum,
    };
    let values = if a.values.is_empty() {
        ClassGrid::default_for(kind).values
    } else {
        a.values.clone()
    };
    let default = match kind {
        NoiseKind::Classical => TimeWindow::COLORED_NOISELESS,
        NoiseKind::Quantum => TimeWindow::OHMIC,
    };
    let window = TimeWindow::new(
        a.t_min.unwrap_or(default.t_min),
        a.t_max.unwrap_or(default.t_max),
    )?;
    let curves = Curves::compute(kind, &BathConstants::default(), &values, window, a.points)?;
    fs::create_dir_all(&cli.out)?;
    fs::write(cli.out.join("curves.csv"), curves.to_csv())?;
    if a.svg {
        fs::write(cli.out.join("curves.svg"), curves.to_svg())?;
    }
    println!(
        "wrote {} curves x {} points to {}",
        values.len(),
        a.points,
        cli.out.display()
    );
    Ok(())
}

fn cmd_experiment(cli: &Cli, a: &ExperimentArgs) -> Outcome {
    if a.list {
        for name in experiment::preset_names() {
            let cfg = experiment::preset(name)?;
            println!("{name:32} {}", cfg.description);
        }
        return Ok(());
    }
    let cfg = resolve(
        cli,
        a.name.as_deref(),
        a.config.as_deref(),
        a.samples_per_class,
    )?;
    let dir = cli.out.join(&cfg.name);
    let splits = experiment::datasets(&cfg)?;
    if a.save_data {
        experiment::write_splits(&splits, &dir)?;
    }
    let outcome = experiment::train_and_score(&cfg, &splits)?;
    experiment::write_outcome(&outcome, &dir)?;
    println!(
        "{}: accuracy {:.4}, macro-F1 {:.4} (stopped at epoch {}, best {})",
        cfg.name,
        outcome.scores.accuracy,
        outcome.scores.macro_f1,
        outcome.report.stopped_epoch,
        outcome.report.best_epoch
    );
    for c in &outcome.checks {
        let lo = c.min.map_or("-inf".into(), |v| v.to_string());
        let hi = c.max.map_or("+inf".into(), |v| v.to_string());
        println!(
            "  {} {}: {:.4} in [{lo}, {hi}]",
            if c.passed { "PASS" } else { "FAIL" },
            c.metric,
            c.value
        );
    }
    println!("artifacts in {}", dir.display());
    if outcome.passed() {
        Ok(())
    } else {
        Err(Failure::Tolerance)
    }
}
