use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noro_cli::config::{ExperimentConfig, TargetChoice};
use noro_cli::{cmd_evaluate, cmd_ingest, cmd_report, cmd_select_features, cmd_synth, cmd_train_encoder};
use noro_core::dataset::synthetic::SurrogateConfig;
use noro_core::encoder::AlphaConvention;
use noro_core::evaluation::SignificanceTest;
use noro_core::noise::{NoiseLevel, PowerScope};
use noro_core::regressors::ModelKind;

/// Noise-robust UPDRS regression experiments.
#[derive(Parser)]
#[command(name = "noro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the dataset and write a column summary.
    Ingest(Common),
    /// Rank features by random-forest importance and pick the binning feature.
    SelectFeatures(Common),
    /// Train the contrastive encoder and write it with its loss log.
    TrainEncoder(Common),
    /// Run baseline vs augmented regressors and write the report.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Train the encoder before evaluating.
        #[arg(long)]
        train_first: bool,
    },
    /// Re-render the CSV table from a stored JSON report.
    Report {
        #[arg(long, default_value = "noro-out/report.json")]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a seeded surrogate dataset in the canonical column layout.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5875)]
        rows: usize,
        #[arg(long, default_value_t = 42)]
        subjects: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target: Option<TargetChoice>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated dB values, or `none`.
    #[arg(long, value_delimiter = ',')]
    snr: Option<Vec<NoiseLevel>>,
    /// Same as `--snr none`.
    #[arg(long, conflicts_with = "snr")]
    no_noise: bool,
    /// Comma-separated: ridge, knn, neural, bagged, gpr.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    #[arg(long)]
    folds: Option<usize>,
    /// Binning feature name (skips feature selection).
    #[arg(long)]
    feature: Option<String>,
    #[arg(long)]
    epochs_per_fold: Option<usize>,
    #[arg(long)]
    selection_trials: Option<usize>,
    #[arg(long)]
    alpha: Option<AlphaConvention>,
    #[arg(long)]
    power_scope: Option<PowerScope>,
    #[arg(long)]
    test: Option<SignificanceTest>,
    #[arg(long)]
    denormalize: bool,
    #[arg(long)]
    subject_disjoint: bool,
    #[arg(long)]
    no_pca: bool,
}

impl Common {
    fn resolve(self) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.$flag { $field = v; })*
            };
        }
        set! {
            data => c.dataset_path,
            out => c.output_dir,
            seed => c.base_seed,
            target => c.target,
            bins => c.bins,
            trials => c.trials,
            snr => c.snr,
            models => c.models,
            epochs_per_fold => c.encoder.epochs_per_fold,
            selection_trials => c.selection.trials,
            alpha => c.alpha_convention,
            power_scope => c.power_scope,
            test => c.significance,
        }
        if self.folds.is_some() {
            c.folds = self.folds;
        }
        if self.feature.is_some() {
            c.binning_feature = self.feature;
        }
        if self.no_noise {
            c.snr = vec![NoiseLevel::None];
        }
        c.denormalize |= self.denormalize;
        c.subject_disjoint |= self.subject_disjoint;
        if self.no_pca {
            c.pca = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Ingest(common) => {
            let s = cmd_ingest(&common.resolve()?)?;
            println!("{} rows, {} subjects, {} features", s.rows, s.subjects, s.features.len());
        }
        Command::SelectFeatures(common) => {
            let r = cmd_select_features(&common.resolve()?)?;
            println!("selected binning feature: {} (index {})", r.selected_name, r.selected_index);
        }
        Command::TrainEncoder(common) => {
            let c = common.resolve()?;
            let t = cmd_train_encoder(&c)?;
            println!(
                "encoder {}x{}, k={}, best validation loss {} at epoch {} -> {}",
                t.weights.d(),
                t.weights.d_prime(),
                t.binning.k,
                t.validation_loss,
                t.best_epoch,
                c.encoder_path().display()
            );
        }
        Command::Evaluate { common, train_first } => {
            let c = common.resolve()?;
            let r = cmd_evaluate(&c, train_first)?;
            println!("{} cells -> {}", r.per_cell.len(), c.report_path().display());
        }
        Command::Report { input, output } => {
            let path = cmd_report(&input, output.as_deref())?;
            println!("{}", path.display());
        }
        Command::Synth { out, rows, subjects, seed } => {
            cmd_synth(&out, &SurrogateConfig { subjects, rows, seed })?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            e.print().ok();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let line = rendered.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            eprintln!("error: usage: {line}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
