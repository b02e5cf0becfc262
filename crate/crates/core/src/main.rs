use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use esn_core::datasets::{gen_arma, gen_sine, load_csv, mackey_glass, save_csv, MgParams};
use esn_core::distributions::derive_stream;
use esn_core::ensemble::{OnDiverged, PredictMode};
use esn_core::experiment::{cmd_predict, cmd_report_merge, cmd_run, cmd_train, load_config, summary, Trained};
use esn_core::{Error, Result};

#[derive(Parser)]
#[command(name = "esn", version, about = "Echo state network experiments")]
struct Cli {
    /// Master seed; overrides `run.seed` and seeds generators.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `run.output_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Exit with status 2 when any run diverges.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic series as one-column CSV.
    Gen(GenArgs),
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Train a model (or ensemble, with `[ensemble]`) and save it.
    Train {
        config: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Predict with a saved model file or ensemble manifest.
    Predict(PredictArgs),
    /// Merge report.csv files into one report.
    ReportMerge {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Mg,
    Arma,
    Sine,
}

#[derive(Args)]
struct GenArgs {
    generator: Generator,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Output file (default: `<out-dir>/<generator>.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add the polynomial trend (arma, sine).
    #[arg(long)]
    trend: bool,
    /// Discarded leading ARMA samples.
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    history: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Generative,
    Guided,
}

#[derive(Args)]
struct PredictArgs {
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Generative)]
    mode: Mode,
    /// Steps to run in generative mode.
    #[arg(long, default_value_t = 500)]
    steps: usize,
    /// Input series for guided mode.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Ensemble policy for diverged members: fail or drop.
    #[arg(long, default_value = "fail")]
    on_diverged: OnDiverged,
}

/// Outcome of a command: whether any run diverged.
type Diverged = bool;

fn gen(cli: &Cli, a: &GenArgs) -> Result<Diverged> {
    let seed = cli.seed.unwrap_or(0);
    let (name, series) = match a.generator {
        Generator::Mg => {
            let d = MgParams::default();
            let p = MgParams {
                tau: a.tau.unwrap_or(d.tau),
                dt: a.dt.unwrap_or(d.dt),
                stride: a.stride.unwrap_or(d.stride),
                history: a.history.unwrap_or(d.history),
                ..d
            };
            ("mg", mackey_glass(a.n, &p)?)
        }
        Generator::Arma => ("arma", gen_arma(a.n, a.trend, a.burn_in, &mut derive_stream(seed, 0))?),
        Generator::Sine => ("sine", gen_sine(a.n, a.trend)?),
    };
    let out = match (&a.out, &cli.out_dir) {
        (Some(p), _) => p.clone(),
        (None, dir) => {
            let dir = dir.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
            dir.join(format!("{name}.csv"))
        }
    };
    save_csv(&out, &series)?;
    println!("{} -> {}", summary(&series), out.display());
    Ok(false)
}

fn config(cli: &Cli, path: &Path) -> Result<esn_core::experiment::ExperimentConfig> {
    let mut cfg = load_config(path)?;
    if let Some(s) = cli.seed {
        cfg.base_seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.output_dir = d.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<Diverged> {
    match &cli.command {
        Command::Gen(a) => gen(cli, a),
        Command::Run { config: path } => {
            let cfg = config(cli, path)?;
            let report = cmd_run(&cfg, &cfg.output_dir)?;
            let diverged = report.rows().iter().filter(|r| r.diverged_at.is_some()).count();
            println!(
                "{} rows ({diverged} diverged) -> {}",
                report.rows().len(),
                cfg.output_dir.join("report.md").display()
            );
            Ok(diverged > 0)
        }
        Command::Train { config: path, model_out } => {
            match cmd_train(&config(cli, path)?, model_out)? {
                Trained::Model(p) => println!("model -> {}", p.display()),
                Trained::Ensemble { manifest, members } => {
                    println!("ensemble of {members} -> {}", manifest.display())
                }
            }
            Ok(false)
        }
        Command::Predict(a) => {
            let input;
            let mode = match a.mode {
                Mode::Generative => PredictMode::Generative(a.steps),
                Mode::Guided => {
                    let path = a
                        .input
                        .as_ref()
                        .ok_or_else(|| Error::Usage("guided mode needs --input".into()))?;
                    input = load_csv(path)?;
                    PredictMode::Guided(&input)
                }
            };
            let y = cmd_predict(&a.model, mode, a.on_diverged, &a.out)?;
            println!("{} -> {}", summary(&y), a.out.display());
            Ok(false)
        }
        Command::ReportMerge { reports } => {
            let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            let merged = cmd_report_merge(reports, &dir)?;
            println!("{} rows -> {}", merged.rows().len(), dir.join("report.md").display());
            Ok(merged.any_diverged())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(true) if cli.strict => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) if cli.strict && e.is_divergence() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
