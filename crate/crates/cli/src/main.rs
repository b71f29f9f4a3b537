use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use sphere_spectra::experiment::{self, CONFIG_KEYS};
use sphere_spectra::TargetFunction;

/// Shallow ReLU networks on the sphere: training runs, harmonic spectra and
/// frequency-principle diagnostics.
#[derive(Debug, Parser)]
#[command(name = "sphere-spectra", version, after_help = CONFIG_KEYS)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// List the registered experiments.
    List,
    /// Run a registered experiment and write its artifacts.
    #[command(after_help = CONFIG_KEYS)]
    Run {
        /// Registry name, see `list`.
        name: String,
        /// Override the pinned seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Use the long (100k-epoch) budget instead of the desk-scale one.
        #[arg(long)]
        full_scale: bool,
        /// Output directory [default: $SPHERE_SPECTRA_OUT/<name>, else runs/<name>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output root used when `--out` is absent.
        #[arg(long, env = "SPHERE_SPECTRA_OUT", hide_env_values = true)]
        out_root: Option<PathBuf>,
        /// `key = value` configuration file, applied before `--set`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one configuration key (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        settings: Vec<String>,
        /// Skip the raster and curve files.
        #[arg(long)]
        no_plotdata: bool,
    },
    /// Print the ReLU cap coefficients: quoted closed form, quadrature, exact.
    ExpandRelu {
        #[arg(long, default_value_t = 20)]
        ell_max: usize,
    },
    /// Recompute FP verdicts from a stored run directory.
    Diagnose { run_dir: PathBuf },
    /// Print the harmonic spectrum of a target function as `ell,j,re,im`.
    Spectrum {
        /// zero | trig | high_frequency | sum:amp/p/q;...
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 12)]
        ell_max: usize,
        /// Band limit of the projection grid.
        #[arg(long, default_value_t = 64)]
        grid_ell: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Cmd::List => {
            for spec in experiment::registry() {
                let c = &spec.config;
                println!(
                    "{:<26} {:<55} epochs={:<6} seed={}",
                    spec.name, spec.description, c.epochs, c.seed
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run {
            name,
            seed,
            full_scale,
            out,
            out_root,
            config,
            settings,
            no_plotdata,
        } => {
            let mut spec = experiment::find(&name)?;
            if full_scale {
                spec = spec.at_full_scale();
            }
            if let Some(path) = &config {
                spec.apply_config_file(path)
                    .with_context(|| format!("reading {}", path.display()))?;
            }
            for kv in &settings {
                let Some((k, v)) = kv.split_once('=') else {
                    bail!("--set expects KEY=VALUE, got `{kv}`");
                };
                spec.set(k.trim(), v.trim())?;
            }
            if let Some(seed) = seed {
                spec = spec.with_seed(seed);
            }
            spec.config.validate()?;
            let dir = out.unwrap_or_else(|| {
                out_root.unwrap_or_else(|| PathBuf::from("runs")).join(&spec.name)
            });
            let artifacts = experiment::run_experiment(&spec, &dir)?;
            if !no_plotdata {
                experiment::emit_plotdata(&artifacts)?;
            }
            print!("{}", artifacts.summary());
            println!("artifacts in {}", dir.display());
            Ok(if artifacts.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Cmd::ExpandRelu { ell_max } => {
            print!("{}", experiment::expand_relu_table(ell_max)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Diagnose { run_dir } => {
            if !run_dir.is_dir() {
                bail!("{} is not a directory", run_dir.display());
            }
            let verdicts = experiment::diagnose(&run_dir)?;
            for v in &verdicts {
                print!("{}", v.report());
            }
            let stored = run_dir.join("verdict.csv");
            if stored.exists() {
                let before = fs::read_to_string(&stored)?;
                let now = sphere_spectra::diagnostics::verdicts_csv(&verdicts);
                if before != now {
                    println!("note: recomputed verdicts differ from {}", stored.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Spectrum {
            target,
            ell_max,
            grid_ell,
        } => {
            let target: TargetFunction = target.parse()?;
            let spectrum = experiment::target_spectrum(&target, ell_max, grid_ell)?;
            print!("{}", spectrum.to_csv());
            Ok(ExitCode::SUCCESS)
        }
    }
}
