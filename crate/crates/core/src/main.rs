use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pptt::commands::{
    cmd_compare_methods, cmd_ensemble, cmd_fit, cmd_scenarios, cmd_single, default_correlations,
    GeneratorSource, Preset, RunConfig, Settings, SingleOptions,
};
use pptt::scenarios::parse_dims;
use pptt::Result;

#[derive(Parser)]
#[command(name = "pptt", version, about = "PPT times of random GKSL generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an ensemble and write samples.csv and summary.json.
    Ensemble(RunArgs),
    /// PPT time of one generator.
    Single {
        #[command(flatten)]
        run: RunArgs,
        /// depolarizing-qubit or dephasing-qubit.
        #[arg(long, conflicts_with = "generator")]
        preset: Option<Preset>,
        /// Generator JSON file.
        #[arg(long)]
        generator: Option<PathBuf>,
        /// Save the generator used as JSON.
        #[arg(long)]
        save_generator: Option<PathBuf>,
        /// Write the negativity at every grid point to this CSV.
        #[arg(long)]
        negativity_trace: Option<PathBuf>,
        /// Interpolate the crossing between grid points.
        #[arg(long)]
        interpolate: bool,
    },
    /// Compare correlation models on the same dimensions.
    Scenarios(RunArgs),
    /// Run both propagation methods on the same generators.
    CompareMethods(RunArgs),
    /// Summaries, bootstrap intervals and distribution fits of sample files.
    Fit {
        #[arg(required = true)]
        samples: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Total dimension (`4`) or subsystem dimensions (`2x2x2`).
    #[arg(long)]
    dims: Option<String>,
    /// glb, iloc or cloc (comma list for `scenarios`).
    #[arg(long)]
    correlation: Option<String>,
    /// canonical, superlinear or a comma list of traces.
    #[arg(long)]
    trace: Option<String>,
    /// full, matched or a comma list of ranks.
    #[arg(long)]
    rank: Option<String>,
    /// Hamiltonian strength.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    /// standard or caolu.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings> {
        let flags = Settings {
            dims: self.dims.clone(),
            correlation: self.correlation.clone(),
            trace: self.trace.clone(),
            rank: self.rank.clone(),
            k: self.k,
            samples: self.samples,
            dx: self.dx,
            x_max: self.x_max,
            method: self.method.clone(),
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
        };
        Ok(match &self.config {
            Some(path) => flags.merged_over(Settings::from_json_file(path)?),
            None => flags,
        })
    }
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ensemble(args) => print(&cmd_ensemble(&RunConfig::resolve(
            "ensemble",
            &args.settings()?,
        )?)?),
        Command::Single {
            run,
            preset,
            generator,
            save_generator,
            negativity_trace,
            interpolate,
        } => {
            let cfg = RunConfig::resolve("single", &run.settings()?)?;
            let source = match (preset, generator) {
                (Some(p), _) => GeneratorSource::Preset(p),
                (None, Some(path)) => GeneratorSource::File(path),
                (None, None) => GeneratorSource::Seed,
            };
            let opts = SingleOptions {
                negativity_csv: negativity_trace,
                save_generator,
                interpolate,
            };
            print(&cmd_single(&cfg, &source, &opts)?)
        }
        Command::Scenarios(args) => {
            let mut s = args.settings()?;
            let dims = s.dims.get_or_insert_with(|| "2x2".into()).clone();
            if s.correlation.is_none() {
                let names: Vec<String> = default_correlations(&parse_dims(&dims)?)
                    .iter()
                    .map(|c| c.to_string())
                    .collect();
                s.correlation = Some(names.join(","));
            }
            print(&cmd_scenarios(&RunConfig::resolve("scenarios", &s)?)?)
        }
        Command::CompareMethods(args) => {
            let mut s = args.settings()?;
            s.dims.get_or_insert_with(|| "2,3,4".into());
            s.samples.get_or_insert(20);
            print(&cmd_compare_methods(&RunConfig::resolve(
                "compare-methods",
                &s,
            )?)?)
        }
        Command::Fit { samples, seed, out } => print(&cmd_fit(&samples, seed, out.as_deref())?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
